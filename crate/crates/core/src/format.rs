//! Line-oriented text format for Petri games.
//!
//! ```text
//! # comment
//! bound 1
//! places system s_closed s_open
//! places env e1 e1_attempt
//! init s_closed e1
//! transition te11 pre e1 post e1_attempt
//! transition te12 pre e1_attempt s_closed post e1 s_closed
//! bad places a1 a2
//! bad marking s_open a1     # exactly this marking
//! bad cover s_open a1       # every marking containing these tokens
//! ```
//!
//! Tokens are written `name` or `name:count`; the count defaults to 1.
//! Identifiers are ASCII letters, digits, `_`, `.`, `'` and `-`, not starting
//! with a digit. Directives may appear in any order and `places`, `init` and
//! `bad` lines may repeat.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::error::{Error, Result};
use crate::game::{BadSpec, PetriGame};
use crate::net::{Marking, NetBuilder};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Clone, Copy, Debug)]
struct Pos {
    line: usize,
    column: usize,
}

impl Pos {
    fn err(self, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            column: self.column,
            message: message.into(),
        }
    }
}

struct Word<'a> {
    text: &'a str,
    pos: Pos,
}

struct TokenRef<'a> {
    name: &'a str,
    count: u32,
    pos: Pos,
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '\'' | '-'))
}

fn ident<'a>(w: &Word<'a>) -> std::result::Result<&'a str, ParseError> {
    if is_ident(w.text) {
        Ok(w.text)
    } else {
        Err(w.pos.err(format!("`{}` is not a valid identifier", w.text)))
    }
}

fn token<'a>(w: &Word<'a>) -> std::result::Result<TokenRef<'a>, ParseError> {
    let (name, count) = match w.text.split_once(':') {
        Some((name, n)) => {
            let count: u32 = n
                .parse()
                .map_err(|_| w.pos.err(format!("invalid count `{n}`")))?;
            if count == 0 {
                return Err(w.pos.err("token counts must be positive"));
            }
            (name, count)
        }
        None => (w.text, 1),
    };
    if !is_ident(name) {
        return Err(w.pos.err(format!("`{name}` is not a valid identifier")));
    }
    Ok(TokenRef {
        name,
        count,
        pos: w.pos,
    })
}

fn split_words(line: &str, line_no: usize) -> Vec<Word<'_>> {
    let body = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut words = Vec::new();
    let mut start = None;
    for (i, c) in body.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                words.push(Word {
                    text: &body[s..i],
                    pos: Pos {
                        line: line_no,
                        column: body[..s].chars().count() + 1,
                    },
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        words.push(Word {
            text: &body[s..],
            pos: Pos {
                line: line_no,
                column: body[..s].chars().count() + 1,
            },
        });
    }
    words
}

struct RawTransition<'a> {
    name: &'a str,
    pos: Pos,
    pre: Vec<TokenRef<'a>>,
    post: Vec<TokenRef<'a>>,
}

enum BadKind {
    Marking,
    Cover,
}

/// Parses a game from the text format.
pub fn parse(text: &str) -> Result<PetriGame> {
    let mut bound: Option<u32> = None;
    let mut places: Vec<(&str, bool, Pos)> = Vec::new();
    let mut init: Vec<TokenRef> = Vec::new();
    let mut transitions: Vec<RawTransition> = Vec::new();
    let mut bad_places: Vec<(&str, Pos)> = Vec::new();
    let mut bad_markings: Vec<(BadKind, Vec<TokenRef>)> = Vec::new();
    let mut last_pos = Pos { line: 1, column: 1 };

    for (i, line) in text.lines().enumerate() {
        let words = split_words(line, i + 1);
        let Some(head) = words.first() else { continue };
        last_pos = head.pos;
        let rest = &words[1..];
        match head.text {
            "bound" => {
                if bound.is_some() {
                    return Err(head.pos.err("duplicate `bound` directive").into());
                }
                let [w] = rest else {
                    return Err(head.pos.err("`bound` takes exactly one integer").into());
                };
                let k: u32 = w
                    .text
                    .parse()
                    .map_err(|_| w.pos.err(format!("invalid bound `{}`", w.text)))?;
                if k == 0 {
                    return Err(w.pos.err("bound must be at least 1").into());
                }
                bound = Some(k);
            }
            "places" => {
                let Some(kind) = rest.first() else {
                    return Err(head
                        .pos
                        .err("expected `system` or `env` after `places`")
                        .into());
                };
                let system = match kind.text {
                    "system" => true,
                    "env" => false,
                    other => {
                        return Err(kind
                            .pos
                            .err(format!("expected `system` or `env`, found `{other}`"))
                            .into())
                    }
                };
                if rest.len() == 1 {
                    return Err(kind.pos.err("empty place list").into());
                }
                for w in &rest[1..] {
                    places.push((ident(w)?, system, w.pos));
                }
            }
            "init" => {
                for w in rest {
                    init.push(token(w)?);
                }
            }
            "transition" => {
                let Some(name_w) = rest.first() else {
                    return Err(head.pos.err("expected a transition name").into());
                };
                let name = ident(name_w)?;
                let mut section: Option<bool> = None;
                let mut pre = Vec::new();
                let mut post = Vec::new();
                let mut saw_pre = false;
                let mut saw_post = false;
                for w in &rest[1..] {
                    match w.text {
                        "pre" if !saw_pre && !saw_post => {
                            saw_pre = true;
                            section = Some(true);
                        }
                        "post" if saw_pre && !saw_post => {
                            saw_post = true;
                            section = Some(false);
                        }
                        _ => match section {
                            Some(true) => pre.push(token(w)?),
                            Some(false) => post.push(token(w)?),
                            None => {
                                return Err(w
                                    .pos
                                    .err(format!("expected `pre`, found `{}`", w.text))
                                    .into())
                            }
                        },
                    }
                }
                if !saw_pre || !saw_post {
                    return Err(name_w
                        .pos
                        .err(format!("transition `{name}` needs `pre ... post ...`"))
                        .into());
                }
                if pre.is_empty() {
                    return Err(name_w
                        .pos
                        .err(format!(
                            "transition `{name}` has an empty precondition; every transition needs a nonempty precondition"
                        ))
                        .into());
                }
                if post.is_empty() {
                    return Err(name_w
                        .pos
                        .err(format!(
                            "transition `{name}` has an empty postcondition; every transition needs a nonempty postcondition"
                        ))
                        .into());
                }
                transitions.push(RawTransition {
                    name,
                    pos: name_w.pos,
                    pre,
                    post,
                });
            }
            "bad" => {
                let Some(kind) = rest.first() else {
                    return Err(head
                        .pos
                        .err("expected `places`, `marking` or `cover` after `bad`")
                        .into());
                };
                if rest.len() == 1 {
                    return Err(kind.pos.err("empty list after `bad`").into());
                }
                match kind.text {
                    "places" => {
                        for w in &rest[1..] {
                            bad_places.push((ident(w)?, w.pos));
                        }
                    }
                    "marking" | "cover" => {
                        let toks = rest[1..]
                            .iter()
                            .map(token)
                            .collect::<std::result::Result<_, _>>()?;
                        let k = if kind.text == "marking" {
                            BadKind::Marking
                        } else {
                            BadKind::Cover
                        };
                        bad_markings.push((k, toks));
                    }
                    other => {
                        return Err(kind
                            .pos
                            .err(format!(
                                "expected `places`, `marking` or `cover`, found `{other}`"
                            ))
                            .into())
                    }
                }
            }
            other => {
                return Err(head.pos.err(format!("unknown directive `{other}`")).into());
            }
        }
    }

    let Some(bound) = bound else {
        return Err(last_pos.err("missing `bound` directive").into());
    };
    if places.is_empty() {
        return Err(last_pos.err("no places declared").into());
    }

    let mut declared: HashMap<&str, Pos> = HashMap::new();
    for &(name, _, pos) in &places {
        if declared.insert(name, pos).is_some() {
            return Err(pos.err(format!("duplicate place `{name}`")).into());
        }
    }
    let mut seen_transitions: HashMap<&str, Pos> = HashMap::new();
    for t in &transitions {
        if declared.contains_key(t.name) {
            return Err(t
                .pos
                .err(format!("`{}` is already declared as a place", t.name))
                .into());
        }
        if seen_transitions.insert(t.name, t.pos).is_some() {
            return Err(t
                .pos
                .err(format!("duplicate transition `{}`", t.name))
                .into());
        }
    }
    let check = |tok: &TokenRef| -> std::result::Result<(), ParseError> {
        if declared.contains_key(tok.name) {
            Ok(())
        } else {
            Err(tok.pos.err(format!("unknown place `{}`", tok.name)))
        }
    };
    for tok in init
        .iter()
        .chain(transitions.iter().flat_map(|t| t.pre.iter().chain(&t.post)))
    {
        check(tok)?;
    }
    for (_, toks) in &bad_markings {
        for tok in toks {
            check(tok)?;
        }
    }
    for &(name, pos) in &bad_places {
        if !declared.contains_key(name) {
            return Err(pos.err(format!("unknown place `{name}`")).into());
        }
    }

    let mut b = NetBuilder::new();
    for &(name, _, _) in &places {
        b.place(name);
    }
    for t in &transitions {
        b.transition(
            t.name,
            t.pre.iter().map(|k| (k.name, k.count)),
            t.post.iter().map(|k| (k.name, k.count)),
        );
    }
    for tok in &init {
        b.tokens(tok.name, tok.count);
    }
    let net = b.build()?;
    let pid = |name: &str| net.place_id(name).expect("checked above");
    let system: Vec<_> = places.iter().filter(|p| p.1).map(|p| pid(p.0)).collect();
    let mut bad = BadSpec::places(bad_places.iter().map(|&(n, _)| pid(n)));
    for (kind, toks) in &bad_markings {
        let m = Marking::from_counts(toks.iter().map(|t| (pid(t.name), t.count)));
        match kind {
            BadKind::Marking => {
                bad.markings.insert(m);
            }
            BadKind::Cover => {
                if !bad.covers.contains(&m) {
                    bad.covers.push(m);
                }
            }
        }
    }
    bad.covers.sort();
    PetriGame::new(net, system, bad, bound)
}

fn write_tokens(out: &mut String, game: &PetriGame, m: &Marking) {
    for (p, n) in m.iter() {
        let name = game.net().place_name(p);
        if n == 1 {
            let _ = write!(out, " {name}");
        } else {
            let _ = write!(out, " {name}:{n}");
        }
    }
}

/// Serializes a game in canonical order: ids sorted by name, counts of one
/// omitted.
pub fn serialize(game: &PetriGame) -> String {
    let net = game.net();
    let mut out = String::new();
    let _ = writeln!(out, "bound {}", game.bound());
    for (label, system) in [("system", true), ("env", false)] {
        let names: Vec<&str> = net
            .place_ids()
            .filter(|&p| game.is_system_place(p) == system)
            .map(|p| net.place_name(p))
            .collect();
        if !names.is_empty() {
            let _ = writeln!(out, "places {label} {}", names.join(" "));
        }
    }
    if !net.initial().is_empty() {
        out.push_str("init");
        write_tokens(&mut out, game, net.initial());
        out.push('\n');
    }
    for t in net.transition_ids() {
        let _ = write!(out, "transition {} pre", net.transition_name(t));
        write_tokens(&mut out, game, net.pre(t));
        out.push_str(" post");
        write_tokens(&mut out, game, net.post(t));
        out.push('\n');
    }
    let bad = game.bad();
    if !bad.places.is_empty() {
        let names: Vec<&str> = bad.places.iter().map(|&p| net.place_name(p)).collect();
        let _ = writeln!(out, "bad places {}", names.join(" "));
    }
    let mut exact: Vec<&Marking> = bad.markings.iter().collect();
    exact.sort();
    for m in exact {
        out.push_str("bad marking");
        write_tokens(&mut out, game, m);
        out.push('\n');
    }
    for m in &bad.covers {
        out.push_str("bad cover");
        write_tokens(&mut out, game, m);
        out.push('\n');
    }
    out
}

impl fmt::Display for PetriGame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize(self))
    }
}

/// Convenience for callers that only care whether parsing failed.
pub fn parse_error(err: &Error) -> Option<&ParseError> {
    match err {
        Error::Parse(p) => Some(p),
        _ => None,
    }
}
