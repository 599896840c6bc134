//! The formula game G5 as a 1-bounded Petri game.
//!
//! Two players alternate; on each turn the mover may flip one of its own
//! variables or pass. The environment wins as soon as the formula is true,
//! checked initially and after every move; the system wins if that never
//! happens.
//!
//! In the net, a turn token cycles through `turn_e_choose`, `turn_e`,
//! `turn_s_choose`, `turn_s_info` and `turn_s`. At both `*_choose` places
//! the environment may start a proof instead of continuing. `turn_e` is the
//! environment's move; `turn_s` is the system's, made by the single system
//! token `sys` through self-loops. A proof moves the turn token to
//! `turn_p`, where purely environmental transitions mark formula nodes
//! proved bottom-up from the current assignment. The proved root is the
//! bad place.
//!
//! Instance text format:
//!
//! ```text
//! var x env 0
//! var y system 1
//! first env
//! formula (or (and x !y) y)
//! ```

use std::collections::{HashMap, VecDeque};
use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::game::{BadSpec, PetriGame};
use crate::graph_game::Winner;
use crate::net::NetBuilder;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Owner {
    System,
    Environment,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Formula {
    Lit { var: usize, positive: bool },
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

impl Formula {
    pub fn eval(&self, assignment: &[bool]) -> bool {
        match self {
            Formula::Lit { var, positive } => assignment[*var] == *positive,
            Formula::And(cs) => cs.iter().all(|c| c.eval(assignment)),
            Formula::Or(cs) => cs.iter().any(|c| c.eval(assignment)),
        }
    }

    /// Literals have depth 1.
    pub fn depth(&self) -> usize {
        match self {
            Formula::Lit { .. } => 1,
            Formula::And(cs) | Formula::Or(cs) => {
                1 + cs.iter().map(Formula::depth).max().unwrap_or(0)
            }
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Formula::Lit { .. } => 1,
            Formula::And(cs) | Formula::Or(cs) => 1 + cs.iter().map(Formula::size).sum::<usize>(),
        }
    }

    fn write(&self, names: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Lit { var, positive } => {
                write!(f, "{}{}", if *positive { "" } else { "!" }, names[*var])
            }
            Formula::And(cs) | Formula::Or(cs) => {
                let op = if matches!(self, Formula::And(_)) {
                    "and"
                } else {
                    "or"
                };
                write!(f, "({op}")?;
                for c in cs {
                    f.write_str(" ")?;
                    c.write(names, f)?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub owner: Owner,
    pub initial: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct G5Instance {
    pub vars: Vec<Variable>,
    pub first: Owner,
    pub formula: Formula,
}

struct Shown<'a>(&'a G5Instance);

impl fmt::Display for Shown<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.0.vars.iter().map(|v| v.name.clone()).collect();
        self.0.formula.write(&names, f)
    }
}

impl fmt::Display for G5Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.vars {
            let owner = match v.owner {
                Owner::System => "system",
                Owner::Environment => "env",
            };
            writeln!(f, "var {} {} {}", v.name, owner, u8::from(v.initial))?;
        }
        let first = match self.first {
            Owner::System => "system",
            Owner::Environment => "env",
        };
        writeln!(f, "first {first}")?;
        writeln!(f, "formula {}", Shown(self))
    }
}

fn invalid(line: usize, msg: impl fmt::Display) -> Error {
    Error::InvalidInstance(format!("line {line}: {msg}"))
}

fn parse_owner(s: &str, line: usize) -> Result<Owner> {
    match s {
        "system" => Ok(Owner::System),
        "env" => Ok(Owner::Environment),
        other => Err(invalid(
            line,
            format!("expected `system` or `env`, found `{other}`"),
        )),
    }
}

fn tokenize(s: &str) -> Vec<String> {
    s.replace('(', " ( ")
        .replace(')', " ) ")
        .split_whitespace()
        .map(String::from)
        .collect()
}

fn parse_formula(
    tokens: &[String],
    pos: &mut usize,
    vars: &HashMap<&str, usize>,
    line: usize,
) -> Result<Formula> {
    let tok = tokens
        .get(*pos)
        .ok_or_else(|| invalid(line, "unexpected end of formula"))?;
    *pos += 1;
    if tok == "(" {
        let op = tokens
            .get(*pos)
            .ok_or_else(|| invalid(line, "missing operator"))?
            .clone();
        *pos += 1;
        let mut children = Vec::new();
        while tokens.get(*pos).map(String::as_str) != Some(")") {
            if *pos >= tokens.len() {
                return Err(invalid(line, "unbalanced parentheses"));
            }
            children.push(parse_formula(tokens, pos, vars, line)?);
        }
        *pos += 1;
        if children.is_empty() {
            return Err(invalid(line, format!("`{op}` needs at least one operand")));
        }
        match op.as_str() {
            "and" => Ok(Formula::And(children)),
            "or" => Ok(Formula::Or(children)),
            other => Err(invalid(line, format!("unknown operator `{other}`"))),
        }
    } else if tok == ")" {
        Err(invalid(line, "unexpected `)`"))
    } else {
        let (positive, name) = match tok.strip_prefix('!') {
            Some(n) => (false, n),
            None => (true, tok.as_str()),
        };
        let var = *vars
            .get(name)
            .ok_or_else(|| invalid(line, format!("undeclared variable `{name}`")))?;
        Ok(Formula::Lit { var, positive })
    }
}

impl G5Instance {
    pub fn parse(text: &str) -> Result<Self> {
        let mut vars: Vec<Variable> = Vec::new();
        let mut first = None;
        let mut formula_line = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (head, rest) = content
                .split_once(char::is_whitespace)
                .unwrap_or((content, ""));
            match head {
                "var" => {
                    let parts: Vec<&str> = rest.split_whitespace().collect();
                    let [name, owner, init] = parts[..] else {
                        return Err(invalid(line, "expected `var NAME system|env 0|1`"));
                    };
                    if vars.iter().any(|v| v.name == name) {
                        return Err(invalid(line, format!("duplicate variable `{name}`")));
                    }
                    if !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                        return Err(invalid(line, format!("bad variable name `{name}`")));
                    }
                    let initial = match init {
                        "0" => false,
                        "1" => true,
                        other => {
                            return Err(invalid(line, format!("expected 0 or 1, found `{other}`")))
                        }
                    };
                    vars.push(Variable {
                        name: name.to_string(),
                        owner: parse_owner(owner, line)?,
                        initial,
                    });
                }
                "first" => first = Some(parse_owner(rest.trim(), line)?),
                "formula" => formula_line = Some((line, rest.to_string())),
                other => return Err(invalid(line, format!("unknown directive `{other}`"))),
            }
        }
        let (line, text) =
            formula_line.ok_or_else(|| Error::InvalidInstance("missing `formula`".into()))?;
        let index: HashMap<&str, usize> = vars
            .iter()
            .enumerate()
            .map(|(i, v)| (v.name.as_str(), i))
            .collect();
        let tokens = tokenize(&text);
        let mut pos = 0;
        let formula = parse_formula(&tokens, &mut pos, &index, line)?;
        if pos != tokens.len() {
            return Err(invalid(line, "trailing input after formula"));
        }
        Ok(G5Instance {
            vars,
            first: first.ok_or_else(|| Error::InvalidInstance("missing `first`".into()))?,
            formula,
        })
    }

    fn initial_bits(&self) -> u64 {
        self.vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.initial)
            .fold(0, |acc, (i, _)| acc | 1 << i)
    }
}

fn bits_to_vec(bits: u64, n: usize) -> Vec<bool> {
    (0..n).map(|i| bits >> i & 1 == 1).collect()
}

/// Explicit attractor over `(assignment, player to move)`.
pub fn solve_g5_tiny(instance: &G5Instance) -> Winner {
    let n = instance.vars.len();
    assert!(n <= 16, "too many variables for the explicit oracle");
    let states = 1usize << n;
    let idx = |bits: usize, env_moves: bool| bits * 2 + usize::from(env_moves);
    let truth: Vec<bool> = (0..states)
        .map(|b| instance.formula.eval(&bits_to_vec(b as u64, n)))
        .collect();
    let moves = |bits: usize, owner: Owner| -> Vec<usize> {
        let mut out = vec![bits];
        for (i, v) in instance.vars.iter().enumerate() {
            if v.owner == owner {
                out.push(bits ^ (1 << i));
            }
        }
        out
    };
    let mut env_wins = vec![false; 2 * states];
    for b in 0..states {
        if truth[b] {
            env_wins[idx(b, true)] = true;
            env_wins[idx(b, false)] = true;
        }
    }
    loop {
        let mut changed = false;
        for b in 0..states {
            if !env_wins[idx(b, true)]
                && moves(b, Owner::Environment)
                    .into_iter()
                    .any(|b2| env_wins[idx(b2, false)])
            {
                env_wins[idx(b, true)] = true;
                changed = true;
            }
            if !env_wins[idx(b, false)]
                && moves(b, Owner::System)
                    .into_iter()
                    .all(|b2| env_wins[idx(b2, true)])
            {
                env_wins[idx(b, false)] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let start = idx(
        instance.initial_bits() as usize,
        instance.first == Owner::Environment,
    );
    if env_wins[start] {
        Winner::Environment
    } else {
        Winner::System
    }
}

fn var_place(name: &str, value: bool) -> String {
    format!("x_{}_{}", name, u8::from(value))
}

/// Builds the game; the system wins iff it wins the formula game.
pub fn gen_g5(instance: &G5Instance) -> Result<PetriGame> {
    let mut b = NetBuilder::new();
    for p in [
        "turn_e_choose",
        "turn_e",
        "turn_s_choose",
        "turn_s_info",
        "turn_s",
        "turn_p",
        "sys",
    ] {
        b.place(p);
    }
    b.tokens("sys", 1);
    b.tokens(
        match instance.first {
            Owner::Environment => "turn_e_choose",
            Owner::System => "turn_s_choose",
        },
        1,
    );
    for v in &instance.vars {
        for value in [false, true] {
            b.place(var_place(&v.name, value));
        }
        b.tokens(var_place(&v.name, v.initial), 1);
    }

    let one = |p: &str| (p.to_string(), 1u32);
    b.transition("e_continue", [one("turn_e_choose")], [one("turn_e")]);
    b.transition("e_prove", [one("turn_e_choose")], [one("turn_p")]);
    b.transition("s_continue", [one("turn_s_choose")], [one("turn_s_info")]);
    b.transition("s_prove", [one("turn_s_choose")], [one("turn_p")]);
    b.transition(
        "s_info",
        [one("turn_s_info"), one("sys")],
        [one("turn_s"), one("sys")],
    );
    b.transition(
        "s_pass",
        [one("turn_s"), one("sys")],
        [one("turn_e_choose"), one("sys")],
    );
    b.transition("e_pass", [one("turn_e")], [one("turn_s_choose")]);
    for v in &instance.vars {
        for value in [false, true] {
            let from = var_place(&v.name, value);
            let to = var_place(&v.name, !value);
            match v.owner {
                Owner::System => b.transition(
                    format!("s_flip_{}_{}", v.name, u8::from(value)),
                    [one("turn_s"), one("sys"), one(&from)],
                    [one("turn_e_choose"), one("sys"), one(&to)],
                ),
                Owner::Environment => b.transition(
                    format!("e_flip_{}_{}", v.name, u8::from(value)),
                    [one("turn_e"), one(&from)],
                    [one("turn_s_choose"), one(&to)],
                ),
            };
        }
    }

    // Formula nodes in preorder: node k has places f{k}_open and f{k}_proved.
    let mut nodes: Vec<&Formula> = Vec::new();
    let mut children: Vec<Vec<usize>> = Vec::new();
    let mut queue = VecDeque::from([(&instance.formula, None::<usize>)]);
    while let Some((f, parent)) = queue.pop_front() {
        let k = nodes.len();
        nodes.push(f);
        children.push(Vec::new());
        if let Some(p) = parent {
            children[p].push(k);
        }
        if let Formula::And(cs) | Formula::Or(cs) = f {
            for c in cs {
                queue.push_back((c, Some(k)));
            }
        }
    }
    let open = |k: usize| format!("f{k}_open");
    let proved = |k: usize| format!("f{k}_proved");
    for k in 0..nodes.len() {
        b.place(open(k)).place(proved(k));
        b.tokens(open(k), 1);
    }
    for (k, f) in nodes.iter().enumerate() {
        match f {
            Formula::Lit { var, positive } => {
                let x = var_place(&instance.vars[*var].name, *positive);
                b.transition(
                    format!("prove_f{k}"),
                    [one("turn_p"), one(&x), one(&open(k))],
                    [one("turn_p"), one(&x), one(&proved(k))],
                );
            }
            Formula::And(_) => {
                let mut pre = vec![one("turn_p"), one(&open(k))];
                let mut post = vec![one("turn_p"), one(&proved(k))];
                for &c in &children[k] {
                    pre.push(one(&proved(c)));
                    post.push(one(&proved(c)));
                }
                b.transition(format!("prove_f{k}"), pre, post);
            }
            Formula::Or(_) => {
                for &c in &children[k] {
                    b.transition(
                        format!("prove_f{k}_via_f{c}"),
                        [one("turn_p"), one(&proved(c)), one(&open(k))],
                        [one("turn_p"), one(&proved(c)), one(&proved(k))],
                    );
                }
            }
        }
    }

    let net = b.build()?;
    let sys = net.place_id("sys").expect("declared");
    let root = net.place_id(&proved(0)).expect("declared");
    PetriGame::new(net, [sys], BadSpec::places([root]), 1)
}

/// Random instance whose formula has at most `depth` levels, literals
/// counting as one level, and binary connectives.
pub fn random_g5<R: Rng>(rng: &mut R, num_vars: usize, depth: usize) -> G5Instance {
    assert!(num_vars >= 1 && depth >= 1);
    let vars = (0..num_vars)
        .map(|i| Variable {
            name: format!("v{i}"),
            owner: if rng.gen_bool(0.5) {
                Owner::System
            } else {
                Owner::Environment
            },
            initial: rng.gen_bool(0.5),
        })
        .collect();
    fn gen<R: Rng>(rng: &mut R, n: usize, depth: usize) -> Formula {
        if depth == 1 || rng.gen_bool(0.3) {
            return Formula::Lit {
                var: rng.gen_range(0..n),
                positive: rng.gen_bool(0.5),
            };
        }
        let cs = vec![gen(rng, n, depth - 1), gen(rng, n, depth - 1)];
        if rng.gen_bool(0.5) {
            Formula::And(cs)
        } else {
            Formula::Or(cs)
        }
    }
    G5Instance {
        vars,
        first: if rng.gen_bool(0.5) {
            Owner::System
        } else {
            Owner::Environment
        },
        formula: gen(rng, num_vars, depth),
    }
}
