//! Graphviz renderings of games, reachability graphs, strategies and
//! unfolding prefixes.

use std::fmt::Write;

use crate::game::PetriGame;
use crate::net::{Marking, ReachabilityGraph};
use crate::strategy::CommitmentStrategy;
use crate::unfold::UnfoldingPrefix;

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// The net with system places filled gray and bad places outlined red.
pub fn game_dot(game: &PetriGame) -> String {
    let net = game.net();
    let mut out = String::from("digraph game {\n  rankdir=LR;\n");
    for p in net.place_ids() {
        let name = net.place_name(p);
        let tokens = net.initial().get(p);
        let label = match tokens {
            0 => name.to_string(),
            1 => format!("{name}\n•"),
            n => format!("{name}\n{n}"),
        };
        let mut attrs = format!("shape=circle, label={}", quote(&label));
        if game.is_system_place(p) {
            attrs.push_str(", style=filled, fillcolor=gray80");
        }
        if game.bad().places.contains(&p) {
            attrs.push_str(", color=red, penwidth=2");
        }
        writeln!(out, "  {} [{}];", quote(&format!("p:{name}")), attrs).unwrap();
    }
    for t in net.transition_ids() {
        let name = net.transition_name(t);
        writeln!(
            out,
            "  {} [shape=box, label={}];",
            quote(&format!("t:{name}")),
            quote(name)
        )
        .unwrap();
        for (p, n) in net.pre(t).iter() {
            let label = if n > 1 {
                format!(" [label=\"{n}\"]")
            } else {
                String::new()
            };
            writeln!(
                out,
                "  {} -> {}{};",
                quote(&format!("p:{}", net.place_name(p))),
                quote(&format!("t:{name}")),
                label
            )
            .unwrap();
        }
        for (p, n) in net.post(t).iter() {
            let label = if n > 1 {
                format!(" [label=\"{n}\"]")
            } else {
                String::new()
            };
            writeln!(
                out,
                "  {} -> {}{};",
                quote(&format!("t:{name}")),
                quote(&format!("p:{}", net.place_name(p))),
                label
            )
            .unwrap();
        }
    }
    out.push_str("}\n");
    out
}

pub fn reachability_dot(game: &PetriGame, graph: &ReachabilityGraph) -> String {
    let net = game.net();
    let mut out = String::from("digraph reachability {\n");
    for (i, m) in graph.markings().iter().enumerate() {
        let mut attrs = format!("label={}", quote(&net.show(m)));
        if i == graph.initial_index() {
            attrs.push_str(", penwidth=2");
        }
        if game.is_bad(m) {
            attrs.push_str(", color=red");
        }
        writeln!(out, "  m{i} [{attrs}];").unwrap();
    }
    for e in graph.edges() {
        let style = if game.is_environmental(e.transition) {
            ""
        } else {
            ", style=bold"
        };
        writeln!(
            out,
            "  m{} -> m{} [label={}{}];",
            e.source,
            e.target,
            quote(net.transition_name(e.transition)),
            style
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}

/// Player-0 markings annotated with their commitments, connected by the
/// moves the strategy permits.
pub fn strategy_dot(
    game: &PetriGame,
    graph: &ReachabilityGraph,
    strategy: &CommitmentStrategy,
) -> String {
    let net = game.net();
    let mut out = String::from("digraph strategy {\n");
    let node = |m: &Marking| graph.index_of(m);
    for (m, c) in strategy.iter() {
        let Some(i) = node(m) else { continue };
        let names: Vec<&str> = c.iter().map(|&t| net.transition_name(t)).collect();
        let label = format!("{}\ncommit {{{}}}", net.show(m), names.join(", "));
        writeln!(out, "  m{i} [shape=box, label={}];", quote(&label)).unwrap();
    }
    for (m, c) in strategy.iter() {
        let Some(i) = node(m) else { continue };
        for e in graph.out_edges(i) {
            let allowed = game.is_environmental(e.transition) || c.contains(&e.transition);
            if allowed && strategy.get(graph.marking(e.target)).is_some() {
                writeln!(
                    out,
                    "  m{} -> m{} [label={}];",
                    i,
                    e.target,
                    quote(net.transition_name(e.transition))
                )
                .unwrap();
            }
        }
    }
    out.push_str("}\n");
    out
}

pub fn prefix_dot(game: &PetriGame, prefix: &UnfoldingPrefix) -> String {
    let net = game.net();
    let mut out = String::from("digraph unfolding {\n");
    for (i, c) in prefix.conditions.iter().enumerate() {
        let mut attrs = format!("shape=circle, label={}", quote(net.place_name(c.label)));
        if game.is_system_place(c.label) {
            attrs.push_str(", style=filled, fillcolor=gray80");
        }
        writeln!(out, "  c{i} [{attrs}];").unwrap();
    }
    for (i, e) in prefix.events.iter().enumerate() {
        writeln!(
            out,
            "  e{i} [shape=box, label={}];",
            quote(net.transition_name(e.label))
        )
        .unwrap();
        for c in &e.pre {
            writeln!(out, "  c{c} -> e{i};").unwrap();
        }
        for c in &e.post {
            writeln!(out, "  e{i} -> c{c};").unwrap();
        }
    }
    out.push_str("}\n");
    out
}
