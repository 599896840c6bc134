//! The finite two-player safety games built from a Petri game.
//!
//! Player 0 (the system) owns vertices `(M, ⊤)` and picks a commitment
//! `c ⊆ post(s_M)`; Player 1 owns `(M, c)` and fires purely environmental
//! transitions or committed system transitions. The primed variant adds a
//! responsibility multiset `R` that restricts when system transitions may
//! fire. Vertices are built lazily from the initial vertex, so these games
//! serve as a small-scale oracle for the symbolic solver.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::PetriGame;
use crate::net::{Marking, TransitionId};
use crate::strategy::CommitmentStrategy;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Commitment {
    /// Player 0 has to choose a commitment next.
    Top,
    /// Sorted set of allowed transitions.
    Set(Vec<TransitionId>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GameVertex {
    pub marking: Marking,
    pub commitment: Commitment,
    /// Present only in the primed game.
    pub responsibility: Option<Marking>,
}

impl GameVertex {
    pub fn is_player0(&self) -> bool {
        self.commitment == Commitment::Top
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Plain,
    Primed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    /// Player 0 picks a commitment.
    Commit,
    /// A purely environmental transition fires.
    Environment(TransitionId),
    /// A committed system transition fires.
    System(TransitionId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum BadClass {
    /// The marking itself is bad.
    X1,
    /// Two distinct committed transitions are enabled together.
    X2a,
    /// A committed transition is enabled with an ambiguous choice of tokens.
    X2b,
    /// Only system transitions are enabled and none is committed.
    X3,
}

impl fmt::Display for BadClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BadClass::X1 => "bad-marking (X1)",
            BadClass::X2a => "nondeterminism (X2a)",
            BadClass::X2b => "ambiguous-precondition (X2b)",
            BadClass::X3 => "deadlock (X3)",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Winner {
    System,
    Environment,
}

impl fmt::Display for Winner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Winner::System => "system",
            Winner::Environment => "environment",
        })
    }
}

pub fn initial_vertex(game: &PetriGame, variant: Variant) -> GameVertex {
    let m = game.net().initial().clone();
    let responsibility = match variant {
        Variant::Plain => None,
        Variant::Primed => game.system_place(&m).map(Marking::singleton),
    };
    GameVertex {
        marking: m,
        commitment: Commitment::Top,
        responsibility,
    }
}

/// Every subset of `domain`, ordered by the binary counter whose bit `i`
/// selects `domain[i]`.
pub fn commitment_subsets(domain: &[TransitionId]) -> impl Iterator<Item = Vec<TransitionId>> + '_ {
    assert!(
        domain.len() < 32,
        "commitment domain too large to enumerate"
    );
    (0u64..(1u64 << domain.len())).map(move |mask| {
        domain
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &t)| t)
            .collect()
    })
}

/// Complete, deterministically ordered successor list of `v`.
pub fn successors(
    game: &PetriGame,
    v: &GameVertex,
    variant: Variant,
) -> Vec<(EdgeKind, GameVertex)> {
    let net = game.net();
    let m = &v.marking;
    let Some(s) = game.system_place(m) else {
        return Vec::new();
    };
    match &v.commitment {
        Commitment::Top => {
            let r = match variant {
                Variant::Plain => None,
                Variant::Primed => Some(Marking::singleton(s)),
            };
            commitment_subsets(game.commitment_domain(s))
                .map(|c| {
                    (
                        EdgeKind::Commit,
                        GameVertex {
                            marking: m.clone(),
                            commitment: Commitment::Set(c),
                            responsibility: r.clone(),
                        },
                    )
                })
                .collect()
        }
        Commitment::Set(c) => {
            let mut out = Vec::new();
            for t in net.enabled_transitions(m) {
                let m2 = net.fire_unchecked(m, t);
                if game.is_environmental(t) {
                    match (variant, &v.responsibility) {
                        (Variant::Primed, Some(r)) => {
                            let base = r.difference(net.pre(t));
                            for o in net.post(t).support() {
                                let mut r2 = base.clone();
                                r2.add(o, 1);
                                out.push((
                                    EdgeKind::Environment(t),
                                    GameVertex {
                                        marking: m2.clone(),
                                        commitment: v.commitment.clone(),
                                        responsibility: Some(r2),
                                    },
                                ));
                            }
                        }
                        _ => out.push((
                            EdgeKind::Environment(t),
                            GameVertex {
                                marking: m2,
                                commitment: v.commitment.clone(),
                                responsibility: None,
                            },
                        )),
                    }
                } else if c.binary_search(&t).is_ok() {
                    let responsibility = match (variant, &v.responsibility) {
                        (Variant::Primed, Some(r)) => {
                            if !r.is_subset(net.pre(t)) {
                                continue;
                            }
                            game.system_place(&m2).map(Marking::singleton)
                        }
                        _ => None,
                    };
                    out.push((
                        EdgeKind::System(t),
                        GameVertex {
                            marking: m2,
                            commitment: Commitment::Top,
                            responsibility,
                        },
                    ));
                }
            }
            out
        }
    }
}

/// Whether `t` is enabled in `m` but some place holds more tokens than `t`
/// consumes from it, so the fired tokens are not determined.
pub(crate) fn ambiguous_precondition(game: &PetriGame, m: &Marking, t: TransitionId) -> bool {
    game.net().pre(t).iter().any(|(p, n)| n > 0 && n < m.get(p))
}

/// First matching bad class in the order X1, X2a, X2b, X3.
pub fn classify_bad(game: &PetriGame, v: &GameVertex) -> Option<BadClass> {
    let Commitment::Set(c) = &v.commitment else {
        return None;
    };
    let net = game.net();
    let m = &v.marking;
    if game.is_bad(m) {
        return Some(BadClass::X1);
    }
    let committed_enabled: Vec<TransitionId> = c
        .iter()
        .copied()
        .filter(|&t| net.is_enabled(m, t))
        .collect();
    if committed_enabled.len() >= 2 {
        return Some(BadClass::X2a);
    }
    if committed_enabled
        .iter()
        .any(|&t| ambiguous_precondition(game, m, t))
    {
        return Some(BadClass::X2b);
    }
    let mut any = false;
    for t in net.enabled_transitions(m) {
        any = true;
        if game.is_environmental(t) || c.binary_search(&t).is_ok() {
            return None;
        }
    }
    any.then_some(BadClass::X3)
}

/// `k^|P| · (2^|T| + 1)`, or `None` when it does not fit in 128 bits.
pub fn vertex_bound(game: &PetriGame) -> Option<u128> {
    let k = game.bound() as u128;
    let p = game.net().num_places() as u32;
    let t = game.net().num_transitions() as u32;
    let markings = k.checked_pow(p)?;
    let commitments = 1u128.checked_shl(t).filter(|_| t < 128)?.checked_add(1)?;
    markings.checked_mul(commitments)
}

/// `(k+1)^|P| · (2^|T| + 1)`: the vertex count bound using the number of
/// `k`-bounded markings.
pub fn marking_vertex_bound(game: &PetriGame) -> Option<u128> {
    let k = game.bound() as u128 + 1;
    let p = game.net().num_places() as u32;
    let t = game.net().num_transitions() as u32;
    let markings = k.checked_pow(p)?;
    let commitments = 1u128.checked_shl(t).filter(|_| t < 128)?.checked_add(1)?;
    markings.checked_mul(commitments)
}

/// The reachable part of `Graph(G)` or `Graph'(G)`.
#[derive(Clone, Debug)]
pub struct ExplicitGame {
    pub variant: Variant,
    pub vertices: Vec<GameVertex>,
    /// Successor indices; bad vertices are not expanded.
    pub successors: Vec<Vec<u32>>,
    pub bad: Vec<Option<BadClass>>,
}

impl ExplicitGame {
    /// Materializes every vertex reachable from the initial one, refusing to
    /// grow past `cap` vertices.
    pub fn build(game: &PetriGame, variant: Variant, cap: usize) -> Result<Self> {
        let mut index: HashMap<GameVertex, u32> = HashMap::new();
        let mut vertices = Vec::new();
        let mut succ = Vec::new();
        let mut bad = Vec::new();
        let init = initial_vertex(game, variant);
        index.insert(init.clone(), 0);
        vertices.push(init);
        let mut next = 0;
        while next < vertices.len() {
            let v = vertices[next].clone();
            let class = classify_bad(game, &v);
            bad.push(class);
            let mut out = Vec::new();
            if class.is_none() {
                for (_, w) in successors(game, &v, variant) {
                    let id = match index.get(&w) {
                        Some(&id) => id,
                        None => {
                            if vertices.len() >= cap {
                                return Err(Error::VertexCapExceeded { cap });
                            }
                            let id = vertices.len() as u32;
                            index.insert(w.clone(), id);
                            vertices.push(w);
                            id
                        }
                    };
                    out.push(id);
                }
            }
            succ.push(out);
            next += 1;
        }
        Ok(ExplicitGame {
            variant,
            vertices,
            successors: succ,
            bad,
        })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Player-1 attractor of the bad vertices, by backward propagation with
    /// per-vertex counters of successors still outside the attractor.
    pub fn attractor(&self) -> Vec<bool> {
        let n = self.vertices.len();
        let mut preds: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (v, out) in self.successors.iter().enumerate() {
            for &w in out {
                preds[w as usize].push(v as u32);
            }
        }
        let mut remaining: Vec<usize> = self.successors.iter().map(Vec::len).collect();
        let mut attr = vec![false; n];
        let mut queue = VecDeque::new();
        for (v, bad) in self.bad.iter().enumerate() {
            if bad.is_some() {
                attr[v] = true;
                queue.push_back(v);
            }
        }
        while let Some(w) = queue.pop_front() {
            for &v in &preds[w] {
                let v = v as usize;
                if attr[v] {
                    continue;
                }
                if self.vertices[v].is_player0() {
                    remaining[v] -= 1;
                    if remaining[v] == 0 {
                        attr[v] = true;
                        queue.push_back(v);
                    }
                } else {
                    attr[v] = true;
                    queue.push_back(v);
                }
            }
        }
        attr
    }
}

#[derive(Clone, Debug)]
pub struct ExplicitSolution {
    pub winner: Winner,
    pub vertex_count: usize,
    pub attractor_size: usize,
    pub game: ExplicitGame,
    pub attractor: Vec<bool>,
    /// Memoryless choice at every Player-0 vertex reachable under it.
    pub strategy: Option<CommitmentStrategy>,
}

/// Solves the explicit graph game by attractor computation.
pub fn solve_explicit(game: &PetriGame, variant: Variant, cap: usize) -> Result<ExplicitSolution> {
    let explicit = ExplicitGame::build(game, variant, cap)?;
    let attractor = explicit.attractor();
    let attractor_size = attractor.iter().filter(|&&a| a).count();
    let winner = if attractor[0] {
        Winner::Environment
    } else {
        Winner::System
    };
    let strategy = (winner == Winner::System).then(|| {
        let mut strategy = CommitmentStrategy::new();
        let mut seen = vec![false; explicit.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            let vertex = &explicit.vertices[v];
            let next: Vec<u32> = if vertex.is_player0() {
                let pick = explicit.successors[v]
                    .iter()
                    .copied()
                    .find(|&w| !attractor[w as usize])
                    .expect("Player-0 vertex outside the attractor has a safe successor");
                if let Commitment::Set(c) = &explicit.vertices[pick as usize].commitment {
                    strategy.insert(vertex.marking.clone(), c.clone());
                }
                vec![pick]
            } else {
                explicit.successors[v].clone()
            };
            for w in next {
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    queue.push_back(w as usize);
                }
            }
        }
        strategy
    });
    Ok(ExplicitSolution {
        winner,
        vertex_count: explicit.len(),
        attractor_size,
        game: explicit,
        attractor,
        strategy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse;

    fn vertex(game: &PetriGame, marking: &[(&str, u32)], c: Option<&[&str]>) -> GameVertex {
        let m = game.marking_from_names(marking.iter().copied()).unwrap();
        let commitment = match c {
            None => Commitment::Top,
            Some(ts) => {
                let mut ids: Vec<_> = ts
                    .iter()
                    .map(|t| game.net().transition_id(t).unwrap())
                    .collect();
                ids.sort();
                Commitment::Set(ids)
            }
        };
        GameVertex {
            marking: m,
            commitment,
            responsibility: None,
        }
    }

    const FORK: &str = "\
bound 1
places system s s2
places env e f g
init s e
transition a pre s e post s2 f
transition b pre s e post s2 g
transition env pre f post g
";

    #[test]
    fn commit_successors_cover_all_subsets() {
        let g = parse(FORK).unwrap();
        let v = initial_vertex(&g, Variant::Plain);
        let succ = successors(&g, &v, Variant::Plain);
        assert_eq!(succ.len(), 4);
        assert!(succ.iter().all(|(k, _)| *k == EdgeKind::Commit));
        assert_eq!(succ[0].1.commitment, Commitment::Set(vec![]));
    }

    #[test]
    fn no_enabled_transition_means_no_successor_and_no_deadlock() {
        let g = parse(FORK).unwrap();
        let v = vertex(&g, &[("s2", 1), ("g", 1)], Some(&[]));
        assert!(successors(&g, &v, Variant::Plain).is_empty());
        assert_eq!(classify_bad(&g, &v), None);
    }

    #[test]
    fn classification_order() {
        let g = parse(FORK).unwrap();
        assert_eq!(
            classify_bad(&g, &vertex(&g, &[("s", 1), ("e", 1)], Some(&["a", "b"]))),
            Some(BadClass::X2a)
        );
        assert_eq!(
            classify_bad(&g, &vertex(&g, &[("s", 1), ("e", 1)], Some(&[]))),
            Some(BadClass::X3)
        );
        assert_eq!(
            classify_bad(&g, &vertex(&g, &[("s", 1), ("e", 1)], Some(&["b"]))),
            None
        );
        assert_eq!(
            classify_bad(&g, &vertex(&g, &[("s", 1), ("e", 1)], None)),
            None
        );
    }

    #[test]
    fn x1_precedes_other_classes() {
        let text = format!("{FORK}bad cover s e\n");
        let g = parse(&text).unwrap();
        assert_eq!(
            classify_bad(&g, &vertex(&g, &[("s", 1), ("e", 1)], Some(&["a", "b"]))),
            Some(BadClass::X1)
        );
    }

    #[test]
    fn x2b_needs_surplus_tokens() {
        let text = "\
bound 2
places system s
places env e
init s e:2
transition t pre s e post s e
";
        let g = parse(text).unwrap();
        let v = vertex(&g, &[("s", 1), ("e", 2)], Some(&["t"]));
        assert_eq!(classify_bad(&g, &v), Some(BadClass::X2b));
    }

    #[test]
    fn bad_initial_marking_loses() {
        let text = format!("{FORK}bad places e\n");
        let g = parse(&text).unwrap();
        let sol = solve_explicit(&g, Variant::Plain, 1000).unwrap();
        assert_eq!(sol.winner, Winner::Environment);
        assert!(sol.strategy.is_none());
    }

    #[test]
    fn fork_is_won_by_committing_to_one() {
        let g = parse(FORK).unwrap();
        for variant in [Variant::Plain, Variant::Primed] {
            let sol = solve_explicit(&g, variant, 1000).unwrap();
            assert_eq!(sol.winner, Winner::System);
            let strat = sol.strategy.unwrap();
            let c = strat.get(g.net().initial()).unwrap();
            assert_eq!(c.len(), 1);
        }
    }

    #[test]
    fn cap_is_enforced() {
        let g = parse(FORK).unwrap();
        assert!(matches!(
            solve_explicit(&g, Variant::Plain, 3),
            Err(Error::VertexCapExceeded { cap: 3 })
        ));
    }

    #[test]
    fn primed_system_edge_blocked_by_responsibility() {
        // The environment token moves e -> f on its own; the system only
        // meets the token at g, so after `step` the responsibility sits on f
        // (or on the other output) and `sync` over g cannot fire.
        let text = "\
bound 1
places system s s2
places env e f g h
init s e g
transition step pre e post f
transition sync pre s g post s2 h
";
        let g = parse(text).unwrap();
        let sync = g.net().transition_id("sync").unwrap();
        let mut c = vertex(&g, &[("s", 1), ("e", 1), ("g", 1)], Some(&["sync"]));
        let s = g.net().place_id("s").unwrap();
        c.responsibility = Some(Marking::singleton(s));
        let succ = successors(&g, &c, Variant::Primed);
        assert!(succ.iter().any(|(k, _)| *k == EdgeKind::System(sync)));
        let (_, after_step) = succ
            .iter()
            .find(|(k, _)| matches!(k, EdgeKind::Environment(_)))
            .unwrap();
        let succ2 = successors(&g, after_step, Variant::Primed);
        assert!(!succ2.iter().any(|(k, _)| *k == EdgeKind::System(sync)));
        // the plain game has no such restriction
        let mut plain = after_step.clone();
        plain.responsibility = None;
        assert!(successors(&g, &plain, Variant::Plain)
            .iter()
            .any(|(k, _)| *k == EdgeKind::System(sync)));
    }

    #[test]
    fn bound_formula() {
        let g = parse(FORK).unwrap();
        // 1^5 * (2^3 + 1)
        assert_eq!(vertex_bound(&g), Some(9));
        assert_eq!(marking_vertex_bound(&g), Some(32 * 9));
    }
}
