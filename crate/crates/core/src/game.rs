//! Petri games with a single system player.

use std::collections::{BTreeSet, HashSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::net::{Marking, PetriNet, PlaceId, ReachabilityGraph, TransitionId};

/// The set of markings the system must avoid.
///
/// Membership is the union of three encodings: any marked bad place, an
/// exact listed marking, or a listed pattern contained in the marking.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BadSpec {
    pub places: BTreeSet<PlaceId>,
    pub markings: HashSet<Marking>,
    pub covers: Vec<Marking>,
}

impl BadSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn places<I: IntoIterator<Item = PlaceId>>(places: I) -> Self {
        BadSpec {
            places: places.into_iter().collect(),
            ..Self::default()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.places.is_empty() && self.markings.is_empty() && self.covers.is_empty()
    }

    pub fn contains(&self, m: &Marking) -> bool {
        m.support().any(|p| self.places.contains(&p))
            || self.markings.contains(m)
            || self.covers.iter().any(|c| c.is_subset(m))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionKind {
    /// The whole precondition lies on environment places.
    Environment,
    /// Some precondition place belongs to the system.
    System,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PetriGame {
    net: PetriNet,
    system: Vec<bool>,
    kinds: Vec<TransitionKind>,
    bad: BadSpec,
    bound: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub bound: u32,
    pub places: usize,
    pub transitions: usize,
    pub reachable_markings: usize,
    /// Largest number of environment tokens in any reachable marking.
    pub max_env_tokens: u32,
}

impl PetriGame {
    /// Builds a game; every place not listed as a system place belongs to
    /// the environment.
    pub fn new<I>(net: PetriNet, system_places: I, bad: BadSpec, bound: u32) -> Result<Self>
    where
        I: IntoIterator<Item = PlaceId>,
    {
        if bound == 0 {
            return Err(Error::MalformedNet("bound must be at least 1".into()));
        }
        let mut system = vec![false; net.num_places()];
        for p in system_places {
            if p.index() >= system.len() {
                return Err(Error::UnknownPlace(format!("#{}", p.0)));
            }
            system[p.index()] = true;
        }
        let kinds = net
            .transition_ids()
            .map(|t| {
                if net.pre(t).support().any(|p| system[p.index()]) {
                    TransitionKind::System
                } else {
                    TransitionKind::Environment
                }
            })
            .collect();
        Ok(PetriGame {
            net,
            system,
            kinds,
            bad,
            bound,
        })
    }

    pub fn net(&self) -> &PetriNet {
        &self.net
    }

    pub fn bound(&self) -> u32 {
        self.bound
    }

    pub fn bad(&self) -> &BadSpec {
        &self.bad
    }

    pub fn is_system_place(&self, p: PlaceId) -> bool {
        self.system[p.index()]
    }

    pub fn system_places(&self) -> impl Iterator<Item = PlaceId> + '_ {
        self.net.place_ids().filter(|&p| self.system[p.index()])
    }

    pub fn env_places(&self) -> impl Iterator<Item = PlaceId> + '_ {
        self.net.place_ids().filter(|&p| !self.system[p.index()])
    }

    pub fn kind(&self, t: TransitionId) -> TransitionKind {
        self.kinds[t.index()]
    }

    pub fn is_environmental(&self, t: TransitionId) -> bool {
        self.kinds[t.index()] == TransitionKind::Environment
    }

    pub fn is_bad(&self, m: &Marking) -> bool {
        self.bad.contains(m)
    }

    pub fn system_tokens(&self, m: &Marking) -> u32 {
        m.iter()
            .filter(|&(p, _)| self.system[p.index()])
            .map(|(_, n)| n)
            .sum()
    }

    pub fn env_tokens(&self, m: &Marking) -> u32 {
        m.iter()
            .filter(|&(p, _)| !self.system[p.index()])
            .map(|(_, n)| n)
            .sum()
    }

    /// The place holding the system token. Only meaningful for markings of a
    /// validated game, where exactly one such place is marked.
    pub fn system_place(&self, m: &Marking) -> Option<PlaceId> {
        m.support().find(|&p| self.system[p.index()])
    }

    /// Transitions the system player at `s` can take part in, in id order.
    pub fn commitment_domain(&self, s: PlaceId) -> &[TransitionId] {
        self.net.place_post(s)
    }

    /// Explores the reachable markings, checking the bound and the
    /// single-system-token restriction on each of them.
    pub fn reachability(&self) -> Result<ReachabilityGraph> {
        let graph = self.net.explore(self.bound)?;
        for m in graph.markings() {
            let count = self.system_tokens(m);
            if count != 1 {
                return Err(Error::NotOneSystemPlayer {
                    marking: self.net.show(m),
                    count,
                });
            }
        }
        Ok(graph)
    }

    pub fn validate(&self) -> Result<ValidationReport> {
        let graph = self.reachability()?;
        Ok(self.report(&graph))
    }

    pub fn report(&self, graph: &ReachabilityGraph) -> ValidationReport {
        ValidationReport {
            bound: self.bound,
            places: self.net.num_places(),
            transitions: self.net.num_transitions(),
            reachable_markings: graph.len(),
            max_env_tokens: graph
                .markings()
                .iter()
                .map(|m| self.env_tokens(m))
                .max()
                .unwrap_or(0),
        }
    }

    /// Parses `p:2 q` style marking text against this game's places.
    pub fn marking_from_names<'a, I>(&self, items: I) -> Result<Marking>
    where
        I: IntoIterator<Item = (&'a str, u32)>,
    {
        let mut out = Vec::new();
        for (name, n) in items {
            let p = self
                .net
                .place_id(name)
                .ok_or_else(|| Error::UnknownPlace(name.to_string()))?;
            out.push((p, n));
        }
        Ok(Marking::from_counts(out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::NetBuilder;

    fn tiny(sys_tokens: u32) -> PetriGame {
        let mut b = NetBuilder::new();
        b.place("s").place("e").place("f");
        b.transition("go", [("s", 1), ("e", 1)], [("s", 1), ("f", 1)]);
        b.transition("back", [("f", 1)], [("e", 1)]);
        b.tokens("e", 1);
        if sys_tokens > 0 {
            b.tokens("s", sys_tokens);
        }
        let net = b.build().unwrap();
        let s = net.place_id("s").unwrap();
        PetriGame::new(net, [s], BadSpec::none(), 2).unwrap()
    }

    #[test]
    fn transition_kinds_follow_preconditions() {
        let g = tiny(1);
        let go = g.net().transition_id("go").unwrap();
        let back = g.net().transition_id("back").unwrap();
        assert_eq!(g.kind(go), TransitionKind::System);
        assert_eq!(g.kind(back), TransitionKind::Environment);
    }

    #[test]
    fn two_system_tokens_rejected() {
        assert!(matches!(
            tiny(2).validate(),
            Err(Error::NotOneSystemPlayer { count: 2, .. })
        ));
    }

    #[test]
    fn zero_system_tokens_rejected() {
        assert!(matches!(
            tiny(0).validate(),
            Err(Error::NotOneSystemPlayer { count: 0, .. })
        ));
    }

    #[test]
    fn bad_spec_semantics() {
        let g = tiny(1);
        let m = |items: &[(&str, u32)]| g.marking_from_names(items.iter().copied()).unwrap();
        assert!(!BadSpec::none().contains(&m(&[("s", 1), ("e", 1)])));

        let f = g.net().place_id("f").unwrap();
        let by_place = BadSpec::places([f]);
        assert!(by_place.contains(&m(&[("s", 1), ("f", 1)])));
        assert!(!by_place.contains(&m(&[("s", 1), ("e", 1)])));

        let exact = BadSpec {
            markings: [m(&[("s", 1), ("e", 1)])].into_iter().collect(),
            ..BadSpec::default()
        };
        assert!(!exact.contains(&m(&[("s", 1)])));
        assert!(exact.contains(&m(&[("s", 1), ("e", 1)])));
        assert!(!exact.contains(&m(&[("s", 1), ("e", 1), ("f", 1)])));

        let cover = BadSpec {
            covers: vec![m(&[("s", 1), ("e", 1)])],
            ..BadSpec::default()
        };
        assert!(cover.contains(&m(&[("s", 1), ("e", 1), ("f", 1)])));
        assert!(!cover.contains(&m(&[("s", 1)])));
    }

    #[test]
    fn validation_counts_env_players() {
        let r = tiny(1).validate().unwrap();
        assert_eq!(r.reachable_markings, 2);
        assert_eq!(r.max_env_tokens, 1);
    }
}
