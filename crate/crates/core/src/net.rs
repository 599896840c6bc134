//! Place/transition nets, firing, and explicit reachability.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};
use crate::multiset::Multiset;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlaceId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TransitionId(pub u32);

impl PlaceId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl TransitionId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

pub type Marking = Multiset<PlaceId>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub name: String,
    pub pre: Multiset<PlaceId>,
    pub post: Multiset<PlaceId>,
}

/// A finite Petri net. Places and transitions are numbered in lexicographic
/// order of their names, so iterating ids is the canonical order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PetriNet {
    places: Vec<String>,
    transitions: Vec<Transition>,
    initial: Marking,
    place_post: Vec<Vec<TransitionId>>,
    place_index: HashMap<String, PlaceId>,
    transition_index: HashMap<String, TransitionId>,
}

type NamedArcs = Vec<(String, u32)>;

/// Collects named places and arcs before the net is frozen into a [`PetriNet`].
#[derive(Clone, Debug, Default)]
pub struct NetBuilder {
    places: Vec<String>,
    transitions: Vec<(String, NamedArcs, NamedArcs)>,
    initial: Vec<(String, u32)>,
}

impl NetBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn place(&mut self, name: impl Into<String>) -> &mut Self {
        self.places.push(name.into());
        self
    }

    pub fn transition<S: Into<String>>(
        &mut self,
        name: impl Into<String>,
        pre: impl IntoIterator<Item = (S, u32)>,
        post: impl IntoIterator<Item = (S, u32)>,
    ) -> &mut Self {
        self.transitions.push((
            name.into(),
            pre.into_iter().map(|(p, n)| (p.into(), n)).collect(),
            post.into_iter().map(|(p, n)| (p.into(), n)).collect(),
        ));
        self
    }

    pub fn tokens(&mut self, place: impl Into<String>, count: u32) -> &mut Self {
        self.initial.push((place.into(), count));
        self
    }

    pub fn build(&self) -> Result<PetriNet> {
        let mut places = self.places.clone();
        places.sort();
        if let Some(w) = places.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::MalformedNet(format!("duplicate place `{}`", w[0])));
        }
        let place_index: HashMap<String, PlaceId> = places
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), PlaceId(i as u32)))
            .collect();
        let resolve = |items: &[(String, u32)]| -> Result<Marking> {
            items
                .iter()
                .map(|(n, c)| {
                    place_index
                        .get(n)
                        .map(|&p| (p, *c))
                        .ok_or_else(|| Error::UnknownPlace(n.clone()))
                })
                .collect::<Result<Vec<_>>>()
                .map(Multiset::from_counts)
        };

        let mut transitions = Vec::with_capacity(self.transitions.len());
        for (name, pre, post) in &self.transitions {
            if place_index.contains_key(name) {
                return Err(Error::MalformedNet(format!(
                    "`{name}` names both a place and a transition"
                )));
            }
            let pre = resolve(pre)?;
            let post = resolve(post)?;
            if pre.is_empty() {
                return Err(Error::MalformedNet(format!(
                    "transition `{name}` has an empty precondition"
                )));
            }
            if post.is_empty() {
                return Err(Error::MalformedNet(format!(
                    "transition `{name}` has an empty postcondition"
                )));
            }
            transitions.push(Transition {
                name: name.clone(),
                pre,
                post,
            });
        }
        transitions.sort_by(|a, b| a.name.cmp(&b.name));
        if let Some(w) = transitions.windows(2).find(|w| w[0].name == w[1].name) {
            return Err(Error::MalformedNet(format!(
                "duplicate transition `{}`",
                w[0].name
            )));
        }
        let initial = resolve(&self.initial)?;

        let mut place_post = vec![Vec::new(); places.len()];
        for (i, t) in transitions.iter().enumerate() {
            for p in t.pre.support() {
                place_post[p.index()].push(TransitionId(i as u32));
            }
        }
        let transition_index = transitions
            .iter()
            .enumerate()
            .map(|(i, t)| (t.name.clone(), TransitionId(i as u32)))
            .collect();

        Ok(PetriNet {
            places,
            transitions,
            initial,
            place_post,
            place_index,
            transition_index,
        })
    }
}

impl PetriNet {
    pub fn num_places(&self) -> usize {
        self.places.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.transitions.len()
    }

    pub fn place_ids(&self) -> impl Iterator<Item = PlaceId> + '_ {
        (0..self.places.len() as u32).map(PlaceId)
    }

    pub fn transition_ids(&self) -> impl Iterator<Item = TransitionId> + '_ {
        (0..self.transitions.len() as u32).map(TransitionId)
    }

    pub fn place_name(&self, p: PlaceId) -> &str {
        &self.places[p.index()]
    }

    pub fn transition(&self, t: TransitionId) -> &Transition {
        &self.transitions[t.index()]
    }

    pub fn transition_name(&self, t: TransitionId) -> &str {
        &self.transitions[t.index()].name
    }

    pub fn pre(&self, t: TransitionId) -> &Multiset<PlaceId> {
        &self.transitions[t.index()].pre
    }

    pub fn post(&self, t: TransitionId) -> &Multiset<PlaceId> {
        &self.transitions[t.index()].post
    }

    /// Transitions that consume from `p`, in id order.
    pub fn place_post(&self, p: PlaceId) -> &[TransitionId] {
        &self.place_post[p.index()]
    }

    pub fn initial(&self) -> &Marking {
        &self.initial
    }

    pub fn place_id(&self, name: &str) -> Option<PlaceId> {
        self.place_index.get(name).copied()
    }

    pub fn transition_id(&self, name: &str) -> Option<TransitionId> {
        self.transition_index.get(name).copied()
    }

    /// Looks a transition up by name, failing on unknown ids.
    pub fn lookup_transition(&self, name: &str) -> Result<TransitionId> {
        self.transition_id(name)
            .ok_or_else(|| Error::UnknownTransition(name.to_string()))
    }

    fn check(&self, t: TransitionId) -> Result<()> {
        if t.index() < self.transitions.len() {
            Ok(())
        } else {
            Err(Error::UnknownTransition(format!("#{}", t.0)))
        }
    }

    /// Whether `pre(t) ⊆ m`.
    pub fn enabled(&self, m: &Marking, t: TransitionId) -> Result<bool> {
        self.check(t)?;
        Ok(self.is_enabled(m, t))
    }

    /// `m - pre(t) + post(t)`, failing when `t` is not enabled.
    pub fn fire(&self, m: &Marking, t: TransitionId) -> Result<Marking> {
        self.check(t)?;
        if !self.is_enabled(m, t) {
            return Err(Error::NotEnabled {
                transition: self.transition_name(t).to_string(),
                marking: self.show(m),
            });
        }
        Ok(self.fire_unchecked(m, t))
    }

    pub(crate) fn is_enabled(&self, m: &Marking, t: TransitionId) -> bool {
        self.pre(t).is_subset(m)
    }

    pub(crate) fn fire_unchecked(&self, m: &Marking, t: TransitionId) -> Marking {
        let tr = &self.transitions[t.index()];
        m.difference(&tr.pre).sum(&tr.post)
    }

    /// Enabled transitions in id order.
    pub fn enabled_transitions<'a>(
        &'a self,
        m: &'a Marking,
    ) -> impl Iterator<Item = TransitionId> + 'a {
        self.transition_ids()
            .filter(move |&t| self.is_enabled(m, t))
    }

    /// Renders a marking as `{p, q:2}` using place names.
    pub fn show(&self, m: &Marking) -> String {
        let parts: Vec<String> = m
            .iter()
            .map(|(p, n)| {
                if n == 1 {
                    self.place_name(p).to_string()
                } else {
                    format!("{}:{}", self.place_name(p), n)
                }
            })
            .collect();
        format!("{{{}}}", parts.join(", "))
    }

    /// Breadth-first closure of the initial marking under firing.
    pub fn explore(&self, bound: u32) -> Result<ReachabilityGraph> {
        if bound == 0 {
            return Err(Error::MalformedNet("bound must be at least 1".into()));
        }
        let mut graph = ReachabilityGraph {
            markings: Vec::new(),
            index: HashMap::new(),
            edges: Vec::new(),
            out_start: Vec::new(),
        };
        self.check_bound(&self.initial, bound)?;
        graph.insert(self.initial.clone());
        let mut next = 0;
        while next < graph.markings.len() {
            graph.out_start.push(graph.edges.len());
            let m = graph.markings[next].clone();
            for t in self.transition_ids() {
                if !self.is_enabled(&m, t) {
                    continue;
                }
                let m2 = self.fire_unchecked(&m, t);
                let target = match graph.index.get(&m2) {
                    Some(&j) => j,
                    None => {
                        self.check_bound(&m2, bound)?;
                        graph.insert(m2)
                    }
                };
                graph.edges.push(Edge {
                    source: next,
                    transition: t,
                    target,
                });
            }
            next += 1;
        }
        graph.out_start.push(graph.edges.len());
        Ok(graph)
    }

    fn check_bound(&self, m: &Marking, bound: u32) -> Result<()> {
        match m.iter().find(|&(_, n)| n > bound) {
            Some((p, n)) => Err(Error::BoundExceeded {
                bound,
                place: self.place_name(p).to_string(),
                count: n,
                marking: self.show(m),
            }),
            None => Ok(()),
        }
    }

    /// All markings reachable from `start` using only transitions accepted by
    /// `allow`, in breadth-first order starting with `start` itself.
    pub fn closure<F: Fn(TransitionId) -> bool>(&self, start: &Marking, allow: F) -> Vec<Marking> {
        let mut seen: HashSet<Marking> = HashSet::new();
        let mut order = Vec::new();
        let mut queue = VecDeque::new();
        seen.insert(start.clone());
        queue.push_back(start.clone());
        while let Some(m) = queue.pop_front() {
            for t in self.transition_ids() {
                if allow(t) && self.is_enabled(&m, t) {
                    let m2 = self.fire_unchecked(&m, t);
                    if seen.insert(m2.clone()) {
                        queue.push_back(m2);
                    }
                }
            }
            order.push(m);
        }
        order
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub source: usize,
    pub transition: TransitionId,
    pub target: usize,
}

/// The reachable markings of a bounded net with their firing edges.
/// Index 0 is always the initial marking.
#[derive(Clone, Debug)]
pub struct ReachabilityGraph {
    markings: Vec<Marking>,
    index: HashMap<Marking, usize>,
    edges: Vec<Edge>,
    out_start: Vec<usize>,
}

impl ReachabilityGraph {
    fn insert(&mut self, m: Marking) -> usize {
        let i = self.markings.len();
        self.index.insert(m.clone(), i);
        self.markings.push(m);
        i
    }

    pub fn len(&self) -> usize {
        self.markings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.markings.is_empty()
    }

    pub fn initial_index(&self) -> usize {
        0
    }

    pub fn markings(&self) -> &[Marking] {
        &self.markings
    }

    pub fn marking(&self, i: usize) -> &Marking {
        &self.markings[i]
    }

    pub fn index_of(&self, m: &Marking) -> Option<usize> {
        self.index.get(m).copied()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Outgoing edges of marking `i`, ordered by transition id.
    pub fn out_edges(&self, i: usize) -> &[Edge] {
        &self.edges[self.out_start[i]..self.out_start[i + 1]]
    }
}

impl fmt::Display for PlaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

impl fmt::Display for TransitionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> PetriNet {
        let mut b = NetBuilder::new();
        b.place("p").place("q");
        b.transition("t", [("p", 1)], [("q", 1)]);
        b.tokens("p", 2);
        b.build().unwrap()
    }

    #[test]
    fn fire_moves_one_token() {
        let net = chain();
        let t = net.transition_id("t").unwrap();
        let m = net.fire(net.initial(), t).unwrap();
        assert_eq!(net.show(&m), "{p, q}");
    }

    #[test]
    fn empty_marking_enables_nothing() {
        let net = chain();
        let t = net.transition_id("t").unwrap();
        assert!(!net.enabled(&Marking::new(), t).unwrap());
    }

    #[test]
    fn multiplicity_matters() {
        let mut b = NetBuilder::new();
        b.place("p").place("q");
        b.transition("t", [("p", 2)], [("q", 1)]);
        b.tokens("p", 1);
        let net = b.build().unwrap();
        let t = net.transition_id("t").unwrap();
        assert!(!net.enabled(net.initial(), t).unwrap());
        assert!(matches!(
            net.fire(net.initial(), t),
            Err(Error::NotEnabled { .. })
        ));
    }

    #[test]
    fn unknown_transition_is_rejected() {
        let net = chain();
        assert!(matches!(
            net.enabled(net.initial(), TransitionId(7)),
            Err(Error::UnknownTransition(_))
        ));
        assert!(matches!(
            net.lookup_transition("nope"),
            Err(Error::UnknownTransition(_))
        ));
    }

    #[test]
    fn no_transitions_gives_single_marking() {
        let mut b = NetBuilder::new();
        b.place("p").tokens("p", 1);
        let g = b.build().unwrap().explore(1).unwrap();
        assert_eq!(g.len(), 1);
        assert!(g.edges().is_empty());
    }

    #[test]
    fn token_generator_exceeds_bound() {
        let mut b = NetBuilder::new();
        b.place("p").place("q");
        b.transition("grow", [("p", 1)], [("p", 1), ("q", 1)]);
        b.tokens("p", 1);
        let err = b.build().unwrap().explore(1).unwrap_err();
        assert!(matches!(err, Error::BoundExceeded { ref place, count: 2, .. } if place == "q"));
    }

    #[test]
    fn empty_postcondition_is_malformed() {
        let mut b = NetBuilder::new();
        b.place("p");
        b.transition("sink", [("p", 1)], Vec::<(&str, u32)>::new());
        assert!(matches!(b.build(), Err(Error::MalformedNet(_))));
    }

    #[test]
    fn ids_follow_name_order() {
        let mut b = NetBuilder::new();
        b.place("z").place("a");
        b.transition("tz", [("z", 1)], [("a", 1)]);
        b.transition("ta", [("a", 1)], [("z", 1)]);
        let net = b.build().unwrap();
        assert_eq!(net.place_name(PlaceId(0)), "a");
        assert_eq!(net.transition_name(TransitionId(0)), "ta");
    }
}
