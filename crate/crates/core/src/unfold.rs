//! Strategy-induced unfoldings and their structural checks.
//!
//! A memoryless commitment strategy is unrolled into a branching process:
//! conditions are token instances labelled with places, events are
//! transition instances labelled with transitions. Exploration follows the
//! primed graph game, with Player 0's commitment merged into the move that
//! reaches `(M, ⊤)`, and stops once a state's configuration reaches the
//! requested depth.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use fixedbitset::FixedBitSet;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::PetriGame;
use crate::graph_game::{initial_vertex, successors, Commitment, EdgeKind, GameVertex, Variant};
use crate::multiset::Multiset;
use crate::net::{Marking, PlaceId, TransitionId};
use crate::strategy::CommitmentStrategy;

/// A set of conditions, sorted by id.
pub type Cut = Vec<usize>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Condition {
    pub label: PlaceId,
    /// The event that produced this condition; `None` for initial ones.
    pub producer: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Event {
    pub label: TransitionId,
    pub pre: Vec<usize>,
    pub post: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    JustifiedRefusal,
    Safety,
    Determinism,
    DeadlockAvoidance,
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axiom::JustifiedRefusal => "justified refusal",
            Axiom::Safety => "safety",
            Axiom::Determinism => "determinism",
            Axiom::DeadlockAvoidance => "deadlock avoidance",
        })
    }
}

#[derive(Clone, Debug)]
pub struct UnfoldingPrefix {
    pub conditions: Vec<Condition>,
    pub events: Vec<Event>,
    pub initial_cut: Cut,
    /// Cuts at which Player 0 committed, one per visited `(M, ⊤)` state.
    pub player0_cuts: BTreeSet<Cut>,
    pub depth: usize,
    /// Number of distinct `(vertex, cut)` states visited.
    pub states: usize,
    /// Whether some state was left unexpanded because of the depth limit.
    pub truncated: bool,
    /// Events consuming each condition.
    consumers: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AxiomReport {
    pub cuts_checked: usize,
    /// Cuts whose configuration reaches the depth limit.
    pub cuts_skipped: usize,
}

/// Occurrence-net inspection data derived from a prefix.
#[derive(Clone, Debug)]
pub struct Causality {
    /// Events causally at or below each condition.
    past: Vec<FixedBitSet>,
    /// Events in direct conflict with some event of each condition's past.
    enemies: Vec<FixedBitSet>,
    /// Events consuming each condition.
    consumers: Vec<FixedBitSet>,
    /// Events at or below each event, including itself.
    event_past: Vec<FixedBitSet>,
}

struct Builder<'a> {
    game: &'a PetriGame,
    conditions: Vec<Condition>,
    events: Vec<Event>,
    by_pre: HashMap<(TransitionId, Vec<usize>), usize>,
}

impl Builder<'_> {
    fn event(&mut self, t: TransitionId, pre: Vec<usize>) -> usize {
        if let Some(&e) = self.by_pre.get(&(t, pre.clone())) {
            return e;
        }
        let e = self.events.len();
        let mut post = Vec::new();
        for (p, n) in self.game.net().post(t).iter() {
            for _ in 0..n {
                post.push(self.conditions.len());
                self.conditions.push(Condition {
                    label: p,
                    producer: Some(e),
                });
            }
        }
        self.by_pre.insert((t, pre.clone()), e);
        self.events.push(Event {
            label: t,
            pre,
            post,
        });
        e
    }
}

/// Every `B ⊆ cut` whose labels are exactly `pre(t)`.
fn choices(
    game: &PetriGame,
    conditions: &[Condition],
    cut: &[usize],
    t: TransitionId,
) -> Vec<Vec<usize>> {
    let mut acc: Vec<Vec<usize>> = vec![Vec::new()];
    for (p, n) in game.net().pre(t).iter() {
        let avail: Vec<usize> = cut
            .iter()
            .copied()
            .filter(|&c| conditions[c].label == p)
            .collect();
        let picks = subsets_of_size(&avail, n as usize);
        let mut next = Vec::new();
        for base in &acc {
            for pick in &picks {
                let mut b = base.clone();
                b.extend(pick);
                next.push(b);
            }
        }
        acc = next;
    }
    for b in &mut acc {
        b.sort_unstable();
    }
    acc
}

fn subsets_of_size(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if items.len() < k {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        for mut rest in subsets_of_size(&items[i + 1..], k - 1) {
            rest.insert(0, x);
            out.push(rest);
        }
    }
    out
}

fn fire_cut(cut: &[usize], pre: &[usize], post: &[usize]) -> Cut {
    let mut out: Cut = cut.iter().copied().filter(|c| !pre.contains(c)).collect();
    out.extend_from_slice(post);
    out.sort_unstable();
    out
}

/// Player 0 moves immediately after reaching `(M, ⊤)`.
fn commit(
    game: &PetriGame,
    strategy: &CommitmentStrategy,
    v: GameVertex,
) -> Result<(GameVertex, bool)> {
    if !v.is_player0() {
        return Ok((v, false));
    }
    let c = strategy
        .get(&v.marking)
        .ok_or_else(|| Error::MissingChoice(game.net().show(&v.marking)))?;
    let w = successors(game, &v, Variant::Primed)
        .into_iter()
        .map(|(_, w)| w)
        .find(|w| matches!(&w.commitment, Commitment::Set(s) if s == c))
        .expect("the strategy's commitment is a subset of post(s_M)");
    Ok((w, true))
}

/// Unrolls `strategy` up to configurations of `depth` events.
pub fn unfold(
    game: &PetriGame,
    strategy: &CommitmentStrategy,
    depth: usize,
) -> Result<UnfoldingPrefix> {
    let net = game.net();
    let mut b = Builder {
        game,
        conditions: Vec::new(),
        events: Vec::new(),
        by_pre: HashMap::new(),
    };
    let mut initial_cut = Vec::new();
    for (p, n) in net.initial().iter() {
        for _ in 0..n {
            initial_cut.push(b.conditions.len());
            b.conditions.push(Condition {
                label: p,
                producer: None,
            });
        }
    }

    let mut player0_cuts = BTreeSet::new();
    let mut seen: HashSet<(GameVertex, Cut)> = HashSet::new();
    let mut queue = VecDeque::new();
    let (v0, committed) = commit(game, strategy, initial_vertex(game, Variant::Primed))?;
    if committed {
        player0_cuts.insert(initial_cut.clone());
    }
    seen.insert((v0.clone(), initial_cut.clone()));
    queue.push_back((v0, initial_cut.clone(), 0usize));
    let mut truncated = false;

    while let Some((v, cut, d)) = queue.pop_front() {
        let moves = successors(game, &v, Variant::Primed);
        if d >= depth {
            truncated |= !moves.is_empty();
            continue;
        }
        for (kind, w) in moves {
            let t = match kind {
                EdgeKind::Environment(t) | EdgeKind::System(t) => t,
                EdgeKind::Commit => unreachable!("commitments are merged"),
            };
            let (w, committed) = commit(game, strategy, w)?;
            for pre in choices(game, &b.conditions, &cut, t) {
                let e = b.event(t, pre);
                let ev = &b.events[e];
                let cut2 = fire_cut(&cut, &ev.pre, &ev.post);
                if committed {
                    player0_cuts.insert(cut2.clone());
                }
                let key = (w.clone(), cut2);
                if !seen.contains(&key) {
                    seen.insert(key.clone());
                    queue.push_back((key.0, key.1, d + 1));
                }
            }
        }
    }

    let mut consumers = vec![Vec::new(); b.conditions.len()];
    for (e, ev) in b.events.iter().enumerate() {
        for &c in &ev.pre {
            consumers[c].push(e);
        }
    }
    Ok(UnfoldingPrefix {
        consumers,
        conditions: b.conditions,
        events: b.events,
        initial_cut,
        player0_cuts,
        depth,
        states: seen.len(),
        truncated,
    })
}

impl UnfoldingPrefix {
    pub fn labels(&self, cut: &[usize]) -> Marking {
        cut.iter().map(|&c| self.conditions[c].label).collect()
    }

    pub fn show_cut(&self, game: &PetriGame, cut: &[usize]) -> String {
        let parts: Vec<String> = cut
            .iter()
            .map(|&c| format!("{}#{}", game.net().place_name(self.conditions[c].label), c))
            .collect();
        format!("{{{}}}", parts.join(", "))
    }

    fn enabled_events(&self, cut: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = cut
            .iter()
            .flat_map(|&c| self.consumers[c].iter().copied())
            .filter(|&e| {
                self.events[e]
                    .pre
                    .iter()
                    .all(|c| cut.binary_search(c).is_ok())
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Every cut reachable by firing events from the initial cut, with the
    /// size of its configuration.
    pub fn reachable_cuts(&self) -> BTreeMap<Cut, usize> {
        let mut out = BTreeMap::new();
        out.insert(self.initial_cut.clone(), 0);
        let mut queue = VecDeque::from([(self.initial_cut.clone(), 0usize)]);
        while let Some((cut, d)) = queue.pop_front() {
            for e in self.enabled_events(&cut) {
                let ev = &self.events[e];
                let next = fire_cut(&cut, &ev.pre, &ev.post);
                if !out.contains_key(&next) {
                    out.insert(next.clone(), d + 1);
                    queue.push_back((next, d + 1));
                }
            }
        }
        out
    }

    /// Violations of the occurrence-net and branching-process conditions.
    pub fn structural_violations(&self, game: &PetriGame) -> Vec<String> {
        let net = game.net();
        let mut out = Vec::new();
        let mut keys = BTreeSet::new();
        for (e, ev) in self.events.iter().enumerate() {
            if !keys.insert((ev.label, ev.pre.clone())) {
                out.push(format!(
                    "event {e} duplicates label and preset of an earlier event"
                ));
            }
            if &self.labels(&ev.pre) != net.pre(ev.label) {
                out.push(format!(
                    "event {e}: preset labels differ from pre of its transition"
                ));
            }
            if &self.labels(&ev.post) != net.post(ev.label) {
                out.push(format!(
                    "event {e}: postset labels differ from post of its transition"
                ));
            }
            for &c in &ev.pre {
                if let Some(p) = self.conditions[c].producer {
                    if p >= e {
                        out.push(format!("event {e} consumes condition {c} produced later"));
                    }
                }
            }
            for &c in &ev.post {
                if self.conditions[c].producer != Some(e) {
                    out.push(format!("condition {c} has a producer other than event {e}"));
                }
            }
        }
        let causality = self.causality();
        for e in 0..self.events.len() {
            if causality.event_in_self_conflict(e) {
                out.push(format!("event {e} is in conflict with itself"));
            }
        }
        out
    }

    pub fn causality(&self) -> Causality {
        let ne = self.events.len();
        let nc = self.conditions.len();
        let mut event_past: Vec<FixedBitSet> = Vec::with_capacity(ne);
        for (e, ev) in self.events.iter().enumerate() {
            let mut set = FixedBitSet::with_capacity(ne);
            set.insert(e);
            for &c in &ev.pre {
                if let Some(p) = self.conditions[c].producer {
                    set.union_with(&event_past[p]);
                }
            }
            event_past.push(set);
        }
        let mut consumers = vec![FixedBitSet::with_capacity(ne); nc];
        for (e, ev) in self.events.iter().enumerate() {
            for &c in &ev.pre {
                consumers[c].insert(e);
            }
        }
        let mut direct = vec![FixedBitSet::with_capacity(ne); ne];
        for c in &consumers {
            let list: Vec<usize> = c.ones().collect();
            for &a in &list {
                for &b in &list {
                    if a != b {
                        direct[a].insert(b);
                    }
                }
            }
        }
        let mut event_enemies = Vec::with_capacity(ne);
        for past in &event_past {
            let mut set = FixedBitSet::with_capacity(ne);
            for t in past.ones() {
                set.union_with(&direct[t]);
            }
            event_enemies.push(set);
        }
        let mut past = Vec::with_capacity(nc);
        let mut enemies = Vec::with_capacity(nc);
        for cond in &self.conditions {
            match cond.producer {
                Some(p) => {
                    past.push(event_past[p].clone());
                    enemies.push(event_enemies[p].clone());
                }
                None => {
                    past.push(FixedBitSet::with_capacity(ne));
                    enemies.push(FixedBitSet::with_capacity(ne));
                }
            }
        }
        Causality {
            past,
            enemies,
            consumers,
            event_past,
        }
    }

    /// The cut reached by firing exactly the events at or below `x`.
    pub fn mapping_cut(&self, causality: &Causality, x: usize) -> Cut {
        let mut cut = self.initial_cut.clone();
        for e in causality.past[x].ones() {
            let ev = &self.events[e];
            cut = fire_cut(&cut, &ev.pre, &ev.post);
        }
        cut
    }

    /// Conditions not below `x` whose producer, if any, is below `x`.
    pub fn lkc(&self, causality: &Causality, x: usize) -> Cut {
        (0..self.conditions.len())
            .filter(|&p| {
                !causality.below(p, x)
                    && self.conditions[p]
                        .producer
                        .is_none_or(|t| causality.past[x].contains(t))
            })
            .collect()
    }

    /// Conditions at or below some member of `cut`.
    pub fn past_of_cut(&self, causality: &Causality, cut: &[usize]) -> BTreeSet<usize> {
        (0..self.conditions.len())
            .filter(|&p| cut.iter().any(|&c| p == c || causality.below(p, c)))
            .collect()
    }

    /// Maximal sets of pairwise concurrent conditions.
    pub fn cuts_by_concurrency(&self, causality: &Causality) -> BTreeSet<Cut> {
        let n = self.conditions.len();
        let mut adj = vec![FixedBitSet::with_capacity(n); n];
        for x in 0..n {
            for y in x + 1..n {
                if causality.concurrent(x, y) {
                    adj[x].insert(y);
                    adj[y].insert(x);
                }
            }
        }
        let mut out = BTreeSet::new();
        let mut all = FixedBitSet::with_capacity(n);
        all.insert_range(..);
        bron_kerbosch(
            &adj,
            &mut Vec::new(),
            all,
            FixedBitSet::with_capacity(n),
            &mut out,
        );
        out
    }

    /// Conditions of `cut` labelled with a system place.
    fn system_condition(&self, game: &PetriGame, cut: &[usize]) -> Option<usize> {
        cut.iter()
            .copied()
            .find(|&c| game.is_system_place(self.conditions[c].label))
    }

    /// Player-0 cuts that differ from the knowledge cut of their system
    /// condition.
    pub fn player0_cut_violations(&self, game: &PetriGame, causality: &Causality) -> Vec<Cut> {
        self.player0_cuts
            .iter()
            .filter(|cut| match self.system_condition(game, cut) {
                Some(s) => &&self.lkc(causality, s) != cut,
                None => true,
            })
            .cloned()
            .collect()
    }

    /// Checks safety, determinism, deadlock avoidance and justified refusal
    /// on every reachable cut whose configuration is below the depth limit.
    pub fn check_axioms(&self, game: &PetriGame) -> Result<AxiomReport> {
        let net = game.net();
        let mut consumer_labels: Vec<BTreeSet<TransitionId>> =
            vec![BTreeSet::new(); self.conditions.len()];
        for ev in &self.events {
            for &c in &ev.pre {
                consumer_labels[c].insert(ev.label);
            }
        }
        let mut report = AxiomReport {
            cuts_checked: 0,
            cuts_skipped: 0,
        };
        for (cut, size) in self.reachable_cuts() {
            if size >= self.depth {
                report.cuts_skipped += 1;
                continue;
            }
            report.cuts_checked += 1;
            let fail = |axiom| Error::AxiomViolation {
                axiom,
                cut: self.show_cut(game, &cut),
            };
            let m = self.labels(&cut);
            if game.is_bad(&m) {
                return Err(fail(Axiom::Safety));
            }
            let enabled = self.enabled_events(&cut);
            if let Some(s) = self.system_condition(game, &cut) {
                let committed = enabled
                    .iter()
                    .filter(|&&e| self.events[e].pre.contains(&s))
                    .count();
                if committed > 1 {
                    return Err(fail(Axiom::Determinism));
                }
            }
            if enabled.is_empty() && net.enabled_transitions(&m).next().is_some() {
                return Err(fail(Axiom::DeadlockAvoidance));
            }
            let present: BTreeSet<(TransitionId, &[usize])> = enabled
                .iter()
                .map(|&e| (self.events[e].label, self.events[e].pre.as_slice()))
                .collect();
            for t in net.enabled_transitions(&m) {
                for b in choices(game, &self.conditions, &cut, t) {
                    if present.contains(&(t, b.as_slice())) {
                        continue;
                    }
                    let refused = b.iter().any(|&c| {
                        game.is_system_place(self.conditions[c].label)
                            && !consumer_labels[c].contains(&t)
                    });
                    if !refused {
                        return Err(fail(Axiom::JustifiedRefusal));
                    }
                }
            }
        }
        Ok(report)
    }

    /// Label multiset of each reachable cut.
    pub fn reachable_markings(&self) -> BTreeSet<Multiset<PlaceId>> {
        self.reachable_cuts()
            .keys()
            .map(|c| self.labels(c))
            .collect()
    }
}

fn bron_kerbosch(
    adj: &[FixedBitSet],
    r: &mut Vec<usize>,
    mut p: FixedBitSet,
    mut x: FixedBitSet,
    out: &mut BTreeSet<Cut>,
) {
    if p.is_clear() && x.is_clear() {
        let mut cut = r.clone();
        cut.sort_unstable();
        out.insert(cut);
        return;
    }
    let pivot = p
        .ones()
        .chain(x.ones())
        .max_by_key(|&u| p.intersection(&adj[u]).count())
        .expect("p or x is nonempty");
    let candidates: Vec<usize> = p.difference(&adj[pivot]).collect();
    for v in candidates {
        r.push(v);
        let mut p2 = p.clone();
        p2.intersect_with(&adj[v]);
        let mut x2 = x.clone();
        x2.intersect_with(&adj[v]);
        bron_kerbosch(adj, r, p2, x2, out);
        r.pop();
        p.set(v, false);
        x.insert(v);
    }
}

impl Causality {
    /// Whether condition `x` lies strictly below condition `y`.
    pub fn below(&self, x: usize, y: usize) -> bool {
        !self.consumers[x].is_disjoint(&self.past[y])
    }

    pub fn conflict(&self, x: usize, y: usize) -> bool {
        !self.enemies[x].is_disjoint(&self.past[y])
    }

    pub fn concurrent(&self, x: usize, y: usize) -> bool {
        x != y && !self.below(x, y) && !self.below(y, x) && !self.conflict(x, y)
    }

    fn event_in_self_conflict(&self, e: usize) -> bool {
        let past: Vec<usize> = self.event_past[e].ones().collect();
        past.iter().enumerate().any(|(i, &a)| {
            past[i + 1..].iter().any(|&b| {
                self.consumers
                    .iter()
                    .any(|c| c.contains(a) && c.contains(b))
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse;
    use crate::solver::{decide, SolveOptions};

    const CONCURRENT: &str = "\
bound 1
places system s s2
places env a b a2 b2
init s a b
transition ta pre a post a2
transition tb pre b post b2
transition go pre s a2 b2 post s2 a2 b2
";

    fn prefix(text: &str, depth: usize) -> (PetriGame, UnfoldingPrefix) {
        let g = parse(text).unwrap();
        let v = decide(&g, SolveOptions::default()).unwrap();
        let p = unfold(&g, v.witness.as_ref().unwrap(), depth).unwrap();
        (g, p)
    }

    #[test]
    fn concurrent_environment_moves_share_events() {
        let (g, p) = prefix(CONCURRENT, 10);
        // ta, tb and go each occur once
        assert_eq!(p.events.len(), 3);
        assert!(p.structural_violations(&g).is_empty());
        assert_eq!(p.reachable_cuts().len(), 5);
        assert!(!p.truncated);
    }

    #[test]
    fn cuts_agree_with_cliques() {
        let (_, p) = prefix(CONCURRENT, 10);
        let c = p.causality();
        let fired: BTreeSet<Cut> = p.reachable_cuts().into_keys().collect();
        assert_eq!(fired, p.cuts_by_concurrency(&c));
    }

    #[test]
    fn knowledge_cut_matches_mapping() {
        let (g, p) = prefix(CONCURRENT, 10);
        let c = p.causality();
        for x in 0..p.conditions.len() {
            assert_eq!(p.lkc(&c, x), p.mapping_cut(&c, x), "condition {x}");
        }
        assert!(p.player0_cut_violations(&g, &c).is_empty());
        p.check_axioms(&g).unwrap();
    }

    #[test]
    fn conflict_from_shared_condition() {
        let text = "\
bound 1
places system s
places env e f g
init s e
transition l pre e post f
transition r pre e post g
";
        let (g, p) = prefix(text, 5);
        let c = p.causality();
        let f = p
            .conditions
            .iter()
            .position(|x| x.label == g.net().place_id("f").unwrap())
            .unwrap();
        let gg = p
            .conditions
            .iter()
            .position(|x| x.label == g.net().place_id("g").unwrap())
            .unwrap();
        assert!(c.conflict(f, gg));
        assert!(!c.concurrent(f, gg));
    }

    #[test]
    fn depth_limit_truncates() {
        let text = "\
bound 1
places system s
places env e f
init s e
transition go pre e post f
transition back pre f post e
";
        let (g, p) = prefix(text, 3);
        assert!(p.truncated);
        assert_eq!(p.events.len(), 3);
        let report = p.check_axioms(&g).unwrap();
        assert_eq!(report.cuts_skipped, 1);
    }

    #[test]
    fn missing_commitment_is_an_error() {
        let g = parse(CONCURRENT).unwrap();
        assert!(matches!(
            unfold(&g, &CommitmentStrategy::new(), 4),
            Err(Error::MissingChoice(_))
        ));
    }

    #[test]
    fn subsets_enumeration() {
        assert_eq!(
            subsets_of_size(&[1, 2, 3], 2),
            vec![vec![1, 2], vec![1, 3], vec![2, 3]]
        );
        assert_eq!(subsets_of_size(&[1], 2), Vec::<Vec<usize>>::new());
    }
}
