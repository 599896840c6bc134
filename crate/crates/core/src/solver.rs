//! Symbolic attractor computation over Player-0 markings.
//!
//! Instead of enumerating commitments, each marking `M` gets a CNF over the
//! transitions in `post(s_M)` that is satisfiable iff some commitment keeps
//! Player 1 from reaching a bad vertex, or a marking already known to be
//! losing, using only environment moves and one committed system move.
//! Markings whose CNF is unsatisfiable join the attractor; the loop stops
//! when the initial marking joins (environment wins) or nothing changes
//! (system wins, and the satisfying assignments form the strategy).
//!
//! The environment closure and the commitment-independent clauses of every
//! marking are computed once; each iteration only refreshes the unit clauses
//! for system moves into the attractor, and only re-solves markings whose
//! system successors gained attractor members in the previous round.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::PetriGame;
use crate::graph_game::{ambiguous_precondition, Winner};
use crate::net::{Marking, ReachabilityGraph, TransitionId};
use crate::sat::{sat_solve, Cnf, Lit};
use crate::strategy::CommitmentStrategy;
use crate::twosat::TwoCnf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Auto,
    General,
    TwoSat,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "auto" => Ok(Mode::Auto),
            "general" => Ok(Mode::General),
            "twosat" => Ok(Mode::TwoSat),
            other => Err(format!(
                "unknown mode `{other}` (expected auto, general or twosat)"
            )),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Auto => "auto",
            Mode::General => "general",
            Mode::TwoSat => "twosat",
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub mode: Mode,
    /// Threads used to evaluate markings within one iteration; 1 runs inline.
    pub workers: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            mode: Mode::Auto,
            workers: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SolveStats {
    pub mode: Mode,
    pub reachable_markings: usize,
    pub max_env_tokens: u32,
    pub iterations: usize,
    pub sat_calls: usize,
    pub attractor_size: usize,
}

#[derive(Clone, Debug)]
pub struct Verdict {
    pub winner: Winner,
    /// One commitment per reachable marking outside the attractor, present
    /// when the system wins.
    pub witness: Option<CommitmentStrategy>,
    pub stats: SolveStats,
}

/// Result of constraint generation for one Player-0 marking.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CnfOutcome {
    Constraints(Cnf),
    /// A bad marking is reachable by environment moves alone.
    InfeasibleBadReachable(Marking),
}

/// What one environment-reachable marking `M'` contributes.
#[derive(Clone, Debug)]
struct View<T> {
    /// Enabled system transitions, as commitment variables.
    enabled_sys: Vec<u32>,
    env_enabled: bool,
    /// Enabled system transitions whose tokens are ambiguous in `M'`.
    ambiguous: Vec<u32>,
    /// `(variable, successor)` for every enabled system transition.
    firings: Vec<(u32, T)>,
}

#[derive(Clone, Debug)]
struct Local<T> {
    domain: Vec<TransitionId>,
    bad: Option<T>,
    views: Vec<View<T>>,
    /// Commitment-independent clauses.
    base: Vec<Vec<Lit>>,
}

impl<T: Clone> Local<T> {
    fn new(domain: Vec<TransitionId>) -> Self {
        Local {
            domain,
            bad: None,
            views: Vec::new(),
            base: Vec::new(),
        }
    }

    fn var(&self, t: TransitionId) -> u32 {
        self.domain
            .binary_search(&t)
            .expect("enabled system transition lies in post(s_M)") as u32
    }

    fn push_view<I>(&mut self, game: &PetriGame, m: &Marking, moves: I)
    where
        I: IntoIterator<Item = (TransitionId, T)>,
    {
        let mut view = View {
            enabled_sys: Vec::new(),
            env_enabled: false,
            ambiguous: Vec::new(),
            firings: Vec::new(),
        };
        for (t, target) in moves {
            if game.is_environmental(t) {
                view.env_enabled = true;
            } else {
                let v = self.var(t);
                view.enabled_sys.push(v);
                if ambiguous_precondition(game, m, t) {
                    view.ambiguous.push(v);
                }
                view.firings.push((v, target));
            }
        }
        self.views.push(view);
    }

    /// Clauses for nondeterminism, ambiguous preconditions and deadlock.
    fn finish(&mut self) {
        let mut clauses: BTreeSet<Vec<Lit>> = BTreeSet::new();
        for view in &self.views {
            let en = &view.enabled_sys;
            for (i, &a) in en.iter().enumerate() {
                for &b in &en[i + 1..] {
                    clauses.insert(vec![Lit::neg(a), Lit::neg(b)]);
                }
            }
            for &a in &view.ambiguous {
                clauses.insert(vec![Lit::neg(a)]);
            }
            if !view.env_enabled && !en.is_empty() {
                clauses.insert(en.iter().map(|&v| Lit::pos(v)).collect());
            }
        }
        self.base = clauses.into_iter().collect();
    }

    fn cnf<F: Fn(&T) -> bool>(&self, in_attr: F) -> Cnf {
        let mut cnf = Cnf::new(self.domain.clone());
        cnf.clauses = self.base.clone();
        let mut units = BTreeSet::new();
        for view in &self.views {
            for (v, target) in &view.firings {
                if in_attr(target) {
                    units.insert(*v);
                }
            }
        }
        cnf.clauses
            .extend(units.into_iter().map(|v| vec![Lit::neg(v)]));
        cnf
    }
}

fn domain_of(game: &PetriGame, m: &Marking) -> Vec<TransitionId> {
    game.system_place(m)
        .map(|s| game.commitment_domain(s).to_vec())
        .unwrap_or_default()
}

/// Builds the commitment constraints of `m` against the attractor `attr`
/// without any caching.
pub fn build_cnf(game: &PetriGame, m: &Marking, attr: &HashSet<Marking>) -> CnfOutcome {
    let net = game.net();
    let mut local: Local<Marking> = Local::new(domain_of(game, m));
    for m2 in net.closure(m, |t| game.is_environmental(t)) {
        if game.is_bad(&m2) {
            return CnfOutcome::InfeasibleBadReachable(m2);
        }
        let moves: Vec<(TransitionId, Marking)> = net
            .enabled_transitions(&m2)
            .map(|t| (t, net.fire_unchecked(&m2, t)))
            .collect();
        local.push_view(game, &m2, moves);
    }
    local.finish();
    CnfOutcome::Constraints(local.cnf(|target| attr.contains(target)))
}

fn analyze(game: &PetriGame, graph: &ReachabilityGraph, i: usize) -> Local<usize> {
    let mut local: Local<usize> = Local::new(domain_of(game, graph.marking(i)));
    let mut seen = HashSet::from([i]);
    let mut queue = VecDeque::from([i]);
    while let Some(j) = queue.pop_front() {
        if game.is_bad(graph.marking(j)) {
            local.bad = Some(j);
            local.views.clear();
            return local;
        }
        let edges = graph.out_edges(j);
        local.push_view(
            game,
            graph.marking(j),
            edges.iter().map(|e| (e.transition, e.target)),
        );
        for e in edges {
            if game.is_environmental(e.transition) && seen.insert(e.target) {
                queue.push_back(e.target);
            }
        }
    }
    local.finish();
    local
}

fn run_indexed<R, F>(workers: usize, items: &[usize], f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    if workers <= 1 {
        items.iter().map(|&i| f(i)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("thread pool");
        pool.install(|| items.par_iter().map(|&i| f(i)).collect())
    }
}

/// Per-marking evaluation strategy of the attractor loop.
trait Evaluator: Sync {
    /// A commitment avoiding the attractor, or `None` if there is none.
    /// The flag reports whether a SAT/2SAT query was issued.
    fn evaluate(&self, local: &Local<usize>, attr: &[bool]) -> (Option<Vec<TransitionId>>, bool);
}

struct GeneralEval;

impl Evaluator for GeneralEval {
    fn evaluate(&self, local: &Local<usize>, attr: &[bool]) -> (Option<Vec<TransitionId>>, bool) {
        if local.bad.is_some() {
            return (None, false);
        }
        let cnf = local.cnf(|&j| attr[j]);
        (sat_solve(&cnf).map(|a| cnf.commitment(&a)), true)
    }
}

struct TwoSatEval<'a> {
    game: &'a PetriGame,
}

impl Evaluator for TwoSatEval<'_> {
    fn evaluate(&self, local: &Local<usize>, attr: &[bool]) -> (Option<Vec<TransitionId>>, bool) {
        if local.bad.is_some() {
            return (None, false);
        }
        let net = self.game.net();
        let n = local.domain.len();

        // Transitions that can never be committed: they lead into the
        // attractor or fire with ambiguous tokens somewhere.
        let mut removed = vec![false; n];
        for view in &local.views {
            for &v in &view.ambiguous {
                removed[v as usize] = true;
            }
            for &(v, target) in &view.firings {
                if attr[target] {
                    removed[v as usize] = true;
                }
            }
        }

        // One representative per precondition, the smallest id.
        let mut rep_of_pre: HashMap<&Marking, u32> = HashMap::new();
        let mut is_rep = vec![false; n];
        for (v, &t) in local.domain.iter().enumerate() {
            if !removed[v] && !rep_of_pre.contains_key(net.pre(t)) {
                rep_of_pre.insert(net.pre(t), v as u32);
                is_rep[v] = true;
            }
        }

        let env_part = |t: TransitionId| self.game.env_tokens(net.pre(t));
        let first = &local.views[0];
        if let Some(&v) = first
            .enabled_sys
            .iter()
            .find(|&&v| is_rep[v as usize] && env_part(local.domain[v as usize]) == 0)
        {
            return (Some(vec![local.domain[v as usize]]), false);
        }

        let joint: Vec<bool> = local.domain.iter().map(|&t| env_part(t) >= 2).collect();
        let mut formula = TwoCnf::new(n);
        for view in &local.views {
            let reps: Vec<u32> = view
                .enabled_sys
                .iter()
                .copied()
                .filter(|&v| is_rep[v as usize])
                .collect();
            let singles: Vec<u32> = reps
                .iter()
                .copied()
                .filter(|&v| !joint[v as usize])
                .collect();
            let has_joint = reps.iter().any(|&v| joint[v as usize]);
            for (i, &a) in singles.iter().enumerate() {
                for &b in &singles[i + 1..] {
                    formula.add_clause(vec![Lit::neg(a), Lit::neg(b)]);
                }
            }
            if !view.env_enabled && !view.enabled_sys.is_empty() && !has_joint {
                formula.add_clause(singles.iter().map(|&v| Lit::pos(v)).collect());
            }
        }
        for v in 0..n {
            if !is_rep[v] || joint[v] {
                formula.add_clause(vec![Lit::neg(v as u32)]);
            }
        }

        let Some(assignment) = formula.solve() else {
            return (None, true);
        };
        let mut chosen: Vec<TransitionId> = (0..n)
            .filter(|&v| assignment[v])
            .map(|v| local.domain[v])
            .collect();
        // A joint transition is enabled only where its precondition is the
        // whole marking; take it exactly when no single one is taken there.
        for view in &local.views {
            for &v in &view.enabled_sys {
                let v = v as usize;
                if is_rep[v] && joint[v] {
                    let others_off = view.enabled_sys.iter().all(|&w| {
                        !is_rep[w as usize] || joint[w as usize] || !assignment[w as usize]
                    });
                    if others_off {
                        chosen.push(local.domain[v]);
                    }
                }
            }
        }
        chosen.sort();
        chosen.dedup();
        (Some(chosen), true)
    }
}

/// Decides whether the system has a winning, deadlock-avoiding strategy.
pub fn decide(game: &PetriGame, options: SolveOptions) -> Result<Verdict> {
    let graph = game.reachability()?;
    let report = game.report(&graph);
    let mode = match options.mode {
        Mode::Auto if report.max_env_tokens <= 2 => Mode::TwoSat,
        Mode::Auto => Mode::General,
        m => m,
    };
    if mode == Mode::TwoSat && report.max_env_tokens > 2 {
        let m = graph
            .markings()
            .iter()
            .find(|m| game.env_tokens(m) > 2)
            .expect("some marking has more than two environment tokens");
        return Err(Error::TooManyEnvironmentTokens {
            marking: game.net().show(m),
            count: game.env_tokens(m),
        });
    }
    let indices: Vec<usize> = (0..graph.len()).collect();
    let locals = run_indexed(options.workers, &indices, |i| analyze(game, &graph, i));
    let twosat = TwoSatEval { game };
    let evaluator: &dyn Evaluator = match mode {
        Mode::TwoSat => &twosat,
        _ => &GeneralEval,
    };
    attractor_loop(
        &graph,
        &locals,
        evaluator,
        options.workers,
        mode,
        report.max_env_tokens,
    )
}

/// General path, regardless of the number of environment players.
pub fn decide_general(game: &PetriGame) -> Result<Verdict> {
    decide(
        game,
        SolveOptions {
            mode: Mode::General,
            workers: 1,
        },
    )
}

/// 2SAT path; fails if some reachable marking has more than two
/// environment tokens.
pub fn decide_twosat(game: &PetriGame) -> Result<Verdict> {
    decide(
        game,
        SolveOptions {
            mode: Mode::TwoSat,
            workers: 1,
        },
    )
}

fn attractor_loop(
    graph: &ReachabilityGraph,
    locals: &[Local<usize>],
    evaluator: &dyn Evaluator,
    workers: usize,
    mode: Mode,
    max_env_tokens: u32,
) -> Result<Verdict> {
    let n = graph.len();
    // markings whose constraints mention a system move into `j`
    let mut watchers: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, local) in locals.iter().enumerate() {
        let mut targets: Vec<usize> = local
            .views
            .iter()
            .flat_map(|v| v.firings.iter().map(|f| f.1))
            .collect();
        targets.sort_unstable();
        targets.dedup();
        for j in targets {
            watchers[j].push(i);
        }
    }

    let mut attr = vec![false; n];
    let mut choice: Vec<Option<Vec<TransitionId>>> = vec![None; n];
    let mut dirty: Vec<usize> = (0..n).collect();
    let mut iterations = 0;
    let mut sat_calls = 0;
    loop {
        iterations += 1;
        let results = run_indexed(workers, &dirty, |i| evaluator.evaluate(&locals[i], &attr));
        let mut added = Vec::new();
        for (&i, (result, queried)) in dirty.iter().zip(results) {
            sat_calls += usize::from(queried);
            match result {
                Some(c) => choice[i] = Some(c),
                None => added.push(i),
            }
        }
        let stats = |attr_size| SolveStats {
            mode,
            reachable_markings: n,
            max_env_tokens,
            iterations,
            sat_calls,
            attractor_size: attr_size,
        };
        if added.is_empty() {
            let mut witness = CommitmentStrategy::new();
            for i in 0..n {
                if !attr[i] {
                    let c = choice[i]
                        .clone()
                        .expect("every marking outside the attractor was solved");
                    witness.insert(graph.marking(i).clone(), c);
                }
            }
            let size = attr.iter().filter(|&&a| a).count();
            return Ok(Verdict {
                winner: Winner::System,
                witness: Some(witness),
                stats: stats(size),
            });
        }
        for &i in &added {
            attr[i] = true;
            choice[i] = None;
        }
        if attr[graph.initial_index()] {
            let size = attr.iter().filter(|&&a| a).count();
            return Ok(Verdict {
                winner: Winner::Environment,
                witness: None,
                stats: stats(size),
            });
        }
        let mut next: Vec<usize> = added
            .iter()
            .flat_map(|&j| watchers[j].iter().copied())
            .filter(|&i| !attr[i])
            .collect();
        next.sort_unstable();
        next.dedup();
        dirty = next;
    }
}
