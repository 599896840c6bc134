//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line for
//! each, and exits non-zero if any criterion fails other than those listed
//! in `KNOWN_FAILURES`, which still print FAIL.

use std::collections::{BTreeSet, HashSet};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use distsynth::graph_game::{marking_vertex_bound, solve_explicit, vertex_bound, Variant, Winner};
use distsynth::reductions::examples::{builtin_examples, example};
use distsynth::reductions::g5::{gen_g5, random_g5, solve_g5_tiny};
use distsynth::reductions::random::{random_game, RandomParams};
use distsynth::reductions::threesat::{gen_3sat, random_3sat};
use distsynth::solver::{decide, decide_general, decide_twosat, SolveOptions};
use distsynth::strategy::validate_strategy;
use distsynth::unfold::{unfold, UnfoldingPrefix};
use distsynth::{Error, NetBuilder, PetriGame};

/// Largest explicit game compared in the oracle criteria.
const EXPLICIT_CAP: usize = 100_000;
const FIG1_BUDGET: Duration = Duration::from_secs(1);
const THREESAT_BUDGET: Duration = Duration::from_secs(30);

/// Criteria whose stated threshold cannot hold, with the reason.
const KNOWN_FAILURES: &[(&str, &str)] = &[(
    "7",
    "a 1-bounded place has two token counts, so markings are bounded by (k+1)^|P|, not k^|P|",
)];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_params<R: Rng>(rng: &mut R, max_env_tokens: usize) -> RandomParams {
    let env_places = rng.gen_range(3..=5);
    RandomParams {
        system_places: rng.gen_range(2..=3),
        env_places,
        transitions: rng.gen_range(4..=7),
        env_tokens: rng.gen_range(1..=max_env_tokens.min(env_places)),
        bad_places: rng.gen_range(0..=1),
    }
}

fn fig1() -> PetriGame {
    example("access_control").unwrap().game().unwrap()
}

fn criterion_1() -> Outcome {
    let game = fig1();
    let start = Instant::now();
    let verdict = match decide(&game, SolveOptions::default()) {
        Ok(v) => v,
        Err(e) => return outcome(false, format!("decide failed: {e}")),
    };
    if verdict.winner != Winner::System {
        return outcome(false, "environment wins the access-control game");
    }
    let strategy = verdict
        .witness
        .unwrap()
        .restrict_to_reachable(&game)
        .unwrap();
    if let Err(e) = validate_strategy(&game, &strategy) {
        return outcome(false, format!("witness does not validate: {e}"));
    }
    let prefix = unfold(&game, &strategy, 12).unwrap();
    let structural = prefix.structural_violations(&game);
    if !structural.is_empty() {
        return outcome(false, structural.join("; "));
    }
    let axioms = match prefix.check_axioms(&game) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("axiom check failed: {e}")),
    };
    let elapsed = start.elapsed();
    outcome(
        elapsed < FIG1_BUDGET,
        format!(
            "system wins, witness validates, depth-12 prefix ({} events) satisfies all four axioms on {} cuts; {:.0?} (budget {:?})",
            prefix.events.len(),
            axioms.cuts_checked,
            elapsed,
            FIG1_BUDGET
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let start = Instant::now();
    let mut mismatches = Vec::new();
    let mut satisfiable = 0;
    for i in 0..200 {
        let vars = rng.gen_range(3..=5);
        let clauses = rng.gen_range(2..=6);
        let f = random_3sat(&mut rng, vars, clauses);
        let sat = f.brute_force().is_some();
        satisfiable += usize::from(sat);
        let game = gen_3sat(&f).unwrap();
        let winner = decide(&game, SolveOptions::default()).unwrap().winner;
        if (winner == Winner::System) != sat {
            mismatches.push(i);
        }
    }
    let elapsed = start.elapsed();
    outcome(
        mismatches.is_empty() && elapsed < THREESAT_BUDGET,
        format!(
            "200 instances ({satisfiable} satisfiable), {} disagreements {:?}; {:.1?} (budget {:?})",
            mismatches.len(),
            mismatches,
            elapsed,
            THREESAT_BUDGET
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = Vec::new();
    let mut env_wins = 0;
    for i in 0..50 {
        let vars = rng.gen_range(1..=3);
        let depth = rng.gen_range(1..=3);
        let inst = random_g5(&mut rng, vars, depth);
        let expected = solve_g5_tiny(&inst);
        env_wins += usize::from(expected == Winner::Environment);
        let game = gen_g5(&inst).unwrap();
        let winner = decide(&game, SolveOptions::default()).unwrap().winner;
        if winner != expected {
            mismatches.push(i);
        }
    }
    outcome(
        mismatches.is_empty(),
        format!(
            "50 instances ({env_wins} won by the environment), {} disagreements {:?}",
            mismatches.len(),
            mismatches
        ),
    )
}

/// Games for the dual-solver and vertex-bound criteria.
fn corpus() -> Vec<(String, PetriGame)> {
    let mut out: Vec<(String, PetriGame)> = builtin_examples()
        .into_iter()
        .map(|e| (e.name.to_string(), e.game().unwrap()))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..60 {
        let params = random_params(&mut rng, 3);
        out.push((
            format!("random{i}"),
            random_game(&mut rng, &params).unwrap(),
        ));
    }
    for i in 0..10 {
        let clauses = rng.gen_range(1..=2);
        let f = random_3sat(&mut rng, 3, clauses);
        out.push((format!("3sat{i}"), gen_3sat(&f).unwrap()));
    }
    for i in 0..10 {
        let vars = rng.gen_range(1..=2);
        let inst = random_g5(&mut rng, vars, 2);
        out.push((format!("g5_{i}"), gen_g5(&inst).unwrap()));
    }
    out
}

struct Explored {
    name: String,
    vertices: usize,
    bound: Option<u128>,
    marking_bound: Option<u128>,
}

fn criterion_4(corpus: &[(String, PetriGame)], explored: &mut Vec<Explored>) -> Outcome {
    let mut compared = 0;
    let mut skipped = 0;
    let mut disagreements = Vec::new();
    for (name, game) in corpus {
        let plain = match solve_explicit(game, Variant::Plain, EXPLICIT_CAP) {
            Ok(s) => s,
            Err(Error::VertexCapExceeded { .. }) => {
                skipped += 1;
                continue;
            }
            Err(e) => panic!("{name}: {e}"),
        };
        explored.push(Explored {
            name: name.clone(),
            vertices: plain.vertex_count,
            bound: vertex_bound(game),
            marking_bound: marking_vertex_bound(game),
        });
        let primed = match solve_explicit(game, Variant::Primed, EXPLICIT_CAP) {
            Ok(s) => Some(s.winner),
            Err(Error::VertexCapExceeded { .. }) => None,
            Err(e) => panic!("{name}: {e}"),
        };
        let symbolic = decide(game, SolveOptions::default()).unwrap().winner;
        compared += 1;
        if symbolic != plain.winner || primed.is_some_and(|w| w != plain.winner) {
            disagreements.push(format!(
                "{name}: decide={symbolic} Graph={} Graph'={primed:?}",
                plain.winner
            ));
        }
    }
    outcome(
        disagreements.is_empty() && compared > 0,
        format!(
            "{compared} games compared, {skipped} above {EXPLICIT_CAP} vertices skipped, {} disagreements {:?}",
            disagreements.len(),
            disagreements
        ),
    )
}

fn twosat_games() -> Vec<PetriGame> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    (0..100)
        .map(|_| {
            let params = random_params(&mut rng, 2);
            random_game(&mut rng, &params).unwrap()
        })
        .collect()
}

fn criterion_5(games: &[PetriGame]) -> Outcome {
    let mut mismatches = Vec::new();
    let mut system_wins = 0;
    for (i, game) in games.iter().enumerate() {
        let general = decide_general(game).unwrap();
        let fast = decide_twosat(game).unwrap();
        system_wins += usize::from(general.winner == Winner::System);
        let witness_ok = match &fast.witness {
            Some(w) => validate_strategy(game, &w.restrict_to_reachable(game).unwrap()).is_ok(),
            None => true,
        };
        if general.winner != fast.winner || !witness_ok {
            mismatches.push(i);
        }
    }
    outcome(
        mismatches.is_empty(),
        format!(
            "100 games ({system_wins} won by the system), {} disagreements {:?}; 2SAT clause builder asserts at most two literals",
            mismatches.len(),
            mismatches
        ),
    )
}

fn lemma_violations(game: &PetriGame, prefix: &UnfoldingPrefix) -> Vec<String> {
    let mut out = prefix.structural_violations(game);
    let causality = prefix.causality();
    let fired = prefix.reachable_cuts();
    let fired_set: BTreeSet<Vec<usize>> = fired.keys().cloned().collect();
    if fired_set != prefix.cuts_by_concurrency(&causality) {
        out.push("maximal co-sets differ from cuts reached by firing".into());
    }
    let reachable: HashSet<_> = game
        .reachability()
        .unwrap()
        .markings()
        .iter()
        .cloned()
        .collect();
    for cut in fired.keys() {
        if !reachable.contains(&prefix.labels(cut)) {
            out.push(format!(
                "cut {} is not labelled by a reachable marking",
                prefix.show_cut(game, cut)
            ));
        }
        let past = prefix.past_of_cut(&causality, cut);
        for &x in cut {
            if !prefix.lkc(&causality, x).iter().all(|p| past.contains(p)) {
                out.push(format!(
                    "LKC({x}) escapes the past of {}",
                    prefix.show_cut(game, cut)
                ));
            }
        }
    }
    out
}

fn criterion_6(twosat: &[PetriGame]) -> Outcome {
    let mut prefixes = 0;
    let mut cuts = 0;
    let mut violations = Vec::new();
    let mut check = |name: String, game: &PetriGame, depth: usize| {
        let verdict = decide(game, SolveOptions::default()).unwrap();
        let Some(w) = verdict.witness else { return };
        let strategy = w.restrict_to_reachable(game).unwrap();
        let prefix = unfold(game, &strategy, depth).unwrap();
        prefixes += 1;
        cuts += prefix.reachable_cuts().len();
        for v in lemma_violations(game, &prefix) {
            violations.push(format!("{name}: {v}"));
        }
    };
    check("access_control".into(), &fig1(), 12);
    for (i, game) in twosat.iter().enumerate() {
        check(format!("random{i}"), game, 8);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for i in 0..10 {
        let f = random_3sat(&mut rng, 3, 2);
        check(format!("3sat{i}"), &gen_3sat(&f).unwrap(), 6);
    }
    outcome(
        violations.is_empty(),
        format!(
            "{prefixes} prefixes, {cuts} cuts, {} violations {:?}",
            violations.len(),
            violations.iter().take(5).collect::<Vec<_>>()
        ),
    )
}

fn criterion_7(explored: &[Explored]) -> Outcome {
    let violations: Vec<&Explored> = explored
        .iter()
        .filter(|e| e.bound.is_some_and(|b| e.vertices as u128 > b))
        .collect();
    let marking_violations = explored
        .iter()
        .filter(|e| e.marking_bound.is_some_and(|b| e.vertices as u128 > b))
        .count();
    let examples: Vec<String> = violations
        .iter()
        .take(3)
        .map(|e| format!("{}: {} > {}", e.name, e.vertices, e.bound.unwrap()))
        .collect();
    outcome(
        violations.is_empty(),
        format!(
            "{} games, {} exceed k^|P|·(2^|T|+1) {:?}; {} exceed (k+1)^|P|·(2^|T|+1)",
            explored.len(),
            violations.len(),
            examples,
            marking_violations
        ),
    )
}

/// `n` environment players each make one move before the system
/// synchronizes with all of them.
fn scaling_game(n: usize) -> PetriGame {
    let mut b = NetBuilder::new();
    b.place("s").place("s_done").tokens("s", 1);
    let mut pre = vec![("s".to_string(), 1)];
    let mut post = vec![("s_done".to_string(), 1)];
    for i in 0..n {
        let (e, f) = (format!("e{i}"), format!("f{i}"));
        b.place(e.clone()).place(f.clone()).tokens(e.clone(), 1);
        b.transition(format!("go{i}"), [(e.clone(), 1)], [(f.clone(), 1)]);
        pre.push((f.clone(), 1));
        post.push((e, 1));
    }
    b.transition("sync", pre, post);
    let net = b.build().unwrap();
    let s = net.place_id("s").unwrap();
    let done = net.place_id("s_done").unwrap();
    PetriGame::new(net, [s, done], Default::default(), 1).unwrap()
}

fn scaling_smoke() -> String {
    let mut parts = Vec::new();
    for n in [2, 4, 6, 8, 10] {
        let game = scaling_game(n);
        let start = Instant::now();
        let verdict = decide_general(&game).unwrap();
        parts.push(format!(
            "{n} env tokens: {} markings, {:.1?}",
            verdict.stats.reachable_markings,
            start.elapsed()
        ));
    }
    parts.join("; ")
}

fn main() -> ExitCode {
    let corpus = corpus();
    let twosat = twosat_games();
    let mut explored = Vec::new();
    let results = [
        ("1", "access-control game", criterion_1()),
        ("2", "3SAT oracle equivalence", criterion_2()),
        ("3", "formula-game oracle equivalence", criterion_3()),
        (
            "4",
            "symbolic vs explicit solvers",
            criterion_4(&corpus, &mut explored),
        ),
        ("5", "2SAT fast path equivalence", criterion_5(&twosat)),
        ("6", "unfolding lemma suite", criterion_6(&twosat)),
        ("7", "explicit vertex bound", criterion_7(&explored)),
    ];
    let mut failed = 0;
    let mut unexpected = 0;
    for (id, name, r) in &results {
        let tag = if r.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {id}: {name}: {}", r.detail);
        if !r.pass {
            failed += 1;
            match KNOWN_FAILURES.iter().find(|(k, _)| k == id) {
                Some((_, reason)) => println!("       known failure: {reason}"),
                None => unexpected += 1,
            }
        }
    }
    println!("[INFO] scaling smoke check: {}", scaling_smoke());
    println!(
        "acceptance: {} passed, {} failed ({} known)",
        results.len() - failed,
        failed,
        failed - unexpected
    );
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
