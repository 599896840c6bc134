use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use distsynth::dot::{game_dot, prefix_dot, reachability_dot, strategy_dot};
use distsynth::format::{parse, parse_error, serialize};
use distsynth::graph_game::{solve_explicit, vertex_bound, Variant, Winner};
use distsynth::reductions::examples::example;
use distsynth::reductions::g5::{gen_g5, random_g5, solve_g5_tiny, G5Instance};
use distsynth::reductions::random::{random_game, RandomParams};
use distsynth::reductions::threesat::{gen_3sat, parse_dimacs, random_3sat};
use distsynth::solver::{decide, Mode, SolveOptions, Verdict};
use distsynth::strategy::{validate_strategy, CommitmentStrategy};
use distsynth::unfold::unfold;
use distsynth::{Error, PetriGame};

const SCHEMA: u32 = 1;
const DEFAULT_DEPTH_CAP: usize = 24;

#[derive(Parser)]
#[command(
    name = "distsynth",
    version,
    about = "Decide and synthesize strategies for single-system-player Petri games"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Dot,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Auto,
    General,
    Twosat,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Auto => Mode::Auto,
            ModeArg::General => Mode::General,
            ModeArg::Twosat => Mode::TwoSat,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    G5,
    #[value(name = "3sat")]
    ThreeSat,
    Random,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum What {
    Game,
    Reach,
    Strategy,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Plain,
    Primed,
}

#[derive(Subcommand)]
enum Command {
    /// Decide who wins and optionally print the winning commitments.
    Solve {
        /// Game file, or `builtin:NAME` for a bundled example.
        input: String,
        #[arg(long, value_enum, default_value = "auto")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Threads for per-marking constraint solving.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Include the commitment of every marking reachable under the strategy.
        #[arg(long)]
        witness: bool,
    },
    /// Check the bound and the single-system-token restriction.
    Validate {
        input: String,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Unroll the winning strategy and check the strategy axioms.
    Unfold {
        input: String,
        /// Maximal number of events in an explored configuration; defaults
        /// to twice the number of reachable markings, capped at 24.
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Write a game built from a reduction or drawn at random.
    Generate {
        #[arg(long, value_enum)]
        kind: Kind,
        /// Instance file: DIMACS for 3sat, formula game text for g5. Without
        /// it a random instance is drawn from `--seed`.
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        vars: usize,
        #[arg(long, default_value_t = 4)]
        clauses: usize,
        /// Formula depth for random g5 instances.
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Graphviz output for the net, its reachability graph or the strategy.
    Export {
        input: String,
        #[arg(long, value_enum, default_value = "game")]
        what: What,
    },
    /// Reference results: the explicit graph game, or brute force on an
    /// instance file with `--kind`.
    Oracle {
        input: String,
        #[arg(long, value_enum)]
        kind: Option<Kind>,
        #[arg(long, value_enum, default_value = "plain")]
        variant: VariantArg,
        /// Largest explicit game to build.
        #[arg(long, default_value_t = 10_000_000)]
        cap: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure {
            code: 2,
            error: e.into(),
        }
    }
}

type Outcome = Result<u8, Failure>;

fn winner_code(w: Winner) -> u8 {
    match w {
        Winner::System => 0,
        Winner::Environment => 1,
    }
}

fn read_text(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load(input: &str) -> anyhow::Result<PetriGame> {
    if let Some(name) = input.strip_prefix("builtin:") {
        let e = example(name).with_context(|| format!("no built-in example `{name}`"))?;
        return Ok(e.game()?);
    }
    let text = read_text(Path::new(input))?;
    parse(&text).map_err(|e| match parse_error(&e) {
        Some(p) => anyhow!("{input}:{}:{}: {}", p.line, p.column, p.message),
        None => anyhow::Error::new(e).context(input.to_string()),
    })
}

fn emit(out: &str) -> anyhow::Result<()> {
    let mut stdout = io::stdout().lock();
    stdout.write_all(out.as_bytes())?;
    if !out.ends_with('\n') {
        stdout.write_all(b"\n")?;
    }
    Ok(())
}

fn to_json(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json values serialize")
}

fn winning_strategy(game: &PetriGame) -> Result<(Verdict, CommitmentStrategy), Failure> {
    let verdict = decide(game, SolveOptions::default())?;
    match &verdict.witness {
        Some(w) => {
            let strategy = w.restrict_to_reachable(game)?;
            Ok((verdict, strategy))
        }
        None => Err(Failure {
            code: 1,
            error: anyhow!("the environment wins; there is no strategy"),
        }),
    }
}

fn cmd_solve(input: &str, mode: ModeArg, format: Format, workers: usize, witness: bool) -> Outcome {
    if workers == 0 {
        return Err(anyhow!("--workers must be at least 1").into());
    }
    if format == Format::Dot {
        return Err(
            anyhow!("solve supports text and json output; use `export --what strategy`").into(),
        );
    }
    let game = load(input)?;
    let verdict = decide(
        &game,
        SolveOptions {
            mode: mode.into(),
            workers,
        },
    )?;
    let strategy = match &verdict.witness {
        Some(w) => {
            let s = w.restrict_to_reachable(&game)?;
            validate_strategy(&game, &s)
                .context("internal error: witness strategy fails validation")?;
            Some(s)
        }
        None => None,
    };
    let stats = &verdict.stats;
    match format {
        Format::Json => {
            let mut v = json!({
                "schema": SCHEMA,
                "winner": verdict.winner,
                "stats": stats,
            });
            if witness {
                v["strategy"] = match &strategy {
                    Some(s) => serde_json::to_value(s.to_named(&game))?,
                    None => Value::Null,
                };
            }
            emit(&to_json(&v))?;
        }
        _ => {
            let mut out = format!(
                "winner: {}\nmode: {}\nreachable markings: {}\niterations: {}\nsat calls: {}\nattractor size: {}\n",
                verdict.winner,
                stats.mode,
                stats.reachable_markings,
                stats.iterations,
                stats.sat_calls,
                stats.attractor_size
            );
            if let (true, Some(s)) = (witness, &strategy) {
                out.push_str("strategy:\n");
                for choice in s.to_named(&game) {
                    out.push_str(&format!(
                        "  {} -> {{{}}}\n",
                        choice.marking,
                        choice.commitment.join(", ")
                    ));
                }
            }
            emit(&out)?;
        }
    }
    Ok(winner_code(verdict.winner))
}

fn cmd_validate(input: &str, format: Format) -> Outcome {
    let game = load(input)?;
    let report = game.validate()?;
    match format {
        Format::Json => {
            let v = json!({
                "schema": SCHEMA,
                "valid": true,
                "report": report,
                "system_tokens_per_marking": 1,
            });
            emit(&to_json(&v))?;
        }
        _ => emit(&format!(
            "valid: {}-bounded, {} places, {} transitions\nreachable markings: {}\nsystem tokens in every reachable marking: 1\nmax environment tokens: {}\n",
            report.bound, report.places, report.transitions, report.reachable_markings, report.max_env_tokens
        ))?,
    }
    Ok(0)
}

fn cmd_unfold(input: &str, depth: Option<usize>, format: Format) -> Outcome {
    let game = load(input)?;
    let (verdict, strategy) = winning_strategy(&game)?;
    let depth = depth.unwrap_or((2 * verdict.stats.reachable_markings).min(DEFAULT_DEPTH_CAP));
    let prefix = unfold(&game, &strategy, depth)?;
    let structural = prefix.structural_violations(&game);
    if !structural.is_empty() {
        return Err(anyhow!(
            "prefix is not a branching process: {}",
            structural.join("; ")
        )
        .into());
    }
    let axioms = prefix.check_axioms(&game)?;
    match format {
        Format::Dot => emit(&prefix_dot(&game, &prefix))?,
        Format::Json => {
            let v = json!({
                "schema": SCHEMA,
                "depth": depth,
                "conditions": prefix.conditions.len(),
                "events": prefix.events.len(),
                "truncated": prefix.truncated,
                "initial_cut": prefix.show_cut(&game, &prefix.initial_cut),
                "axioms": {
                    "checked_cuts": axioms.cuts_checked,
                    "skipped_cuts": axioms.cuts_skipped,
                    "passed": ["safety", "determinism", "deadlock_avoidance", "justified_refusal"],
                },
            });
            emit(&to_json(&v))?;
        }
        Format::Text => emit(&format!(
            "depth: {}\nconditions: {}\nevents: {}\ntruncated: {}\ninitial cut: {}\naxioms: safety, determinism, deadlock avoidance, justified refusal hold on {} cuts ({} cuts at the depth limit not checked)\n",
            depth,
            prefix.conditions.len(),
            prefix.events.len(),
            prefix.truncated,
            prefix.show_cut(&game, &prefix.initial_cut),
            axioms.cuts_checked,
            axioms.cuts_skipped
        ))?,
    }
    Ok(0)
}

fn cmd_generate(
    kind: Kind,
    input: Option<&Path>,
    seed: u64,
    vars: usize,
    clauses: usize,
    depth: usize,
    output: Option<&Path>,
) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (header, game) = match kind {
        Kind::ThreeSat => {
            let f = match input {
                Some(p) => parse_dimacs(&read_text(p)?)?,
                None => {
                    if vars < 3 {
                        return Err(
                            anyhow!("--vars must be at least 3 for random 3sat instances").into(),
                        );
                    }
                    random_3sat(&mut rng, vars as u32, clauses)
                }
            };
            let header: String = f.to_dimacs().lines().map(|l| format!("# {l}\n")).collect();
            (header, gen_3sat(&f)?)
        }
        Kind::G5 => {
            let inst = match input {
                Some(p) => G5Instance::parse(&read_text(p)?)?,
                None => {
                    if vars == 0 || depth == 0 {
                        return Err(anyhow!("--vars and --depth must be positive").into());
                    }
                    random_g5(&mut rng, vars, depth)
                }
            };
            let header: String = inst
                .to_string()
                .lines()
                .map(|l| format!("# {l}\n"))
                .collect();
            (header, gen_g5(&inst)?)
        }
        Kind::Random => {
            if input.is_some() {
                return Err(anyhow!("random games take no input file").into());
            }
            let params = RandomParams {
                env_tokens: vars.min(RandomParams::default().env_places),
                ..RandomParams::default()
            };
            (
                format!("# random game, seed {seed}\n"),
                random_game(&mut rng, &params)?,
            )
        }
    };
    let text = format!("{header}{}", serialize(&game));
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display()))?,
        None => emit(&text)?,
    }
    Ok(0)
}

fn cmd_export(input: &str, what: What) -> Outcome {
    let game = load(input)?;
    let out = match what {
        What::Game => game_dot(&game),
        What::Reach => reachability_dot(&game, &game.reachability()?),
        What::Strategy => {
            let (_, strategy) = winning_strategy(&game)?;
            strategy_dot(&game, &game.reachability()?, &strategy)
        }
    };
    emit(&out)?;
    Ok(0)
}

fn cmd_oracle(
    input: &str,
    kind: Option<Kind>,
    variant: VariantArg,
    cap: usize,
    format: Format,
) -> Outcome {
    let (source, winner, extra) = match kind {
        Some(Kind::ThreeSat) => {
            let f = parse_dimacs(&read_text(Path::new(input))?)?;
            let sat = f.brute_force().is_some();
            let w = if sat {
                Winner::System
            } else {
                Winner::Environment
            };
            (
                "brute-force satisfiability",
                w,
                json!({ "satisfiable": sat }),
            )
        }
        Some(Kind::G5) => {
            let inst = G5Instance::parse(&read_text(Path::new(input))?)?;
            ("explicit formula game", solve_g5_tiny(&inst), json!({}))
        }
        Some(Kind::Random) => {
            return Err(anyhow!(
                "the oracle takes a game file, or an instance file with --kind 3sat|g5"
            )
            .into())
        }
        None => {
            let game = load(input)?;
            let variant = match variant {
                VariantArg::Plain => Variant::Plain,
                VariantArg::Primed => Variant::Primed,
            };
            let sol = solve_explicit(&game, variant, cap)?;
            let extra = json!({
                "variant": variant,
                "vertices": sol.vertex_count,
                "attractor_size": sol.attractor_size,
                "vertex_bound": vertex_bound(&game).map(|b| b.to_string()),
            });
            ("explicit graph game", sol.winner, extra)
        }
    };
    match format {
        Format::Json => {
            let mut v = json!({ "schema": SCHEMA, "oracle": source, "winner": winner });
            if let (Value::Object(m), Value::Object(e)) = (&mut v, extra) {
                m.extend(e);
            }
            emit(&to_json(&v))?;
        }
        _ => {
            let mut out = format!("oracle: {source}\nwinner: {winner}\n");
            if let Value::Object(e) = extra {
                for (k, v) in e {
                    let v = match v {
                        Value::String(s) => s,
                        other => other.to_string(),
                    };
                    out.push_str(&format!("{}: {}\n", k.replace('_', " "), v));
                }
            }
            emit(&out)?;
        }
    }
    Ok(winner_code(winner))
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Solve {
            input,
            mode,
            format,
            workers,
            witness,
        } => cmd_solve(&input, mode, format, workers, witness),
        Command::Validate { input, format } => cmd_validate(&input, format),
        Command::Unfold {
            input,
            depth,
            format,
        } => cmd_unfold(&input, depth, format),
        Command::Generate {
            kind,
            input,
            seed,
            vars,
            clauses,
            depth,
            output,
        } => cmd_generate(
            kind,
            input.as_deref(),
            seed,
            vars,
            clauses,
            depth,
            output.as_deref(),
        ),
        Command::Export { input, what } => cmd_export(&input, what),
        Command::Oracle {
            input,
            kind,
            variant,
            cap,
            format,
        } => cmd_oracle(&input, kind, variant, cap, format),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            let msg = match f.error.downcast_ref::<Error>() {
                Some(e) => e.to_string(),
                None => format!("{:#}", f.error),
            };
            eprintln!("error: {msg}");
            ExitCode::from(f.code)
        }
    }
}
