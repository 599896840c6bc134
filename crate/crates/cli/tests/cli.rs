use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn distsynth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_distsynth"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const UNSAT: &str = "\
p cnf 3 8
1 2 3 0
-1 2 3 0
1 -2 3 0
-1 -2 3 0
1 2 -3 0
-1 2 -3 0
1 -2 -3 0
-1 -2 -3 0
";

#[test]
fn solve_exit_codes_follow_the_winner() {
    let win = distsynth(&["solve", "builtin:access_control"]);
    assert_eq!(code(&win), 0, "{}", stderr(&win));
    assert!(stdout(&win).contains("winner: system"));
    assert!(stdout(&win).contains("reachable markings: 50"));

    let loss = distsynth(&["solve", "builtin:minimal_loss"]);
    assert_eq!(code(&loss), 1);
    assert!(stdout(&loss).contains("winner: environment"));

    let missing = distsynth(&["solve", "/nonexistent/game"]);
    assert_eq!(code(&missing), 2);
    assert!(stderr(&missing).starts_with("error:"));
}

#[test]
fn json_output_carries_schema_version() {
    let o = distsynth(&[
        "solve",
        "builtin:access_control",
        "--format",
        "json",
        "--witness",
    ]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["winner"], "system");
    assert_eq!(v["stats"]["mode"], "general");
    assert!(!v["strategy"].as_array().unwrap().is_empty());

    let o = distsynth(&["validate", "builtin:access_control", "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["system_tokens_per_marking"], 1);
}

#[test]
fn output_is_deterministic() {
    let args = ["solve", "builtin:access_control", "--witness"];
    let a = distsynth(&args);
    let b = distsynth(&args);
    assert_eq!(a.stdout, b.stdout);
    let parallel = distsynth(&[
        "solve",
        "builtin:access_control",
        "--witness",
        "--workers",
        "4",
    ]);
    assert_eq!(a.stdout, parallel.stdout);
}

#[test]
fn generated_3sat_game_agrees_with_brute_force() {
    let dir = TempDir::new().unwrap();
    let cnf = write(&dir, "unsat.cnf", UNSAT);
    let game = dir.path().join("unsat.game");
    let g = distsynth(&[
        "generate",
        "--kind",
        "3sat",
        &cnf,
        "-o",
        game.to_str().unwrap(),
    ]);
    assert_eq!(code(&g), 0, "{}", stderr(&g));
    let solved = distsynth(&["solve", game.to_str().unwrap()]);
    let oracle = distsynth(&["oracle", "--kind", "3sat", &cnf]);
    assert_eq!(code(&oracle), 1);
    assert_eq!(code(&solved), code(&oracle));

    for seed in 0..5 {
        let seed = seed.to_string();
        let out = dir.path().join(format!("r{seed}.game"));
        let g = distsynth(&[
            "generate",
            "--kind",
            "3sat",
            "--seed",
            &seed,
            "-o",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&g), 0);
        let text = fs::read_to_string(&out).unwrap();
        let dimacs: String = text
            .lines()
            .filter_map(|l| l.strip_prefix("# "))
            .map(|l| format!("{l}\n"))
            .collect();
        let cnf = write(&dir, &format!("r{seed}.cnf"), &dimacs);
        let solved = distsynth(&["solve", out.to_str().unwrap()]);
        let oracle = distsynth(&["oracle", "--kind", "3sat", &cnf]);
        assert_eq!(code(&solved), code(&oracle), "seed {seed}");
    }
}

#[test]
fn symbolic_and_explicit_agree_on_builtins() {
    for name in ["access_control", "minimal_win", "minimal_loss"] {
        let input = format!("builtin:{name}");
        let solved = distsynth(&["solve", &input]);
        for variant in ["plain", "primed"] {
            let oracle = distsynth(&["oracle", &input, "--variant", variant]);
            assert_eq!(code(&solved), code(&oracle), "{name} {variant}");
        }
    }
}

#[test]
fn unfold_depth_zero_is_the_initial_cut() {
    let o = distsynth(&["unfold", "builtin:access_control", "--depth", "0"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("events: 0"));
    assert!(out.contains("conditions: 5"), "{out}");
    assert!(
        out.contains("initial cut: {a1#0, a2#1, e1#2, e2#3, s_closed#4}"),
        "{out}"
    );

    let o = distsynth(&[
        "unfold",
        "builtin:access_control",
        "--depth",
        "8",
        "--format",
        "json",
    ]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["depth"], 8);
    assert!(v["events"].as_u64().unwrap() > 0);
}

#[test]
fn unfold_reports_environment_win() {
    let o = distsynth(&["unfold", "builtin:minimal_loss"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("environment wins"));
}

#[test]
fn twosat_mode_rejects_three_environment_tokens() {
    let dir = TempDir::new().unwrap();
    let game = write(
        &dir,
        "three.game",
        "bound 1\nplaces system s\nplaces env a b c\ninit s a b c\n",
    );
    let o = distsynth(&["solve", &game, "--mode", "twosat"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains('3'), "{}", stderr(&o));
    assert_eq!(code(&distsynth(&["solve", &game, "--mode", "general"])), 0);
}

#[test]
fn validate_reports_one_system_token() {
    let o = distsynth(&["validate", "builtin:access_control"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("system tokens in every reachable marking: 1"));
    assert!(out.contains("reachable markings: 50"));
    assert!(out.contains("max environment tokens: 4"));
}

#[test]
fn parse_errors_point_at_line_and_column() {
    let dir = TempDir::new().unwrap();
    let game = write(&dir, "broken.game", "bound 1\nplaces system s\ninit s t\n");
    let o = distsynth(&["solve", &game]);
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    let name = Path::new(&game).to_str().unwrap();
    assert!(err.contains(&format!("{name}:3:")), "{err}");
}

#[test]
fn exports_are_graphviz() {
    for what in ["game", "reach", "strategy"] {
        let o = distsynth(&["export", "builtin:access_control", "--what", what]);
        assert_eq!(code(&o), 0, "{what}");
        assert!(stdout(&o).starts_with("digraph"), "{what}");
    }
}

#[test]
fn generated_g5_game_agrees_with_formula_oracle() {
    let dir = TempDir::new().unwrap();
    for seed in 0..4 {
        let seed = seed.to_string();
        let out = dir.path().join(format!("g{seed}.game"));
        let g = distsynth(&[
            "generate",
            "--kind",
            "g5",
            "--seed",
            &seed,
            "--vars",
            "2",
            "--depth",
            "2",
            "-o",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&g), 0, "{}", stderr(&g));
        let text = fs::read_to_string(&out).unwrap();
        let inst: String = text
            .lines()
            .filter_map(|l| l.strip_prefix("# "))
            .map(|l| format!("{l}\n"))
            .collect();
        let inst = write(&dir, &format!("g{seed}.g5"), &inst);
        let solved = distsynth(&["solve", out.to_str().unwrap()]);
        let oracle = distsynth(&["oracle", "--kind", "g5", &inst]);
        assert_eq!(code(&solved), code(&oracle), "seed {seed}");
    }
}
