use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tzmg_cli::experiments::{read_csv, GapRow, SizeRow};
use tzmg_core::format::{read_game, write_game};
use tzmg_core::{ExplicitGame, Transition};

fn soccer() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_soccer"));
    cmd.env_remove("TZMG_OUT");
    cmd
}

fn run(args: &[&str]) -> Output {
    soccer().args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

/// Three-state chase: state 0 is matching pennies that may end, 1 and 2 pay
/// opposite constants and return to 0.
fn small_game(gamma: f64) -> ExplicitGame {
    let mut rows = Vec::new();
    for (r, next) in [(1.0, 1), (-1.0, 2), (-1.0, 2), (1.0, 1)] {
        rows.push(Transition::new(r, 0.2, vec![(next, 0.8)]));
    }
    for _ in 0..4 {
        rows.push(Transition::new(0.5, 0.0, vec![(0, 1.0)]));
    }
    rows.push(Transition::new(-0.5, 0.0, vec![(0, 0.6), (1, 0.4)]));
    rows.push(Transition::new(-0.4, 0.0, vec![(0, 1.0)]));
    rows.push(Transition::new(-0.6, 0.0, vec![(0, 1.0)]));
    rows.push(Transition::new(-0.5, 0.0, vec![(0, 0.5), (2, 0.5)]));
    ExplicitGame::new(3, 2, 2, gamma, (-1.0, 1.0), rows).unwrap()
}

fn write_small_game(dir: &Path) -> PathBuf {
    let path = dir.join("small.tzmg");
    fs::write(&path, write_game(&small_game(0.9))).unwrap();
    path
}

fn csvs(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(csvs(&path));
        } else if path.extension().is_some_and(|e| e == "csv") {
            let bytes = fs::read(&path).unwrap();
            out.push((path.strip_prefix(dir).unwrap().to_path_buf(), bytes));
        }
    }
    out.sort();
    out
}

#[test]
fn solve_writes_reloadable_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["solve", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("V*(434)") && stdout.contains("V*(435)"));
    let game = read_game(&fs::read_to_string(dir.path().join("game.tzmg")).unwrap()).unwrap();
    assert_eq!(game.num_states(), 760);
    assert!(dir.path().join("equilibrium.qpolicy").exists());
}

#[test]
fn export_import_export_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.tzmg");
    let second = dir.path().join("second.tzmg");
    assert_eq!(code(&run(&["export", "--gamma", "0.9", "--out", first.to_str().unwrap()])), 0);
    let out = run(&["export", "--game", first.to_str().unwrap(), "--gamma", "0.9", "--out", second.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());
    let text = fs::read_to_string(&first).unwrap();
    assert!(text.lines().any(|l| l.starts_with("label")));
}

#[test]
fn repeated_gap_sweeps_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let game = write_small_game(dir.path());
    let outputs: Vec<_> = ["a", "b"]
        .iter()
        .map(|name| {
            let out_dir = dir.path().join(name);
            let out = run(&[
                "sweep-gaps",
                "--game",
                game.to_str().unwrap(),
                "--epsilons",
                "0,0.5,2",
                "--iters",
                "3000",
                "--seeds",
                "1,2",
                "--out-dir",
                out_dir.to_str().unwrap(),
            ]);
            assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
            csvs(&out_dir)
        })
        .collect();
    assert_eq!(outputs[0].len(), 6, "three CSVs per seed directory");
    assert_eq!(outputs[0], outputs[1]);

    let rows: Vec<GapRow> = read_csv(&dir.path().join("a/seed-1/gaps.csv")).unwrap();
    assert_eq!(rows.len(), 3 * 51);
    assert!(rows.iter().all(|r| r.gap >= 0.0 && r.criterion == "minimax_q"));
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let game = write_small_game(dir.path());
    let config = dir.path().join("run.toml");
    let from_file = dir.path().join("from-file");
    fs::write(
        &config,
        format!(
            "game = {:?}\nepsilons = [0.0, 1.0, 3.0]\nout_dir = {:?}\n",
            game.to_str().unwrap(),
            from_file.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = run(&["sweep-sizes", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows: Vec<SizeRow> = read_csv(&from_file.join("state_sizes.csv")).unwrap();
    assert_eq!(rows.iter().map(|r| r.epsilon).collect::<Vec<_>>(), vec![0.0, 1.0, 3.0]);
    assert_eq!(rows.last().unwrap().num_abstract_states, 1);

    let flagged = dir.path().join("flagged");
    let out = run(&[
        "sweep-sizes",
        "--config",
        config.to_str().unwrap(),
        "--epsilons",
        "0.5",
        "--out-dir",
        flagged.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let rows: Vec<SizeRow> = read_csv(&flagged.join("state_sizes.csv")).unwrap();
    assert_eq!(rows.len(), 1);
    assert!(flagged.join("state_sizes.svg").exists());
}

#[test]
fn output_root_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let game = write_small_game(dir.path());
    let root = dir.path().join("env-root");
    let out = soccer()
        .env("TZMG_OUT", &root)
        .args(["abstract", "--game", game.to_str().unwrap(), "--epsilon", "0.3"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(root.join("abstraction.phi").exists());
    assert!(root.join("abstract.tzmg").exists());
}

#[test]
fn train_then_gap_round_trips_the_policy() {
    let dir = tempfile::tempdir().unwrap();
    let game = write_small_game(dir.path());
    let g = game.to_str().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = run(&["train", "--game", g, "--iters", "2000", "--seed", "3", "--out-dir", out_dir]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let curve: Vec<GapRow> = read_csv(&dir.path().join("curve.csv")).unwrap();
    let policy = dir.path().join("policy.qpolicy");
    let out = run(&["gap", "--game", g, "--policy", policy.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8(out.stdout).unwrap();
    let printed: f64 = stdout.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!((printed - curve.last().unwrap().gap).abs() < 1e-8, "{stdout}");
}

#[test]
fn plots_regenerate_from_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let game = write_small_game(dir.path());
    let out_dir = dir.path().join("r");
    let common = [
        "--game",
        game.to_str().unwrap(),
        "--epsilons",
        "0,1",
        "--iters",
        "500",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ];
    assert_eq!(code(&run(&[&["sweep-gaps"][..], &common[..]].concat())), 0);
    let before = fs::read(out_dir.join("gaps.svg")).unwrap();
    fs::remove_file(out_dir.join("gaps.svg")).unwrap();
    assert_eq!(code(&run(&["plot", "--dir", out_dir.to_str().unwrap()])), 0);
    assert_eq!(fs::read(out_dir.join("gaps.svg")).unwrap(), before);
}

#[test]
fn invariant_failures_exit_with_one() {
    // A bound of 12e-9 / (1 - gamma)^3 at a tiny epsilon cannot hold for a
    // briefly trained policy.
    let dir = tempfile::tempdir().unwrap();
    let game = write_small_game(dir.path());
    let out = run(&[
        "sweep-gaps",
        "--game",
        game.to_str().unwrap(),
        "--epsilons",
        "0.000000001",
        "--iters",
        "50",
        "--out-dir",
        dir.path().join("r").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("invariant failed"));
    assert!(dir.path().join("r/gaps.csv").exists(), "artifacts are kept on failure");
}

#[test]
fn errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.tzmg");
    let out = run(&["solve", "--game", missing.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.tzmg"));

    let config = dir.path().join("bad.toml");
    fs::write(&config, "epsilons = [0.5, 0.1]\n").unwrap();
    assert_eq!(code(&run(&["sweep-sizes", "--config", config.to_str().unwrap()])), 2);
    assert_eq!(code(&run(&["no-such-command"])), 2);
}
