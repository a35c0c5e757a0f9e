use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

use snnss::{Graph, RateTable};
use snnss_cli::commands::probe_table;

fn run(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_snnss"));
    cmd.args(args).env_remove("SNNSS_THREADS");
    if let Some(t) = threads {
        cmd.env("SNNSS_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, body).unwrap();
    path
}

fn run_to_file(command: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![command, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args, None)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn noisy_voter_gap_is_reported_and_passes() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "gap.json",
        r#"{"schema_version": 1, "graph": {"kind": "cycle", "n": 8},
            "rates": {"kind": "noisy_voter", "d": 1.0, "h1": 0.5, "h2": 0.7}}"#,
    );
    let out = dir.path().join("gap.out.json");
    let o = run_to_file("gap", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&out);
    assert!((v["report"]["gap"].as_f64().unwrap() - 1.2).abs() < 1e-6);
    assert_eq!(v["report"]["verdict"], "equality");
    // the default tolerance is written back into the embedded config
    assert_eq!(v["config"]["tolerance"].as_f64(), Some(1e-6));
}

#[test]
fn frozen_threshold_model_is_a_verification_failure() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "c.json",
        r#"{"schema_version": 1, "graph": {"kind": "cycle", "n": 8},
            "rates": {"kind": "threshold", "h": 0.0, "a": 1.0}}"#,
    );
    let o = run_to_file("gap", &cfg, &dir.path().join("o.json"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not ergodic"));
}

#[test]
fn torus_breaks_the_second_order_identity() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "c.json",
        r#"{"schema_version": 1, "graph": {"kind": "torus", "sides": [4, 4]}, "lemma": true}"#,
    );
    let out = dir.path().join("o.json");
    let o = run_to_file("verify-identities", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    let v = read_json(&out);
    assert_eq!(v["expected_to_hold"], false);
    assert!(v["failures"].as_u64().unwrap() > 0);
    assert!(v["first_failure"]["residual"].as_i64().unwrap() != 0);
}

#[test]
fn cycle_identities_pass() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", r#"{"schema_version": 1, "graph": {"kind": "cycle", "n": 8}}"#);
    let out = dir.path().join("o.json");
    assert_eq!(run_to_file("verify-identities", &cfg, &out, &[]).status.code(), Some(0));
    assert_eq!(read_json(&out)["configurations_checked"], 256);
}

#[test]
fn linear_table_with_unequal_slopes_is_size_dependent() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "c.json",
        r#"{"schema_version": 1, "graph": {"kind": "cycle", "n": 8},
            "compare_graph": {"kind": "cycle", "n": 12},
            "rates": {"kind": "explicit", "lambda": [1.0, 2.0, 3.0], "mu": [3.0, 1.5, 0.0]}}"#,
    );
    let out = dir.path().join("o.json");
    assert_eq!(run_to_file("prop2", &cfg, &out, &[]).status.code(), Some(1));
    let v = read_json(&out);
    assert!(v["max_abs_difference"].as_f64().unwrap() > 1e-4);
    assert_eq!(v["expected_size_independent"], false);
}

#[test]
fn closure_of_generalized_threshold_matches() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "c.json",
        r#"{"schema_version": 1, "graph": {"kind": "cycle", "n": 8},
            "rates": {"kind": "generalized_threshold", "h": 1.0, "a": 3.0, "b": 1.5}}"#,
    );
    let out = dir.path().join("o.json");
    assert_eq!(run_to_file("closure", &cfg, &out, &[]).status.code(), Some(0));
    let v = read_json(&out);
    assert_eq!(v["closure_holds"], true);
    assert!((v["expected"]["a1"].as_f64().unwrap() + 10.5).abs() < 1e-12);
}

#[test]
fn bad_configs_are_usage_errors() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("o.json");
    let unknown = write_config(
        &dir,
        "unknown.json",
        r#"{"schema_version": 1, "graph": {"kind": "cycle", "n": 8}, "seeds": 3}"#,
    );
    let version = write_config(&dir, "version.json", r#"{"schema_version": 9, "graph": {"kind": "cycle", "n": 8}}"#);
    let no_rates = write_config(&dir, "norates.json", r#"{"schema_version": 1, "graph": {"kind": "cycle", "n": 8}}"#);
    for cfg in [&unknown, &version] {
        assert_eq!(run_to_file("verify-identities", cfg, &out, &[]).status.code(), Some(2));
    }
    assert_eq!(run_to_file("gap", &no_rates, &out, &[]).status.code(), Some(2));
    let missing = dir.path().join("absent.json");
    assert_eq!(run_to_file("gap", &missing, &out, &[]).status.code(), Some(2));
    assert_eq!(run(&["gap"], None).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"], None).status.code(), Some(2));
}

#[test]
fn oversized_exact_solve_is_a_resource_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "c.json",
        r#"{"schema_version": 1, "graph": {"kind": "cycle", "n": 13},
            "rates": {"kind": "noisy_voter", "d": 1.0, "h1": 0.5, "h2": 0.7}}"#,
    );
    assert_eq!(run_to_file("gap", &cfg, &dir.path().join("o.json"), &[]).status.code(), Some(3));
}

const MC_CONFIG: &str = r#"{"schema_version": 1, "graph": {"kind": "cycle", "n": 24},
    "rates": {"kind": "threshold", "h": 1.0, "a": 1.0},
    "init": {"kind": "bernoulli", "p": 0.3},
    "t_grid": [0.0, 0.5, 1.0, 2.0], "replicas": 400, "seed": 17}"#;

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "mc.json", MC_CONFIG);
    let mut bodies = Vec::new();
    for (i, threads) in ["1", "1", "4"].iter().enumerate() {
        let out = dir.path().join(format!("run{i}.csv"));
        let o = run(
            &["mcf-compare", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()],
            Some(threads),
        );
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let meta = PathBuf::from(format!("{}.meta.json", out.display()));
        bodies.push((fs::read(&out).unwrap(), fs::read(&meta).unwrap()));
    }
    assert_eq!(bodies[0], bodies[1]);
    assert_eq!(bodies[0], bodies[2]);

    let csv = String::from_utf8(bodies[0].0.clone()).unwrap();
    assert_eq!(csv.lines().next(), Some("t,closed_form,exact,mc_mean,mc_stderr"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "mc.json", MC_CONFIG);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert_eq!(run_to_file("mcf-compare", &cfg, &a, &[]).status.code(), Some(0));
    assert_eq!(run_to_file("mcf-compare", &cfg, &b, &["--seed", "18"]).status.code(), Some(0));
    assert_ne!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let meta = read_json(Path::new(&format!("{}.meta.json", b.display())));
    assert_eq!(meta["config"]["seed"], 18);
}

#[test]
fn simulate_writes_events_to_stdout_without_out() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "sim.json",
        r#"{"schema_version": 1, "graph": {"kind": "cycle", "n": 16},
            "rates": {"kind": "threshold", "h": 0.5, "a": 1.5}, "t_max": 2.0, "seed": 5}"#,
    );
    let o = run(&["simulate", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.starts_with("time,vertex,new_spin"));
    for line in stdout.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 3);
        assert!(cols[0].parse::<f64>().unwrap() <= 2.0);
        assert!(cols[1].parse::<usize>().unwrap() < 16);
    }
    assert!(!o.stderr.is_empty(), "summary goes to stderr");
}

#[test]
fn edge_list_paths_are_relative_to_the_config() {
    let dir = TempDir::new().unwrap();
    let edges: String = (0..8).map(|i| format!("{i} {}\n", (i + 1) % 8)).collect();
    fs::write(dir.path().join("ring.txt"), edges).unwrap();
    let cfg = write_config(
        &dir,
        "c.json",
        r#"{"schema_version": 1, "graph": {"kind": "edge_list", "path": "ring.txt"},
            "rates": {"kind": "noisy_voter", "d": 1.0, "h1": 0.5, "h2": 0.7}}"#,
    );
    let out = dir.path().join("o.json");
    assert_eq!(run_to_file("gap", &cfg, &out, &[]).status.code(), Some(0));
    assert!((read_json(&out)["report"]["gap"].as_f64().unwrap() - 1.2).abs() < 1e-6);
}

#[test]
fn probe_flags_noisy_voter_and_not_threshold() {
    let g = Graph::cycle(8).unwrap();
    let nv = RateTable::noisy_voter(2, 0.3, 0.4, 0.9).unwrap();
    let row = probe_table(&g, &nv, 1e-6).unwrap();
    assert!(row.flagged && row.is_noisy_voter);

    let th = RateTable::threshold_noisy(2, 2, 1.0, 1.0).unwrap();
    let row = probe_table(&g, &th, 1e-6).unwrap();
    assert!(!row.flagged && !row.is_noisy_voter);
}

#[test]
fn sample_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let cfg = snnss_cli::ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{path:?}: {e}"));
            cfg.graph.build().unwrap();
            count += 1;
        }
    }
    assert!(count > 0);
}
