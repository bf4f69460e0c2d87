use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

/// `λ=1000` single-batch loss at the reference parameters, N_c=150.
const LOSS_REGRESSION: f64 = -0.29346050524504674;

fn maserbat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maserbat"))
        .args(args)
        .env_remove("MASERBAT_THREADS")
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) -> Output {
    let out = maserbat(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn path_arg(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}

fn write_config(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, body).unwrap();
    path
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn csv_column(path: PathBuf, col: usize) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .filter_map(|l| l.split(',').nth(col).and_then(|v| v.parse().ok()))
        .collect()
}

#[test]
fn lists_presets() {
    let out = run_ok(&["--list-presets"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l == "fine-tuned-incoherent"));
    assert!(text.lines().any(|l| l == "two-batch-lambda-100"));
}

#[test]
fn fine_tuned_incoherent_preset_reaches_full_first_chamber() {
    let tmp = TempDir::new().unwrap();
    run_ok(&["--preset", "fine-tuned-incoherent", "--out", &path_arg(tmp.path())]);
    let summary = json(tmp.path().join("summary.json"));
    let w = summary["results"]["final_ergotropy"].as_f64().unwrap();
    assert!((w - 15.0).abs() < 1e-3, "{w}");
    for f in ["trajectory.csv", "populations.csv", "final_state.json"] {
        assert!(tmp.path().join(f).exists(), "{f}");
    }
    let header = fs::read_to_string(tmp.path().join("trajectory.csv")).unwrap();
    assert!(header.starts_with("k,energy,ergotropy,purity\n0,"));
    let pops = csv_column(tmp.path().join("populations.csv"), 1);
    assert_eq!(pops.len(), 120);
    assert!(pops[15] > 0.999);
}

#[test]
fn improved_strategy_preset_passes_the_first_chamber() {
    let tmp = TempDir::new().unwrap();
    run_ok(&["--preset", "improved-strategy", "--out", &path_arg(tmp.path())]);
    let summary = json(tmp.path().join("summary.json"));
    assert!(summary["results"]["final_ergotropy"].as_f64().unwrap() > 15.0);
}

#[test]
fn ground_qubit_stream_leaves_vacuum_flat() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        &tmp,
        "q1.json",
        r#"{"mode": "simulate", "coupling": {"Q": 1, "m": 4, "epsilon": -0.2}, "n_c": 24, "batches": [{"b": 300, "c": 0.0, "q": 1.0}], "stride": 10}"#,
    );
    let out = tmp.path().join("out");
    run_ok(&["--config", &path_arg(&cfg), "--out", &path_arg(&out)]);
    let energies = csv_column(out.join("trajectory.csv"), 1);
    assert_eq!(energies.len(), 301);
    assert!(energies.iter().all(|&e| e == 0.0));
}

#[test]
fn summary_reruns_reproduce_every_file() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        &tmp,
        "sim.json",
        r#"{"mode": "simulate", "coupling": {"Q": 1, "m": 9, "epsilon": -0.3}, "n_c": 60, "batches": [{"b": 200, "c": 0.4, "q": 0.3}, {"b": 100, "c": 0.9, "q": 0.6}], "stride": 7}"#,
    );
    let out = tmp.path().join("out");
    run_ok(&["--config", &path_arg(&cfg), "--out", &path_arg(&out)]);
    let first = snapshot(&out);
    let summary = json(out.join("summary.json"));
    assert_eq!(summary["config"]["output_dir"].as_str().unwrap(), path_arg(&out));

    let saved = tmp.path().join("summary-copy.json");
    fs::copy(out.join("summary.json"), &saved).unwrap();
    run_ok(&["--config", &path_arg(&saved)]);
    assert_eq!(snapshot(&out), first);
}

#[test]
fn convex_self_test_finds_the_bowl_minimum_repeatably() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_ok(&["--preset", "convex-self-test", "--seed", "42", "--out", &path_arg(&a)]);
    run_ok(&["--preset", "convex-self-test", "--seed", "42", "--out", &path_arg(&b)]);
    let optimum = json(a.join("optimum.json"));
    let p: Vec<f64> = serde_json::from_value(optimum["free_params"].clone()).unwrap();
    assert!((p[0] - 0.3).abs() < 1e-6 && (p[1] - 0.3).abs() < 1e-6, "{p:?}");
    assert_eq!(fs::read(a.join("optimum.json")).unwrap(), fs::read(b.join("optimum.json")).unwrap());
    assert_eq!(json(a.join("summary.json"))["config"]["optimizer"]["seed"], 42);
}

const SMALL_CHARGING: &str = r#"{
    "mode": "MODE",
    "coupling": {"Q": 1, "m": 16, "epsilon": -0.4},
    "n_c": 80,
    "batches": [{"b": 60, "count": 1}],
    "loss": {LAMBDA"eta_fraction": 0.2},
    LAMBDAS
    "optimizer": {"restarts": 2, "max_iterations": 15, "seed": 3}
}"#;

fn small_charging(mode: &str, lambda: &str, lambdas: &str) -> String {
    SMALL_CHARGING.replace("MODE", mode).replace("LAMBDAS", lambdas).replace("LAMBDA", lambda)
}

#[test]
fn single_lambda_sweep_matches_optimize() {
    let tmp = TempDir::new().unwrap();
    let opt = write_config(&tmp, "opt.json", &small_charging("optimize", r#""lambda": 5.0, "#, ""));
    let sweep = write_config(&tmp, "sweep.json", &small_charging("sweep", "", r#""lambdas": [5.0],"#));
    let (oa, ob) = (tmp.path().join("opt"), tmp.path().join("sweep"));
    run_ok(&["--config", &path_arg(&opt), "--out", &path_arg(&oa)]);
    run_ok(&["--config", &path_arg(&sweep), "--out", &path_arg(&ob)]);

    let optimum = json(oa.join("optimum.json"));
    assert_eq!(json(oa.join("summary.json"))["config"]["loss"]["n_qubits"], 60);
    let text = fs::read_to_string(ob.join("sweep.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "lambda,c_1,q_1,loss,final_ergotropy,penalty");
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!(lines.next().is_none());
    assert_eq!(row[0], 5.0);
    let p: Vec<f64> = serde_json::from_value(optimum["free_params"].clone()).unwrap();
    assert_eq!(&row[1..3], &p[..]);
    assert_eq!(row[3], optimum["loss"].as_f64().unwrap());
    assert_eq!(row[5], optimum["penalty"].as_f64().unwrap());
    assert!(oa.join("trajectory.csv").exists());
}

#[test]
fn lambda_1000_preset_beats_the_regression_loss() {
    let tmp = TempDir::new().unwrap();
    run_ok(&["--preset", "single-batch-lambda-1000", "--seed", "2024", "--out", &path_arg(tmp.path())]);
    let loss = json(tmp.path().join("optimum.json"))["loss"].as_f64().unwrap();
    assert!(loss <= LOSS_REGRESSION + 1e-6, "{loss}");
}

#[test]
fn wigner_vacuum_preset_peaks_at_one_over_pi() {
    let tmp = TempDir::new().unwrap();
    run_ok(&["--preset", "wigner-vacuum", "--out", &path_arg(tmp.path())]);
    let meta = json(tmp.path().join("wigner_meta.json"));
    assert!((meta["normalization"].as_f64().unwrap() - 1.0).abs() < 1e-3);
    assert_eq!(meta["normalization_ok"], true);
    let text = fs::read_to_string(tmp.path().join("wigner.csv")).unwrap();
    let origin = text.lines().nth(51).unwrap().split(',').nth(51).unwrap();
    assert!((origin.parse::<f64>().unwrap() - std::f64::consts::FRAC_1_PI).abs() < 1e-6);
}

#[test]
fn wigner_accepts_non_square_grids() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        &tmp,
        "w.json",
        r#"{"mode": "wigner", "n_c": 6, "wigner": {"source": "fock", "level": 1, "x": {"min": -2, "max": 2, "points": 5}, "p": {"min": -3, "max": 3, "points": 7}}}"#,
    );
    let out = tmp.path().join("out");
    run_ok(&["--config", &path_arg(&cfg), "--out", &path_arg(&out)]);
    let text = fs::read_to_string(out.join("wigner.csv")).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.len() == 8));
    assert_eq!(rows[0][0], "");
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), -3.0);
    assert_eq!(rows[1][0].parse::<f64>().unwrap(), -2.0);
    let centre: f64 = rows[3][4].parse().unwrap();
    assert!((centre + std::f64::consts::FRAC_1_PI).abs() < 1e-9);
}

#[test]
fn chamber_presets_report_trapping_and_leakage() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("fine"), tmp.path().join("detuned"));
    run_ok(&["--preset", "chambers-fine-tuned", "--out", &path_arg(&a)]);
    run_ok(&["--preset", "chambers-detuned", "--out", &path_arg(&b)]);
    let fine = json(a.join("summary.json"));
    assert_eq!(fine["results"]["trapped"], true);
    assert!(fine["results"]["chambers"][0]["max_population_above"].as_f64().unwrap() <= 1e-10);
    let detuned = json(b.join("summary.json"));
    assert_eq!(detuned["results"]["trapped"], false);
    assert!(detuned["results"]["chambers"][0]["max_population_above"].as_f64().unwrap() > 1e-3);
    let header = fs::read_to_string(a.join("leakage.csv")).unwrap();
    assert!(header.starts_with("k,above_15,above_63\n"));
}

#[test]
fn single_level_chambers_run() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        &tmp,
        "m1.json",
        r#"{"mode": "chambers", "coupling": {"Q": 1, "m": 1, "epsilon": 0.0}, "n_c": 12, "batches": [{"b": 50, "c": 1.0, "q": 0.5}]}"#,
    );
    run_ok(&["--config", &path_arg(&cfg), "--out", &path_arg(&tmp.path().join("out"))]);
}

#[test]
fn config_errors_exit_with_one_and_write_nothing() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let empty = write_config(&tmp, "empty.json", &small_charging("sweep", "", r#""lambdas": [],"#));
    let malformed = write_config(&tmp, "bad.json", "{ not json");
    let cases: Vec<Vec<String>> = vec![
        vec!["--config".into(), path_arg(&empty)],
        vec!["--config".into(), path_arg(&malformed)],
        vec!["--preset".into(), "no-such-preset".into()],
        vec!["--preset".into(), "convex-self-test".into(), "--jobs".into(), "0".into()],
        vec!["--bogus-flag".into()],
        vec![],
    ];
    for mut args in cases {
        args.extend(["--out".to_string(), path_arg(&out)]);
        let argv: Vec<&str> = args.iter().map(String::as_str).collect();
        let res = maserbat(&argv);
        assert_eq!(res.status.code(), Some(1), "{argv:?}");
        assert!(!out.exists(), "{argv:?}");
    }
}

#[test]
fn truncation_overflow_exits_with_two_and_writes_nothing() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        &tmp,
        "overflow.json",
        r#"{"mode": "simulate", "coupling": {"Q": 1, "m": 2, "epsilon": -0.3}, "n_c": 10, "batches": [{"b": 500, "c": 0.0, "q": 0.0}]}"#,
    );
    let out = tmp.path().join("out");
    let res = maserbat(&["--config", &path_arg(&cfg), "--out", &path_arg(&out)]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("truncation overflow"));
    assert!(!out.exists());
}

#[test]
fn thread_count_comes_from_the_environment() {
    let tmp = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_maserbat"))
        .args(["--preset", "convex-self-test", "--out", &path_arg(tmp.path())])
        .env("MASERBAT_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    let bad = Command::new(env!("CARGO_BIN_EXE_maserbat"))
        .args(["--preset", "convex-self-test", "--out", &path_arg(tmp.path())])
        .env("MASERBAT_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn print_config_emits_the_resolved_document() {
    let out = run_ok(&["--preset", "two-batch-lambda-10", "--seed", "9", "--print-config"]);
    let cfg: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cfg["mode"], "optimize");
    assert_eq!(cfg["optimizer"]["seed"], 9);
    assert_eq!(cfg["batches"][0]["count"], 2);
    assert_eq!(cfg["loss"]["eta_fraction"], 0.1);
}
