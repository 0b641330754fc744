//! End-to-end tests of the `twirl` binary: output contracts (headers,
//! round-trip floats, JSON envelopes), determinism, exit codes, and agreement
//! with the library the commands delegate to.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_twirl"))
}

/// Fresh per-test scratch directory under the system temp dir.
fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("twirl-cli-{tag}-{}", std::process::id()));
    if dir.exists() {
        std::fs::remove_dir_all(&dir).expect("clear scratch dir");
    }
    std::fs::create_dir_all(&dir).expect("create scratch dir");
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).expect("output file exists")
}

/// Data lines of a CSV artifact: everything after the `#` headers and the
/// column-name line (pass `has_columns = false` for raw matrix dumps).
fn csv_data(text: &str, has_columns: bool) -> Vec<String> {
    let mut lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    if has_columns && !lines.is_empty() {
        lines.remove(0);
    }
    lines.into_iter().map(str::to_string).collect()
}

fn header_line(text: &str) -> &str {
    text.lines().next().expect("file is nonempty")
}

#[test]
fn ghat_csv_round_trips_haar_moment_matrix() {
    let dir = scratch("ghat");
    let out = dir.join("g.csv");
    run_ok(&["ghat", "--d", "4", "--k", "2", "--out", out.to_str().unwrap()]);
    let text = read(&out);
    assert_eq!(header_line(&text), format!("# twirl ghat v{} seed=0", env!("CARGO_PKG_VERSION")));

    let expected = twirl::moments::haar_ghat(4, 2).unwrap();
    let rows = csv_data(&text, false);
    assert_eq!(rows.len(), 256);
    for (r, line) in rows.iter().enumerate() {
        let values: Vec<f64> =
            line.split(',').map(|v| v.parse().expect("float field")).collect();
        assert_eq!(values.len(), 256);
        for (c, &v) in values.iter().enumerate() {
            // 17 significant digits round-trip exactly.
            assert_eq!(v, expected.entries()[[r, c]], "entry ({r}, {c})");
        }
    }
}

#[test]
fn decay_reruns_are_byte_identical() {
    let dir = scratch("decay");
    let a = dir.join("a.csv");
    let b = dir.join("b.csv");
    for out in [&a, &b] {
        run_ok(&[
            "decay", "--n", "4", "--k", "1", "--ensemble", "clifford2", "--trials", "1000",
            "--t", "200", "--seed", "7", "--out", out.to_str().unwrap(),
        ]);
    }
    let text_a = read(&a);
    assert_eq!(text_a, read(&b), "same flags and seed must reproduce bytes");
    assert_eq!(csv_data(&text_a, true).len(), 201, "points t = 0..=200");

    // The k=1 mass must actually have decayed along the curve.
    let first: f64 = csv_data(&text_a, true)[0].split(',').nth(1).unwrap().parse().unwrap();
    let last: f64 = csv_data(&text_a, true)[200].split(',').nth(1).unwrap().parse().unwrap();
    assert!(first > 1.0 && last < 1e-6, "curve end points {first}, {last}");
}

#[test]
fn mix_zero_chain_json_reports_tau_within_bound() {
    let dir = scratch("mix");
    let out = dir.join("mix.json");
    run_ok(&[
        "mix", "--chain", "zero", "--n", "64", "--eps", "0.25", "--out",
        out.to_str().unwrap(),
    ]);
    let doc: Value = serde_json::from_str(&read(&out)).expect("valid JSON");
    assert_eq!(doc["command"], "mix");
    assert_eq!(doc["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(doc["seed"], 0);
    let report = &doc["report"];
    assert_eq!(report["chain"], "zero");
    assert_eq!(report["n"], 64);
    assert_eq!(report["epsilon"], 0.25);
    let tau = report["tau"].as_u64().expect("tau is an integer");
    let bound = report["tau_bound"].as_f64().expect("tau_bound is a float");
    assert!(tau as f64 <= bound, "tau = {tau} exceeds its gap bound {bound}");
    let curve = report["distance_curve"].as_array().expect("curve array");
    assert_eq!(curve.len(), tau as usize + 1);
}

#[test]
fn chain_csv_matches_library_triplets() {
    let dir = scratch("chain");
    let out = dir.join("zero.csv");
    run_ok(&["chain", "--space", "zero", "--n", "4", "--out", out.to_str().unwrap()]);
    let text = read(&out);
    assert!(text.lines().nth(1).unwrap().contains("space=zero n=4"));

    let expected = twirl::chains::zero_chain(4).unwrap().triplets();
    let rows = csv_data(&text, true);
    assert_eq!(rows.len(), expected.len());
    for (line, (r, c, v)) in rows.iter().zip(&expected) {
        let parts: Vec<&str> = line.split(',').collect();
        assert_eq!(parts[0].parse::<usize>().unwrap(), *r);
        assert_eq!(parts[1].parse::<usize>().unwrap(), *c);
        assert_eq!(parts[2].parse::<f64>().unwrap(), *v);
    }
}

#[test]
fn sweep_handles_rows_errors_and_empty_lists() {
    let dir = scratch("sweep");
    let out = dir.join("s.csv");
    run_ok(&["sweep", "--n-list", "8,16,32", "--out", out.to_str().unwrap()]);
    let rows = csv_data(&read(&out), true);
    assert_eq!(rows.len(), 3);
    let gaps: Vec<f64> =
        rows.iter().map(|r| r.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "gap decreasing: {gaps:?}");

    // Empty list: header-only CSV, still success.
    run_ok(&["sweep", "--n-list", "", "--out", out.to_str().unwrap()]);
    assert!(csv_data(&read(&out), true).is_empty());

    // Out-of-range n: that row is marked, the sweep continues, exit 0.
    run_ok(&["sweep", "--n-list", "8,1,32", "--out", out.to_str().unwrap()]);
    let rows = csv_data(&read(&out), true);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[1], "1,error,error,error,error");
    assert!(rows[2].starts_with("32,"));
}

#[test]
fn invalid_inputs_exit_one_naming_the_field() {
    let cases: &[(&[&str], &str)] = &[
        (&["gap", "--k", "2", "--ensemble", "nope"], "--ensemble"),
        (&["decay", "--n", "1", "--k", "1", "--trials", "5", "--t", "3"], "n = 1"),
        (&["ghat", "--d", "2", "--k", "1", "--ensemble", "clifford2"], "--d"),
        (&["frame", "--k", "1", "--trials", "10", "--n", "3"], "--t"),
        (&["sweep", "--n-list", "8,x"], "--n-list"),
    ];
    for (args, needle) in cases {
        let out = run(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert!(stderr.contains(needle), "{args:?} stderr: {stderr}");
    }
}

#[test]
fn frame_identity_file_ensemble_is_exact() {
    let dir = scratch("frame");
    let ens_path = dir.join("identity.json");
    let identity_row = |i: usize| -> Value {
        json!((0..4).map(|j| json!([if i == j { 1.0 } else { 0.0 }, 0.0])).collect::<Vec<_>>())
    };
    let doc = json!({"gates": [{"weight": 1.0, "matrix": [
        identity_row(0), identity_row(1), identity_row(2), identity_row(3),
    ]}]});
    std::fs::write(&ens_path, serde_json::to_string(&doc).unwrap()).unwrap();
    let spec = format!("file:{}", ens_path.display());

    let out = dir.join("f.json");
    run_ok(&[
        "frame", "--k", "2", "--ensemble", &spec, "--trials", "100", "--seed", "1", "--out",
        out.to_str().unwrap(),
    ]);
    let doc: Value = serde_json::from_str(&read(&out)).unwrap();
    let report = &doc["report"];
    // |tr(1†·1)|⁴ = 4⁴ on every draw: mean exactly 256, spread exactly 0.
    assert_eq!(report["value"], 256.0);
    assert_eq!(report["stderr"], 0.0);
    assert_eq!(report["source"], "ensemble");
}

#[test]
fn traj_occupancy_accounts_every_step() {
    let dir = scratch("traj");
    let out = dir.join("traj.csv");
    run_ok(&[
        "traj", "--n", "6", "--t", "5000", "--seed", "3", "--out", out.to_str().unwrap(),
    ]);
    let rows = csv_data(&read(&out), true);
    assert_eq!(rows.len(), 6);
    let total: u64 =
        rows.iter().map(|r| r.split(',').nth(1).unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, 5001, "occupancy counts all steps plus the start");

    let out_json = dir.join("traj.json");
    run_ok(&[
        "traj", "--n", "6", "--t", "5000", "--seed", "3", "--format", "json", "--out",
        out_json.to_str().unwrap(),
    ]);
    let doc: Value = serde_json::from_str(&read(&out_json)).unwrap();
    let report = &doc["report"];
    assert_eq!(report["occupancy"].as_array().unwrap().len(), 6);
    assert_eq!(report["trajectory"].as_array().unwrap().len(), 5001);
    // The CSV histogram and the JSON trajectory describe the same run.
    let first_bin = rows[0].split(',').nth(1).unwrap().parse::<u64>().unwrap();
    let ones = report["trajectory"].as_array().unwrap().iter().filter(|v| *v == &json!(1)).count();
    assert_eq!(first_bin, ones as u64);
}

#[test]
fn design_and_gap_reports_carry_their_schemas() {
    let dir = scratch("design");
    let out = dir.join("d.json");
    run_ok(&["design", "--n", "2", "--t", "1", "--out", out.to_str().unwrap()]);
    let doc: Value = serde_json::from_str(&read(&out)).unwrap();
    let report = &doc["report"];
    for key in ["n", "t", "ensemble", "target", "l1", "l2", "diamond_upper_bound"] {
        assert!(!report[key].is_null(), "missing design key {key}");
    }
    // One averaged step over two qubits already projects exactly.
    assert!(report["l1"].as_f64().unwrap() <= 1e-12);
    assert!(report["l2"].as_f64().unwrap() <= 1e-12);
    assert!(report["diamond_upper_bound"].as_f64().unwrap() <= 1e-10);

    let gap = run_ok(&["gap", "--k", "2"]);
    let doc: Value = serde_json::from_str(&String::from_utf8_lossy(&gap.stdout)).unwrap();
    assert_eq!(doc["command"], "gap");
    assert_eq!(doc["report"]["unit_modulus_count"], 2);
    assert_eq!(doc["report"]["is_gapped"], true);
}

#[test]
fn missing_out_prints_report_to_stdout() {
    let out = run_ok(&["ghat", "--k", "1"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with("# twirl ghat"));
    // 2 header lines + 16 matrix rows.
    assert_eq!(stdout.lines().count(), 18);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("ghat: ensemble=haar-u4"), "summary on stderr: {stderr}");
}
