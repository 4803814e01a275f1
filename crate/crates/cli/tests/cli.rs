use std::path::Path;

use horseshoe_cli::run;
use serde_json::Value;

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn cli(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("horseshoe").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    Run { code, out: String::from_utf8(out).unwrap(), err: String::from_utf8(err).unwrap() }
}

fn report(r: &Run) -> Value {
    assert_eq!(r.code, 0, "stderr: {}", r.err);
    serde_json::from_str(&r.out).expect("json report")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn pliss_example_prints_indices_and_bound() {
    let dir = tempfile::tempdir().unwrap();
    let csv = path(dir.path(), "a.csv");
    std::fs::write(&csv, "a\n0.6\n0.6\n0.6\n0.6\n0.6\n0.6\n0.6\n0.6\n0.6\n0.6\n").unwrap();
    let r = report(&cli(&[
        "pliss", "--csv", &csv, "--N", "1", "--theta0", "0.75", "--theta1", "0.5", "--theta2", "0.25", "--eta", "0.01", "--l", "1",
    ]));
    let res = &r["result"];
    assert_eq!(res["indices"], serde_json::json!([0, 1, 2, 3, 4, 5, 6, 7, 8, 9]));
    assert!((res["bound"].as_f64().unwrap() - 10.0 / 3.0).abs() < 1e-12);
    assert_eq!(res["hypotheses_hold"], true);
    assert_eq!(r["config"]["constants"]["theta0"], 0.75);
}

#[test]
fn pliss_reads_comma_separated_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv = path(dir.path(), "a.csv");
    std::fs::write(&csv, "-1, 0.6, 0.6\n").unwrap();
    let r = report(&cli(&["pliss", "--csv", &csv, "--N", "1", "--theta1", "0.5", "--theta2", "0.25", "--eta", "0.01", "--l", "1"]));
    assert_eq!(r["result"]["indices"], serde_json::json!([1, 2]));
}

#[test]
fn schedule_example_gives_cascade_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = path(dir.path(), "s.csv");
    let r = report(&cli(&["schedule", "--A", "2.718", "--h", "1", "--eps", "0.1", "--table", &table]));
    let s = &r["result"]["schedule"];
    assert_eq!(s["K"], 138);
    assert_eq!(r["result"]["h_clamped_to_log_a"], true);
    assert!(s["q"][3]["depth"].as_u64().unwrap() >= 3);
    let text = std::fs::read_to_string(&table).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# EXPLORATION"));
    assert_eq!(lines.next(), Some("k,q,l,neg_ln_lambda,neg_ln_xi"));
    assert_eq!(lines.count(), 139);
}

#[test]
fn schedule_threshold_fails_for_physical_n() {
    let r = report(&cli(&["schedule", "--A", "2.718281828459045", "--h", "1", "--eps", "0.1", "--n", "1e9"]));
    assert_eq!(r["result"]["threshold"]["passes"], false);
}

#[test]
fn unknown_flag_and_missing_subcommand_exit_2() {
    let r = cli(&["pliss", "--bogus"]);
    assert_eq!(r.code, 2);
    assert!(r.err.contains("--bogus"));
    assert!(r.out.is_empty());
    assert_eq!(cli(&[]).code, 2);
    assert_eq!(cli(&["frobnicate"]).code, 2);
}

#[test]
fn help_exits_0() {
    let r = cli(&["--help"]);
    assert_eq!(r.code, 0);
    assert!(r.out.contains("counterexample"));
}

#[test]
fn regime_errors_exit_2() {
    let r = cli(&["schedule", "--A", "2", "--h", "5", "--eps", "0.1"]);
    assert_eq!(r.code, 2);
    assert!(r.err.contains("configuration error"));
    assert_eq!(cli(&["bowen", "--map", "henon:1.4"]).code, 2);
    assert_eq!(cli(&["bowen", "--n-min", "5", "--n-max", "4"]).code, 2);
}

#[test]
fn numerical_failure_exits_3() {
    // a translation has no hyperbolic periodic points
    let r = cli(&["hetero", "--map", "translation:0.5,0.5", "--periodic", "0.1,0.1,2"]);
    assert_eq!(r.code, 3, "{}", r.err);
    assert!(r.err.contains("numerical failure"));
}

#[test]
fn strict_mode_forbids_toy_schedules() {
    let args = ["certify", "theorem-a", "--mode", "strict", "--map", "cat", "--h", "0.5", "--n", "12", "--toy-q", "1", "--toy-l", "1", "--toy-eta", "0.1"];
    assert_eq!(cli(&args).code, 2);
    let dir = tempfile::tempdir().unwrap();
    let cfg = path(dir.path(), "c.toml");
    std::fs::write(&cfg, "mode = \"strict\"\n[toy]\nq = [1]\nl = [1]\neta = 0.1\n").unwrap();
    assert_eq!(cli(&["schedule", "--config", &cfg, "--A", "3", "--h", "1", "--eps", "0.1"]).code, 2);
}

#[test]
fn strict_pipeline_is_gated_by_the_cascade() {
    let r = report(&cli(&["certify", "theorem-a", "--mode", "strict", "--map", "cat", "--h", "0.5", "--n", "12", "--samples", "1000"]));
    assert_eq!(r["stamp"], "STRICT");
    let v = &r["result"]["verdict"];
    assert_eq!(v["verdict"], "Inconclusive");
    assert_eq!(v["threshold_report"]["passes"], false);
}

#[test]
fn toy_pipeline_on_cat_is_positive_and_stamped() {
    let r = report(&cli(&[
        "certify", "theorem-a", "--map", "cat", "--h", "0.5", "--delta", "0.05", "--eps", "0.1", "--n", "12", "--toy-q", "1,2,4",
        "--toy-l", "2,2,2", "--toy-eta", "0.1", "--samples", "5000",
    ]));
    assert_eq!(r["stamp"], "EXPLORATION");
    assert_eq!(r["result"]["verdict"]["verdict"], "Positive");
    assert_eq!(r["result"]["verdict"]["mechanism"], "HeteroclinicCertificate");
    assert_eq!(r["config"]["toy"]["q"], serde_json::json!([1, 2, 4]));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = path(dir.path(), "c.toml");
    std::fs::write(&cfg, "map = \"translation:0.1,0.2\"\nseed = 9\nconstants.theta0 = 0.9\nconstants.C2 = 3\ngrid.samples = 500\n").unwrap();
    let r = report(&cli(&["bowen", "--config", &cfg, "--seed", "11", "--n-max", "4"]));
    let c = &r["config"];
    assert_eq!(c["map"], "translation:0.1,0.2");
    assert_eq!(c["seed"], 11);
    assert_eq!(c["constants"]["theta0"], 0.9);
    assert_eq!(c["constants"]["C2"], 3.0);
    assert_eq!(c["grid"]["samples"], 500);
    assert_eq!(r["map"]["kind"], "translation");

    std::fs::write(&cfg, "sed = 9\n").unwrap();
    assert_eq!(cli(&["bowen", "--config", &cfg]).code, 2);
    assert_eq!(cli(&["bowen", "--config", &path(dir.path(), "missing.toml")]).code, 2);
}

#[test]
fn timing_is_opt_in() {
    let base = ["schedule", "--A", "3", "--h", "1", "--eps", "0.1"];
    assert!(report(&cli(&base)).get("runtime_ms").is_none());
    let mut args = base.to_vec();
    args.push("--timing");
    assert!(report(&cli(&args))["runtime_ms"].is_u64());
}

#[test]
fn reports_and_tables_go_to_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "r.json");
    let table = path(dir.path(), "t.csv");
    let r = cli(&["bowen", "--map", "cat", "--samples", "500", "--n-max", "5", "--out", &out, "--table", &table]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.is_empty());
    let rep: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(rep["result"]["rows"].as_array().unwrap().len(), 5);
    assert!(rep["result"]["complexity_slope"].is_f64());
    let text = std::fs::read_to_string(&table).unwrap();
    assert!(text.starts_with("# EXPLORATION\nn,upper,"));
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn hetero_fixture_on_cat() {
    let r = report(&cli(&["hetero", "--map", "cat", "--periodic", "0,0,1", "--periodic", "0.25,0.25,3", "--grow-length", "1.5"]));
    let v = &r["result"]["verdict"];
    assert_eq!(v["verdict"], "Positive");
    let angle = v["certificate"]["su_crossing"]["angle"].as_f64().unwrap();
    assert!((angle - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
}

#[test]
fn counterexample_emits_both_tables() {
    let dir = tempfile::tempdir().unwrap();
    let table = path(dir.path(), "c.csv");
    let gaps = path(dir.path(), "g.csv");
    let r = report(&cli(&[
        "counterexample", "--n", "4", "--samples", "1000", "--gap-samples", "10", "--table", &table, "--gap-table", &gaps,
    ]));
    assert!(r["result"]["volume_max_error"].as_f64().unwrap() < 1e-9);
    assert_eq!(std::fs::read_to_string(&table).unwrap().lines().count(), 6);
    let g = std::fs::read_to_string(&gaps).unwrap();
    assert!(g.contains("requested,13,"));
    assert!(g.contains("convergent,161,"));
}

#[test]
fn worker_count_does_not_change_output() {
    let a = cli(&["close", "--map", "standard:6", "--seeds", "6", "--q", "200", "--workers", "1"]);
    let b = cli(&["close", "--map", "standard:6", "--seeds", "6", "--q", "200", "--workers", "2"]);
    assert_eq!(a.code, 0, "{}", a.err);
    assert_eq!(a.out, b.out);
}
