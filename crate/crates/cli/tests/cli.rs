use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn skipprice(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skipprice")).arg("--out").arg(out).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.display().to_string()
}

fn report(out: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(out.join("single/report.json")).unwrap()).unwrap()
}

#[test]
fn single_revenue_on_square_root_values() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "sqrt.json", r#"{"types": {"kind": "uniform"}, "value": {"kind": "clinear", "c": 1}}"#);
    let o = skipprice(tmp.path(), &["single", "--config", &cfg, "--objective", "revenue"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("p_rev") && !stdout.contains("p_util  "));
    let p_rev = report(tmp.path())["p_rev"].as_f64().unwrap();
    assert!((p_rev - 4.0 / 9.0).abs() < 1e-4, "{p_rev}");
    assert!(tmp.path().join("single/curve.csv").exists());
    assert!(tmp.path().join("single/run_manifest.json").exists());
}

#[test]
fn single_utility_price_rises_with_patience() {
    let tmp = TempDir::new().unwrap();
    let mut last = f64::NEG_INFINITY;
    for lambda in [1, 3, 10] {
        let body = format!(
            r#"{{"types": {{"kind": "impatience_exponential", "lambda": {lambda}}}, "value": {{"kind": "poly", "k": 4, "p_bar": 1}}}}"#
        );
        let cfg = write(tmp.path(), "patience.json", &body);
        let o = skipprice(tmp.path(), &["single", "--config", &cfg]);
        assert!(o.status.success());
        let p_util = report(tmp.path())["p_util"].as_f64().unwrap();
        assert!(p_util >= last - 1e-9, "lambda {lambda}: {p_util} < {last}");
        last = p_util;
    }
}

#[test]
fn config_errors_exit_two() {
    let tmp = TempDir::new().unwrap();
    let empty = write(tmp.path(), "empty.json", "");
    let o = skipprice(tmp.path(), &["single", "--config", &empty]);
    assert_eq!(o.status.code(), Some(2));

    let missing = write(
        tmp.path(),
        "missing.json",
        "{\n  \"types\": {\"kind\": \"lomax\"},\n  \"value\": {\"kind\": \"poly\", \"k\": 2}\n}",
    );
    let o = skipprice(tmp.path(), &["single", "--config", &missing]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("alpha") && err.contains("line"), "{err}");

    let o = skipprice(tmp.path(), &["study", "--study", "bogus"]);
    assert_eq!(o.status.code(), Some(2));
    let o = skipprice(tmp.path(), &["single", "--config", &empty, "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
}

const SIM: &str = r#"{
  "n": 20000,
  "types": {"kind": "uniform"},
  "retention": {"dist": {"kind": "exponential", "lambda": 2}, "beta": 0.99},
  "retention_mode": "independent",
  "growth_rate": 0.01
}"#;

#[test]
fn simulate_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "sim.json", SIM);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = skipprice(out, &["simulate", "--config", &cfg, "--seed", "7"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["simulate/trajectories.csv", "simulate/result.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let o = skipprice(&a, &["simulate", "--config", &cfg, "--n", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = skipprice(&a, &["simulate", "--config", &cfg, "--scheme", "cheapest"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_known_types_matches_closed_form() {
    use skip_pricing::repeat_pricing::known_types_expected_revenue;
    use skip_pricing::{Distribution, Retention};

    let tmp = TempDir::new().unwrap();
    let body = SIM.replace("\"growth_rate\": 0.01", "\"growth_rate\": 0").replace("20000", "400000");
    let cfg = write(tmp.path(), "sim.json", &body);
    let o = skipprice(tmp.path(), &["simulate", "--config", &cfg, "--scheme", "known-types"]);
    assert!(o.status.success());
    let result: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("simulate/result.json")).unwrap()).unwrap();
    let simulated = result["discounted_revenue"].as_f64().unwrap();
    let rm = Retention::new(Distribution::exponential(2.0).unwrap(), 0.99).unwrap();
    let exact = known_types_expected_revenue(&Distribution::uniform_unit(), 1.0, &rm).unwrap();
    assert!((simulated / exact - 1.0).abs() < 0.01, "{simulated} vs {exact}");
}

const GRID: &str = r#"{
  "type_dists": [{"kind": "uniform"}, {"kind": "impatience_exponential", "lambda": 3}],
  "retention_dists": [{"kind": "exponential", "lambda": 3}],
  "betas": [0.97],
  "growth_rates": [0],
  "scales": [1, 0.5]
}"#;

#[test]
fn study_directories() {
    let tmp = TempDir::new().unwrap();
    let grid = write(tmp.path(), "grid.json", GRID);
    let o = skipprice(tmp.path(), &["study", "--study", "main", "--config", &grid, "--n", "2000", "--replicates", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(tmp.path().join("main/summary.csv")).unwrap();
    for key in ["frac_mt_within_1pct", "frac_mt_strictly_best", "frac_threshold_beats_myerson"] {
        assert!(summary.contains(key), "{key}");
    }
    let o =
        skipprice(tmp.path(), &["study", "--study", "scaling", "--config", &grid, "--n", "2000", "--replicates", "2"]);
    assert!(o.status.success());
    let hist = fs::read_to_string(tmp.path().join("scaling/hist_scaled.csv")).unwrap();
    // Two types, two modes, two scales.
    assert_eq!(hist.lines().count(), 1 + 2 * 2 * 2);
}

#[test]
fn figures_family_filter() {
    let tmp = TempDir::new().unwrap();
    let o = skipprice(tmp.path(), &["figures", "--family", "patience"]);
    assert!(o.status.success());
    let table = fs::read_to_string(tmp.path().join("figures/patience.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    let o = skipprice(tmp.path(), &["figures", "--family", "fig99"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn help_lists_flags() {
    let tmp = TempDir::new().unwrap();
    let o = skipprice(tmp.path(), &["simulate", "--help"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    for flag in ["--config", "--seed", "--n", "--scheme", "--threads", "--out"] {
        assert!(text.contains(flag), "{flag}");
    }
}
