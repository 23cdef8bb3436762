use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn sepmix(dir: &Path, args: &[&str]) -> i32 {
    let out = Command::new(env!("CARGO_BIN_EXE_sepmix"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs");
    out.status.code().expect("exit code")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let headers = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (headers, rows)
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn golden(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn assert_close_csv(got: &Path, want: &Path, tol: f64) {
    let (h1, r1) = read_csv(got);
    let (h2, r2) = read_csv(want);
    assert_eq!(h1, h2);
    assert_eq!(r1.len(), r2.len());
    for (a, b) in r1.iter().zip(&r2) {
        for (x, y) in a.iter().zip(b) {
            let (x, y): (f64, f64) = (x.parse().unwrap(), y.parse().unwrap());
            assert!((x - y).abs() <= tol * y.abs().max(1.0), "{x} vs {y} in {}", got.display());
        }
    }
}

#[test]
fn mix_exact_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let code = sepmix(dir.path(), &["mix-exact", "--n", "8", "--k", "4", "--profile-kind", "homogeneous", "--eps", "0.05,0.25"]);
    assert_eq!(code, 0);
    assert_close_csv(&dir.path().join("mixing_times_N8_k4.csv"), &golden("mixing_times_N8_k4.csv"), 1e-9);
    assert_close_csv(&dir.path().join("mixing_curve_N8_k4.csv"), &golden("mixing_curve_N8_k4.csv"), 1e-9);
    let (_, rows) = read_csv(&dir.path().join("mixing_times_N8_k4.csv"));
    for row in rows {
        let v: Vec<f64> = row.iter().map(|s| s.parse().unwrap()).collect();
        assert!(v[2] <= v[1] && v[1] <= v[3], "{row:?}");
    }
}

#[test]
fn spectrum_headers_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let code = sepmix(dir.path(), &["spectrum", "--n", "64", "--profile-kind", "homogeneous", "--count", "3"]);
    assert_eq!(code, 0);
    let (h, rows) = read_csv(&dir.path().join("spectrum_N64.csv"));
    assert_eq!(h, ["index", "eigenvalue", "N2_scaled"]);
    assert_eq!(rows.len(), 3);
    let (h, rows) = read_csv(&dir.path().join("eigenfunction_N64_i2.csv"));
    assert_eq!(h, ["x", "g", "reference_shape"]);
    assert_eq!(rows.len(), 64);
    let m = manifest(dir.path());
    assert_eq!(m["command"], "spectrum");
    assert_eq!(m["config"]["spectrum"]["count"], 3);
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    assert!(m["outputs"].as_array().unwrap().iter().any(|o| o == "spectrum_N64.csv"));
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"n_ladder": [12], "k_rule": {"rule": "fixed", "k": 3}, "replicas": {"coalescence": 7}}"#).unwrap();
    let out = dir.path().join("out");
    let code = sepmix(&out, &["coalesce", "--config", cfg.to_str().unwrap(), "--replicas", "9", "--seed", "5"]);
    assert_eq!(code, 0);
    let (h, rows) = read_csv(&out.join("coalescence_N12.csv"));
    assert_eq!(h, ["replica", "t", "censored", "events"]);
    assert_eq!(rows.len(), 9);
    let (h, _) = read_csv(&out.join("coalescence_summary_N12.csv"));
    assert_eq!(h, ["quantity", "value", "stderr", "replicas", "seed"]);
    let m = manifest(&out);
    assert_eq!(m["config"]["seed"], 5);
    assert_eq!(m["config"]["k_rule"]["k"], 3);
}

#[test]
fn simulate_is_reproducible_with_event_log() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["simulate", "--n", "10", "--start", "1111100000", "--start", "0101010101", "--horizon", "3", "--event-log", "--seed", "9"];
    assert_eq!(sepmix(a.path(), &args), 0);
    assert_eq!(sepmix(b.path(), &args), 0);
    for f in ["heights_N10.csv", "events_N10.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let (h, _) = read_csv(&a.path().join("events_N10.csv"));
    assert_eq!(h, ["t", "x", "dir", "applied", "member_states_hash"]);
    let (h, rows) = read_csv(&a.path().join("heights_N10.csv"));
    assert_eq!(h.len(), 3 + 11);
    assert_eq!(&rows[0][3..], ["0", "5", "10", "15", "20", "25", "20", "15", "10", "5", "0"]);
}

#[test]
fn estimate_tables_have_documented_columns() {
    for what in ["heat", "covariance", "bracket"] {
        let dir = tempfile::tempdir().unwrap();
        let code = sepmix(dir.path(), &["estimate", "--what", what, "--n", "12", "--k", "3", "--replicas", "200"]);
        assert_eq!(code, 0, "{what}");
        let (h, rows) = read_csv(&dir.path().join(format!("estimate_{what}_N12.csv")));
        assert_eq!(h, ["quantity", "value", "stderr", "replicas", "seed"]);
        assert!(!rows.is_empty());
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"n_sites": 4, "resistances": [1.0, -2.0, 1.0]}"#).unwrap();
    let out = dir.path().join("o");
    assert_eq!(sepmix(&out, &["verify", "--profile", bad.to_str().unwrap()]), 2);
    assert_eq!(sepmix(&out, &["spectrum", "--profile", bad.to_str().unwrap()]), 4);
    assert_eq!(sepmix(&out, &["mix-exact", "--n", "30", "--k", "15"]), 3);
    assert_eq!(sepmix(&out, &["estimate", "--what", "nothing"]), 4);
    assert_eq!(sepmix(&out, &["cutoff", "--set", "n_ladder=[16,8]"]), 4);
    assert_eq!(sepmix(&out, &["verify"]), 0);
    let (h, rows) = read_csv(&out.join("coverage.csv"));
    assert_eq!(h[..4], ["check", "module", "property", "status"]);
    assert!(rows.iter().all(|r| r[3] == "pass"));
}
