use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use serde_json::Value;
use sn_mdpde::skew_normal::{sample, SnParams};

fn mdpde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdpde")).args(args).output().unwrap()
}

fn write_column(dir: &Path, name: &str, values: &[f64]) -> PathBuf {
    let path = dir.join(name);
    let mut text = String::from("id,value\n");
    for (i, v) in values.iter().enumerate() {
        text.push_str(&format!("{i},{v}\n"));
    }
    fs::write(&path, text).unwrap();
    path
}

fn sn_values(mu: f64, sigma: f64, gamma: f64, n: usize, seed: u64) -> Vec<f64> {
    sample(&SnParams::new(mu, sigma, gamma).unwrap(), n, seed).unwrap().into_values()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn fit_reports_one_block_per_alpha_with_positive_errors() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_column(dir.path(), "d.csv", &sn_values(0.0, 1.0, 5.0, 400, 1));
    let out = dir.path().join("fit.json");
    let o = mdpde(&["fit", "-i", s(&input), "-c", "value", "--alpha", "0,0.5", "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = read_json(&out);
    let fits = doc["fits"].as_array().unwrap();
    assert_eq!(fits.len(), 2);
    assert_eq!(fits[0]["fit"]["method"], "mle");
    for f in fits {
        assert_eq!(f["status"], "ok");
        for se in f["fit"]["std_errors"].as_array().unwrap() {
            assert!(se.as_f64().unwrap() > 0.0);
        }
    }
    assert_eq!(doc["n"], 400);
}

#[test]
fn drop_outliers_separates_mle_from_mdpde() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = sn_values(5.0, 1.0, 3.0, 200, 2);
    v[17] = 65.0;
    let input = write_column(dir.path(), "d.csv", &v);
    let out = dir.path().join("fit.json");
    let o = mdpde(&["fit", "-i", s(&input), "-c", "value", "--alpha", "0,0.5", "--drop-outliers", "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = read_json(&out);
    assert!(doc["outliers"]["removed"].as_array().unwrap().contains(&Value::from(17)));
    let rd = |i: usize| -> f64 {
        doc["outliers"]["fits"][i]["relative_difference_percent"]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_f64().unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    };
    assert!(rd(0) > 20.0, "MLE RD {}", rd(0));
    assert!(rd(1) < 10.0, "MDPDE RD {}", rd(1));
}

#[test]
fn missing_file_fails_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fit.json");
    let o = mdpde(&["fit", "-i", "/nonexistent/x.csv", "-c", "value", "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn blanks_are_skipped_and_counted() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("a,b\n");
    for (i, v) in sn_values(0.0, 1.0, 2.0, 100, 3).iter().enumerate() {
        if i % 30 == 7 {
            text.push_str(&format!("{i},\n"));
        } else {
            text.push_str(&format!("{i},{v}\n"));
        }
    }
    let input = dir.path().join("b.csv");
    fs::write(&input, text).unwrap();
    let out = dir.path().join("fit.json");
    let o = mdpde(&["fit", "-i", s(&input), "-c", "b", "--alpha", "0.5", "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let doc = read_json(&out);
    assert_eq!((doc["n"].as_u64(), doc["skipped"].as_u64()), (Some(96), Some(4)));
}

#[test]
fn header_only_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("h.csv");
    fs::write(&input, "id,value\n").unwrap();
    let o = mdpde(&["fit", "-i", s(&input), "-c", "value", "-o", s(&dir.path().join("o.json"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_hypothesis_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_column(dir.path(), "d.csv", &sn_values(0.0, 1.0, 0.0, 50, 4));
    for h in ["gamm=0", "gamma", "sigma=-1", "mu=abc"] {
        let o = mdpde(&["test", "-i", s(&input), "-c", "value", "--hypothesis", h, "-o", s(&dir.path().join("t.json"))]);
        assert_eq!(o.status.code(), Some(1), "{h}");
    }
    assert_eq!(mdpde(&["fit", "-c", "value"]).status.code(), Some(1));
    assert_eq!(mdpde(&["--help"]).status.code(), Some(0));
}

#[test]
fn point_restriction_on_shifted_data_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_column(dir.path(), "d.csv", &sn_values(75.0, 2.0, 2.0, 300, 5));
    let out = dir.path().join("t.csv");
    let o = mdpde(&["test", "-i", s(&input), "-c", "value", "--hypothesis", "mu=72", "--format", "csv", "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["alpha", "statistic", "p_value"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 6);
    for r in rows {
        assert!(r[2].parse::<f64>().unwrap() < 1e-6);
    }
}

#[test]
fn symmetry_test_emits_valid_p_values() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_column(dir.path(), "d.csv", &sn_values(0.0, 1.0, 0.0, 500, 6));
    let out = dir.path().join("t.json");
    let o = mdpde(&["test", "-i", s(&input), "-c", "value", "--hypothesis", "gamma=0", "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let doc = read_json(&out);
    for t in doc["tests"].as_array().unwrap() {
        let p = t["p_value"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&p));
        assert_eq!(t["df"], 1);
    }
}

#[test]
fn json_is_reproducible_apart_from_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_column(dir.path(), "d.csv", &sn_values(1.0, 2.0, -3.0, 150, 7));
    let run = |name: &str| {
        let out = dir.path().join(name);
        assert_eq!(mdpde(&["fit", "-i", s(&input), "-c", "value", "-o", s(&out)]).status.code(), Some(0));
        let mut v = read_json(&out);
        assert!(v.as_object_mut().unwrap().remove("timestamp").is_some());
        v
    };
    assert_eq!(run("a.json"), run("b.json"));
    let sim = |name: &str| {
        let out = dir.path().join(name);
        let o = mdpde(&["simulate", "--reps", "4", "--n", "40", "--alpha", "0.5", "--seed", "9", "-o", s(&out)]);
        assert_eq!(o.status.code(), Some(0));
        let mut v = read_json(&out);
        v.as_object_mut().unwrap().remove("timestamp");
        v
    };
    assert_eq!(sim("s1.json"), sim("s2.json"));
}

#[test]
fn are_table_has_table_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("are.csv");
    assert_eq!(mdpde(&["are", "-o", s(&out)]).status.code(), Some(0));
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    assert_eq!(rdr.headers().unwrap().len(), 10);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 9);
    for r in &rows {
        let first = &r[2];
        if r[0].contains("(0,1,0)") {
            assert_eq!(first, "NA");
        } else {
            assert_eq!(first.parse::<f64>().unwrap(), 100.0);
        }
    }
}

#[test]
fn power_table_round_trips_to_twelve_digits() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.csv");
    let json = dir.path().join("p.json");
    assert_eq!(mdpde(&["power", "-o", s(&out)]).status.code(), Some(0));
    assert_eq!(mdpde(&["power", "--format", "json", "-o", s(&json)]).status.code(), Some(0));
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    assert_eq!(rdr.headers().unwrap().len(), 9);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 10);
    let entries = read_json(&json)["entries"].as_array().unwrap().clone();
    for (i, r) in rows.iter().enumerate() {
        for a in 0..8 {
            let from_csv: f64 = r[a + 1].parse().unwrap();
            let from_json = entries[i * 8 + a]["power"].as_f64().unwrap();
            assert_eq!(from_csv, from_json);
        }
    }
    assert!((rows[0][1].parse::<f64>().unwrap() - 0.6685).abs() < 0.02);
}

#[test]
fn diagnose_writes_one_column_group_per_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("if.csv");
    let o = mdpde(&["diagnose", "--alpha", "0.3,0.5", "--y-min", "-5", "--y-max", "5", "--step", "0.5", "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    assert_eq!(rdr.headers().unwrap().len(), 7);
    assert_eq!(rdr.records().count(), 21);
    let pif = dir.path().join("pif.csv");
    let o = mdpde(&["diagnose", "--kind", "pif", "--alpha", "0.5", "--step", "1", "-o", s(&pif)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn simulate_smoke_profile_is_quick_and_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim.json");
    let start = Instant::now();
    let o = mdpde(&["simulate", "--profile", "smoke", "--epsilon", "0.1", "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(start.elapsed() < Duration::from_secs(120));
    let doc = read_json(&out);
    assert_eq!(doc["report"]["replications"], 10);
    assert_eq!(doc["report"]["n"], 50);
    for c in doc["report"]["metrics"]["cells"].as_array().unwrap() {
        if c["successes"].as_u64().unwrap() > 0 {
            let (b, m) = (c["bias"].as_f64().unwrap(), c["mse"].as_f64().unwrap());
            assert!(m >= b * b - 1e-10);
        }
    }
    let lp = dir.path().join("lp.csv");
    let o = mdpde(&[
        "simulate", "--design", "level-power", "--theta", "0,1,0", "--reps", "4", "--alpha", "0.5", "--format", "csv",
        "-o", s(&lp),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&lp).unwrap();
    assert!(text.starts_with("quantity,n,epsilon,0.5\n"));
}
