use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bhlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bhlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = bhlab(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn dir_arg(d: &Path) -> String {
    d.to_str().unwrap().to_string()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Data rows of a CSV output, below the hash line and the header.
fn rows(path: PathBuf) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(2)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn column(path: PathBuf, k: usize) -> Vec<f64> {
    rows(path).iter().map(|r| r[k].parse().unwrap()).collect()
}

#[test]
fn exponent_single_row() {
    let tmp = TempDir::new().unwrap();
    ok(&["exponent", "--out", &dir_arg(tmp.path())]);
    let a = column(tmp.path().join("exponents.csv"), 5);
    assert_eq!(a.len(), 1);
    assert!((a[0] - 1.0).abs() < 1e-8, "{a:?}");
    let hash = json(tmp.path().join("exponents.json"))["config_hash"]
        .as_str()
        .unwrap()
        .to_string();
    for name in ["exponents.csv", "profile_000.csv", "config.toml"] {
        let text = fs::read_to_string(tmp.path().join(name)).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            format!("# config-sha256: {hash}")
        );
    }
}

#[test]
fn exponent_regular_sweep() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("sweep.toml");
    fs::write(
        &cfg,
        "dim = 3\nopening = 1.5707963267948966\n[exponent]\np = [1.5, 2.0, 3.0]\nkind = [\"regular\"]\n",
    )
    .unwrap();
    let out = tmp.path().join("out");
    ok(&[
        "exponent",
        "--config",
        &dir_arg(&cfg),
        "--out",
        &dir_arg(&out),
    ]);
    let a = column(out.join("exponents.csv"), 5);
    assert_eq!(a.len(), 3);
    for v in a {
        assert!((v - 1.0).abs() < 1e-6, "{v}");
    }
}

#[test]
fn exponent_c_sweep_is_monotone() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(&cfg, "[exponent]\nc = [0.0, 1.0]\n").unwrap();
    ok(&[
        "exponent",
        "--config",
        &dir_arg(&cfg),
        "--out",
        &dir_arg(tmp.path()),
    ]);
    let rep = json(tmp.path().join("exponents.json"));
    assert_eq!(rep["c_monotonicity_anomalies"].as_array().unwrap().len(), 0);
    let a = column(tmp.path().join("exponents.csv"), 5);
    assert!((a[0] - 1.0).abs() < 1e-8);
    assert!((a[1] - 2f64.sqrt()).abs() < 1e-8);
}

#[test]
fn barrier_thresholds_and_probe() {
    let tmp = TempDir::new().unwrap();
    let b0 = tmp.path().join("b0");
    ok(&["barrier", "--out", &dir_arg(&b0)]);
    let rep = json(b0.join("barrier.json"));
    assert_eq!(rep["lower"]["a"].as_f64().unwrap(), 16.0);
    assert_eq!(rep["lower"]["certificate"]["passed"], true);
    assert_eq!(rep["upper"]["certificate"]["passed"], true);
    assert_eq!(rep["probe"]["passed"], false);
    assert!(rep["c0_tilde_choice"].is_string());

    let b1 = tmp.path().join("b1");
    ok(&["barrier", "--c", "1", "--out", &dir_arg(&b1)]);
    let rep = json(b1.join("barrier.json"));
    let a = rep["lower"]["a"].as_f64().unwrap();
    assert!((a - (8.0 + 72f64.sqrt())).abs() < 1e-8, "{a}");
    assert_eq!(rep["lower"]["certificate"]["passed"], true);
}

#[test]
fn solve_writes_field_grid_and_log() {
    let tmp = TempDir::new().unwrap();
    ok(&[
        "solve",
        "--grid",
        "33,17",
        "--epsilon",
        "0.0625",
        "--out",
        &dir_arg(tmp.path()),
    ]);
    let log = json(tmp.path().join("solve_log.json"));
    for key in [
        "iterations",
        "final_residual",
        "regularization_floor",
        "p",
        "potential_c",
    ] {
        assert!(log.get(key).is_some(), "{key}");
    }
    assert_eq!(rows(tmp.path().join("field.csv")).len(), 33 * 17);
    let header = fs::read_to_string(tmp.path().join("grid.csv")).unwrap();
    assert_eq!(header.lines().nth(1), Some("node_id,r,theta,x,y,tag"));
}

#[test]
fn outputs_are_deterministic() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        ok(&["solve", "--grid", "33,17", "--p", "3", "--out", &dir_arg(d)]);
    }
    for name in ["field.csv", "grid.csv", "solve_log.json", "config.toml"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn written_config_reproduces_the_hash() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&["exponent", "--p", "3", "--c", "0.5", "--out", &dir_arg(&a)]);
    let cfg = a.join("config.toml");
    ok(&[
        "exponent",
        "--config",
        &dir_arg(&cfg),
        "--out",
        &dir_arg(&b),
    ]);
    assert_eq!(
        json(a.join("exponents.json"))["config_hash"],
        json(b.join("exponents.json"))["config_hash"]
    );
}

fn singular_run(dir: &Path, extra: &[&str]) -> Value {
    let mut args = vec!["singular", "--grid", "8,33", "--out"];
    let d = dir_arg(dir);
    args.push(&d);
    args.extend_from_slice(extra);
    ok(&args);
    json(dir.join("ladder.json"))
}

#[test]
fn singular_default_run() {
    let tmp = TempDir::new().unwrap();
    let rep = singular_run(tmp.path(), &[]);
    assert_eq!(rep["singularity"]["verdict"], "singular");
    let rel: Vec<f64> = rep["blowup"]["relative"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert!(rel.windows(2).all(|w| w[1] < w[0]), "{rel:?}");
    assert!((rep["beta"]["shooting"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert!(tmp.path().join("field_limit.csv").exists());
    assert!(tmp.path().join("blowup.csv").exists());
}

#[test]
fn singular_scaled_arc_data() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    singular_run(&a, &[]);
    let cfg = tmp.path().join("k.toml");
    fs::write(&cfg, "[singular]\narc_scale = 2.5\n").unwrap();
    singular_run(&b, &["--config", &dir_arg(&cfg)]);
    let (ua, ub) = (
        column(a.join("field_limit.csv"), 3),
        column(b.join("field_limit.csv"), 3),
    );
    let m = ua.iter().copied().fold(0.0, f64::max);
    for (x, y) in ua.iter().zip(&ub) {
        assert!((y - 2.5 * x).abs() <= 1e-6 * 2.5 * m);
    }
}

#[test]
fn singular_p3_cross_checks_beta() {
    let tmp = TempDir::new().unwrap();
    let rep = singular_run(tmp.path(), &["--p", "3"]);
    let beta = rep["beta"]["shooting"].as_f64().unwrap();
    assert!((beta - 1.0 / 3f64.sqrt()).abs() < 1e-8);
    assert!(rep["beta"]["relative_difference"].as_f64().unwrap() < 0.1);
    assert_eq!(rep["singularity"]["verdict"], "singular");
}

#[test]
fn harnack_on_proportional_fields() {
    let tmp = TempDir::new().unwrap();
    let run = tmp.path().join("run");
    singular_run(&run, &[]);
    let src = run.join("field_limit.csv");
    let text = fs::read_to_string(&src).unwrap();
    let mut scaled = String::new();
    for (k, line) in text.lines().enumerate() {
        if k < 2 {
            scaled.push_str(line);
        } else {
            let mut parts: Vec<String> = line.split(',').map(str::to_string).collect();
            let v: f64 = parts[3].parse().unwrap();
            parts[3] = format!("{:.17e}", 3.0 * v);
            scaled.push_str(&parts.join(","));
        }
        scaled.push('\n');
    }
    let other = tmp.path().join("scaled.csv");
    fs::write(&other, scaled).unwrap();
    let out = tmp.path().join("h");
    ok(&[
        "harnack",
        "--field",
        &dir_arg(&src),
        "--field",
        &dir_arg(&other),
        "--out",
        &dir_arg(&out),
    ]);
    let rep = json(out.join("harnack.json"));
    let records = rep["records"].as_array().unwrap();
    let mut bhi = 0;
    for rec in records {
        let c = rec["constant"].as_f64().unwrap();
        match rec["estimate"].as_str().unwrap() {
            "bhi1" | "bhi2" => {
                assert!((c - 1.0).abs() < 1e-12, "{rec}");
                bhi += 1;
            }
            "quotient-k" => assert!((c - 3.0).abs() < 1e-12),
            _ => assert!(c.is_finite(), "{rec}"),
        }
        for key in ["estimate", "radii", "constant", "grid", "level", "excluded"] {
            assert!(rec.get(key).is_some(), "{key}");
        }
    }
    assert_eq!(bhi, 6);
    assert_eq!(rep["singularity"].as_array().unwrap().len(), 2);
    let header = fs::read_to_string(out.join("harnack.csv")).unwrap();
    assert_eq!(header.lines().nth(1), Some("estimate_id,r,constant"));
}

fn error_body(out: &Output) -> Value {
    serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap()
}

#[test]
fn errors_carry_module_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let d = dir_arg(tmp.path());

    let out = bhlab(&["solve", "--p", "0.5", "--out", &d]);
    assert_eq!(out.status.code(), Some(17));
    assert_eq!(error_body(&out)["error"]["module"], "config");

    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "unknown_key = 1\n").unwrap();
    let out = bhlab(&["exponent", "--config", &dir_arg(&bad), "--out", &d]);
    assert_eq!(out.status.code(), Some(17));

    let out = bhlab(&["exponent", "--dim", "3", "--opening", "3.5", "--out", &d]);
    assert_eq!(out.status.code(), Some(12));
    let body = error_body(&out);
    assert_eq!(body["error"]["module"], "spherical_exponents");
    assert_eq!(body["error"]["kind"], "Input");
    assert!(body["config_hash"].is_string());

    let out = bhlab(&["solve", "--epsilon", "0.3", "--grid", "3,3", "--out", &d]);
    assert_eq!(out.status.code(), Some(17));

    let out = bhlab(&["harnack", "--field", "/nonexistent/field.csv", "--out", &d]);
    assert_eq!(out.status.code(), Some(16));

    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&["solve", "--grid", "33,17", "--out", &dir_arg(&a)]);
    ok(&["solve", "--grid", "33,19", "--out", &dir_arg(&b)]);
    let out = bhlab(&[
        "harnack",
        "--field",
        &dir_arg(&a.join("field.csv")),
        "--field",
        &dir_arg(&b.join("field.csv")),
        "--out",
        &d,
    ]);
    assert_eq!(out.status.code(), Some(14));
    assert_eq!(error_body(&out)["error"]["kind"], "Incompatible");

    let out = bhlab(&["solve", "--grid", "33", "--out", &d]);
    assert_eq!(out.status.code(), Some(2));
}
