use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn nhph(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nhph"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("NHPH_WORKERS", "2")
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Data rows of a CSV artifact, metadata lines and header dropped.
fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

/// Parses `re±imj`.
fn parse_complex(s: &str) -> (f64, f64) {
    let body = s.strip_suffix('j').unwrap();
    let split = body
        .char_indices()
        .skip(1)
        .find(|&(i, ch)| (ch == '+' || ch == '-') && !body[..i].ends_with('e'))
        .map(|(i, _)| i)
        .unwrap();
    (num(&body[..split]), num(&body[split..]))
}

#[test]
fn construct_isotropic_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = nhph(&["construct", "--mu", "1", "--k", "2"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let report = json(&dir.path().join("construct.json"));
    for c in ["metric_invertible", "direct_sum", "biorthogonal"] {
        assert_eq!(report["criteria"][c], true);
    }
    assert_eq!(report["hermitian"], true);
    assert_eq!(report["closed_form_check"]["agrees"], true);
    assert_eq!(report["meta"]["command"], "construct");
    let projector = json(&dir.path().join("projector.json"));
    assert_eq!(projector["matrix"].as_array().unwrap().len(), 9);
}

#[test]
fn construct_lambda_expansion() {
    let dir = tempfile::tempdir().unwrap();
    assert!(nhph(&["construct", "--mu", "2", "--k", "2"], dir.path())
        .status
        .success());
    let rows = csv_rows(&dir.path().join("lambda.csv"));
    assert_eq!(rows.len(), 9);
    let first = parse_complex(&rows[0][1]);
    assert!((first.0 - 0.625).abs() < 1e-12 && first.1.abs() < 1e-12);
    let cross = parse_complex(&rows[0][3]);
    assert!(cross.0.abs() < 1e-12 && (cross.1 - 0.375).abs() < 1e-12);
    let last = parse_complex(&rows[8][9]);
    assert!((last.0 - 5.0 / 3.0).abs() < 1e-12);
}

#[test]
fn construct_warns_on_singular_fixed_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = nhph(&["construct", "--mu", "0.2", "--k", "2"], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("singular"));
    let report = json(&dir.path().join("construct.json"));
    assert_eq!(report["criteria"]["metric_invertible"], true);
    assert_eq!(report["fixed_point_metric_singular"], true);
}

#[test]
fn singular_metric_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let product = |sz: usize| {
        let mut tensor = vec![vec![vec![[0.0, 0.0]]]; 3];
        tensor[sz][0][0] = [1.0, 0.0];
        serde_json::json!({
            "d": 3, "D": 1, "tensor": tensor,
            "labels": {"physical": ["+1", "0", "-1"], "virtual": ["0"]}
        })
    };
    let right = dir.path().join("right.json");
    let left = dir.path().join("left.json");
    fs::write(&right, product(0).to_string()).unwrap();
    fs::write(&left, product(1).to_string()).unwrap();
    let out = nhph(
        &[
            "construct",
            "--k",
            "2",
            "--right",
            right.to_str().unwrap(),
            "--left",
            left.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no nH-PH"));
    assert_eq!(
        json(&dir.path().join("construct.json"))["criteria"]["metric_invertible"],
        false
    );
}

#[test]
fn sweep_chiral_values() {
    let dir = tempfile::tempdir().unwrap();
    assert!(
        nhph(&["sweep", "--mu", "0.5,1,2", "--mode", "lr"], dir.path())
            .status
            .success()
    );
    let rows = csv_rows(&dir.path().join("order.csv"));
    let chiral: Vec<f64> = rows.iter().map(|r| num(&r[8])).collect();
    for (got, want) in chiral.iter().zip([-2.0 / 3.0, 0.0, 2.0 / 3.0]) {
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
    let strings = csv_rows(&dir.path().join("string.csv"));
    assert_eq!(strings.len(), 27);
    assert!(strings
        .iter()
        .all(|r| (num(&r[3]) + 4.0 / 9.0).abs() < 1e-10));
}

#[test]
fn sweep_default_grid_is_centrosymmetric_and_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let run = |dir: &Path| {
        let out = Command::new(env!("CARGO_BIN_EXE_nhph"))
            .args(["sweep", "--out", "out"])
            .current_dir(dir)
            .env("NHPH_WORKERS", "3")
            .output()
            .unwrap();
        assert!(out.status.success());
        fs::read(dir.join("out/order.csv")).unwrap()
    };
    assert_eq!(run(a.path()), run(b.path()));
    let rows = csv_rows(&a.path().join("out/order.csv"));
    let lr: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r[1] == "LR")
        .map(|r| (num(&r[0]), num(&r[8])))
        .collect();
    assert_eq!(lr.len(), 40);
    assert_eq!(lr[0].0, 0.1);
    assert_eq!(lr[39].0, 10.0);
    for i in 0..20 {
        let (mu, x) = lr[i];
        let (nu, y) = lr[39 - i];
        assert!((mu * nu - 1.0).abs() < 1e-12);
        assert!((x + y).abs() < 1e-10);
    }
    for r in rows.iter().filter(|r| r[1] == "RR") {
        assert!(num(&r[8]).abs() < 1e-10);
    }
}

#[test]
fn sweep_skips_critical_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = nhph(&["sweep", "--mu", "0.3333333333333333,1,3"], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("skipping"));
    let rows = csv_rows(&dir.path().join("order.csv"));
    assert!(rows.iter().all(|r| num(&r[0]) == 1.0));
}

#[test]
fn ed_open_chain_has_four_ground_states() {
    let dir = tempfile::tempdir().unwrap();
    assert!(nhph(
        &[
            "ed",
            "--mu",
            "2",
            "--k",
            "2",
            "--n",
            "4",
            "--boundary",
            "open"
        ],
        dir.path()
    )
    .status
    .success());
    let s = json(&dir.path().join("spectrum.json"));
    assert_eq!(s["ground"]["degeneracy"], 4);
    assert!(s["ground"]["energy"][0].as_f64().unwrap().abs() < 1e-9);
    assert!(s["similarity"]["spectral_distance"].as_f64().unwrap() < 1e-8);
    assert_eq!(s["eigenvalues"].as_array().unwrap().len(), 81);
}

#[test]
fn ed_hermitian_point_is_real() {
    let dir = tempfile::tempdir().unwrap();
    assert!(nhph(
        &["ed", "--mu", "1", "--n", "3", "--boundary", "periodic"],
        dir.path()
    )
    .status
    .success());
    let s = json(&dir.path().join("spectrum.json"));
    for z in s["eigenvalues"].as_array().unwrap() {
        assert!(z[1].as_f64().unwrap().abs() < 1e-10);
    }
    assert_eq!(s["similarity"], Value::Null);
}

#[test]
fn ed_cap_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = nhph(&["ed", "--mu", "1", "--n", "9"], dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn ed_scaling_three_site_gap_is_positive() {
    let dir = tempfile::tempdir().unwrap();
    assert!(nhph(&["ed-scaling", "--mu", "0.4", "--k", "3"], dir.path())
        .status
        .success());
    let fit = csv_rows(&dir.path().join("scaling.csv"));
    assert!(num(&fit[0][2]) > 0.0);
    let gaps = csv_rows(&dir.path().join("gaps.csv"));
    let sizes: Vec<&str> = gaps.iter().map(|r| r[2].as_str()).collect();
    assert_eq!(sizes, ["4", "6", "8"]);
    let text = fs::read_to_string(dir.path().join("scaling.csv")).unwrap();
    assert!(text.contains("1/N"));
}

#[test]
fn itebd_isotropic_run_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let out = nhph(
        &["itebd", "--mu", "1", "--k", "2", "--max-steps", "50"],
        &first,
    );
    assert_eq!(out.status.code(), Some(4));
    let partial = json(&first.join("itebd.json"));
    assert_eq!(partial["converged"], false);
    assert_eq!(partial["steps"], 50);

    let resumed = dir.path().join("resumed");
    let cp = first.join("checkpoint.json");
    let out = nhph(
        &["itebd", "--mu", "1", "--resume", cp.to_str().unwrap()],
        &resumed,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = json(&resumed.join("itebd.json"));
    assert_eq!(report["converged"], true);
    assert!(report["infidelity"].as_f64().unwrap() < 1e-8);

    let direct = dir.path().join("direct");
    assert!(nhph(&["itebd", "--mu", "1", "--dmax", "12"], &direct)
        .status
        .success());
    let fresh = json(&direct.join("itebd.json"));
    assert_eq!(fresh["steps"], report["steps"]);
    assert_eq!(fresh["infidelity"], report["infidelity"]);
}

#[test]
fn itebd_extreme_point_does_not_reach_target() {
    let dir = tempfile::tempdir().unwrap();
    let out = nhph(
        &["itebd", "--mu", "0.25", "--max-steps", "3000"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(4));
    let report = json(&dir.path().join("itebd.json"));
    assert!(report["infidelity"].as_f64().unwrap() > 1e-2);
}

#[test]
fn invalid_input_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        nhph(&["ed", "--mu=-1", "--n", "4"], dir.path())
            .status
            .code(),
        Some(1)
    );
    assert_eq!(nhph(&["ed", "--bogus"], dir.path()).status.code(), Some(1));
}
