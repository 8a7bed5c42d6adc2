use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn annulus(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_annulus"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn nitsche_threshold_and_verdicts() {
    let out = annulus(&["nitsche", "--r", "2", "--c", "0.5"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["threshold"], 2.125);

    let out = annulus(&["nitsche", "--r", "2", "--c", "0.5", "--R", "2.0"]);
    assert_eq!(json(&out)["verdict"], "infeasible");

    let out = annulus(&["nitsche", "--r", "2", "--c", "1", "--R", "1.25"]);
    let v = json(&out);
    assert_eq!(v["verdict"], "feasible");
    assert_eq!(v["boundary"], true);
}

#[test]
fn nitsche_domain_error_names_flag() {
    let out = annulus(&["nitsche", "--r", "0.5", "--c", "1"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--r"));
}

#[test]
fn minimize_energy_writes_profile_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("profile.csv");
    let out = annulus(&[
        "minimize",
        "--functional",
        "energy",
        "--r",
        "2",
        "--R",
        "3",
        "--c",
        "1",
        "--n-t",
        "65",
        "--n-theta",
        "32",
        "--out",
        path_str(&csv),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let target = 52.0 * PI / 3.0;
    assert!((v["minimum"].as_f64().unwrap() - target).abs() < 1e-8 * target);
    let grid = v["report"]["combined_energy"].as_f64().unwrap();
    assert!((grid - target).abs() < 1e-3 * target);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("t,H,Hdot\n"));
    let manifest: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("profile.csv.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["subcommand"], "minimize");
    assert_eq!(manifest["parameters"]["R"], 3.0);
}

#[test]
fn minimize_total_balanced() {
    let out = annulus(&[
        "minimize",
        "--functional",
        "total",
        "--r",
        "2",
        "--R",
        "4",
        "--c",
        "0.5",
        "--gamma",
        "1",
        "--n-t",
        "33",
        "--n-theta",
        "16",
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert!((v["solution"]["q"].as_f64().unwrap() - 2.0).abs() < 1e-4);
    assert_eq!(v["solution"]["case"], "Balanced");
}

#[test]
fn minimize_infeasible_exits_3() {
    let out = annulus(&[
        "minimize",
        "--functional",
        "energy",
        "--r",
        "2",
        "--R",
        "1.5",
        "--c",
        "0.5",
    ]);
    assert_eq!(code(&out), 3);
}

#[test]
fn phi_curve_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("curve.csv");
    let out = annulus(&[
        "phi-curve",
        "--q",
        "2",
        "--c",
        "0.5",
        "--s-min",
        "1",
        "--n",
        "50",
        "--out",
        path_str(&csv),
    ]);
    assert_eq!(code(&out), 0);
    let mut rdr = csv_rows(&csv);
    assert_eq!(rdr.remove(0), vec!["s".to_string(), "phi".to_string()]);
    for row in &rdr {
        assert!((row[1].parse::<f64>().unwrap() - 2.0).abs() < 1e-8);
    }
    assert!(dir.path().join("curve.csv.manifest.json").exists());

    let out = annulus(&[
        "phi-curve",
        "--q",
        "3",
        "--c",
        "0.5",
        "--s-min",
        "1",
        "--n",
        "50",
    ]);
    let v = json(&out);
    assert_eq!(v["satisfies_shape"], true);
    let end = v["phi_range"][1].as_f64().unwrap();
    assert!(end < 3.0 && end > 2.0);

    assert_eq!(code(&annulus(&["phi-curve", "--q", "1"])), 2);
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn energy_of_identity_lift_and_rotation() {
    let dir = tempfile::tempdir().unwrap();
    let plain = dir.path().join("id.json");
    let turned = dir.path().join("id_rot.json");
    for (file, rot) in [(&plain, "0"), (&turned, "0.4487989505128276")] {
        let out = annulus(&[
            "lift",
            "--r",
            "2",
            "--R",
            "2",
            "--c",
            "1",
            "--n-t",
            "65",
            "--n-theta",
            "32",
            "--rotate",
            rot,
            "--out",
            path_str(file),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = json(&annulus(&["energy", "--map", path_str(&plain)]));
    let b = json(&annulus(&["energy", "--map", path_str(&turned)]));
    // Identity on A(1,2): 2π ∫ 2t dt = 6π.
    let e = a["report"]["combined_energy"].as_f64().unwrap();
    assert!((e - 6.0 * PI).abs() < 1e-3 * 6.0 * PI, "{e}");
    // A constant rotation leaves every derivative unchanged up to rounding.
    let (ra, rb) = (
        a["report"].as_object().unwrap(),
        b["report"].as_object().unwrap(),
    );
    for (key, va) in ra {
        match (va.as_f64(), rb[key].as_f64()) {
            (Some(x), Some(y)) => assert!(
                (x - y).abs() <= 1e-12 * x.abs().max(1.0),
                "{key}: {x} vs {y}"
            ),
            _ => assert_eq!(va, &rb[key], "{key}"),
        }
    }
}

#[test]
fn energy_rejects_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "{not json").unwrap();
    assert_eq!(code(&annulus(&["energy", "--map", path_str(&garbage)])), 2);

    // Radii fold back in the middle row, so the Jacobian turns negative.
    let (n_t, n_theta) = (5usize, 8usize);
    let mut rho = Vec::new();
    let mut theta = Vec::new();
    let rows = [1.0, 1.5, 1.2, 1.8, 2.0];
    for &p in &rows {
        for j in 0..n_theta {
            rho.push(p);
            theta.push(2.0 * PI * j as f64 / n_theta as f64);
        }
    }
    let folded = dir.path().join("folded.json");
    let body = serde_json::json!({ "n_t": n_t, "n_theta": n_theta, "r": 2.0, "R": 2.0, "rho": rho, "theta": theta });
    std::fs::write(&folded, body.to_string()).unwrap();
    let out = annulus(&["energy", "--map", path_str(&folded)]);
    assert_eq!(code(&out), 5);
    assert!(String::from_utf8_lossy(&out.stderr).contains("node (i="));
}

#[test]
fn verify_duality_passes() {
    let out = annulus(&[
        "verify", "--suite", "duality", "--r", "2", "--R", "3", "--c", "1",
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["pass"], true);
    assert!(v["details"]["relative_gap"].as_f64().unwrap() <= 1e-7);
}

#[test]
fn verify_phi_portrait_single_curve() {
    let out = annulus(&[
        "verify",
        "--suite",
        "phi-portrait",
        "--c",
        "0.5",
        "--gamma",
        "1",
        "--q",
        "3",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn verify_dominance_small_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("dominance.csv");
    let out = annulus(&[
        "verify",
        "--suite",
        "dominance",
        "--functional",
        "total",
        "--r",
        "2",
        "--R",
        "3",
        "--c",
        "0.9",
        "--gamma",
        "1",
        "--n",
        "6",
        "--seed",
        "7",
        "--n-t",
        "65",
        "--n-theta",
        "64",
        "--out",
        path_str(&csv),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let rows = csv_rows(&csv);
    assert_eq!(rows[0].join(","), "index,eps_r,eps_a,mode,energy,gap");
    assert_eq!(rows.len(), 7);
    assert!(dir.path().join("dominance.csv.manifest.json").exists());
}

#[test]
fn verify_failure_exits_4() {
    // The q = 1/10 curve is still 1.8e-3 above its limit at s = 50.
    let out = annulus(&[
        "verify",
        "--suite",
        "phi-portrait",
        "--c",
        "0.5",
        "--gamma",
        "1",
        "--q",
        "0.1",
    ]);
    assert_eq!(code(&out), 4);
    assert_eq!(json(&out)["pass"], false);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(
        code(&annulus(&[
            "minimize",
            "--functional",
            "bogus",
            "--r",
            "2",
            "--R",
            "3"
        ])),
        2
    );
    assert_eq!(
        code(&annulus(&["verify", "--suite", "duality", "--R", "3"])),
        2
    );
}
