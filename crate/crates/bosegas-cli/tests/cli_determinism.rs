//! Binary-level checks: determinism of artifacts, exit-status classes, and
//! the oracle verdict JSON.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bosegas"))
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

#[test]
fn full_pipeline_reruns_byte_identical() {
    let base = std::env::temp_dir().join("bosegas_cli_determinism");
    let _ = std::fs::remove_dir_all(&base);
    let args = [
        "full-pipeline",
        "--seed",
        "11",
        "--set",
        "lattice.points_per_axis=16",
        "--set",
        "evolve.t_final=0.02",
        "--set",
        "evolve.dt=1e-3",
        "--set",
        "evolve.output_stride=5",
        "--set",
        "condensate.t_final=0.05",
        "--set",
        "potential.particle_sweep=[100.0]",
        "--set",
        "scattering.radial_points=10000",
        "--set",
        "oracle.samples=2",
    ];
    for run in ["a", "b"] {
        let out = bin()
            .args(args)
            .arg("--out")
            .arg(base.join(run))
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "pipeline failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let a = read_dir_sorted(&base.join("a"));
    let b = read_dir_sorted(&base.join("b"));
    assert_eq!(a.len(), b.len());
    for ((na, ca), (nb, cb)) in a.iter().zip(b.iter()) {
        assert_eq!(na, nb);
        assert_eq!(ca, cb, "artifact {na} differs between identical runs");
    }
    // expected artifact set
    let names: Vec<&str> = a.iter().map(|(n, _)| n.as_str()).collect();
    for want in [
        "config.toml",
        "scattering.csv",
        "condensate.csv",
        "condensate_sweep.csv",
        "evolve.csv",
        "covariance.csv",
        "covariance_plot.csv",
        "manifest.json",
        "oracle_verdict.json",
        "pair_u.kern",
        "pair_v.kern",
        "pairing.kern",
    ] {
        assert!(names.contains(&want), "missing artifact {want}");
    }
}

#[test]
fn config_errors_exit_with_code_2() {
    let out = bin()
        .args(["scattering", "--set", "potential.beta=7.0"])
        .arg("--out")
        .arg(std::env::temp_dir().join("bosegas_cli_cfgerr"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin()
        .args(["scattering", "--set", "lattice.no_such_key=1"])
        .arg("--out")
        .arg(std::env::temp_dir().join("bosegas_cli_cfgerr"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn precondition_errors_exit_with_code_3() {
    // ell below the scaled support: precondition violation.
    let out = bin()
        .args([
            "scattering",
            "--set",
            "scattering.ell=0.001",
            "--set",
            "potential.particle_sweep=[100.0]",
        ])
        .arg("--out")
        .arg(std::env::temp_dir().join("bosegas_cli_preerr"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn inconclusive_oracle_exits_with_code_5() {
    // A leakage limit nobody can satisfy forces the inconclusive verdict.
    let out = bin()
        .args([
            "oracle-verify",
            "--seed",
            "3",
            "--set",
            "oracle.leakage_limit=1e-30",
            "--set",
            "oracle.samples=1",
        ])
        .arg("--out")
        .arg(std::env::temp_dir().join("bosegas_cli_incon"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn oracle_verdict_json_shape() {
    let dir = std::env::temp_dir().join("bosegas_cli_verdict");
    let out = bin()
        .args(["oracle-verify", "--seed", "5", "--set", "oracle.samples=2"])
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.join("oracle_verdict.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in ["test", "M", "n_max", "dt", "defect", "leakage", "pass"] {
        assert!(v.get(key).is_some(), "verdict missing key {key}");
    }
    assert_eq!(v["pass"], serde_json::Value::Bool(true));
}
