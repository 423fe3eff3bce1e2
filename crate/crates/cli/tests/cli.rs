use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn pdelin(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdelin"))
        .args(args)
        .current_dir(cwd)
        .env("PDELIN_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn hash(path: &Path) -> Vec<u8> {
    Sha256::digest(std::fs::read(path).unwrap()).to_vec()
}

const VOLTERRA: &str = "[problem]\ncase = volterra\n\n[data]\nn = 1e6\nseed = 9\n";

#[test]
fn simulate_writes_data_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("v.ini"), VOLTERRA).unwrap();
    let o = pdelin(&["simulate", "v.ini", "--out", "sim"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["observation.csv", "truth.csv"] {
        assert!(dir.path().join("sim").join(f).exists(), "{f}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("sim/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 9);
    assert_eq!(manifest["command"], "simulate");
}

#[test]
fn simulate_is_deterministic_and_seed_defaults_to_zero() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("v.ini"), "[problem]\ncase = volterra\n[data]\nn = 100000000\n").unwrap();
    std::fs::write(dir.path().join("w.ini"), "[problem]\ncase = volterra\n[data]\nn = 1e8\n").unwrap();
    for (cfg, out) in [("v.ini", "a"), ("v.ini", "b"), ("w.ini", "c")] {
        assert_eq!(code(&pdelin(&["simulate", cfg, "--out", out], dir.path())), 0);
    }
    let h = |d: &str| hash(&dir.path().join(d).join("observation.csv"));
    assert_eq!(h("a"), h("b"));
    // decimal and exponent notation name the same n
    assert_eq!(h("a"), h("c"));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 0);
}

#[test]
fn missing_n_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("v.ini"), "[problem]\ncase = volterra\n").unwrap();
    let o = pdelin(&["simulate", "v.ini", "--out", "sim"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("data.n"));
}

#[test]
fn malformed_line_is_reported_with_its_number() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("v.ini"), "[problem]\ncase = volterra\nn 1e6\n").unwrap();
    let o = pdelin(&["simulate", "v.ini"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("v.ini:3"));
}

#[test]
fn infer_eb_writes_trace_and_alpha_skips_it() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("v.ini"), VOLTERRA).unwrap();
    assert_eq!(code(&pdelin(&["simulate", "v.ini", "--out", "sim"], dir.path())), 0);

    let o = pdelin(&["infer", "v.ini", "--data", "sim", "--out", "eb", "--eb", "--draws", "200"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let trace = std::fs::read_to_string(dir.path().join("eb/eb_trace.csv")).unwrap();
    assert!(trace.lines().skip(1).count() >= 64);
    for f in ["posterior.csv", "bands.csv", "summary.json", "manifest.json"] {
        assert!(dir.path().join("eb").join(f).exists(), "{f}");
    }

    let o = pdelin(&["infer", "v.ini", "--data", "sim", "--out", "fixed", "--alpha", "1.0", "--draws", "50"], dir.path());
    assert_eq!(code(&o), 0);
    assert!(!dir.path().join("fixed/eb_trace.csv").exists());
    assert!(dir.path().join("fixed/bands.csv").exists());
}

#[test]
fn infer_rejects_foreign_data_and_reports_domain_failures() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("v.ini"), VOLTERRA).unwrap();
    std::fs::write(dir.path().join("d.ini"), "[problem]\ncase = darcy1d\n").unwrap();
    assert_eq!(code(&pdelin(&["simulate", "v.ini", "--out", "sim"], dir.path())), 0);
    // Volterra data against the Darcy basis
    let o = pdelin(&["infer", "d.ini", "--data", "sim", "--out", "x", "--alpha", "1"], dir.path());
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    // a floor above every denominator
    let o = pdelin(&["infer", "v.ini", "--data", "sim", "--out", "y", "--alpha", "1", "--delta0", "1e9"], dir.path());
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("minimum denominator"));
}

#[test]
fn design_data_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("d.ini"),
        "[problem]\ncase = schrodinger-1d-smooth\n[data]\nmodel = design\nm = 128\n",
    )
    .unwrap();
    assert_eq!(code(&pdelin(&["simulate", "d.ini", "--out", "sim"], dir.path())), 0);
    let head = std::fs::read_to_string(dir.path().join("sim/observation.csv")).unwrap();
    assert!(head.starts_with("x1,y\n"));
    let o = pdelin(&["infer", "d.ini", "--data", "sim", "--out", "inf", "--alpha", "1", "--draws", "50"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn experiment_studies_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&pdelin(&["experiment", "nonsense"], dir.path())), 2);

    let o = pdelin(&["experiment", "darcy-refinement", "--out", "dr"], dir.path());
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS"));
    assert!(dir.path().join("dr/darcy_refinement.csv").exists());

    std::fs::write(dir.path().join("f.ini"), "[experiment]\nn_list = 1e4, 1e6\ndraws = 40\n").unwrap();
    for out in ["f1", "f2"] {
        let o = pdelin(&["experiment", "figure", "volterra", "--config", "f.ini", "--out", out], dir.path());
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["bands.csv", "draws.csv"] {
        assert_eq!(hash(&dir.path().join("f1").join(f)), hash(&dir.path().join("f2").join(f)), "{f}");
    }
    assert!(dir.path().join("f1/plot.svg").exists());

    // an unattainable configured assertion exits 4
    std::fs::write(dir.path().join("c.ini"), "[experiment]\nalpha = 3\nalpha_over = 3\nreplications = 20\nmc_draws = 200\nlen = 256\n")
        .unwrap();
    let o = pdelin(&["experiment", "coverage", "--config", "c.ini", "--out", "cov"], dir.path());
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stderr).contains("coverage"));
}

#[test]
fn basis_audit_dumps_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = pdelin(&["basis-audit", "laplacian", "--d", "2", "--size", "3", "--out", "lap.csv"], dir.path());
    assert_eq!(code(&o), 0);
    let t = std::fs::read_to_string(dir.path().join("lap.csv")).unwrap();
    assert!(t.starts_with("ell,kappa,sign,index_tuple\n"));
    assert_eq!(t.lines().count(), 10);
    assert_eq!(code(&pdelin(&["basis-audit", "wavelet", "--out", "w.csv"], dir.path())), 2);
}
