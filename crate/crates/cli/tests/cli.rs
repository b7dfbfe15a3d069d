use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn qcsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcsim"))
        .args(args)
        .env_remove("QCSIM_OUT")
        .output()
        .expect("binary runs")
}

fn preset() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets/fig3a.cfg")
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[test]
fn check_conditions_preset_all_satisfied() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fig3a");
    let cfg = preset();
    let o = qcsim(&["check-conditions", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("conditions.json")).unwrap()).unwrap();
    let conds = report["conditions"].as_array().unwrap();
    assert_eq!(conds.len(), 8);
    assert!(conds.iter().all(|c| c["satisfied"] == Value::Bool(true)));
    let m = manifest(&out);
    assert_eq!(m["condition_report"]["all_satisfied"], Value::Bool(true));
    assert_eq!(m["config"]["mediator.u"], "4.00062475");
}

#[test]
fn manifest_checksums_match_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = qcsim(&["hydrogen-spectrum", "--n", "10", "--ratios", "1,2", "--levels", "2", "--plot", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    let outputs = m["outputs"].as_array().unwrap();
    let names: Vec<&str> = outputs.iter().map(|e| e["file"].as_str().unwrap()).collect();
    assert_eq!(names, ["run.csv", "plot.gp"]);
    for e in outputs {
        let bytes = std::fs::read(out.join(e["file"].as_str().unwrap())).unwrap();
        assert_eq!(e["sha256"].as_str().unwrap(), sha256_hex(&bytes));
    }
    let csv = std::fs::read_to_string(out.join("run.csv")).unwrap();
    assert!(csv.starts_with("ratio,level,energy_ry,residual\n"));
    assert_eq!(csv.lines().count(), 5);
    assert_eq!(m["config"]["lattice.n"], "10");
}

#[test]
fn identical_inputs_give_identical_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |dir: &str, jobs: &str| {
        let out = tmp.path().join(dir).join("h");
        let o = qcsim(&["hydrogen-spectrum", "--n", "12", "--ratios", "0.5:2:0.5", "--levels", "3", "--jobs", jobs, "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
        std::fs::read(out.join("h.csv")).unwrap()
    };
    assert_eq!(run("a", "1"), run("b", "3"));
}

#[test]
fn unknown_config_key_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    std::fs::write(&cfg, "lattice.n = 10\nmediator.uu = 3\n").unwrap();
    let o = qcsim(&["check-conditions", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mediator.uu"));
    assert!(!tmp.path().join("x").exists());
}

#[test]
fn flags_override_config() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("c");
    let cfg = preset();
    let o = qcsim(&["check-conditions", "--config", cfg.to_str().unwrap(), "--lattice-n", "30", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let m = manifest(&out);
    assert_eq!(m["config"]["lattice.n"], "30");
    // A larger fermion lattice pushes N past the screening length.
    assert!(m["condition_report"]["failing"].as_array().unwrap().iter().any(|f| f == "e_lower"));
}

#[test]
fn invalid_input_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let o = qcsim(&["check-conditions", "--u", "1", "--out", tmp.path().join("g").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gap"));
    let o = qcsim(&["hydrogen-spectrum", "--frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn non_convergence_exits_3_with_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("nc");
    let o = qcsim(&["hydrogen-spectrum", "--n", "12", "--ratios", "1", "--levels", "2", "--max-iter", "1", "--tol", "1e-14", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(manifest(&out)["results"]["error"].as_str().unwrap().contains("converge"));
}

#[test]
fn output_root_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_qcsim"))
        .args(["bohr-fit", "--n", "16", "--ratios", "1,1.5"])
        .env("QCSIM_OUT", tmp.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("bohr-fit/bohr-fit.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn h2_curve_without_repulsion() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("h2");
    let o = qcsim(&[
        "h2-curve", "--n", "14", "--basis", "2+2", "--d", "2,4", "--schedule", "fixed:1.5", "--f", "0",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("h2.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("d_lattice,d_atomic,ratio,e_electronic_ry,e_total_ry,basis_n,hf_sweeps"));
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let elec: f64 = f[3].parse().unwrap();
        let ion: f64 = f[8].parse().unwrap();
        // Without repulsion both electrons occupy the one-electron ground state.
        assert!((elec - 2.0 * ion).abs() < 1e-8, "{line}");
    }
    let m = manifest(&out);
    assert!(m["results"]["curves"][0]["reference"].as_f64().is_some());
}

#[test]
fn pseudo_curve_has_f_column() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("p");
    let o = qcsim(&[
        "pseudo-curve", "--n", "12", "--basis", "2+2", "--d", "3", "--schedule", "fixed:1.5", "--f", "0,1",
        "--reference", "false", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("p.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').take(9).map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[1][4] > rows[0][4]);
}

#[test]
fn mediator_curve_writes_prediction_column() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("m");
    let cfg = preset();
    let o = qcsim(&["mediator-curve", "--config", cfg.to_str().unwrap(), "--d", "1:6", "--fit-min", "2", "--fit-max", "6", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("m.csv")).unwrap();
    assert!(csv.starts_with("d,e2,e1,v_eff,yukawa_prediction\n"));
    assert_eq!(csv.lines().count(), 7);
    let m = manifest(&out);
    assert!(m["condition_report"]["report_sha256"].as_str().unwrap().len() == 64);
    assert!(m["results"]["fit"]["v0"].as_f64().unwrap() > 0.0);
}

#[test]
fn critical_ratio_and_density_exports() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("crit");
    let o = qcsim(&[
        "critical-ratio", "--backend", "hydrogen", "--n-small", "14", "--n-large", "18", "--d-max", "7",
        "--d-atomic", "1.4", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(out.join("result.json")).unwrap()).unwrap();
    assert!(r["status"].is_string());
    assert_eq!(std::fs::read_to_string(out.join("crit.csv")).unwrap().lines().count(), 8);

    let out = tmp.path().join("rho");
    let o = qcsim(&["export-density", "--n", "10", "--ratio", "1.5", "--d", "2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (n, rho) = qcsim_core::snapshot::read_field(std::fs::File::open(out.join("density.bin")).unwrap()).unwrap();
    assert_eq!(n, 10);
    assert!((rho.iter().sum::<f64>() - 1.0).abs() < 1e-10);
}
