use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dicke-stark"))
}

fn run(args: &[&str], out: &Path) -> Output {
    bin()
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn fig3_scan_writes_csv_and_peak_report() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("fig3");
    let o = run(&["scan", "--preset", "fig3"], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("scan.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("ratio,nq,nph"));
    assert_eq!(csv.lines().count(), 802);
    let peaks = json(&out.join("peaks.json"));
    let peaks = peaks.as_array().unwrap();
    assert_eq!(peaks.len(), 1);
    let location = peaks[0]["location"].as_f64().unwrap();
    assert!((location - 2.125).abs() <= 0.005, "{location}");
    for key in ["height", "predicted_location", "abs_error"] {
        assert!(peaks[0][key].is_number(), "{key}");
    }
}

#[test]
fn fig7_scan_peak_matches_second_order_resonance() {
    let dir = TempDir::new().unwrap();
    let o = run(&["scan", "--preset", "fig7"], dir.path());
    assert!(o.status.success());
    let peaks = json(&dir.path().join("peaks.json"));
    let location = peaks[0]["location"].as_f64().unwrap();
    assert!((location - 2.0003).abs() <= 0.0005, "{location}");
}

#[test]
fn scans_are_bit_identical() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(run(&["scan", "--preset", "fig4"], &a).status.success());
    assert!(run(&["scan", "--preset", "fig4"], &b).status.success());
    for f in ["scan.csv", "peaks.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn malformed_config_fails_without_writing() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[model]\nn_qubits = 4\nlambda = 0.006\nstark_u = -0.5\nspeed = 3\n").unwrap();
    let out = dir.path().join("out");
    let o = run(&["scan", "--config", cfg.to_str().unwrap()], &out);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("speed"));
    assert!(!out.exists());

    fs::write(&cfg, "[model\nn_qubits = 4\n").unwrap();
    let o = run(&["protocol", "--config", cfg.to_str().unwrap()], &out);
    assert!(!o.status.success());
    assert!(!out.exists());
}

#[test]
fn ghz_preset_reports_fidelity() {
    let dir = TempDir::new().unwrap();
    let o = run(&["protocol", "--preset", "ghz_4"], dir.path());
    assert!(o.status.success());
    let s = json(&dir.path().join("summary.json"));
    let f = s["fidelity"].as_f64().unwrap();
    assert!((f - 0.9952).abs() <= 0.002, "{f}");
    let header = fs::read_to_string(dir.path().join("step1.csv")).unwrap();
    let header = header.lines().next().unwrap();
    assert!(header.starts_with("t,lambda_t,nq,nph,pop_k0_n0,pop_k0_n1"), "{header}");
    assert!(dir.path().join("protocol.toml").exists());
}

#[test]
fn ladder_preset_reaches_top_dicke_state() {
    let dir = TempDir::new().unwrap();
    let o = run(&["protocol", "--preset", "dicke_ladder_4", "--format", "json"], dir.path());
    assert!(o.status.success());
    let s = json(&dir.path().join("summary.json"));
    assert!(s["fidelity"].as_f64().unwrap() >= 0.99);
    assert!(s["target_population"].as_f64().unwrap() >= 0.98);
    assert!(dir.path().join("step4.json").exists());
}

#[test]
fn inline_single_step_protocol_at_fig4_resonance() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("step.toml");
    fs::write(
        &cfg,
        r#"
[model]
n_qubits = 4
lambda = 0.006
stark_u = -0.5

[protocol]
initial = { k = 1, n = 1 }
samples = 50

[[protocol.steps]]
kind = "tc"
order = "first"
n0 = 0
k0 = 1
duration_rule = "transfer"
"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = run(&["protocol", "--config", cfg.to_str().unwrap()], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(&out.join("summary.json"));
    let pops = s["final"]["populations"].as_array().unwrap();
    // flat index k * (n_max + 1) + n with n_max = 1 + 4 + 4
    let p20 = pops[2 * 10].as_f64().unwrap();
    assert!(p20 >= 0.98, "{p20}");
}

#[test]
fn ghz_with_tiny_cutoff_reports_cutoff_error() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("ghz.toml");
    fs::write(
        &cfg,
        "[model]\nn_qubits = 4\nlambda = 0.1\nstark_u = -16.0\nn_max = 1\n[protocol]\npreset = \"ghz_4\"\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    for cmd in ["protocol", "validate"] {
        let o = run(&[cmd, "--config", cfg.to_str().unwrap()], &out);
        assert!(!o.status.success());
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains("cutoff") && err.contains("step 1"), "{err}");
        assert!(!out.exists());
    }
}

#[test]
fn validate_passes_by_default_and_surfaces_degeneracy() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("ok");
    let o = run(&["validate"], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let report = json(&out.join("validate.json"));
    assert_eq!(report["passed"], Value::Bool(true));

    // omega_q = 0.9 and U = 0.2 put delta-_{0,0} exactly on zero
    let cfg = dir.path().join("degenerate.toml");
    fs::write(
        &cfg,
        "[model]\nn_qubits = 4\nlambda = 0.006\nstark_u = 0.2\nomega_q = 0.9\n",
    )
    .unwrap();
    let out = dir.path().join("bad");
    let o = run(&["validate", "--config", cfg.to_str().unwrap()], &out);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("degenerate"));
}

#[test]
fn effective_reports_resonance_and_selectivity() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("eff.toml");
    fs::write(
        &cfg,
        "[model]\nn_qubits = 4\nlambda = 0.1\nstark_u = -16.0\n\
         [effective]\ntarget = { order = \"second\", kind = \"anti_tc\", n0 = 0, k0 = 0 }\n",
    )
    .unwrap();
    let o = run(&["effective", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&dir.path().join("effective.json"));
    let ratio = v["target"]["ratio"].as_f64().unwrap();
    assert!((ratio - 2.0003).abs() < 5e-5);
    assert_eq!(v["target"]["selective"], Value::Bool(true));
}

#[test]
fn unknown_preset_and_conflicting_sources_fail() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    assert!(!run(&["scan", "--preset", "fig9"], &out).status.success());
    assert!(!run(&["scan"], &out).status.success());
    assert!(!out.exists());
}

#[test]
fn print_config_round_trips() {
    let o = bin().args(["scan", "--preset", "fig8", "--print-config"]).output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("fig8.toml");
    fs::write(&cfg, &text).unwrap();
    let o = bin()
        .args(["scan", "--config", cfg.to_str().unwrap(), "--print-config"])
        .output()
        .unwrap();
    assert_eq!(String::from_utf8(o.stdout).unwrap(), text);
}
