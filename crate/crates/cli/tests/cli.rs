use std::path::Path;
use std::process::{Command, Output};

fn cspd(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cspd"))
        .args(args)
        .env("CSPD_OUTPUT_DIR", out_dir)
        .output()
        .unwrap()
}

const TINY: &str = r#"
[grid]
n = 32
length = 32.0

[physics]
width = 1.5
epsilon = 0.05

[time]
dt = 0.1
t_end = 2.0

[diagnostics]
dyadic = [0.5, 1.0]
sup_orders = [0, 1]
fit_window = [0.5, 2.0]
scattering_times = [0.5, 1.0]

[resonance]
signatures = ["++++", "+-+-"]
cells = [[1.0, 1.0, 1.0]]
samples = 1000
cm_cells = [[0.25, 2.0, 2.0]]
cm_points = 16
"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn version() {
    let tmp = tempfile::tempdir().unwrap();
    let o = cspd(&["version"], tmp.path());
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("cspd "));
}

#[test]
fn check_accepts_and_rejects() {
    let tmp = tempfile::tempdir().unwrap();
    let good = write(tmp.path(), "good.toml", TINY);
    let o = cspd(&["check", &good], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let bad = write(tmp.path(), "bad.toml", "[grid]\nn = 7\n[physics]\nlambda = -1.0\n");
    let o = cspd(&["check", &bad], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("grid") && err.contains("physics.lambda"), "{err}");

    let typo = write(tmp.path(), "typo.toml", "[grid]\nsize = 7\n");
    assert_eq!(cspd(&["check", &typo], tmp.path()).status.code(), Some(2));
    let missing = tmp.path().join("missing.toml");
    assert_eq!(cspd(&["check", missing.to_str().unwrap()], tmp.path()).status.code(), Some(2));
}

#[test]
fn simulate_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "run.toml", TINY);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        let o = cspd(&["simulate", &cfg], d);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let csv_a = std::fs::read(a.join("diagnostics.csv")).unwrap();
    assert_eq!(csv_a, std::fs::read(b.join("diagnostics.csv")).unwrap());
    let header = String::from_utf8_lossy(&csv_a).lines().next().unwrap().to_string();
    assert!(header.starts_with("t,mass,h_s0,h_s5,h_s10,weighted_plus,weighted_minus,sup_k0,sup_k1"));
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.join("summary.json")).unwrap()).unwrap();
    for key in ["config", "horizon", "fits", "envelopes", "residual_maxima", "wall_time_seconds"] {
        assert!(summary.get(key).is_some(), "{key}");
    }
    assert!(a.join("final_plus.cspd").exists());
}

#[test]
fn divergence_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let text = TINY.replace("epsilon = 0.05", "epsilon = 1.0e60");
    let cfg = write(tmp.path(), "blowup.toml", &text);
    let o = cspd(&["simulate", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(tmp.path().join("checkpoint.json").exists());
}

#[test]
fn resonance_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "res.toml", TINY);
    let o = cspd(&["resonance", &cfg], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let reports: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("resonance_reports.json")).unwrap()).unwrap();
    // two signatures, one dyadic cell plus the origin
    assert_eq!(reports.as_array().unwrap().len(), 4);
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("resonance_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["table"].as_array().unwrap().len(), 16);
}
