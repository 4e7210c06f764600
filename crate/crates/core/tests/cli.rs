use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kohn-heat"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn duhamel_prints_counts() {
    let out = bin().args(["duhamel", "--n", "5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["count"], "8");
    assert_eq!(v["coefficients_by_twos"]["2"]["paths"], 3);
}

#[test]
fn bad_input_exits_with_two() {
    let out = bin().args(["duhamel", "--n", "2", "--pattern", "tau_decay_iii"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["duhamel", "--n", "3", "--pattern", "nonsense"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let dir = scratch("bad_config");
    let cfg = dir.join("cfg.json");
    std::fs::write(&cfg, r#"{"checks": ["no-such-check"]}"#).unwrap();
    let out = bin().arg("verify").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn qse_and_geometry_write_csv() {
    let dir = scratch("tables");
    let q = dir.join("q.csv");
    assert!(bin().args(["qse", "--beta", "2", "--nt", "5", "--out"]).arg(&q).status().unwrap().success());
    assert_eq!(std::fs::read_to_string(&q).unwrap().lines().count(), 6);
    let g = dir.join("g.csv");
    assert!(bin().args(["geometry", "--z", "1,-0.5", "--nd", "7", "--out"]).arg(&g).status().unwrap().success());
    assert!(std::fs::read_to_string(&g).unwrap().starts_with("z_re,z_im,delta"));
}

#[test]
fn verify_then_report_against_golden() {
    let dir = scratch("suite");
    let cfg = dir.join("cfg.json");
    std::fs::write(&cfg, r#"{"checks": ["path-count", "gauss-convolution"]}"#).unwrap();
    let out = bin().arg("verify").arg("--config").arg(&cfg).arg("--out").arg(&dir).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = dir.join("report.json");
    let golden = dir.join("golden.json");
    let ok = bin().arg("report").arg("--input").arg(&report).arg("--golden").arg(&golden).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));

    let mut g: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&golden).unwrap()).unwrap();
    let first = &mut g["values"][0]["expected"];
    *first = serde_json::json!(first.as_f64().unwrap() + 1.0);
    let tampered = dir.join("tampered.json");
    std::fs::write(&tampered, g.to_string()).unwrap();
    let bad = bin().arg("report").arg("--input").arg(&report).arg("--golden").arg(&tampered).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
}
