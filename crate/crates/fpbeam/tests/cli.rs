//! Exercises the command-line contract: exit codes and produced files.

use std::process::Command;

fn fpbeam() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fpbeam"))
}

#[test]
fn validate_accepts_defaults_and_a_written_config() {
    let status = fpbeam().arg("validate").status().unwrap();
    assert!(status.success());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scenario.toml");
    std::fs::write(&path, "[online]\nbeams = 3\n").unwrap();
    let status = fpbeam().arg("validate").arg("--config").arg(&path).status().unwrap();
    assert!(status.success());
}

#[test]
fn validate_rejects_bad_config_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[online]\nnot_a_field = 1\n").unwrap();
    let status = fpbeam().arg("validate").arg("--config").arg(&path).status().unwrap();
    assert!(!status.success());

    let status = fpbeam()
        .arg("validate")
        .arg("--config")
        .arg(dir.path().join("missing.toml"))
        .status()
        .unwrap();
    assert!(!status.success());
}

#[test]
fn timing_prints_the_comparison() {
    let out = fpbeam().arg("timing").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("midc"));
    assert!(text.contains("reduction"));
}

#[test]
fn offline_writes_the_radio_map_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("maps.fprm");
    let status = fpbeam().args(["offline", "--out"]).arg(&out).status().unwrap();
    assert!(status.success());
    assert!(out.metadata().unwrap().len() > 0);
}

#[test]
fn sweep_rejects_unknown_axis() {
    let status = fpbeam()
        .args(["sweep", "--axis", "bogus"])
        .status()
        .unwrap();
    assert!(!status.success());
}

#[test]
fn sweep_emits_json_when_asked() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results.json");
    let status = fpbeam()
        .args(["sweep", "--axis", "beams", "--trials", "5", "--format", "json", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let rows = parsed.as_array().unwrap();
    assert!(!rows.is_empty());
    assert!(rows[0].get("avg_rpr_db").is_some());
}
