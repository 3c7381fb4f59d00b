use std::process::Command;

fn crucible() -> Command {
    Command::new(env!("CARGO_BIN_EXE_crucible"))
}

#[test]
fn list_commands_succeed() {
    let out = crucible().arg("list-substrates").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 19);
    assert!(text.contains("prisoners_dilemma_in_the_matrix\t8"));

    let out = crucible()
        .args(["list-scenarios", "--substrate", "clean_up"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().lines().count() >= 2);
}

#[test]
fn unknown_population_exits_nonzero_with_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let out = crucible()
        .args(["eval", "--population", "nobody", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("nobody"));
}

#[test]
fn qc_accepts_a_bot() {
    let out = crucible().args(["qc", "pd_cooperator"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("accept\tpd_cooperator"));
}

#[test]
fn eval_then_report_then_render() {
    let dir = tempfile::tempdir().unwrap();
    let status = crucible()
        .args(["eval", "--population", "random", "--scenario", "pd_visiting_cooperators"])
        .args(["--episodes", "1", "--seed", "3", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    std::fs::remove_file(dir.path().join("report.json")).unwrap();
    assert!(crucible().arg("report").arg(dir.path()).status().unwrap().success());
    assert!(dir.path().join("report.json").exists());
    let frames = dir.path().join("frames");
    let status = crucible()
        .args(["render"])
        .arg(dir.path())
        .args(["--population", "random", "--scenario", "pd_visiting_cooperators", "--out"])
        .arg(&frames)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(frames.join("manifest.json").exists());
}

#[test]
fn registry_override_is_read_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = crucible()
        .env("CRUCIBLE_REGISTRY", dir.path().join("missing"))
        .arg("list-substrates")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // A registry holding only the prisoner's dilemma.
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/data");
    for (sub, name) in [
        ("maps", "matrix_arena_k2.txt"),
        ("substrates", "prisoners_dilemma_in_the_matrix.toml"),
    ] {
        std::fs::create_dir_all(dir.path().join(sub)).unwrap();
        std::fs::copy(format!("{data}/{sub}/{name}"), dir.path().join(sub).join(name)).unwrap();
    }
    let out = crucible()
        .env("CRUCIBLE_REGISTRY", dir.path())
        .arg("list-substrates")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("prisoners_dilemma_in_the_matrix"));
}
