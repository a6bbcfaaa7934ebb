use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const QUICK: &str = concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../configs/constant_quick.toml"
);

fn semiwave(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semiwave"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path
}

const SMALL_EVOLVE: &str = r#"
medium = "periodic"

[solver]
dx = 0.1
dt = 0.004
L = 20.0
mu = 1.0
stop_h = 12.0
snapshot_stride = 50
checkpoint_every = 500
"#;

#[test]
fn oracle_writes_its_table() {
    let dir = TempDir::new().unwrap();
    let out = semiwave(&["oracle", "--config", QUICK], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let table = fs::read_to_string(dir.path().join("oracle/oracle.csv")).unwrap();
    assert!(table.starts_with("mu,c\n"));
    assert_eq!(table.lines().count(), 4);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.ends_with("all_pass=true\n"), "{stdout}");
}

#[test]
fn verify_all_passes_on_the_quick_constant_config() {
    let dir = TempDir::new().unwrap();
    let out = semiwave(
        &["verify-all", "--config", QUICK, "--jobs", "2"],
        dir.path(),
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        out.status.success(),
        "{stdout}\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(!stdout.contains("=fail"), "{stdout}");
    assert!(dir.path().join("summary.txt").exists());
}

#[test]
fn missing_mu_is_reported_by_name() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), &SMALL_EVOLVE.replace("mu = 1.0\n", ""));
    let out = semiwave(&["evolve", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("mu"), "{err}");
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let out = semiwave(&["launch", "--config", QUICK], dir.path());
    assert!(!out.status.success());
}

#[test]
fn repeated_runs_write_identical_bytes() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), SMALL_EVOLVE);
    let cfg = cfg.to_str().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(semiwave(&["evolve", "--config", cfg], &a).status.success());
    assert!(semiwave(&["evolve", "--config", cfg], &b).status.success());
    for file in ["evolve/series.csv", "evolve/final_snapshot.csv"] {
        assert_eq!(
            fs::read(a.join(file)).unwrap(),
            fs::read(b.join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn resume_from_a_checkpoint_matches_the_full_run() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), SMALL_EVOLVE);
    let cfg = cfg.to_str().unwrap();
    let full = dir.path().join("full");
    assert!(semiwave(&["evolve", "--config", cfg], &full)
        .status
        .success());

    let mut checkpoints: Vec<_> = fs::read_dir(full.join("evolve/snapshots"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    checkpoints.sort();
    assert!(checkpoints.len() >= 2);
    let mid = &checkpoints[checkpoints.len() / 2];

    let resumed = dir.path().join("resumed");
    let out = semiwave(
        &["evolve", "--config", cfg, "--resume", mid.to_str().unwrap()],
        &resumed,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        fs::read(full.join("evolve/final_snapshot.csv")).unwrap(),
        fs::read(resumed.join("evolve/final_snapshot.csv")).unwrap()
    );
}

#[test]
fn resume_rejects_a_truncated_snapshot() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), SMALL_EVOLVE);
    let cfg = cfg.to_str().unwrap();
    let full = dir.path().join("full");
    assert!(semiwave(&["evolve", "--config", cfg], &full)
        .status
        .success());
    let snap = fs::read_to_string(full.join("evolve/final_snapshot.csv")).unwrap();
    let cut = dir.path().join("cut.csv");
    fs::write(&cut, &snap[..snap.len() / 2]).unwrap();
    let out = semiwave(
        &["evolve", "--config", cfg, "--resume", cut.to_str().unwrap()],
        &dir.path().join("r"),
    );
    assert_eq!(out.status.code(), Some(2));
}
