use std::fs;
use std::process::Command;

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_uavcache"))
}

#[test]
fn writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli()
        .args([
            "--algo", "all", "--users", "6", "--uavs", "2", "--slots", "4", "--reps", "2",
        ])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.lines().any(|l| l.starts_with("ctwuc")), "{stdout}");
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 6);
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    // 6 algos × 2 reps × 4 slots × (2 UAVs + 6 users)
    assert_eq!(trace.lines().count(), 1 + 6 * 2 * 4 * 8);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# small run\nusers = 5\nuavs = 3\nslots = 2\nreps = 1\nalgo = supc\n",
    )
    .unwrap();
    let out = cli()
        .arg("--config")
        .arg(&cfg)
        .args(["--uavs", "2"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1 + 2 * (2 + 5));
    assert!(trace.lines().nth(1).unwrap().contains(",supc,uav,0,"));
    assert!(trace
        .lines()
        .skip(1)
        .all(|l| !l.contains(",uav,0,") || l.contains(",480,")));
}

#[test]
fn rejects_unknown_algorithm() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli()
        .args(["--algo", "greedy"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("greedy"));
}
