use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_phasewave"))
}

fn scenario(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name).display().to_string()
}

#[test]
fn missing_mass_exits_with_a_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let src = std::fs::read_to_string(scenario("smoluchowski.toml")).unwrap().replace("m = 1.0\n", "");
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, src).unwrap();
    let out = bin().args(["run", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line "), "{err}");
}

#[test]
fn unknown_flag_and_missing_file_are_configuration_errors() {
    assert_eq!(bin().args(["run", "--config", "/nonexistent.toml"]).status().unwrap().code(), Some(2));
    assert_eq!(bin().args(["run", "--bogus"]).status().unwrap().code(), Some(2));
}

#[test]
fn checked_run_writes_an_indexed_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "--check", "--plot", "--threads", "2", "--seed", "3", "--config", &scenario("modified_hj.toml"), "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.contains("scenario=modified_hj"));
    assert!(summary.contains("seed=3"));
    assert!(summary.contains("pass=true"));
    let index = std::fs::read_to_string(dir.path().join("index.csv")).unwrap();
    for entry in std::fs::read_dir(dir.path()).unwrap() {
        let name = entry.unwrap().file_name().into_string().unwrap();
        assert!(name == "index.csv" || index.lines().any(|l| l.starts_with(&format!("{name},"))), "orphan {name}");
    }
    assert!(dir.path().join("slope.svg").exists());
}

#[test]
fn sound_example_reports_the_measured_speed() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["run", "--check", "--config", &scenario("thermal_sound.toml"), "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let summary = String::from_utf8(out.stdout).unwrap();
    let speed: f64 = summary
        .lines()
        .find_map(|l| l.strip_prefix("measured_speed="))
        .expect("measured_speed in summary")
        .parse()
        .unwrap();
    assert!((speed - 1.0).abs() < 0.02);
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // coarse steps swamp the quantum correction with time-discretization error
    let src = std::fs::read_to_string(scenario("quartic_correction.toml"))
        .unwrap()
        .replace("dt = 0.001", "dt = 0.1")
        .replace("t_end = 0.002", "t_end = 0.2");
    let path = dir.path().join("coarse.toml");
    std::fs::write(&path, src).unwrap();
    let status = bin().args(["run", "--check", "--config"]).arg(&path).arg("--out").arg(dir.path().join("o")).status().unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn filtered_acceptance_runs_only_sound() {
    let out = bin().args(["acceptance", "--filter", "sound"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("1a") && table.contains("1b"));
    assert!(!table.contains("langevin"));
}

#[test]
fn tampered_tolerance_fails_the_row() {
    let out = bin().args(["acceptance", "--filter", "sound", "--override-tol", "1a=0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let table = String::from_utf8(out.stdout).unwrap();
    let row = table.lines().find(|l| l.starts_with("1a")).unwrap();
    assert!(row.contains("FAIL"), "{row}");
}

#[test]
fn same_seed_gives_identical_files_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let src = std::fs::read_to_string(scenario("fokker_planck_vs_langevin.toml"))
        .unwrap()
        .replace("n_traj = 100000", "n_traj = 5000")
        .replace("t_end = 5.0", "t_end = 0.5");
    let path = a.path().join("cfg.toml");
    std::fs::write(&path, src).unwrap();
    for (dir, t) in [(a.path().join("o"), "1"), (b.path().join("o"), "4")] {
        let status = bin().args(["run", "--threads", t, "--config"]).arg(&path).arg("--out").arg(&dir).status().unwrap();
        assert_eq!(status.code(), Some(0));
    }
    let index = std::fs::read_to_string(a.path().join("o/index.csv")).unwrap();
    for line in index.lines().skip(1) {
        let name = line.split(',').next().unwrap();
        let x = std::fs::read(a.path().join("o").join(name)).unwrap();
        let y = std::fs::read(b.path().join("o").join(name)).unwrap();
        assert!(x == y, "{name} differs");
    }
}
