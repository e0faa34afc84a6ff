//! End-to-end tests of the `cdasim` binary: flag handling, exit codes,
//! file layout, and byte-level determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn cdasim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cdasim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn csv_files(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    files.sort();
    files
}

#[test]
fn scenarios_lists_all_36_labels() {
    let out = cdasim(&["scenarios"]);
    assert_eq!(exit_code(&out), 0);
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 36);
    assert!(lines.contains(&"MU U NY"));
    assert!(lines.contains(&"AU G MI"));
}

#[test]
fn run_writes_four_artifacts_and_replays_identically() {
    let base = tempfile::tempdir().unwrap();
    let dir_a = base.path().join("a");
    let dir_b = base.path().join("b");
    for dir in [&dir_a, &dir_b] {
        let out = cdasim(&[
            "run", "MU U NY", "--seed", "7", "--agents", "20", "--days", "2", "--turns", "3",
            "--out", dir.to_str().unwrap(),
        ]);
        assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
        assert!(stdout(&out).contains("power law"));
    }
    let files_a = csv_files(&dir_a);
    assert_eq!(files_a.len(), 4, "expected 4 CSVs, got {files_a:?}");
    for name in ["trades_MU_U_NY_7.csv", "pending_MU_U_NY_7.csv", "summary_MU_U_NY_7.csv", "fits_MU_U_NY_7.csv"] {
        assert!(dir_a.join(name).is_file(), "missing {name}");
        assert_eq!(
            fs::read(dir_a.join(name)).unwrap(),
            fs::read(dir_b.join(name)).unwrap(),
            "{name} differs between identical runs"
        );
    }
}

#[test]
fn bad_scenario_label_exits_2_and_names_alternatives() {
    let out = cdasim(&["run", "XX G MI"]);
    assert_eq!(exit_code(&out), 2);
    let err = stderr(&out);
    assert!(err.contains("XX"), "stderr: {err}");
    assert!(err.contains("G, MG, MU, AG, AU, E"), "stderr: {err}");
}

#[test]
fn unknown_flag_exits_2() {
    let out = cdasim(&["run", "MU U NY", "--frobnicate"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn full_grid_writes_109_csv_files_and_a_report() {
    let base = tempfile::tempdir().unwrap();
    let dir = base.path().join("grid");
    let out = cdasim(&[
        "grid", "--scenarios", "all", "--seeds", "1", "--agents", "8", "--days", "1",
        "--turns", "2", "--jobs", "2", "--out", dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    assert_eq!(csv_files(&dir).len(), 36 * 3 + 1);
    assert!(dir.join("grid_summary.csv").is_file());
    let report = fs::read_to_string(dir.join("report.txt")).unwrap();
    assert!(report.contains("36 scenarios x 1 seeds"));
    assert!(report.contains("ranking-rule comparison"));
    assert!(report.contains("of 18 pairs"));
    let summary = fs::read_to_string(dir.join("grid_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 37, "header plus one row per run");
}

#[test]
fn duplicate_seeds_exit_2() {
    let out = cdasim(&["grid", "--scenarios", "MU U NY", "--seeds", "1,1"]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr(&out).contains("more than once"));
}

#[test]
fn config_file_supplies_values_and_flags_win() {
    let base = tempfile::tempdir().unwrap();
    let dir = base.path().join("out");
    let config_path = base.path().join("sim.conf");
    fs::write(
        &config_path,
        format!(
            "scenarios = MU U NY\nseeds = 5\nagents = 10\ndays = 3\nturns = 2\nout = {}\n",
            dir.display()
        ),
    )
    .unwrap();
    // --days 2 overrides the file's days = 3; everything else comes from
    // the file.
    let out = cdasim(&["grid", "--config", config_path.to_str().unwrap(), "--days", "2"]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    let daily = fs::read_to_string(dir.join("summary_MU_U_NY_5.csv")).unwrap();
    assert_eq!(
        daily.lines().count(),
        3,
        "expected header + 2 days (flag wins over file), got: {daily}"
    );
}

#[test]
fn malformed_config_exits_2_with_line_number() {
    let base = tempfile::tempdir().unwrap();
    let config_path = base.path().join("bad.conf");
    fs::write(&config_path, "days = 3\nwat = 9\n").unwrap();
    let out = cdasim(&["grid", "--config", config_path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
    let err = stderr(&out);
    assert!(err.contains("line 2"), "stderr: {err}");
    assert!(err.contains("wat"), "stderr: {err}");
}

#[test]
fn fit_rereads_pending_samples_and_writes_fits() {
    let base = tempfile::tempdir().unwrap();
    let dir = base.path().join("run");
    let out = cdasim(&[
        "run", "MU U NY", "--seed", "3", "--agents", "50", "--days", "5", "--turns", "4",
        "--out", dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));

    let pending = dir.join("pending_MU_U_NY_3.csv");
    let fits_out = base.path().join("refit.csv");
    let out = cdasim(&[
        "fit", pending.to_str().unwrap(), "--agents", "50", "--turns", "4",
        "--out", fits_out.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("day length 200 ticks"));
    assert!(fits_out.is_file());

    // The refit and the run's own fits file describe the same data.
    let refit = fs::read_to_string(&fits_out).unwrap();
    let original = fs::read_to_string(dir.join("fits_MU_U_NY_3.csv")).unwrap();
    assert_eq!(refit, original);
}

#[test]
fn fit_missing_file_exits_2() {
    let out = cdasim(&["fit", "/nonexistent/pending.csv"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn job_count_does_not_change_outputs() {
    let base = tempfile::tempdir().unwrap();
    let dir_1 = base.path().join("j1");
    let dir_4 = base.path().join("j4");
    for (dir, jobs) in [(&dir_1, "1"), (&dir_4, "4")] {
        let out = cdasim(&[
            "grid", "--scenarios", "MU U NY,E S MI", "--seeds", "1,2", "--agents", "10",
            "--days", "2", "--turns", "2", "--jobs", jobs, "--out", dir.to_str().unwrap(),
        ]);
        assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    }
    assert_eq!(
        fs::read(dir_1.join("grid_summary.csv")).unwrap(),
        fs::read(dir_4.join("grid_summary.csv")).unwrap(),
        "parallelism changed the summary"
    );
    for entry in csv_files(&dir_1) {
        let name = entry.file_name().unwrap();
        assert_eq!(
            fs::read(&entry).unwrap(),
            fs::read(dir_4.join(name)).unwrap(),
            "parallelism changed {name:?}"
        );
    }
}
