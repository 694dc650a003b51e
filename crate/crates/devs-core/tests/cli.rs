//! End-to-end tests of the `devs` binary: exit codes, stdout/stderr split,
//! and file handling. (Byte-level determinism of `devs run` is asserted in
//! the acceptance suite.)

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn devs(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_devs"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).unwrap()
}

const QUEUEING: &str = "model = queueing\nn_processors = 2\ngen_rate = 1.0\n\
    size_dist = uniform(0.5, 1.5)\nspeeds = 400\nmin_times = 0.0015\n\
    n_jobs = 25\nseed = 7\nout_csv = waits.csv\n";

const POLICE: &str = "model = trafficlight\ndelay_green = 30\ndelay_yellow = 3\n\
    delay_red = 27\npolice_work = 100\npolice_rest = 50\nt_end = 400\n\
    out_csv = events.csv\n";

#[test]
fn run_writes_csv_and_prints_summary() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "q.conf", QUEUEING);
    let output = devs(&["run", config.to_str().unwrap()], dir.path());
    assert!(output.status.success(), "{output:?}");
    assert!(
        stderr(&output).is_empty(),
        "quiet run must not touch stderr"
    );
    let summary = stdout(&output);
    assert!(
        summary.contains("count   25"),
        "summary counts the jobs: {summary}"
    );
    assert!(
        summary.contains("mean"),
        "summary reports the mean wait: {summary}"
    );
    let csv = std::fs::read_to_string(dir.path().join("waits.csv")).unwrap();
    assert!(csv.starts_with("job_id,creation_time,queue_exit_time,wait\n"));
    assert_eq!(csv.lines().count(), 26, "header plus one line per job");
}

#[test]
fn trace_events_mirror_to_stderr_without_disturbing_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let quiet = write_config(dir.path(), "quiet.conf", POLICE);
    let loud = write_config(
        dir.path(),
        "loud.conf",
        &format!("{POLICE}trace = events\n"),
    );
    let silent_run = devs(&["run", quiet.to_str().unwrap()], dir.path());
    let traced_run = devs(&["run", loud.to_str().unwrap()], dir.path());
    assert!(silent_run.status.success() && traced_run.status.success());
    assert_eq!(
        stdout(&silent_run),
        stdout(&traced_run),
        "tracing must not perturb the summary"
    );
    assert!(stderr(&silent_run).is_empty());
    let trace = stderr(&traced_run);
    assert!(!trace.is_empty(), "trace = events must stream entries");
    for line in trace.lines() {
        assert_eq!(line.split('\t').count(), 6, "tab-separated entry: {line}");
    }
    assert!(
        trace.contains("show_black"),
        "interrupt outputs appear in the trace"
    );
}

#[test]
fn bad_config_exits_one_listing_every_problem() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "bad.conf", "model = queueing\n");
    let output = devs(&["run", config.to_str().unwrap()], dir.path());
    assert_eq!(output.status.code(), Some(1), "config errors exit 1");
    let message = stderr(&output);
    // Every missing key is reported, not just the first.
    for key in ["n_processors", "speeds", "min_times", "n_jobs", "out_csv"] {
        assert!(
            message.contains(key),
            "missing '{key}' not reported: {message}"
        );
    }
    assert!(stdout(&output).is_empty());
}

#[test]
fn missing_config_file_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let output = devs(&["run", "no-such-file.conf"], dir.path());
    assert_eq!(output.status.code(), Some(1));
    assert!(
        stderr(&output).contains("no-such-file.conf"),
        "names the path"
    );
}

#[test]
fn empty_run_exits_two_as_a_runtime_failure() {
    // A short horizon with a near-zero arrival rate collects no jobs. The
    // configuration parses and the model builds, so the failure is only
    // discoverable by simulating — exit 2, unlike the exit-1 config errors.
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "empty.conf",
        &QUEUEING
            .replace("gen_rate = 1.0", "gen_rate = 0.000001")
            .replace("n_jobs = 25", "n_jobs = 25\nt_end = 0.1"),
    );
    let output = devs(&["run", config.to_str().unwrap()], dir.path());
    assert_eq!(output.status.code(), Some(2), "{output:?}");
    assert!(stderr(&output).contains("no observations"));
}

#[test]
fn a_departed_stdout_reader_does_not_break_the_run() {
    // `devs run … | head -1` closes stdout early; the CSV must still be
    // written and the exit code preserved. Closing the read end before the
    // child even starts makes every stdout write fail with a broken pipe.
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "q.conf", QUEUEING);
    let (read_end, write_end) = std::io::pipe().unwrap();
    drop(read_end);
    let output = Command::new(env!("CARGO_BIN_EXE_devs"))
        .args(["run", config.to_str().unwrap()])
        .current_dir(dir.path())
        .stdout(write_end)
        .output()
        .expect("binary runs");
    assert!(output.status.success(), "{output:?}");
    assert!(stderr(&output).is_empty(), "no panic message: {output:?}");
    let csv = std::fs::read_to_string(dir.path().join("waits.csv")).unwrap();
    assert_eq!(csv.lines().count(), 26, "the CSV is still written in full");
}

#[test]
fn validate_reports_ok_for_bundled_models() {
    let dir = tempfile::tempdir().unwrap();
    for (name, body) in [("q.conf", QUEUEING), ("p.conf", POLICE)] {
        let config = write_config(dir.path(), name, body);
        let output = devs(&["validate", config.to_str().unwrap()], dir.path());
        assert!(output.status.success(), "{output:?}");
        assert!(stdout(&output).contains("ok"), "{}", stdout(&output));
    }
}

#[test]
fn flatten_check_confirms_equivalence_and_rejects_atomic_models() {
    let dir = tempfile::tempdir().unwrap();
    let coupled = write_config(dir.path(), "p.conf", POLICE);
    let output = devs(&["flatten-check", coupled.to_str().unwrap()], dir.path());
    assert!(output.status.success(), "{output:?}");
    assert!(stdout(&output).contains("identical"), "{}", stdout(&output));

    // A lone traffic light has no coupling to close over.
    let lone = write_config(
        dir.path(),
        "lone.conf",
        "model = trafficlight\ndelay_green = 30\ndelay_yellow = 3\ndelay_red = 27\n\
         t_end = 120\nout_csv = events.csv\n",
    );
    let output = devs(&["flatten-check", lone.to_str().unwrap()], dir.path());
    assert_eq!(
        output.status.code(),
        Some(1),
        "already-atomic is a usage error"
    );
}
