//! End-to-end checks of the ccsim binary: subcommands, exit codes, output
//! files.

use std::path::Path;
use std::process::{Command, Output};

fn ccsim(args: &[&str], out_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ccsim"));
    cmd.args(args);
    if let Some(dir) = out_dir {
        cmd.env("CCSIM_OUT_DIR", dir);
    }
    cmd.output().expect("failed to spawn ccsim")
}

const CONFIG: &str = "files = 10\nusers = 10\nrates = 1,2,3,4,5,6,7,8,9,10\n\
                      cache = identical\nsweep = 0:10:100\nschemes = pca,oca,envelope,uncoded,cutset\n";

#[test]
fn run_writes_curves_into_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("scenario.cfg");
    std::fs::write(&config, CONFIG).unwrap();

    let out = ccsim(&["run", config.to_str().unwrap()], Some(dir.path()));
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let csv = std::fs::read_to_string(dir.path().join("curves.csv")).unwrap();
    assert!(csv.starts_with("scheme,M,rate\n"));
    assert_eq!(csv.lines().count(), 1 + 5 * 11);
    let json = std::fs::read_to_string(dir.path().join("curves.json")).unwrap();
    assert!(json.contains("\"scheme\": \"envelope\""));

    // repeat run is byte-identical
    let out2 = ccsim(&["run", config.to_str().unwrap()], Some(dir.path()));
    assert!(out2.status.success());
    assert_eq!(csv, std::fs::read_to_string(dir.path().join("curves.csv")).unwrap());
}

#[test]
fn run_rejects_bad_config_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.cfg");
    std::fs::write(&config, "files = 2\nusers = 2\nrates = 2,1\nsweep = 0\nschemes = pca\n").unwrap();
    let out = ccsim(&["run", config.to_str().unwrap()], Some(dir.path()));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid input"));
}

#[test]
fn missing_config_file_is_exit_1() {
    let out = ccsim(&["run", "/nonexistent/path.cfg"], None);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn pair_reports_case_and_rate() {
    let out = ccsim(
        &["pair", "--m1", "1", "--m2", "1", "--r1", "1", "--r2", "2"],
        None,
    );
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("case ii"), "{text}");
    assert!(text.contains("optimal delivery rate 1.50000000"), "{text}");
    assert!(text.contains("both users decode"), "{text}");
}

#[test]
fn pair_rejects_inverted_rates() {
    let out = ccsim(&["pair", "--m1", "0", "--m2", "0", "--r1", "2", "--r2", "1"], None);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bound_prints_sweep_table() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("scenario.cfg");
    std::fs::write(&config, CONFIG).unwrap();
    let out = ccsim(&["bound", config.to_str().unwrap()], None);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("M,bound,cut_size,users"));
    let first = lines.next().unwrap();
    assert!(first.starts_with("0,55.0000000,10,"), "{first}");
}

#[test]
fn selftest_passes() {
    let out = ccsim(&["selftest"], None);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("all checks passed"));
}

#[test]
fn unknown_flags_are_exit_1() {
    let out = ccsim(&["pair", "--bogus", "1"], None);
    assert_eq!(out.status.code(), Some(1));
}
