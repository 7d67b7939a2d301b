use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cuntz_core::catalog::witness_catalog;
use cuntz_core::report::parse_reports;
use cuntz_core::scenario::to_json;

fn cuntz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cuntz")).args(args).output().unwrap()
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.json"))
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn witness_catalog_runs_clean() {
    let out = cuntz(&["witnesses"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("bogolubov_constant_X"));
}

#[test]
fn machine_output_is_stable_and_parses() {
    let a = cuntz(&["witnesses", "--format", "machine"]);
    let b = cuntz(&["witnesses", "--format", "machine"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let reports = parse_reports(std::str::from_utf8(&a.stdout).unwrap()).unwrap();
    assert_eq!(reports.len(), witness_catalog().len());
    assert!(reports.iter().all(|r| r.expected_match == Some(true)));
}

#[test]
fn checked_in_scenarios_match_the_catalog() {
    for s in witness_catalog() {
        let on_disk = fs::read_to_string(scenario(&s.name)).unwrap();
        assert_eq!(on_disk, to_json(&s).unwrap() + "\n", "{}", s.name);
    }
}

#[test]
fn subcommands_accept_their_scenarios() {
    let cases = [
        ("analyze", "alternating_identity_x"),
        ("inner", "inner_hadamard_phase"),
        ("inner", "inner_qutrit_shift"),
        ("localize", "diagonal_phase_sampled"),
        ("diagonal", "diagonal_constant_flip"),
        ("peel", "peel_planted_residual"),
    ];
    for (cmd, name) in cases {
        let path = scenario(name);
        let out = cuntz(&[cmd, path.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{cmd} {name}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn wrong_kind_is_a_validation_error() {
    let path = scenario("diagonal_constant_flip");
    let out = cuntz(&["peel", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
}

#[test]
fn malformed_input_exits_one_with_a_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&cuntz(&["analyze", missing.to_str().unwrap()])), 1);

    let text = fs::read_to_string(scenario("bogolubov_constant_X")).unwrap();
    let bad = text.replacen("\"prefix\": []", "\"prefix\": [[[[2.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]]", 1);
    assert_ne!(bad, text);
    let path = dir.path().join("bad.json");
    fs::write(&path, bad).unwrap();
    let out = cuntz(&["analyze", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("payload.sequence.prefix[0]"));

    let path = dir.path().join("garbage.json");
    fs::write(&path, "{ not json").unwrap();
    assert_eq!(code(&cuntz(&["analyze", path.to_str().unwrap()])), 1);
}

#[test]
fn mismatched_expectation_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(scenario("bogolubov_constant_X")).unwrap();
    let wrong = text.replace("\"verdict\": \"extensible_exact\"", "\"verdict\": \"not_extensible\"");
    let path = dir.path().join("wrong.json");
    fs::write(&path, wrong).unwrap();
    assert_eq!(code(&cuntz(&["analyze", path.to_str().unwrap()])), 2);
}

#[test]
fn out_flag_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("report.json");
    let input = scenario("alternating_identity_x");
    let out = cuntz(&[
        "analyze",
        input.to_str().unwrap(),
        "--format",
        "machine",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let reports = parse_reports(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(reports[0].verdict(), Some("not_extensible"));
}

#[test]
fn dump_round_trips_through_the_loader() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&cuntz(&["witnesses", "--dump", dir.path().to_str().unwrap()])), 0);
    let files: Vec<String> = witness_catalog()
        .iter()
        .map(|s| dir.path().join(format!("{}.json", s.name)).display().to_string())
        .collect();
    let mut args = vec!["analyze"];
    args.extend(files.iter().map(String::as_str));
    // verify and peel scenarios are also accepted by analyze
    let out = cuntz(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}
