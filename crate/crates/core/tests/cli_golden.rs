//! Golden-file tests for the command-line tool. Set `UPDATE_GOLDEN=1` to
//! rewrite the expected outputs after an intentional format change.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use circle_coact::cli::{
    parse_json, CertifyOutput, CheckOutput, ConjugateOutput, DecomposeOutput, FuseOutput, SampleOutput,
    SolveOutput,
};
use circle_coact::derivation::CharacterKind;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Deserialize)]
struct Case {
    name: String,
    args: Vec<String>,
    exit: i32,
}

fn cases() -> Vec<Case> {
    let text = fs::read_to_string(golden_dir().join("cases.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn run_cli<S: AsRef<std::ffi::OsStr>>(args: &[S], reproducible: bool) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_circle-coact"));
    cmd.current_dir(golden_dir().join("inputs")).args(args);
    if reproducible {
        cmd.arg("--reproducible");
    }
    cmd.output().expect("binary runs")
}

/// Parses `text` as `T` and checks that re-serializing reproduces it.
fn reparse<T: DeserializeOwned + Serialize>(text: &str) -> T {
    let value: T = parse_json(text).expect("output re-parses");
    let again = serde_json::to_string_pretty(&value).unwrap() + "\n";
    assert_eq!(again, text, "re-serialization changed the output");
    value
}

#[test]
fn golden_outputs_are_byte_stable() {
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    for case in cases() {
        let first = run_cli(&case.args, true);
        let second = run_cli(&case.args, true);
        assert_eq!(first.status.code(), Some(case.exit), "{}: {}", case.name, String::from_utf8_lossy(&first.stderr));
        assert_eq!(first.stdout, second.stdout, "{} is not deterministic", case.name);
        let path = golden_dir().join("expected").join(format!("{}.json", case.name));
        if update {
            fs::write(&path, &first.stdout).unwrap();
        }
        let expected = fs::read(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
        assert!(expected == first.stdout, "{} differs from {}", case.name, path.display());
    }
}

#[test]
fn every_output_reparses_under_its_schema() {
    let text = |name: &str| fs::read_to_string(golden_dir().join("expected").join(format!("{name}.json"))).unwrap();
    assert!(reparse::<CheckOutput>(&text("check_identity")).report.overall_pass);
    assert!(!reparse::<CheckOutput>(&text("check_not_unital")).report.overall_pass);
    reparse::<ConjugateOutput>(&text("conjugate_rotation"));
    assert!(reparse::<CertifyOutput>(&text("certify_classical")).classical.is_some());
    assert_eq!(reparse::<DecomposeOutput>(&text("decompose_projection")).decomposition.summands.len(), 2);
    reparse::<SampleOutput>(&text("sample_n3"));
    reparse::<CheckOutput>(&text("snake_kac"));
    let run = reparse::<SolveOutput>(&text("solve_n1")).run;
    assert_eq!(run.outcomes.len(), 4);

    let fused = reparse::<FuseOutput>(&text("fuse_rotation_reflection"));
    let chars = fused.characters.expect("product is a character");
    assert_eq!(chars.len(), 1);
    assert_eq!(chars[0].kind, CharacterKind::Reflection);
}

#[test]
fn metadata_is_present_unless_reproducible() {
    let out = run_cli(&["check", "-i", "identity.json"], false);
    let parsed: CheckOutput = parse_json(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    assert!(parsed.meta.is_some());
}

#[test]
fn malformed_inputs_exit_two_with_a_json_path() {
    for (file, needle) in [
        ("truncated.json", "truncated.json"),
        ("wrong_type.json", "B.data[0][1]"),
        ("wrong_n.json", "declared n = 2"),
        ("does_not_exist.json", "cannot read"),
    ] {
        let out = run_cli(&["check", "-i", file], true);
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert_eq!(out.status.code(), Some(2), "{file}");
        assert!(stderr.contains(needle), "{file}: {stderr}");
        assert!(!stderr.contains("panicked"), "{file}: {stderr}");
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["solve", "--n", "2"][..],
        &["sample"],
        &["sample", "--n", "0"],
        &["check", "--tol", "nan"],
        &["solve", "--n", "1", "--restarts", "0"],
        &["bogus"],
    ] {
        let out = run_cli(args, true);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn stdin_and_output_file() {
    use std::io::Write;
    use std::process::Stdio;
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("report.json");
    let mut child = Command::new(env!("CARGO_BIN_EXE_circle-coact"))
        .args(["check", "--reproducible", "-o"])
        .arg(&target)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let input = fs::read(golden_dir().join("inputs/identity.json")).unwrap();
    child.stdin.take().unwrap().write_all(&input).unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert_eq!(fs::read(&target).unwrap(), fs::read(golden_dir().join("expected/check_identity.json")).unwrap());
}
