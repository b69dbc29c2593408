use std::io::Write;
use std::process::{Command, Output};

fn run(job: &str, args: &[&str]) -> Output {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(job.as_bytes()).unwrap();
    Command::new(env!("CARGO_BIN_EXE_dagger")).arg("--job").arg(f.path()).args(args).output().unwrap()
}

const TRUNC: &str = "  truncation {\n    d = 16\n    n = 3\n    n_jet = 3\n    k_max = 2\n  }\n";

fn job(name: &str, body: &str) -> String {
    format!("job {name} {{\n{body}{TRUNC}}}\n")
}

#[test]
fn torus_report_has_dims_and_basis() {
    let out = run(&job("t", "  command = cohomology\n  presentation {\n    kind = torus\n  }\n"), &[]);
    assert_eq!(out.status.code(), Some(0));
    let s = String::from_utf8(out.stdout).unwrap();
    assert!(s.contains("dims                   1 1"), "{s}");
    assert!(s.contains("dx/x"));
    assert!(s.contains("status: pass"));
}

#[test]
fn homotopy_example_passes() {
    let body = "  command = homotopy\n  presentation {\n    kind = affine\n  }\n  degree = 8\n";
    let out = run(&job("h", body), &["--seed", "0", "--format", "machine"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("summary = \"3/3 identities pass\""));
}

#[test]
fn malformed_truncation_is_a_located_parse_error() {
    let src = "job bad {\n  command = cohomology\n  presentation {\n    kind = affine\n  }\n  truncation {\n    d = sixteen\n    n = 3\n    n_jet = 3\n    k_max = 2\n  }\n}\n";
    let out = run(src, &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 7, column 9"), "{err}");

    let missing = "job bad {\n  command = cohomology\n  presentation {\n    kind = affine\n  }\n  truncation {\n    d = 16\n  }\n}\n";
    let out = run(missing, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("line 6, column 3"));
}

#[test]
fn unknown_command_and_presentation_are_input_errors() {
    let out = run(&job("u", "  command = frobenius\n  presentation {\n    kind = affine\n  }\n"), &["--quiet"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    let out = run(&job("u", "  command = cohomology\n  presentation {\n    kind = projective\n  }\n"), &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn not_stabilized_exits_three() {
    let body = "  command = cohomology\n  presentation {\n    kind = torus\n  }\n  connection {\n    kind = kummer\n    exponent = 2\n  }\n";
    let out = run(&job("k", body), &["--truncation-sweep", "2,20"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8(out.stdout).unwrap().contains("status: not-stabilized"));
}

#[test]
fn failed_check_exits_one() {
    // ∂_y N_x - ∂_x N_y = 1 on the plane: not integrable
    let body = "  command = jets\n  presentation {\n    kind = affine\n    dim = 2\n  }\n  connection {\n    matrix 0 {\n      entry = 0 0 : 1 [0,1]\n    }\n  }\n";
    let out = run(&job("c", body), &[]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8(out.stdout).unwrap().contains("[FAIL] cocycle"));
}

#[test]
fn precision_comes_from_the_environment() {
    let body = "  command = cohomology\n  presentation {\n    kind = torus\n    coefficients = padic 5\n  }\n";
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(job("p", body).as_bytes()).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_dagger"))
        .arg("--job")
        .arg(f.path())
        .env("DAGGER_PRECISION", "7")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("padic 5 7"));
    let out = Command::new(env!("CARGO_BIN_EXE_dagger"))
        .arg("--job")
        .arg(f.path())
        .env("DAGGER_PRECISION", "x")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn batch_runs_every_job_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.txt");
    let a = job(
        "a",
        &format!("  command = cohomology\n  output = {}\n  presentation {{\n    kind = affine\n  }}\n", path.display()),
    );
    let b = job("b", "  command = cohomology\n  presentation {\n    kind = torus\n  }\n");
    let out = run(&format!("{a}\n{b}"), &[]);
    assert_eq!(out.status.code(), Some(0));
    let s = String::from_utf8(out.stdout).unwrap();
    assert!(s.find("== a").unwrap() < s.find("== b").unwrap());
    assert!(std::fs::read_to_string(path).unwrap().contains("dims                   1 0"));
}
