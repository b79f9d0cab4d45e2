//! End-to-end tests of the `fracbasis` binary: fitting, solving, artifact
//! formats, determinism, and exit codes.

use std::path::Path;
use std::process::{Command, Output};

use fracbasis::rational::RationalApproximant;
use fracbasis::report::{RunSummary, CSV_HEADER};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fracbasis"))
}

fn fixture_path() -> &'static str {
    concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../fixtures/oga_s0.5_n20.json"
    )
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary launches")
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "expected exit {code}; stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn oga_coarse_fit_writes_loadable_approximant() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out_path = dir.path().join("fit.json");

    let out = run(&[
        "oga",
        "--s",
        "0.5",
        "--terms",
        "8",
        "--epsilon",
        "1e-4",
        "--hd",
        "5e-3",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);

    let fit = RationalApproximant::load(&out_path).expect("emitted JSON loads");
    assert_eq!(fit.n_terms(), 8);
    assert_eq!(fit.s, 0.5);
    fit.validate().expect("emitted approximant is well-formed");
}

#[test]
fn solve_cube_writes_per_shift_error_table() {
    let dir = tempfile::tempdir().expect("tempdir");
    let csv_path = dir.path().join("report.csv");

    let out = run(&[
        "solve",
        "cube",
        "--level",
        "1",
        "--rational",
        fixture_path(),
        "--m",
        "6",
        "--reference",
        "--report",
        csv_path.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);

    let text = std::fs::read_to_string(&csv_path).expect("report written");
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 21, "header plus one row per pole");

    let fixture = RationalApproximant::load(Path::new(fixture_path())).expect("fixture loads");
    for (k, line) in lines[1..].iter().enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 5, "row {k} has 5 columns");
        let i: usize = fields[0].parse().expect("index parses");
        let t: f64 = fields[1].parse().expect("shift parses");
        let c: f64 = fields[2].parse().expect("residue parses");
        let abs: f64 = fields[3].parse().expect("abs error parses");
        let rel: f64 = fields[4].parse().expect("rel error parses");
        assert_eq!(i, k + 1, "rows are numbered from 1");
        // Floats are printed with 17 significant digits, so they round-trip.
        assert_eq!(t, fixture.terms[k].shift);
        assert_eq!(c, fixture.terms[k].residue);
        assert!(abs.is_finite() && abs >= 0.0);
        assert!(rel.is_finite() && rel >= 0.0);
    }
}

#[test]
fn report_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().expect("tempdir");
    let first = dir.path().join("a.csv");
    let second = dir.path().join("b.csv");

    for path in [&first, &second] {
        let out = bin()
            .env("FRACBASIS_THREADS", "1")
            .args([
                "solve",
                "graph",
                "--n",
                "64",
                "--seed",
                "3",
                "--m",
                "6",
                "--reference",
                "--report",
                path.to_str().unwrap(),
            ])
            .output()
            .expect("binary launches");
        assert_exit(&out, 0);
    }

    let a = std::fs::read(&first).expect("first report");
    let b = std::fs::read(&second).expect("second report");
    assert_eq!(a, b, "identical runs must produce identical reports");
}

#[test]
fn graph_summary_json_round_trips() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("summary.json");

    let out = run(&[
        "solve",
        "graph",
        "--n",
        "64",
        "--seed",
        "3",
        "--m",
        "6",
        "--reference",
        "--summary",
        path.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);

    let text = std::fs::read_to_string(&path).expect("summary written");
    let summary: RunSummary = serde_json::from_str(&text).expect("summary parses");
    assert_eq!(summary.family, "graph");
    assert_eq!(summary.n, 64);
    assert_eq!(summary.m, 6);
    assert_eq!(summary.seed, Some(3));
    assert!(!summary.two_preconditioners);
    let total_rel = summary.total_rel.expect("reference errors recorded");
    assert!(total_rel.is_finite() && total_rel < 1.0);

    // The split strategy is reported as such.
    let out = run(&[
        "solve",
        "graph",
        "--n",
        "64",
        "--seed",
        "3",
        "--m",
        "6",
        "--two-preconds",
        "--summary",
        path.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);
    let text = std::fs::read_to_string(&path).expect("summary written");
    let summary: RunSummary = serde_json::from_str(&text).expect("summary parses");
    assert!(summary.two_preconditioners);
}

#[test]
fn fitted_approximant_round_trips_through_solve() {
    let dir = tempfile::tempdir().expect("tempdir");
    let fit_path = dir.path().join("fit.json");

    let out = run(&[
        "oga",
        "--terms",
        "6",
        "--epsilon",
        "1e-4",
        "--hd",
        "5e-3",
        "--out",
        fit_path.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);

    let out = run(&[
        "solve",
        "graph",
        "--n",
        "64",
        "--rational",
        fit_path.to_str().unwrap(),
        "--m",
        "6",
    ]);
    assert_exit(&out, 0);
}

#[test]
fn invalid_arguments_exit_one() {
    // Unsupported mesh level.
    let out = run(&["solve", "cube", "--level", "99", "--m", "4"]);
    assert_exit(&out, 1);

    // Loading and inline fitting are mutually exclusive.
    let out = run(&[
        "solve",
        "cube",
        "--level",
        "1",
        "--rational",
        fixture_path(),
        "--s",
        "0.5",
    ]);
    assert_exit(&out, 1);

    // Malformed thread cap.
    let out = bin()
        .env("FRACBASIS_THREADS", "many")
        .args(["solve", "cube", "--level", "1", "--m", "4"])
        .output()
        .expect("binary launches");
    assert_exit(&out, 1);
}

#[test]
fn missing_rational_file_exits_three() {
    let out = run(&[
        "solve",
        "cube",
        "--level",
        "1",
        "--rational",
        "/nonexistent/approximant.json",
    ]);
    assert_exit(&out, 3);
}

#[test]
fn indefinite_custom_operator_exits_two() {
    let dir = tempfile::tempdir().expect("tempdir");
    let mtx = dir.path().join("op.mtx");
    let rhs = dir.path().join("rhs.txt");
    std::fs::write(
        &mtx,
        "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1.0\n2 2 -1.0\n",
    )
    .expect("matrix written");
    std::fs::write(&rhs, "1.0\n1.0\n").expect("rhs written");

    let out = run(&[
        "solve",
        "custom",
        "--matrix",
        mtx.to_str().unwrap(),
        "--rhs",
        rhs.to_str().unwrap(),
        "--lambda",
        "2.0",
        "--precond",
        "jacobi",
        "--m",
        "2",
    ]);
    assert_exit(&out, 2);
}
