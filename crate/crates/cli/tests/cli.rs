use std::io::Write as _;
use std::process::Command;

use rstar_cli::{ingest_csv, load_dataset, run, Document, LimitsTable, SCHEMA_VERSION};
use rstar_core::simulate::CoverageReport;

fn rstar(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_rstar")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn csv_file(content: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(content.as_bytes()).unwrap();
    f
}

#[test]
fn builtin_dataset() {
    let d = load_dataset("leukemia21").unwrap();
    let expected = [1., 1., 2., 2., 3., 4., 4., 5., 5., 6., 8., 8., 9., 10., 10., 12., 14., 16., 20., 24., 34.];
    assert_eq!(d.observations(), &expected);
}

#[test]
fn csv_with_header() {
    let f = csv_file("y\n1.5\n2\n3.25\n");
    let d = ingest_csv(f.path()).unwrap();
    assert_eq!(d.observations(), &[1.5, 2.0, 3.25]);
}

#[test]
fn csv_parse_error_names_the_row() {
    let f = csv_file("y\n1.5\nabc\n3\n");
    let e = ingest_csv(f.path()).unwrap_err().to_string();
    assert!(e.contains("row 3") && e.contains("abc"), "{e}");
    assert_eq!(rstar_cli::CliError::Data(e).exit_code(), 1);
}

#[test]
fn empty_csv_is_a_data_error() {
    let f = csv_file("");
    assert!(matches!(ingest_csv(f.path()), Err(rstar_cli::CliError::Data(_))));
    let f = csv_file("y\n");
    assert!(matches!(ingest_csv(f.path()), Err(rstar_cli::CliError::Data(_))));
}

#[test]
fn usage_errors_exit_with_one() {
    let (code, _, err) = rstar(&["limits", "--data", "leukemia21", "--bogus"]);
    assert_eq!(code, 1);
    assert!(err.contains("Usage"), "{err}");
    assert_eq!(rstar(&["fit", "--model", "weibull", "--data", "leukemia21"]).0, 1);
    assert_eq!(rstar(&["limits", "--data", "leukemia21", "--levels", "1.5"]).0, 1);
    assert_eq!(rstar(&["limits", "--data", "leukemia21", "--kinds", "Rstar"]).0, 1);
    assert_eq!(rstar(&["fit", "--data", "/nonexistent/file.csv"]).0, 1);
    assert_eq!(rstar(&["--help"]).0, 0);
}

#[test]
fn numerical_failure_exits_with_two() {
    // a sample whose likelihood keeps rising as psi -> 0
    let f = csv_file("y\n9.83\n9.21\n8.35\n3.16\n3.17\n14.07\n3.84\n1.32\n7.70\n11.82\n9.68\n3.55\n9.77\n9.42\n3.80\n9.88\n6.03\n1.59\n4.15\n10.34\n6.34\n");
    let (code, _, err) = rstar(&["fit", "--data", f.path().to_str().unwrap()]);
    assert_eq!(code, 2, "{err}");
    assert!(err.starts_with("error: ") && err.lines().count() == 1, "{err}");
}

#[test]
fn statistic_at_the_mle_is_zero() {
    let (code, out, _) = rstar(&["statistic", "--data", "leukemia21", "--psi", "0.0872657631331114"]);
    assert_eq!(code, 0);
    let row = out.lines().nth(1).unwrap();
    assert_eq!(row.split_whitespace().nth(1), Some("0.0000"), "{out}");
}

#[test]
fn limits_json_document() {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(
        ["rstar", "limits", "--data", "leukemia21", "--kinds", "R", "--levels", "0.01,0.99", "--format", "json"],
        &mut out,
        &mut err,
    );
    assert_eq!(code, 0);
    let doc: Document<LimitsTable> = serde_json::from_slice(&out).unwrap();
    assert_eq!(doc.schema_version, SCHEMA_VERSION);
    assert_eq!(doc.command, "limits");
    assert_eq!(doc.result.limits.len(), 2);
    assert!((doc.result.limits[0].psi_limit - 0.0206).abs() < 5e-4);
}

#[test]
fn limits_table_uses_four_decimals() {
    let (code, out, _) = rstar(&["limits", "--data", "leukemia21"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2 + 8);
    assert_eq!(lines[2].split_whitespace().collect::<Vec<_>>(), ["0.010", "0.0206", "0.0260", "0.0263"]);
}

#[test]
fn coverage_json_round_trips() {
    let args = [
        "coverage", "--theta", "0.1,0.01", "--n", "21", "--reps", "40", "--seed", "3", "--format", "json",
    ];
    let (code, out, _) = rstar(&args);
    assert_eq!(code, 0);
    let doc: Document<CoverageReport> = serde_json::from_str(&out).unwrap();
    let again = serde_json::to_string_pretty(&doc).unwrap() + "\n";
    assert_eq!(again, out);
    assert_eq!(doc.result.spec.replicates, 40);
}

#[test]
fn coverage_output_ignores_worker_count() {
    let base = ["coverage", "--theta", "0.1,0.01", "--reps", "60", "--seed", "11", "--format", "json"];
    let one = rstar(&[&base[..], &["--workers", "1"]].concat());
    let three = rstar(&[&base[..], &["--workers", "3"]].concat());
    assert_eq!(one.0, 0);
    assert_eq!(one.1, three.1);
}

#[test]
fn fit_and_diagnose_commands() {
    let (code, out, _) = rstar(&["fit", "--data", "leukemia21"]);
    assert_eq!(code, 0);
    assert!(out.contains("-67.875226"), "{out}");
    let (code, out, _) = rstar(&[
        "diagnose", "--theta", "0.1,0.01", "--n", "30", "--reps", "50", "--rate-n", "30,60", "--rate-reps", "20",
        "--format", "json",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["result"]["rate"]["entries"].as_array().unwrap().len(), 2);
    assert_eq!(rstar(&["diagnose", "--theta", "0.1,0.01", "--rate-n", "50"]).0, 1);
}
