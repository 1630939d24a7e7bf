//! End-to-end tests of the `geofield` binary: file formats, determinism,
//! error surfaces, exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_geofield"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn simulate(dir: &Path, seed: u64) -> PathBuf {
    let out = dir.join(format!("obs_{seed}.csv"));
    let st = run(&[
        "simulate",
        "--output",
        &path_str(&out),
        "--grid",
        "0,10,0,10,7,7",
        "--seed",
        &seed.to_string(),
        "--nugget",
        "0.5",
        "--partial-sill",
        "4",
        "--range",
        "2",
    ]);
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    out
}

#[test]
fn simulate_output_reingests_into_compare() {
    let dir = tempfile::tempdir().unwrap();
    let obs = simulate(dir.path(), 3);
    let report = dir.path().join("report.txt");
    let st = run(&[
        "compare",
        "--input",
        &path_str(&obs),
        "--output",
        &path_str(&report),
    ]);
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.starts_with("schema: geofield-report/1"));
    assert!(text.contains("[msp]"));
    assert!(text.contains("winner: "));
}

#[test]
fn repeated_compare_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let obs = simulate(dir.path(), 7);
    let r1 = dir.path().join("r1.txt");
    let r2 = dir.path().join("r2.txt");
    for out in [&r1, &r2] {
        let st = run(&[
            "compare",
            "--input",
            &path_str(&obs),
            "--output",
            &path_str(out),
            "--trend",
            "median-polish",
        ]);
        assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    }
    let b1 = std::fs::read(&r1).unwrap();
    let b2 = std::fs::read(&r2).unwrap();
    assert_eq!(b1, b2);
}

#[test]
fn repeated_simulate_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = simulate(dir.path(), 5);
    let renamed = dir.path().join("first.csv");
    std::fs::rename(&a, &renamed).unwrap();
    let b = simulate(dir.path(), 5);
    assert_eq!(
        std::fs::read(&renamed).unwrap(),
        std::fs::read(&b).unwrap()
    );
}

#[test]
fn krige_shape_contract_on_three_points() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("three.csv");
    std::fs::write(&input, "x,y,value\n0,0,1\n1,0,2\n0,1,3\n").unwrap();
    let out = dir.path().join("grid.csv");
    let st = run(&[
        "krige",
        "--input",
        &path_str(&input),
        "--output",
        &path_str(&out),
        "--drift",
        "0",
        "--nugget",
        "0.1",
        "--partial-sill",
        "1.0",
        "--range",
        "1.0",
        "--grid",
        "0,1,0,1,2,2",
    ]);
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .collect();
    assert_eq!(lines[0], "x,y,prediction,variance");
    assert_eq!(lines.len(), 5, "header + 4 grid rows");
    for row in &lines[1..] {
        assert_eq!(row.split(',').count(), 4);
        for field in row.split(',') {
            field.parse::<f64>().expect("numeric field");
        }
    }
}

#[test]
fn spline_grid_has_three_columns() {
    let dir = tempfile::tempdir().unwrap();
    let obs = simulate(dir.path(), 9);
    let out = dir.path().join("spline.csv");
    let st = run(&[
        "spline",
        "--input",
        &path_str(&obs),
        "--output",
        &path_str(&out),
        "--alpha",
        "0.5",
        "--grid",
        "0,10,0,10,3,2",
    ]);
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .collect();
    assert_eq!(lines[0], "x,y,prediction");
    assert_eq!(lines.len(), 7, "header + 6 grid rows");
}

#[test]
fn grid_csv_round_trips_doubles_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let obs = simulate(dir.path(), 13);
    // Re-ingest the simulated file and confirm every value parses back to
    // the identical double by writing it again.
    let copy = dir.path().join("copy.csv");
    let st = run(&[
        "simulate",
        "--output",
        &path_str(&copy),
        "--grid",
        "0,10,0,10,7,7",
        "--seed",
        "13",
        "--nugget",
        "0.5",
        "--partial-sill",
        "4",
        "--range",
        "2",
    ]);
    assert!(st.status.success());
    let a = std::fs::read_to_string(&obs).unwrap();
    let b = std::fs::read_to_string(&copy).unwrap();
    assert_eq!(a, b);
    for line in a.lines().skip_while(|l| l.starts_with('#')).skip(1) {
        for field in line.split(',') {
            let v: f64 = field.parse().unwrap();
            assert_eq!(format!("{v:.16e}"), field);
        }
    }
}

#[test]
fn parse_error_names_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.csv");
    std::fs::write(
        &input,
        "x,y,value\n0,0,1\n1,0,2\n0,1,3\n1,1,4\n2,0,5\nnope,2,6\n",
    )
    .unwrap();
    let out = dir.path().join("out.txt");
    let st = run(&[
        "variogram",
        "--input",
        &path_str(&input),
        "--output",
        &path_str(&out),
    ]);
    assert!(!st.status.success());
    let stderr = String::from_utf8_lossy(&st.stderr);
    assert_eq!(stderr.lines().count(), 1, "single-line error: {stderr}");
    assert!(stderr.contains(":7:"), "line number in {stderr}");
    assert!(stderr.contains("nope"), "offending token in {stderr}");
}

#[test]
fn missing_input_fails_with_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let st = run(&[
        "variogram",
        "--input",
        &path_str(&dir.path().join("absent.csv")),
        "--output",
        &path_str(&dir.path().join("out.txt")),
    ]);
    assert!(!st.status.success());
    assert_eq!(st.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&st.stderr);
    assert!(stderr.starts_with("error: io:"), "{stderr}");
}

#[test]
fn stage_labels_surface_in_pipeline_errors() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("flat.csv");
    // Constant values: variogram fitting must fail, naming its stage.
    let mut text = String::from("x,y,value\n");
    for i in 0..4 {
        for j in 0..4 {
            text.push_str(&format!("{i},{j},5\n"));
        }
    }
    std::fs::write(&input, text).unwrap();
    let st = run(&[
        "compare",
        "--input",
        &path_str(&input),
        "--output",
        &path_str(&dir.path().join("out.txt")),
    ]);
    assert!(!st.status.success());
    let stderr = String::from_utf8_lossy(&st.stderr);
    assert!(stderr.contains("variogram:"), "{stderr}");
}

#[test]
fn bad_flags_exit_with_usage_error() {
    let st = run(&["krige", "--drift", "2"]);
    assert_eq!(st.status.code(), Some(2));
    let st = run(&["compare", "--alpha", "-1"]);
    assert_eq!(st.status.code(), Some(2));
    let st = run(&["krige", "--grid", "0,1,0,1,2"]);
    assert_eq!(st.status.code(), Some(2));
}

#[test]
fn variogram_report_contains_parametrization() {
    let dir = tempfile::tempdir().unwrap();
    let obs = simulate(dir.path(), 21);
    let out = dir.path().join("vario.txt");
    let st = run(&[
        "variogram",
        "--input",
        &path_str(&obs),
        "--output",
        &path_str(&out),
        "--bins",
        "10",
        "--max-lag",
        "6",
    ]);
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("parametrization: gamma(h) = nugget + partial_sill*(1 - exp(-(h/range)^2))"));
    assert!(text.contains("records: lag,gamma,count"));
    assert!(text.contains("max_lag: 6.0000000000000000e0"));
}
