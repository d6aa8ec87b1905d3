use std::fs;
use std::process::{Command, Output};

use phifem_cli::CSV_HEADER;

fn phifem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phifem")).args(args).output().expect("binary runs")
}

fn data_rows(out: &Output) -> Vec<Vec<String>> {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    lines.map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn planted_run_succeeds_with_tiny_errors() {
    let out = phifem(&["run", "--case", "planted", "--k", "1", "--l", "2", "--n", "4", "--levels", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = data_rows(&out);
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert_eq!(r[11], "ok");
        assert!(r[6].parse::<f64>().unwrap() < 1e-9);
    }
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"case": "planted", "k": 3, "l": 2, "n_start": 4, "levels": 1}"#).unwrap();
    let out = phifem(&["run", "--config", cfg.to_str().unwrap(), "--k", "1"]);
    assert!(out.status.success());
    let rows = data_rows(&out);
    assert_eq!((rows[0][3].as_str(), rows[0][4].as_str()), ("1", "2"));
}

#[test]
fn out_flag_writes_the_same_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.csv");
    let args = ["conditioning", "--case", "circle", "--n", "4", "--levels", "2"];
    let stdout = phifem(&args).stdout;
    let mut with_out = args.to_vec();
    with_out.extend(["--out", path.to_str().unwrap()]);
    let out = phifem(&with_out);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert_eq!(fs::read(&path).unwrap(), stdout);
}

#[test]
fn sigma_sweep_emits_a_block_per_sigma() {
    let out = phifem(&["sigma-sweep", "--case", "circle", "--n", "6", "--levels", "1", "--sigmas", "0.5,5"]);
    assert!(out.status.success());
    let sigmas: Vec<String> = data_rows(&out).into_iter().map(|r| r[5].clone()).collect();
    assert_eq!(sigmas, ["0.5", "5"]);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"case": "circle", "refinements": 3}"#).unwrap();
    assert_eq!(phifem(&["run", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(phifem(&["run", "--k", "7"]).status.code(), Some(2));
    assert_eq!(phifem(&["run", "--case", "triangle"]).status.code(), Some(2));
    assert_eq!(phifem(&["run", "--config", "/nonexistent/run.json"]).status.code(), Some(2));
}

#[test]
fn solver_failures_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.json");
    fs::write(&cfg, r#"{"case": "circle", "n_start": 4, "levels": 1, "box": {"x_min": 5, "y_min": 5, "x_max": 6, "y_max": 6}}"#).unwrap();
    let out = phifem(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(data_rows(&out)[0][11], "EmptyActiveSet");
}
