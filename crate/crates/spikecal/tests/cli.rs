//! CLI integration tests: subcommand composition, report shapes, config
//! precedence and exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use spikecal::montecarlo::derive_seed;
use spikecal::report::{AGGREGATE_HEADER, PREDICTIONS_HEADER, REPLICATES_HEADER};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spikecal"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "command failed: {}\n{}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Benchmark data pair shared by the tests below.
fn benchmark_data(dir: &Path) -> (PathBuf, PathBuf) {
    run_ok(bin().args(["benchmark", "--out"]).arg(dir));
    (
        dir.join("benchmark_lab.csv"),
        dir.join("benchmark_field.csv"),
    )
}

#[test]
fn stepwise_pipeline_equals_single_replicate() {
    let dir = tempfile::tempdir().unwrap();
    let (lab, field) = benchmark_data(&dir.path().join("data"));

    let mc_out = dir.path().join("mc");
    run_ok(
        bin()
            .arg("mc")
            .arg("--lab")
            .arg(&lab)
            .arg("--field")
            .arg(&field)
            .args(["--reps", "1", "--n", "200", "--k", "5", "--seed", "7", "--out"])
            .arg(&mc_out),
    );

    // the single replicate used the first derived seed; feed it to the
    // stepwise chain
    let seed = derive_seed(7, 0).to_string();
    let step = dir.path().join("step");
    run_ok(
        bin()
            .arg("smote")
            .arg("--input")
            .arg(&field)
            .args(["--n", "200", "--k", "5", "--seed", &seed, "--out"])
            .arg(&step),
    );
    run_ok(
        bin()
            .arg("preprocess")
            .arg("--input")
            .arg(&lab)
            .arg("--input")
            .arg(step.join("synthetic.csv"))
            .args(["--tag", "L", "--output", "cal_pp.csv", "--out"])
            .arg(&step),
    );
    run_ok(
        bin()
            .arg("preprocess")
            .arg("--input")
            .arg(&field)
            .args(["--tag", "F", "--output", "field_pp.csv", "--out"])
            .arg(&step),
    );
    run_ok(
        bin()
            .arg("train")
            .arg("--input")
            .arg(step.join("cal_pp.csv"))
            .arg("--out")
            .arg(&step),
    );
    run_ok(
        bin()
            .arg("validate")
            .arg("--model")
            .arg(step.join("model.csv"))
            .arg("--input")
            .arg(step.join("field_pp.csv"))
            .arg("--out")
            .arg(&step),
    );

    // mc's representative predictions, split by row kind
    let rep = read(&mc_out.join("predictions_representative.csv"));
    let mut cal_rows = Vec::new();
    let mut val_rows = Vec::new();
    for line in rep.lines().skip(1) {
        let row = line.rsplit_once(',').unwrap();
        match row.1 {
            "calibration" => cal_rows.push(row.0.to_string()),
            "validation" => val_rows.push(row.0.to_string()),
            other => panic!("unexpected split '{other}'"),
        }
    }

    let loocv: Vec<String> = read(&step.join("loocv_predictions.csv"))
        .lines()
        .skip(1)
        .map(str::to_owned)
        .collect();
    assert_eq!(loocv, cal_rows);

    let preds: Vec<String> = read(&step.join("predictions.csv"))
        .lines()
        .skip(1)
        .map(str::to_owned)
        .collect();
    assert_eq!(preds, val_rows);
}

#[test]
fn report_files_have_documented_shape() {
    let dir = tempfile::tempdir().unwrap();
    let (lab, field) = benchmark_data(&dir.path().join("data"));
    let out = dir.path().join("mc");
    run_ok(
        bin()
            .arg("mc")
            .arg("--lab")
            .arg(&lab)
            .arg("--field")
            .arg(&field)
            .args(["--reps", "1", "--n", "200", "--k", "5", "--seed", "3", "--out"])
            .arg(&out),
    );

    for f in [
        "replicates.csv",
        "aggregate.csv",
        "predictions_representative.csv",
        "scores.csv",
        "effective_config.txt",
    ] {
        assert!(out.join(f).exists(), "{f} missing");
    }

    let replicates = read(&out.join("replicates.csv"));
    assert_eq!(replicates.lines().next().unwrap(), REPLICATES_HEADER);
    assert_eq!(replicates.lines().count(), 2); // header + 1 replicate

    let aggregate = read(&out.join("aggregate.csv"));
    assert_eq!(aggregate.lines().next().unwrap(), AGGREGATE_HEADER);

    // 31 lab + 24 synthetic LOOCV rows plus 12 validation rows
    let predictions = read(&out.join("predictions_representative.csv"));
    assert_eq!(predictions.lines().next().unwrap(), PREDICTIONS_HEADER);
    assert_eq!(predictions.lines().count(), 1 + 31 + 24 + 12);
}

#[test]
fn report_subcommand_reproduces_mc_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (lab, field) = benchmark_data(&dir.path().join("data"));
    let mc_out = dir.path().join("mc");
    run_ok(
        bin()
            .arg("mc")
            .arg("--lab")
            .arg(&lab)
            .arg("--field")
            .arg(&field)
            .args(["--reps", "5", "--seed", "11", "--out"])
            .arg(&mc_out),
    );

    let rep_out = dir.path().join("rep");
    run_ok(
        bin()
            .arg("report")
            .arg("--replicates")
            .arg(mc_out.join("replicates.csv"))
            .arg("--lab")
            .arg(&lab)
            .arg("--field")
            .arg(&field)
            .arg("--out")
            .arg(&rep_out),
    );

    for f in ["aggregate.csv", "predictions_representative.csv"] {
        assert_eq!(read(&mc_out.join(f)), read(&rep_out.join(f)), "{f} differs");
    }
}

#[test]
fn config_precedence_flag_over_file_over_default() {
    let dir = tempfile::tempdir().unwrap();
    let (_, field) = benchmark_data(&dir.path().join("data"));
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "smote.k = 3\n").unwrap();

    let out = dir.path().join("out");
    run_ok(
        bin()
            .arg("smote")
            .arg("--input")
            .arg(&field)
            .arg("--config")
            .arg(&cfg)
            .args(["--k", "5", "--out"])
            .arg(&out),
    );
    let effective = read(&out.join("effective_config.txt"));
    assert!(effective.contains("smote.k = 5"), "{effective}");
    // file value alone applies when no flag is given
    let out2 = dir.path().join("out2");
    run_ok(
        bin()
            .arg("smote")
            .arg("--input")
            .arg(&field)
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(&out2),
    );
    assert!(read(&out2.join("effective_config.txt")).contains("smote.k = 3"));
}

#[test]
fn unknown_config_key_suggests_nearest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "smote.key = 3\n").unwrap();
    let out = bin()
        .args(["benchmark", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("smote.k"), "{err}");
}

#[test]
fn exit_codes() {
    // usage: unknown flag
    let out = bin().args(["mc", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    // usage: invalid SMOTE percentage
    let dir = tempfile::tempdir().unwrap();
    let (_, field) = benchmark_data(&dir.path().join("data"));
    let out = bin()
        .arg("smote")
        .arg("--input")
        .arg(&field)
        .args(["--n", "150", "--out"])
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // data: missing input file
    let out = bin()
        .arg("smote")
        .arg("--input")
        .arg(dir.path().join("nope.csv"))
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // numeric: constant target has no PLS solution
    let flat = dir.path().join("flat.csv");
    let mut csv = String::from("id,target,500,510,520,530\n");
    for i in 0..6 {
        csv.push_str(&format!("s{i},1.0,0.{i}1,0.{i}2,0.{i}3,0.{i}4\n"));
    }
    std::fs::write(&flat, csv).unwrap();
    let out = bin()
        .arg("train")
        .arg("--input")
        .arg(&flat)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    // help is not an error
    let out = bin().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}
