use std::path::Path;
use std::process::{Command, Output};

use simcal::harness::{experiment::read_sweep, io};

fn simcal(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simcal"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn ok(args: &[&str], dir: &Path) {
    let out = simcal(args, dir);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn error_line(out: &Output) -> String {
    let text = String::from_utf8_lossy(&out.stderr).to_string();
    assert_eq!(text.lines().count(), 1, "{text}");
    text.trim_end().to_string()
}

#[test]
fn full_pipeline_runs_and_files_parse() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(&["synth", "--out", "train.csv", "--classes", "4", "--n-per-class", "30", "--seed", "1"], d);
    ok(&["synth", "--out", "test.csv", "--classes", "4", "--n-per-class", "30", "--seed", "2"], d);
    ok(&["synth", "--out", "shifted.csv", "--classes", "4", "--n-per-class", "30", "--shift", "-2.5"], d);
    ok(&["distances", "--in", "train.csv", "--out", "dist.csv", "--names", "cat,dog,car,truck"], d);
    ok(&["smooth", "--in", "dist.csv", "--out", "labels.csv", "--alpha", "0.2", "--beta", "1"], d);
    ok(
        &[
            "train", "--in", "train.csv", "--labels", "labels.csv", "--out", "model.txt", "--eval", "test.csv",
            "--probs-out", "probs.csv", "--calibrate", "test.csv", "--epochs", "10", "--trace-out", "trace.csv",
        ],
        d,
    );
    ok(&["ece", "--in", "probs.csv", "--out", "ece.csv"], d);
    ok(&["ece", "--in", "probs.csv", "--out", "kde.csv", "--estimator", "kde", "--variant", "output"], d);
    ok(&["reliability", "--in", "probs.csv", "--out", "rel.csv", "--variant", "output", "--bins", "5"], d);
    ok(&["ood", "--in", "model.txt", "--out", "ood.csv", "--data", "shifted.csv", "--bins", "6"], d);
    ok(&["ood", "--in", "model.txt", "--out", "noise.csv", "--n", "50", "--low", "-4", "--high", "4"], d);

    let (names, dist) = io::read_class_matrix(&d.join("dist.csv")).unwrap();
    assert_eq!(names, ["cat", "dog", "car", "truck"]);
    assert_eq!(dist.dim(), (4, 4));
    let (_, labels) = io::read_class_matrix(&d.join("labels.csv")).unwrap();
    for r in 0..4 {
        assert!((labels[[r, r]] - 0.8).abs() < 1e-15);
    }
    let (probs, y) = io::read_probs(&d.join("probs.csv")).unwrap();
    assert_eq!((probs.n(), y.len()), (120, 120));
    assert_eq!(io::read_reports(&d.join("ece.csv")).unwrap().len(), 4);
    assert_eq!(io::read_reports(&d.join("kde.csv")).unwrap().len(), 1);
    assert_eq!(io::read_reliability(&d.join("rel.csv")).unwrap().len(), 5);
    assert_eq!(io::read_confidence_histogram(&d.join("ood.csv")).unwrap().total(), 120);
    assert_eq!(io::read_confidence_histogram(&d.join("noise.csv")).unwrap().total(), 50);
    assert_eq!(io::read_model(&d.join("model.txt")).unwrap().classes(), 4);
}

#[test]
fn flags_override_config_values() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("c.conf"), "classes = 3\nn_per_class = 5\nnoise_std = 0.1\n").unwrap();
    ok(&["synth", "--config", "c.conf", "--out", "a.csv"], d);
    ok(&["synth", "--config", "c.conf", "--out", "b.csv", "--classes", "5"], d);
    let (_, a) = io::read_dataset(&d.join("a.csv"), None).unwrap();
    let (_, b) = io::read_dataset(&d.join("b.csv"), None).unwrap();
    assert_eq!((a.len(), a.classes()), (15, 3));
    assert_eq!((b.len(), b.classes()), (25, 5));
}

#[test]
fn seed_changes_data_and_repeats_exactly() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    for (name, seed) in [("a.csv", "3"), ("b.csv", "3"), ("c.csv", "4")] {
        ok(&["synth", "--out", name, "--n-per-class", "10", "--seed", seed], d);
    }
    let read = |n: &str| std::fs::read(d.join(n)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_ne!(read("a.csv"), read("c.csv"));
}

#[test]
fn sweep_on_dataset_file_writes_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(&["synth", "--out", "data.csv", "--classes", "3", "--n-per-class", "30"], d);
    ok(
        &[
            "sweep", "--in", "data.csv", "--out", "sweep.csv", "--param", "beta", "--values", "0,4", "--seeds", "1",
            "--epochs", "5", "--runs-dir", "runs",
        ],
        d,
    );
    let rows = read_sweep(&d.join("sweep.csv")).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0].value, rows[1].value), (0.0, 4.0));
    assert!(d.join("runs/beta_4_seed1/metrics.csv").exists());
    assert!(d.join("runs/beta_0_seed1/model.txt").exists());
}

#[test]
fn validation_errors_exit_2_with_one_line() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("probs.csv"), "label,p0,p1\n0,0.9,0.3\n").unwrap();
    let out = simcal(&["ece", "--in", "probs.csv", "--out", "e.csv"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_line(&out).starts_with("error kind=RowSumError message=\""));

    std::fs::write(d.join("probs.csv"), "label,p0,p1\n5,0.5,0.5\n").unwrap();
    let out = simcal(&["ece", "--in", "probs.csv", "--out", "e.csv"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_line(&out).starts_with("error kind=InvalidLabel"));

    let out = simcal(&["smooth", "--classes", "3", "--scheme", "uniform", "--alpha", "1.5", "--out", "l.csv"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_line(&out).starts_with("error kind=AlphaRange"));

    let out = simcal(&["ece", "--nonsense"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_line(&out).starts_with("error kind=UsageError"));
}

#[test]
fn numeric_failures_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    // identical confidences leave the kernel bandwidth at zero
    std::fs::write(d.join("probs.csv"), "label,p0,p1\n0,0.5,0.5\n1,0.5,0.5\n0,0.5,0.5\n").unwrap();
    let out = simcal(&["ece", "--in", "probs.csv", "--out", "e.csv", "--estimator", "kde"], d);
    assert_eq!(out.status.code(), Some(3));
    assert!(error_line(&out).starts_with("error kind=DegenerateBandwidth"));

    ok(&["synth", "--out", "data.csv", "--classes", "3", "--n-per-class", "20", "--spacing", "50"], d);
    ok(&["smooth", "--classes", "3", "--scheme", "onehot", "--out", "l.csv"], d);
    let out = simcal(
        &["train", "--in", "data.csv", "--labels", "l.csv", "--out", "m.txt", "--learning-rate", "1e6", "--epochs", "50"],
        d,
    );
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(error_line(&out).starts_with("error kind=DivergenceError"));
}
