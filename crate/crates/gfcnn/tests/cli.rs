//! The command-line interface, driven as a subprocess: full pipelines in a
//! temporary directory, exit codes, and one-line diagnostics.

use std::path::Path;
use std::process::{Command, Output};

use gfcnn::dataset::read_dataset;
use gfcnn::graph::read_graph;
use gfcnn::model::load_model;

fn gfcnn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gfcnn"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(dir: &Path, args: &[&str]) -> String {
    let out = gfcnn(dir, args);
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn run_err(dir: &Path, args: &[&str]) -> String {
    let out = gfcnn(dir, args);
    assert!(!out.status.success(), "command {args:?} unexpectedly passed");
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(
        stderr.trim_end().lines().count(),
        1,
        "diagnostic should be one line, got: {stderr}"
    );
    stderr
}

#[test]
fn full_pipeline_runs_in_a_temporary_directory() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    run_ok(d, &["graph-gen", "--nodes", "10", "--seed", "3", "--out", "g.graph"]);
    let g = read_graph(&d.join("g.graph")).unwrap();
    assert_eq!(g.num_nodes(), 10);

    run_ok(
        d,
        &[
            "data-gen",
            "--graph",
            "g.graph",
            "--train-size",
            "300",
            "--test-size",
            "60",
            "--sigma2",
            "1e-6",
            "--seed",
            "4",
            "--out",
            "d.data",
        ],
    );
    let data = read_dataset(&d.join("d.data")).unwrap();
    assert_eq!(data.train().len(), 300);
    assert_eq!(data.test().len(), 60);

    let stdout = run_ok(
        d,
        &[
            "train",
            "--graph",
            "g.graph",
            "--dataset",
            "d.data",
            "--arch",
            "GL[3,10]-FC[8]",
            "--epochs",
            "3",
            "--batch-size",
            "30",
            "--model",
            "m.model",
            "--out",
            "metrics.csv",
        ],
    );
    assert!(stdout.contains("test accuracy"), "stdout: {stdout}");
    let model = load_model(&d.join("m.model")).unwrap();
    assert_eq!(model.num_classes(), 10);
    let metrics = std::fs::read_to_string(d.join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("epoch,loss\n"));
    assert!(metrics.contains("test_accuracy,"));

    let stdout = run_ok(d, &["eval", "--model", "m.model", "--dataset", "d.data"]);
    assert!(stdout.contains("test accuracy"), "stdout: {stdout}");

    let stdout = run_ok(
        d,
        &[
            "sweep",
            "--arch",
            "GL[2,4]-GL[2,4]",
            "--nodes",
            "8",
            "--train-size",
            "60",
            "--test-size",
            "20",
            "--realizations",
            "2",
            "--sweep",
            "num-groups=2,4",
            "--epochs",
            "2",
            "--out",
            "sweep.csv",
        ],
    );
    assert!(stdout.contains("sweep value"), "stdout: {stdout}");
    let csv = std::fs::read_to_string(d.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "sweep_value,mean_accuracy,quarter_variance,param_count"
    );
    assert_eq!(lines.len(), 3, "header + two sweep points: {csv}");
}

#[test]
fn reruns_with_the_same_seed_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run_ok(d, &["graph-gen", "--nodes", "8", "--seed", "9", "--out", "g.graph"]);
    for name in ["a", "b"] {
        run_ok(
            d,
            &[
                "data-gen", "--graph", "g.graph", "--train-size", "50", "--test-size", "10",
                "--seed", "5", "--out", &format!("{name}.data"),
            ],
        );
        run_ok(
            d,
            &[
                "train", "--graph", "g.graph", "--dataset", &format!("{name}.data"), "--arch",
                "GC[2,3]", "--epochs", "2", "--batch-size", "10", "--seed", "6", "--model",
                &format!("{name}.model"),
            ],
        );
    }
    let bytes = |p: &str| std::fs::read(d.join(p)).unwrap();
    assert_eq!(bytes("a.data"), bytes("b.data"));
    assert_eq!(bytes("a.model"), bytes("b.model"));
}

#[test]
fn graph_dataset_mismatch_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run_ok(d, &["graph-gen", "--nodes", "8", "--seed", "1", "--out", "a.graph"]);
    run_ok(d, &["graph-gen", "--nodes", "8", "--seed", "2", "--out", "b.graph"]);
    run_ok(
        d,
        &[
            "data-gen", "--graph", "a.graph", "--train-size", "20", "--test-size", "5",
            "--out", "a.data",
        ],
    );
    let stderr = run_err(
        d,
        &[
            "train", "--graph", "b.graph", "--dataset", "a.data", "--arch", "FC[4]",
            "--epochs", "1", "--batch-size", "5", "--model", "m.model",
        ],
    );
    assert!(
        stderr.contains("graph"),
        "diagnostic should name the mismatch: {stderr}"
    );
}

#[test]
fn bad_architecture_reports_its_position() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run_ok(d, &["graph-gen", "--nodes", "6", "--seed", "1", "--out", "g.graph"]);
    run_ok(
        d,
        &[
            "data-gen", "--graph", "g.graph", "--train-size", "10", "--test-size", "5",
            "--out", "d.data",
        ],
    );
    let stderr = run_err(
        d,
        &[
            "train", "--graph", "g.graph", "--dataset", "d.data", "--arch", "GC[5,32]-XX[3]",
            "--epochs", "1", "--batch-size", "5", "--model", "m.model",
        ],
    );
    assert!(stderr.contains("position"), "stderr: {stderr}");
}

#[test]
fn missing_files_fail_with_one_line_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let stderr = run_err(
        d,
        &[
            "data-gen", "--graph", "absent.graph", "--train-size", "5", "--test-size", "2",
            "--out", "d.data",
        ],
    );
    assert!(stderr.contains("absent.graph"), "stderr: {stderr}");
    let stderr = run_err(d, &["eval", "--model", "absent.model", "--dataset", "also-absent.data"]);
    assert!(stderr.contains("absent.model"), "stderr: {stderr}");
}

#[test]
fn corrupt_files_are_rejected_not_crashed_on() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("junk.graph"), "graph 4 2\n0 1 1.0\nnot an edge\n").unwrap();
    let stderr = run_err(
        d,
        &[
            "data-gen", "--graph", "junk.graph", "--train-size", "5", "--test-size", "2",
            "--out", "d.data",
        ],
    );
    assert!(!stderr.trim().is_empty());
}
