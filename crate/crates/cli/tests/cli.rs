use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn neighsel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_neighsel"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_estimate_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let model_dir = dir.path().join("m");
    let out = neighsel(&["gen", "--p", "25", "--seed", "3", "--n", "300", "--out", path(&model_dir)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["model.json", "truth.tsv", "data.csv"] {
        assert!(model_dir.join(f).exists(), "{f} missing");
    }

    let est = dir.path().join("est.tsv");
    let out = neighsel(&[
        "estimate",
        "--data",
        path(&model_dir.join("data.csv")),
        "--rule",
        "and",
        "--alpha",
        "0.05",
        "--out",
        path(&est),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let out = neighsel(&["eval", "--estimate", path(&est), "--model", path(&model_dir.join("model.json"))]);
    assert_eq!(code(&out), 0);
    let metrics: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(metrics["true_positives"].as_u64().unwrap() > 0);

    let out = neighsel(&[
        "eval",
        "--estimate",
        path(&est),
        "--truth",
        path(&model_dir.join("truth.tsv")),
        "--p",
        "25",
    ]);
    assert_eq!(code(&out), 0);
    let again: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(metrics, again);
}

#[test]
fn generation_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        assert_eq!(code(&neighsel(&["gen", "--p", "40", "--seed", "9", "--n", "20", "--out", path(d)])), 0);
    }
    for f in ["model.json", "truth.tsv", "data.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }
}

#[test]
fn experiments_require_a_seed() {
    for sub in ["table1", "fig1", "prop1", "level", "robust"] {
        assert_eq!(code(&neighsel(&[sub, "--replicates", "1"])), 2, "{sub}");
    }
}

#[test]
fn config_errors_exit_2() {
    assert_eq!(code(&neighsel(&["level", "--seed", "1", "--replicates", "0"])), 2);
    assert_eq!(code(&neighsel(&["prop1", "--seed", "1", "--alpha", "2"])), 2);
    assert_eq!(code(&neighsel(&["gen", "--p", "5", "--seed", "1", "--kernel", "wide", "--out", "x"])), 2);
    assert_eq!(code(&neighsel(&["frobnicate"])), 2);
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let ragged = dir.path().join("ragged.csv");
    fs::write(&ragged, "x1,x2\n1,2\n3\n").unwrap();
    assert_eq!(code(&neighsel(&["estimate", "--data", path(&ragged)])), 3);

    let constant = dir.path().join("constant.csv");
    fs::write(&constant, "x1,x2\n1,2\n1,3\n1,5\n").unwrap();
    let out = neighsel(&["estimate", "--data", path(&constant)]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("column 0"));

    let missing = dir.path().join("nope.csv");
    assert_eq!(code(&neighsel(&["estimate", "--data", path(&missing)])), 3);
}

#[test]
fn numeric_failure_exits_4() {
    // More predictors than observations with no penalty: the solution is not unique.
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("wide.csv");
    let mut text = (1..=6).map(|j| format!("x{j}")).collect::<Vec<_>>().join(",");
    text.push('\n');
    for i in 0..4 {
        let row: Vec<String> = (0..6).map(|j| format!("{}", ((i * 7 + j * 3) % 11) as f64 + 0.1 * j as f64)).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(&file, text).unwrap();
    assert_eq!(code(&neighsel(&["estimate", "--data", path(&file), "--lambda", "0"])), 4);
}

#[test]
fn experiment_reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for (name, workers) in [("one", "1"), ("two", "2")] {
        let out_dir = dir.path().join(name);
        let out = neighsel(&[
            "level",
            "--seed",
            "11",
            "--replicates",
            "20",
            "--p",
            "15",
            "--workers",
            workers,
            "--out",
            path(&out_dir),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        reports.push(fs::read(out_dir.join("report.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    let report: serde_json::Value = serde_json::from_slice(&reports[0]).unwrap();
    assert_eq!(report["format_version"], 1);
    assert_eq!(report["seeds"].as_array().unwrap().len(), 20);
}

#[test]
fn figure_run_writes_edge_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = neighsel(&["fig1", "--seed", "2", "--p", "60", "--n", "200", "--out", path(dir.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["report.json", "model.json", "truth.tsv", "and.tsv", "or.tsv"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
}
