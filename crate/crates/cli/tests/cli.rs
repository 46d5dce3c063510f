use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use memd_core::data::{write_dense_csv, write_sparse};
use memd_core::synthetic::{exponential_classes, PlantedGaussian};
use tempfile::TempDir;

fn memd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_memd"))
        .args(args)
        .output()
        .expect("memd runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn planted_csv(dir: &Path) -> String {
    let path = dir.join("planted.csv");
    let data = PlantedGaussian::binary(60, 10, 2, 3.0).generate(1).unwrap();
    write_dense_csv(&data, &path).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn fit_then_predict_on_dense_csv() {
    let dir = TempDir::new().unwrap();
    let data = planted_csv(dir.path());
    let model = dir.path().join("model.memd");
    let model = model.to_str().unwrap();
    stdout(&memd(&[
        "fit",
        "--data",
        &data,
        "--method",
        "j",
        "--orders",
        "2",
        "--support",
        "real",
        "--k",
        "2",
        "--out",
        model,
    ]));
    let text = stdout(&memd(&["predict", "--model", model, "--data", &data]));
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "instance_id,predicted_label,log_posterior_class0,log_posterior_class1"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 120);
    // instances alternate class0, class1
    let correct = rows
        .iter()
        .enumerate()
        .filter(|(i, r)| r[1] == format!("class{}", i % 2))
        .count();
    assert!(correct >= 110, "{correct}");
}

#[test]
fn rank_lists_every_feature_once() {
    let dir = TempDir::new().unwrap();
    let data = planted_csv(dir.path());
    let text = stdout(&memd(&[
        "rank",
        "--data",
        &data,
        "--orders",
        "2",
        "--support",
        "real",
    ]));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("feature_id,score,rank"));
    let rows: Vec<Vec<String>> = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    assert_eq!(rows.len(), 10);
    let scores: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[2], (i + 1).to_string());
    }
}

#[test]
fn sparse_input_and_cv_report() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("data.svm");
    write_sparse(&exponential_classes(40, 8, 3, 2).unwrap(), &path).unwrap();
    let text = stdout(&memd(&[
        "cv",
        "--data",
        path.to_str().unwrap(),
        "--format",
        "sparse",
        "--folds",
        "4",
        "--k",
        "3",
    ]));
    assert!(text.contains("# section: folds"));
    let summary = text.lines().last().unwrap();
    assert!(summary.starts_with("4,"), "{summary}");
    let mean: f64 = summary[2..].parse().unwrap();
    assert!(mean > 0.6, "{mean}");
}

#[test]
fn corpus_model_keeps_its_vocabulary() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("docs.tsv");
    let mut tsv = String::new();
    for i in 0..12 {
        if i % 2 == 0 {
            tsv.push_str(&format!("sport\tgoal team ball goal match {i}\n"));
        } else {
            tsv.push_str(&format!("science\tatom cell lab cell theory {i}\n"));
        }
    }
    fs::write(&path, tsv).unwrap();
    let path = path.to_str().unwrap();
    let model = dir.path().join("m.memd");
    let model = model.to_str().unwrap();
    stdout(&memd(&[
        "fit", "--data", path, "--format", "corpus", "--k", "2", "--out", model,
    ]));
    let query = dir.path().join("query.tsv");
    fs::write(&query, "?\tgoal goal team\n?\tcell atom\n").unwrap();
    let text = stdout(&memd(&[
        "predict",
        "--model",
        model,
        "--data",
        query.to_str().unwrap(),
        "--format",
        "corpus",
    ]));
    let predicted: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(predicted, vec!["sport", "science"]);
    // the same model cannot read a dense table
    let out = memd(&["predict", "--model", model, "--data", path]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn exit_codes_follow_error_kinds() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "label,a\nx,notanumber\n").unwrap();
    let bad = bad.to_str().unwrap();
    assert_eq!(memd(&["rank", "--data", bad]).status.code(), Some(2));
    let missing = dir.path().join("missing.csv");
    assert_eq!(
        memd(&["rank", "--data", missing.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );

    let data = planted_csv(dir.path());
    // Gaussian support needs the second moment
    assert_eq!(
        memd(&["rank", "--data", &data, "--support", "real"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        memd(&["cv", "--data", &data, "--folds", "1"]).status.code(),
        Some(3)
    );
    assert_eq!(
        memd(&["fit", "--data", &data, "--k", "99"]).status.code(),
        Some(3)
    );
    assert_eq!(
        memd(&["fit", "--data", &data, "--k", "zero"]).status.code(),
        Some(3)
    );
    assert_eq!(memd(&["--help"]).status.code(), Some(0));
}
