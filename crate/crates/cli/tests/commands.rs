use std::path::Path;
use std::process::{Command, Output};

fn gapband(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gapband")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = gapband(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn data_lines(path: &Path) -> usize {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .count()
        - 1
}

fn top_two(path: &Path) -> Vec<f64> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut rows: Vec<(f64, f64)> = text
        .lines()
        .skip(2)
        .filter_map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            Some((f[0].parse().ok()?, f[1].parse().ok()?))
        })
        .collect();
    rows.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut top = vec![rows[0].0, rows[1].0];
    top.sort_by(f64::total_cmp);
    top
}

#[test]
fn simulate_emits_nine_spectra_with_tone_peaks() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a");
    ok(&["simulate", "--out", out.to_str().unwrap()]);
    let spectra: Vec<_> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("spectrum_"))
        .collect();
    assert_eq!(spectra.len(), 9);
    assert!(out.join("spectra.svg").exists());
    for name in &spectra {
        let path = out.join(name);
        assert_eq!(top_two(&path), vec![3.0, 6.0], "{name}");
        let first = std::fs::read_to_string(&path).unwrap();
        assert!(first.starts_with("# gapband "));
        assert!(first.lines().next().unwrap().contains("seed=0 config="));
    }

    let again = dir.path().join("b");
    ok(&["simulate", "--out", again.to_str().unwrap()]);
    for name in &spectra {
        assert_eq!(
            std::fs::read(out.join(name)).unwrap(),
            std::fs::read(again.join(name)).unwrap()
        );
    }
}

#[test]
fn single_level_is_unnormalized() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    ok(&["simulate", "--levels", "0", "--out", out.to_str().unwrap()]);
    let files: Vec<_> = std::fs::read_dir(out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("spectrum_"))
        .collect();
    assert_eq!(files, vec!["spectrum_p0.00.csv"]);
    let text = std::fs::read_to_string(out.join(&files[0])).unwrap();
    for line in text.lines().skip(2) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[1], f[2]);
    }
}

#[test]
fn json_format_and_config_echo() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("j");
    ok(&[
        "simulate",
        "--levels",
        "0,0.5",
        "--format",
        "json",
        "--master-seed",
        "9",
        "--out",
        out.to_str().unwrap(),
    ]);
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("spectra.json")).unwrap()).unwrap();
    assert_eq!(doc["seed"], 9);
    assert_eq!(doc["spectra"].as_array().unwrap().len(), 2);
    let echoed = std::fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(echoed.contains("master_seed = 9"));
    assert!(echoed.contains("levels = [0.0, 0.5]"));

    // The echoed config reproduces the run; the flag still wins over the file.
    let replay = dir.path().join("r");
    let cfg = out.join("config.toml");
    ok(&[
        "simulate",
        "--format",
        "json",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        replay.to_str().unwrap(),
    ]);
    assert_eq!(
        std::fs::read(out.join("spectra.json")).unwrap(),
        std::fs::read(replay.join("spectra.json")).unwrap()
    );
    let other = dir.path().join("o");
    ok(&[
        "simulate",
        "--format",
        "json",
        "--config",
        cfg.to_str().unwrap(),
        "--master-seed",
        "10",
        "--out",
        other.to_str().unwrap(),
    ]);
    assert_ne!(
        std::fs::read(out.join("spectra.json")).unwrap(),
        std::fs::read(other.join("spectra.json")).unwrap()
    );
}

#[test]
fn experiment_cell_counts() {
    let dir = tempfile::tempdir().unwrap();
    let full = dir.path().join("full");
    let stdout = ok(&[
        "experiment",
        "--generate",
        "--master-seed",
        "7",
        "--out",
        full.to_str().unwrap(),
    ]);
    assert!(stdout.contains("288 cells"));
    assert_eq!(data_lines(&full.join("report.csv")), 288);
    assert_eq!(data_lines(&full.join("comparison.csv")), 144);
    for name in [
        "accuracy_point_dae.svg",
        "accuracy_point_svm.svg",
        "accuracy_block_dae.svg",
        "accuracy_block_svm.svg",
        "difference_point.svg",
        "difference_block.svg",
    ] {
        let svg = std::fs::read_to_string(full.join(name)).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("<polyline"), "{name}");
    }

    let svm = dir.path().join("svm");
    ok(&[
        "experiment",
        "--generate",
        "--master-seed",
        "7",
        "--classifier",
        "svm",
        "--out",
        svm.to_str().unwrap(),
    ]);
    assert_eq!(data_lines(&svm.join("report.csv")), 144);
    assert!(!svm.join("comparison.csv").exists());
    // SVM rows do not depend on whether the DAE was trained alongside.
    let svm_rows = |p: &Path| -> Vec<String> {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .filter(|l| l.contains(",svm,"))
            .map(String::from)
            .collect()
    };
    assert_eq!(svm_rows(&full.join("report.csv")), svm_rows(&svm.join("report.csv")));
}

#[test]
fn experiment_on_saved_dataset_matches_generated() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let args = [
        "--levels",
        "0.5",
        "--mode",
        "block",
        "--classifier",
        "svm",
        "--master-seed",
        "3",
    ];
    let mut gen = vec![
        "experiment",
        "--generate",
        "--subject",
        "2",
        "--save-dataset",
        "--out",
        a.to_str().unwrap(),
    ];
    gen.extend(args);
    ok(&gen);
    let b = dir.path().join("b");
    let dataset = a.join("dataset.csv");
    let mut load = vec![
        "experiment",
        "--dataset",
        dataset.to_str().unwrap(),
        "--out",
        b.to_str().unwrap(),
    ];
    load.extend(args);
    ok(&load);
    assert_eq!(
        std::fs::read(a.join("report.csv")).unwrap(),
        std::fs::read(b.join("report.csv")).unwrap()
    );
}

#[test]
fn train_predict_and_dimension_check() {
    let dir = tempfile::tempdir().unwrap();
    let d = |n: &str| dir.path().join(n).to_str().unwrap().to_string();
    ok(&[
        "extract",
        "--generate",
        "--subject",
        "1",
        "--session",
        "2",
        "--out",
        &d("x"),
    ]);
    let features = format!("{}/features.csv", d("x"));
    for kind in ["dae", "svm"] {
        let trained = ok(&[
            "train",
            "--features",
            &features,
            "--classifier",
            kind,
            "--out",
            &d(kind),
        ]);
        let reported: f64 = trained
            .lines()
            .find_map(|l| l.strip_prefix("in-sample window accuracy: "))
            .unwrap()
            .parse()
            .unwrap();
        let model = format!("{}/model.json", d(kind));
        let predicted = ok(&[
            "predict",
            "--model",
            &model,
            "--features",
            &features,
            "--out",
            &d(&format!("{kind}p")),
        ]);
        let accuracy: f64 = predicted
            .lines()
            .find_map(|l| l.strip_prefix("window accuracy: "))
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!(accuracy, reported);
        assert!(accuracy > 0.9);
    }

    // A dataset with fewer channels gives fewer features than the model expects.
    let narrow = dir.path().join("narrow.toml");
    std::fs::write(&narrow, "[surrogate]\nchannels = 6\n").unwrap();
    let out = gapband(&[
        "predict",
        "--config",
        narrow.to_str().unwrap(),
        "--model",
        &format!("{}/model.json", d("svm")),
        "--generate",
        "--subject",
        "1",
        "--out",
        &d("bad"),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dimension"));
}

#[test]
fn mask_writes_replayable_rle() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m");
    ok(&[
        "mask",
        "--generate",
        "--subject",
        "3",
        "--session",
        "4",
        "--mode",
        "point",
        "--fraction",
        "0.25",
        "--out",
        out.to_str().unwrap(),
    ]);
    let masks = std::fs::read_to_string(out.join("masks.txt")).unwrap();
    let lines: Vec<&str> = masks.lines().skip(1).collect();
    assert_eq!(lines.len(), 15);
    for line in lines {
        let rle = line.splitn(4, ' ').nth(3).unwrap();
        let mask = gapband::io::mask_from_rle(rle).unwrap();
        assert_eq!(mask.len(), 1000);
        assert_eq!(mask.removed_count(), 250);
    }
    let masked = gapband::io::load_dataset(&out.join("masked.csv")).unwrap();
    assert!(masked.trials.iter().all(|t| t.len() == 750));
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let bad_cfg = dir.path().join("bad.toml");
    std::fs::write(&bad_cfg, "[protocol]\nremoval_levels = [0.95]\n").unwrap();
    for args in [
        vec!["experiment", "--out", out],
        vec!["simulate", "--levels", "0.9", "--out", out],
        vec!["simulate", "--config", bad_cfg.to_str().unwrap(), "--out", out],
        vec!["simulate", "--config", "/no/such/file.toml", "--out", out],
        vec!["frobnicate"],
        vec!["predict", "--model", "/no/such/model.json", "--generate", "--out", out],
    ] {
        let o = gapband(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}
