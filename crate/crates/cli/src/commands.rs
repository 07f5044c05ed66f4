use std::fmt::Write as _;
use std::path::Path;

use gapband_core::corruption::{point_removal, RemovalMode, RemovalSpec};
use gapband_core::eval::{
    compare_dae_svm, evaluate_pair, session_pairs, train_classifier, ClassifierKind, Comparison, EvalReport, ReportRow,
};
use gapband_core::features::FeaturePipeline;
use gapband_core::spectral::{normalize_by_retention, periodogram, PowerSpectrum};
use gapband_core::synth::{generate_mixture, generate_surrogate_dataset};
use gapband_core::{seed, Dataset};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Provenance, RunConfig};
use crate::error::{CliError, CliResult};
use crate::io::{self, CsvDoc, FeatureRow};
use crate::model::ModelFile;
use crate::svg::{palette, Chart, Series};
use crate::{Cli, Command, DataSource, Format};

const MIXTURE_STREAM: u64 = 101;
const SIMULATE_MASK_STREAM: u64 = 102;
const MASK_STREAM: u64 = 103;
const TRAIN_STREAM: u64 = 104;

fn runtime(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Runtime(e.into())
}

/// Config precedence: flags over file over defaults.
fn effective_config(cli: &Cli) -> CliResult<RunConfig> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let seed = cli.master_seed.unwrap_or(cfg.master_seed);
    Ok(cfg.with_master_seed(seed))
}

fn finish_config(cli: &Cli, cfg: &RunConfig) -> CliResult<Provenance> {
    cfg.validate()?;
    if cfg.master_seed > i64::MAX as u64 {
        return Err(CliError::usage(format!(
            "master seed {} is larger than {}",
            cfg.master_seed,
            i64::MAX
        )));
    }
    io::write_file(&cli.out.join("config.toml"), cfg.to_toml().as_bytes())?;
    Ok(Provenance::of(cfg))
}

pub fn dispatch(cli: &Cli) -> CliResult<()> {
    let mut cfg = effective_config(cli)?;
    match &cli.command {
        Command::Simulate { levels } => {
            if let Some(levels) = levels {
                cfg.simulate.levels = levels.clone();
            }
            let prov = finish_config(cli, &cfg)?;
            simulate(cli, &cfg, &prov)
        }
        Command::Experiment {
            source,
            classifier,
            mode,
            levels,
            shuffle_labels,
            mask_training,
            save_dataset,
        } => {
            let p = &mut cfg.protocol;
            if let Some(c) = classifier {
                p.classifiers = dedup(c);
            }
            if let Some(m) = mode {
                p.modes = dedup(m);
            }
            if let Some(l) = levels {
                p.removal_levels = l.clone();
            }
            p.shuffle_training_labels |= shuffle_labels;
            p.mask_training |= mask_training;
            let prov = finish_config(cli, &cfg)?;
            let dataset = load_source(&cfg, source)?;
            if *save_dataset {
                io::save_dataset(&dataset, &cli.out.join("dataset.csv"), &prov)?;
            }
            experiment(cli, &cfg, &prov, &dataset)
        }
        Command::Train {
            features,
            source,
            classifier,
        } => {
            let prov = finish_config(cli, &cfg)?;
            let rows = feature_rows(&cfg, features.as_deref(), source)?;
            train(cli, &cfg, &prov, &rows, *classifier)
        }
        Command::Predict {
            model,
            features,
            source,
        } => {
            let prov = finish_config(cli, &cfg)?;
            let model = ModelFile::load(model)?;
            let rows = feature_rows(&cfg, features.as_deref(), source)?;
            predict(cli, &prov, &model, &rows)
        }
        Command::Mask { source, mode, fraction } => {
            if let Some(m) = mode {
                cfg.mask.mode = *m;
            }
            if let Some(f) = fraction {
                cfg.mask.fraction = *f;
            }
            let prov = finish_config(cli, &cfg)?;
            let dataset = load_source(&cfg, source)?;
            mask(cli, &cfg, &prov, &dataset)
        }
        Command::Extract { source } => {
            let prov = finish_config(cli, &cfg)?;
            let dataset = load_source(&cfg, source)?;
            let rows = extract_rows(&cfg.protocol.pipeline, &dataset)?;
            let bands = cfg.protocol.pipeline.bands.len();
            let path = cli.out.join(match cli.format {
                Format::Csv => "features.csv",
                Format::Json => "features.json",
            });
            let bytes = match cli.format {
                Format::Csv => io::features_csv(&rows, bands, &prov.comment(&[])),
                Format::Json => json_bytes(&Tagged::new(&prov, FeatureDoc::from(&rows))),
            };
            io::write_file(&path, &bytes)?;
            println!("{} windows -> {}", rows.len(), path.display());
            Ok(())
        }
    }
}

fn dedup<T: PartialEq + Copy>(values: &[T]) -> Vec<T> {
    let mut out = Vec::new();
    for &v in values {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

fn load_source(cfg: &RunConfig, source: &DataSource) -> CliResult<Dataset> {
    let dataset = match (&source.dataset, source.generate) {
        (Some(path), false) => io::load_dataset(path)?,
        (None, true) => generate_surrogate_dataset(&cfg.surrogate).map_err(runtime)?,
        _ => return Err(CliError::usage("give exactly one of --dataset <path> or --generate")),
    };
    let trials: Vec<_> = dataset
        .trials
        .into_iter()
        .filter(|t| source.subject.is_none_or(|s| t.subject == s))
        .filter(|t| source.session.is_none_or(|s| t.session == s))
        .collect();
    if trials.is_empty() {
        return Err(CliError::usage("no trials match the subject/session filter"));
    }
    Ok(Dataset::new(trials))
}

fn feature_rows(cfg: &RunConfig, features: Option<&Path>, source: &DataSource) -> CliResult<Vec<FeatureRow>> {
    let rows = match features {
        Some(path) => io::load_features(path)?
            .into_iter()
            .filter(|r| source.subject.is_none_or(|s| r.subject == s))
            .filter(|r| source.session.is_none_or(|s| r.session == s))
            .collect(),
        None => extract_rows(&cfg.protocol.pipeline, &load_source(cfg, source)?)?,
    };
    if rows.is_empty() {
        return Err(CliError::usage("no feature rows to work with"));
    }
    let dim = rows[0].values.len();
    if let Some(bad) = rows.iter().find(|r| r.values.len() != dim) {
        return Err(CliError::usage(format!(
            "inconsistent feature dimension: {} vs {dim}",
            bad.values.len()
        )));
    }
    Ok(rows)
}

fn extract_rows(pipeline: &FeaturePipeline, dataset: &Dataset) -> CliResult<Vec<FeatureRow>> {
    let per_trial: Vec<Vec<FeatureRow>> = dataset
        .trials
        .par_iter()
        .map(|t| {
            let windows = pipeline
                .trial_features(t)
                .map_err(|e| anyhow::anyhow!("subject {} session {} trial {}: {e}", t.subject, t.session, t.trial))?;
            Ok(windows
                .into_iter()
                .enumerate()
                .filter_map(|(segment, w)| {
                    w.map(|fv| FeatureRow {
                        subject: t.subject,
                        session: t.session,
                        trial: t.trial,
                        segment,
                        label: t.label,
                        values: fv.into_values(),
                    })
                })
                .collect())
        })
        .collect::<anyhow::Result<_>>()?;
    Ok(per_trial.into_iter().flatten().collect())
}

/// JSON outputs carry the same provenance as the CSV comment line.
#[derive(Serialize)]
struct Tagged<T: Serialize> {
    generator: String,
    version: &'static str,
    seed: u64,
    config: String,
    #[serde(flatten)]
    body: T,
}

impl<T: Serialize> Tagged<T> {
    fn new(prov: &Provenance, body: T) -> Self {
        Self {
            generator: "gapband".into(),
            version: env!("CARGO_PKG_VERSION"),
            seed: prov.seed,
            config: prov.config_hash.clone(),
            body,
        }
    }
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

#[derive(Serialize)]
struct FeatureDoc<'a> {
    rows: Vec<FeatureJson<'a>>,
}

#[derive(Serialize)]
struct FeatureJson<'a> {
    subject: u32,
    session: u32,
    trial: u32,
    segment: usize,
    label: usize,
    values: &'a [f64],
}

impl<'a> From<&'a Vec<FeatureRow>> for FeatureDoc<'a> {
    fn from(rows: &'a Vec<FeatureRow>) -> Self {
        Self {
            rows: rows
                .iter()
                .map(|r| FeatureJson {
                    subject: r.subject,
                    session: r.session,
                    trial: r.trial,
                    segment: r.segment,
                    label: r.label,
                    values: &r.values,
                })
                .collect(),
        }
    }
}

fn level_tag(p: f64) -> String {
    format!("p{p:.2}")
}

#[derive(Serialize)]
struct SpectrumJson {
    removal_fraction: f64,
    retained_samples: usize,
    frequencies: Vec<f64>,
    power: Vec<Option<f64>>,
    normalized_power: Vec<Option<f64>>,
}

fn simulate(cli: &Cli, cfg: &RunConfig, prov: &Provenance) -> CliResult<()> {
    let sim = &cfg.simulate;
    let series = generate_mixture(&sim.mixture, seed::derive(cfg.master_seed, &[MIXTURE_STREAM])).map_err(runtime)?;
    let mut mixture = CsvDoc::new(&prov.comment(&[]), &io::strings(["time_s", "value"]));
    for (t, v) in series.times().iter().zip(series.values()) {
        mixture.row(&[t.to_string(), v.to_string()]);
    }
    io::write_file(&cli.out.join("mixture.csv"), &mixture.into_bytes())?;

    let mut spectra: Vec<(f64, PowerSpectrum, PowerSpectrum)> = Vec::new();
    for (k, &p) in sim.levels.iter().enumerate() {
        let mask = point_removal(
            series.len(),
            p,
            seed::derive(cfg.master_seed, &[SIMULATE_MASK_STREAM, k as u64]),
        )
        .map_err(runtime)?;
        let kept = series.retain(mask.kept()).map_err(runtime)?;
        let raw = periodogram(&kept, &sim.grid).map_err(runtime)?;
        let normalized = if p == 0.0 {
            raw.clone()
        } else {
            normalize_by_retention(&raw, p).map_err(runtime)?
        };
        spectra.push((p, raw, normalized));
    }

    let mut summary = String::new();
    for (p, raw, normalized) in &spectra {
        let peaks: Vec<String> = raw.peaks().iter().take(2).map(|(f, _)| format!("{f}")).collect();
        write!(
            summary,
            "p={p:.2} retained={} peaks=[{}]",
            raw.sample_count(),
            peaks.join(", ")
        )
        .unwrap();
        if sim.mixture.tones.len() >= 2 {
            let (f1, f2) = (sim.mixture.tones[0].0, sim.mixture.tones[1].0);
            let at = |f: f64| {
                normalized
                    .grid()
                    .frequencies()
                    .iter()
                    .position(|&g| (g - f).abs() < 1e-9)
                    .and_then(|i| normalized.powers()[i])
            };
            if let (Some(a), Some(b)) = (at(f1), at(f2)) {
                write!(summary, " ratio({f1}/{f2})={:.4}", a / b).unwrap();
            }
        }
        summary.push('\n');
    }
    print!("{summary}");

    match cli.format {
        Format::Csv => {
            for (p, raw, normalized) in &spectra {
                let comment = prov.comment(&[
                    ("removal_fraction", p.to_string()),
                    ("retained", raw.sample_count().to_string()),
                ]);
                let mut doc = CsvDoc::new(&comment, &io::strings(["frequency_hz", "power", "normalized_power"]));
                for ((f, a), b) in raw
                    .grid()
                    .frequencies()
                    .iter()
                    .zip(raw.powers())
                    .zip(normalized.powers())
                {
                    let cell = |v: &Option<f64>| v.map_or(String::new(), |x| x.to_string());
                    doc.row(&[f.to_string(), cell(a), cell(b)]);
                }
                io::write_file(
                    &cli.out.join(format!("spectrum_{}.csv", level_tag(*p))),
                    &doc.into_bytes(),
                )?;
            }
        }
        Format::Json => {
            let body: Vec<SpectrumJson> = spectra
                .iter()
                .map(|(p, raw, normalized)| SpectrumJson {
                    removal_fraction: *p,
                    retained_samples: raw.sample_count(),
                    frequencies: raw.grid().frequencies().to_vec(),
                    power: raw.powers().to_vec(),
                    normalized_power: normalized.powers().to_vec(),
                })
                .collect();
            #[derive(Serialize)]
            struct Doc {
                spectra: Vec<SpectrumJson>,
            }
            io::write_file(
                &cli.out.join("spectra.json"),
                &json_bytes(&Tagged::new(prov, Doc { spectra: body })),
            )?;
        }
    }

    let chart = Chart {
        title: "Periodogram under point removal".into(),
        x_label: "frequency (Hz)".into(),
        y_label: "power / (1 - p)".into(),
        series: spectra
            .iter()
            .enumerate()
            .map(|(i, (p, _, normalized))| {
                Series::new(
                    format!("p = {p:.1}"),
                    normalized.valid().collect(),
                    palette(i),
                    if i == 0 { 2.5 } else { 1.2 },
                )
            })
            .collect(),
        y_range: None,
        zero_line: false,
    };
    io::write_file(&cli.out.join("spectra.svg"), chart.render().as_bytes())?;
    Ok(())
}

fn report_csv(report: &EvalReport, prov: &Provenance) -> Vec<u8> {
    let header = io::strings([
        "subject",
        "train_session",
        "test_session",
        "mode",
        "removal_fraction",
        "classifier",
        "window_accuracy",
        "trial_accuracy",
        "valid_segments",
        "dropped_segments",
        "evaluated_trials",
        "excluded_trials",
        "learning_rate",
        "svm_c",
        "svm_gamma",
    ]);
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    let mut doc = CsvDoc::new(&prov.comment(&[]), &header);
    for r in &report.rows {
        doc.row(&[
            r.subject.to_string(),
            r.train_session.to_string(),
            r.test_session.to_string(),
            r.mode.name().to_string(),
            r.removal_fraction.to_string(),
            r.classifier.name().to_string(),
            r.window_accuracy.to_string(),
            r.trial_accuracy.to_string(),
            r.valid_segments.to_string(),
            r.dropped_segments.to_string(),
            r.evaluated_trials.to_string(),
            r.excluded_trials.to_string(),
            opt(r.learning_rate),
            opt(r.svm_c),
            opt(r.svm_gamma),
        ]);
    }
    doc.into_bytes()
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

fn levels_of(rows: &[&ReportRow]) -> Vec<f64> {
    let mut levels: Vec<f64> = rows.iter().map(|r| r.removal_fraction).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    levels
}

fn accuracy_chart(report: &EvalReport, mode: RemovalMode, kind: ClassifierKind) -> Option<Chart> {
    let rows: Vec<&ReportRow> = report
        .rows
        .iter()
        .filter(|r| r.mode == mode && r.classifier == kind)
        .collect();
    if rows.is_empty() {
        return None;
    }
    let levels = levels_of(&rows);
    let curve = |f: fn(&ReportRow) -> f64| -> Vec<(f64, f64)> {
        levels
            .iter()
            .map(|&p| (p, mean(rows.iter().filter(|r| r.removal_fraction == p).map(|r| f(r)))))
            .collect()
    };
    Some(Chart {
        title: format!("{} accuracy, {} removal", kind.name().to_uppercase(), mode.name()),
        x_label: "removed fraction p".into(),
        y_label: "accuracy".into(),
        series: vec![
            Series::new("trial", curve(|r| r.trial_accuracy), "#d62728", 1.0),
            Series::new("window", curve(|r| r.window_accuracy), "#1f77b4", 3.0),
        ],
        y_range: Some((0.0, 1.0)),
        zero_line: false,
    })
}

fn difference_chart(cmp: &Comparison, mode: RemovalMode) -> Option<Chart> {
    let cells: Vec<_> = cmp.cells.iter().filter(|c| c.mode == mode).collect();
    if cells.is_empty() {
        return None;
    }
    let mut groups: Vec<(u32, u32, u32)> = cells
        .iter()
        .map(|c| (c.subject, c.train_session, c.test_session))
        .collect();
    groups.dedup();
    let mut series: Vec<Series> = groups
        .iter()
        .enumerate()
        .map(|(i, &(s, a, b))| {
            let points = cells
                .iter()
                .filter(|c| (c.subject, c.train_session, c.test_session) == (s, a, b))
                .map(|c| (c.removal_fraction, c.window_difference))
                .collect();
            let mut line = Series::new(format!("S{s} {a}->{b}"), points, palette(i + 1), 1.0);
            line.dashed = true;
            line
        })
        .collect();
    let mut levels: Vec<f64> = cells.iter().map(|c| c.removal_fraction).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let mean_line = levels
        .iter()
        .map(|&p| {
            (
                p,
                mean(
                    cells
                        .iter()
                        .filter(|c| c.removal_fraction == p)
                        .map(|c| c.window_difference),
                ),
            )
        })
        .collect();
    series.push(Series::new("mean", mean_line, "#000000", 3.0));
    Some(Chart {
        title: format!("DAE - SVM window accuracy, {} removal", mode.name()),
        x_label: "removed fraction p".into(),
        y_label: "accuracy difference".into(),
        series,
        y_range: None,
        zero_line: true,
    })
}

fn comparison_csv(cmp: &Comparison, prov: &Provenance) -> Vec<u8> {
    let header = io::strings([
        "subject",
        "train_session",
        "test_session",
        "mode",
        "removal_fraction",
        "window_difference",
        "trial_difference",
    ]);
    let mut doc = CsvDoc::new(&prov.comment(&[("grand_mean", cmp.grand_mean.to_string())]), &header);
    for c in &cmp.cells {
        doc.row(&[
            c.subject.to_string(),
            c.train_session.to_string(),
            c.test_session.to_string(),
            c.mode.name().to_string(),
            c.removal_fraction.to_string(),
            c.window_difference.to_string(),
            c.trial_difference.to_string(),
        ]);
    }
    doc.into_bytes()
}

fn experiment(cli: &Cli, cfg: &RunConfig, prov: &Provenance, dataset: &Dataset) -> CliResult<()> {
    let protocol = &cfg.protocol;
    let pairs = session_pairs(dataset);
    if pairs.is_empty() {
        return Err(CliError::usage("dataset has no consecutive session pairs"));
    }
    let rows: Vec<Vec<ReportRow>> = pairs
        .par_iter()
        .map(|&(subject, train, test)| evaluate_pair(dataset, protocol, subject, train, test))
        .collect::<Result<_, _>>()
        .map_err(runtime)?;
    let report = EvalReport::from_rows(cfg.master_seed, rows.into_iter().flatten().collect());

    match cli.format {
        Format::Csv => io::write_file(&cli.out.join("report.csv"), &report_csv(&report, prov))?,
        Format::Json => io::write_file(&cli.out.join("report.json"), &json_bytes(&Tagged::new(prov, &report)))?,
    }
    for &mode in &protocol.modes {
        for &kind in &protocol.classifiers {
            if let Some(chart) = accuracy_chart(&report, mode, kind) {
                let name = format!("accuracy_{}_{}.svg", mode.name(), kind.name());
                io::write_file(&cli.out.join(name), chart.render().as_bytes())?;
            }
        }
    }
    let both =
        protocol.classifiers.contains(&ClassifierKind::Dae) && protocol.classifiers.contains(&ClassifierKind::Svm);
    if both {
        let cmp = compare_dae_svm(&report).map_err(runtime)?;
        match cli.format {
            Format::Csv => io::write_file(&cli.out.join("comparison.csv"), &comparison_csv(&cmp, prov))?,
            Format::Json => io::write_file(&cli.out.join("comparison.json"), &json_bytes(&Tagged::new(prov, &cmp)))?,
        }
        for &mode in &protocol.modes {
            if let Some(chart) = difference_chart(&cmp, mode) {
                io::write_file(
                    &cli.out.join(format!("difference_{}.svg", mode.name())),
                    chart.render().as_bytes(),
                )?;
            }
        }
    }

    println!("{} cells over {} session pairs", report.rows.len(), pairs.len());
    for &mode in &protocol.modes {
        for &kind in &protocol.classifiers {
            let line: Vec<String> = protocol
                .removal_levels
                .iter()
                .filter_map(|&p| {
                    report
                        .mean_window_accuracy(mode, p, kind)
                        .map(|a| format!("{p:.1}:{a:.3}"))
                })
                .collect();
            println!("{:<6} {:<4} {}", mode.name(), kind.name(), line.join(" "));
        }
    }
    Ok(())
}

fn train(cli: &Cli, cfg: &RunConfig, _prov: &Provenance, rows: &[FeatureRow], kind: ClassifierKind) -> CliResult<()> {
    let features: Vec<Vec<f64>> = rows.iter().map(|r| r.values.clone()).collect();
    let labels: Vec<usize> = rows.iter().map(|r| r.label).collect();
    let seed = seed::derive(cfg.master_seed, &[TRAIN_STREAM]);
    let classifier = train_classifier(kind, &features, &labels, &cfg.protocol.training, seed).map_err(|e| match e {
        gapband_core::Error::SingleClassData | gapband_core::Error::InvalidLabel(_) => {
            CliError::usage(format!("training data: {e}"))
        }
        other => runtime(other),
    })?;
    let hits = features
        .iter()
        .zip(&labels)
        .map(|(x, &y)| classifier.predict(x).map(|p| p.0 == y))
        .collect::<Result<Vec<bool>, _>>()
        .map_err(runtime)?;
    let accuracy = hits.iter().filter(|&&h| h).count() as f64 / hits.len() as f64;
    let model = ModelFile::new(classifier, seed, rows.len(), accuracy);
    let path = cli.out.join("model.json");
    io::write_file(&path, model.to_json().as_bytes())?;
    println!("in-sample window accuracy: {accuracy}");
    println!("model -> {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct PredictionJson {
    subject: u32,
    session: u32,
    trial: u32,
    segment: usize,
    label: usize,
    predicted: usize,
    score: f64,
}

fn predict(cli: &Cli, prov: &Provenance, model: &ModelFile, rows: &[FeatureRow]) -> CliResult<()> {
    let dim = rows[0].values.len();
    if dim != model.feature_dim {
        return Err(CliError::usage(format!(
            "feature dimension mismatch: model expects {}, input has {dim}",
            model.feature_dim
        )));
    }
    let predictions = rows
        .iter()
        .map(|r| {
            model
                .classifier
                .predict(&r.values)
                .map(|(predicted, score)| PredictionJson {
                    subject: r.subject,
                    session: r.session,
                    trial: r.trial,
                    segment: r.segment,
                    label: r.label,
                    predicted,
                    score,
                })
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(runtime)?;
    let accuracy = predictions.iter().filter(|p| p.predicted == p.label).count() as f64 / predictions.len() as f64;
    match cli.format {
        Format::Csv => {
            let header = io::strings(["subject", "session", "trial", "segment", "label", "predicted", "score"]);
            let mut doc = CsvDoc::new(&prov.comment(&[("accuracy", accuracy.to_string())]), &header);
            for p in &predictions {
                doc.row(&[
                    p.subject.to_string(),
                    p.session.to_string(),
                    p.trial.to_string(),
                    p.segment.to_string(),
                    p.label.to_string(),
                    p.predicted.to_string(),
                    p.score.to_string(),
                ]);
            }
            io::write_file(&cli.out.join("predictions.csv"), &doc.into_bytes())?;
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Doc {
                accuracy: f64,
                predictions: Vec<PredictionJson>,
            }
            io::write_file(
                &cli.out.join("predictions.json"),
                &json_bytes(&Tagged::new(prov, Doc { accuracy, predictions })),
            )?;
        }
    }
    println!("window accuracy: {accuracy}");
    Ok(())
}

fn mask(cli: &Cli, cfg: &RunConfig, prov: &Provenance, dataset: &Dataset) -> CliResult<()> {
    let mut masks = String::new();
    let mut trials = Vec::with_capacity(dataset.trials.len());
    for t in &dataset.trials {
        let spec = RemovalSpec {
            block_width_mean: cfg.protocol.block_width_mean,
            block_width_std: cfg.protocol.block_width_std,
            ..RemovalSpec::new(
                cfg.mask.mode,
                cfg.mask.fraction,
                seed::derive(
                    cfg.master_seed,
                    &[
                        MASK_STREAM,
                        u64::from(t.subject),
                        u64::from(t.session),
                        u64::from(t.trial),
                    ],
                ),
            )
        };
        let m = spec.mask(t.len()).map_err(runtime)?;
        writeln!(
            masks,
            "subject={} session={} trial={} {}",
            t.subject,
            t.session,
            t.trial,
            io::mask_to_rle(&m)
        )
        .unwrap();
        trials.push(m.apply(t).map_err(runtime)?);
    }
    let header = prov.comment(&[
        ("mode", cfg.mask.mode.name().into()),
        ("fraction", cfg.mask.fraction.to_string()),
    ]);
    io::write_file(&cli.out.join("masks.txt"), format!("{header}\n{masks}").as_bytes())?;
    io::save_dataset(&Dataset::new(trials), &cli.out.join("masked.csv"), prov)?;
    println!("{} trials masked -> {}", dataset.trials.len(), cli.out.display());
    Ok(())
}
