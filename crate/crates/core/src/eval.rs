//! Session-to-session evaluation: train on session `k`, test on `k + 1`
//! under increasing data removal, and score per window and per trial.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::corruption::{RemovalMode, RemovalSpec};
use crate::dae::{DaeClassifier, DaeParams};
use crate::features::FeaturePipeline;
use crate::seed;
use crate::signal::{Dataset, Trial};
use crate::svm::{self, HyperGrid, SvmModel, SvmParams};
use crate::{Error, Result};

const MASK_STREAM: u64 = 10;
const DAE_STREAM: u64 = 11;
const SVM_STREAM: u64 = 12;
const SHUFFLE_STREAM: u64 = 13;
const TRAIN_MASK_STREAM: u64 = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ClassifierKind {
    Dae,
    Svm,
}

impl ClassifierKind {
    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Dae => "dae",
            ClassifierKind::Svm => "svm",
        }
    }
}

impl core::str::FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dae" => Ok(ClassifierKind::Dae),
            "svm" => Ok(ClassifierKind::Svm),
            other => Err(Error::InvalidParameter(alloc::format!("classifier {other:?}"))),
        }
    }
}

/// A trained classifier of either kind.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum Classifier {
    Dae(DaeClassifier),
    Svm(SvmModel),
}

impl Classifier {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            Classifier::Dae(_) => ClassifierKind::Dae,
            Classifier::Svm(_) => ClassifierKind::Svm,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Classifier::Dae(c) => c.input_dim(),
            Classifier::Svm(m) => m.input_dim(),
        }
    }

    /// Class id and a score: the class-1 probability for the DAE network,
    /// the decision value for the SVM.
    pub fn predict(&self, features: &[f64]) -> Result<(usize, f64)> {
        match self {
            Classifier::Dae(c) => {
                let p = c.predict(features)?;
                let score = p.probabilities.get(1).copied().unwrap_or(0.0);
                Ok((p.class, score))
            }
            Classifier::Svm(m) => {
                let (label, value) = svm::predict_svm(m, features)?;
                Ok((svm::class_from_label(label), value))
            }
        }
    }
}

/// Settings for training either classifier.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct TrainingConfig {
    pub dae: DaeParams,
    pub svm_base: SvmParams,
    pub svm_grid: HyperGrid,
    pub cv_folds: usize,
    /// Learning-rate halvings allowed when DAE training diverges.
    pub max_lr_halvings: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            dae: DaeParams::default(),
            svm_base: SvmParams::default(),
            svm_grid: HyperGrid::default(),
            cv_folds: 5,
            max_lr_halvings: 4,
        }
    }
}

/// Trains one classifier; `seed` drives weight init, shuffling and CV folds.
pub fn train_classifier(
    kind: ClassifierKind,
    features: &[Vec<f64>],
    labels: &[usize],
    config: &TrainingConfig,
    seed: u64,
) -> Result<Classifier> {
    match kind {
        ClassifierKind::Dae => {
            let params = DaeParams { seed, ..config.dae };
            DaeClassifier::fit_with_backoff(features, labels, &params, config.max_lr_halvings).map(Classifier::Dae)
        }
        ClassifierKind::Svm => {
            let y = svm::labels_from_classes(labels)?;
            let sel = svm::select_hyperparams(features, &y, &config.svm_grid, &config.svm_base, config.cv_folds, seed)?;
            svm::train_svm(features, &y, &sel.params).map(Classifier::Svm)
        }
    }
}

/// Sliding-window score. Dropped windows count in neither numerator nor
/// denominator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowScore {
    pub accuracy: f64,
    pub correct: usize,
    pub valid: usize,
    pub dropped: usize,
}

/// `None` predictions mark dropped windows.
pub fn window_accuracy(predictions: &[Option<usize>], labels: &[usize]) -> Result<WindowScore> {
    if predictions.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            found: predictions.len(),
        });
    }
    let valid = predictions.iter().flatten().count();
    if valid == 0 {
        return Err(Error::EmptyInput);
    }
    let correct = predictions.iter().zip(labels).filter(|(p, l)| **p == Some(**l)).count();
    Ok(WindowScore {
        accuracy: correct as f64 / valid as f64,
        correct,
        valid,
        dropped: predictions.len() - valid,
    })
}

/// Majority class over the valid windows of one trial; an exact tie goes to
/// the chronologically last valid window. `None` if no window is valid.
pub fn majority_vote(windows: &[Option<usize>]) -> Option<usize> {
    let classes = windows.iter().flatten().copied().max()? + 1;
    let mut counts = vec![0usize; classes];
    for &c in windows.iter().flatten() {
        counts[c] += 1;
    }
    let top = *counts.iter().max()?;
    if counts.iter().filter(|&&n| n == top).count() == 1 {
        return counts.iter().position(|&n| n == top);
    }
    windows.iter().rev().flatten().find(|&&c| counts[c] == top).copied()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialScore {
    pub accuracy: f64,
    pub correct: usize,
    pub evaluated: usize,
    /// Trials with no valid window; see [`Error::TrialWithNoValidWindows`].
    pub excluded: Vec<usize>,
}

pub fn trial_accuracy(window_predictions: &[Vec<Option<usize>>], trial_labels: &[usize]) -> Result<TrialScore> {
    if window_predictions.len() != trial_labels.len() {
        return Err(Error::DimensionMismatch {
            expected: trial_labels.len(),
            found: window_predictions.len(),
        });
    }
    let mut correct = 0;
    let mut evaluated = 0;
    let mut excluded = Vec::new();
    for (trial, (windows, &label)) in window_predictions.iter().zip(trial_labels).enumerate() {
        match majority_vote(windows) {
            Some(vote) => {
                evaluated += 1;
                correct += usize::from(vote == label);
            }
            None => excluded.push(trial),
        }
    }
    if evaluated == 0 {
        return Err(Error::TrialWithNoValidWindows {
            trial: excluded.first().copied().unwrap_or(0),
        });
    }
    Ok(TrialScore {
        accuracy: correct as f64 / evaluated as f64,
        correct,
        evaluated,
        excluded,
    })
}

/// The session-wise evaluation protocol.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct Protocol {
    pub removal_levels: Vec<f64>,
    pub modes: Vec<RemovalMode>,
    pub classifiers: Vec<ClassifierKind>,
    pub master_seed: u64,
    /// Mask training sessions with the same mode and level as test sessions.
    pub mask_training: bool,
    /// Permute training labels (a chance-level baseline).
    pub shuffle_training_labels: bool,
    pub block_width_mean: f64,
    pub block_width_std: f64,
    pub pipeline: FeaturePipeline,
    pub training: TrainingConfig,
}

impl Default for Protocol {
    fn default() -> Self {
        Self {
            removal_levels: (1..=8).map(|k| f64::from(k) / 10.0).collect(),
            modes: vec![RemovalMode::Point, RemovalMode::Block],
            classifiers: vec![ClassifierKind::Dae, ClassifierKind::Svm],
            master_seed: 0,
            mask_training: false,
            shuffle_training_labels: false,
            block_width_mean: 20.0,
            block_width_std: 10.0,
            pipeline: FeaturePipeline::default(),
            training: TrainingConfig::default(),
        }
    }
}

impl Protocol {
    pub fn validate(&self) -> Result<()> {
        self.pipeline.validate()?;
        self.training.dae.validate()?;
        self.training.svm_base.validate()?;
        if self.removal_levels.is_empty() || self.modes.is_empty() || self.classifiers.is_empty() {
            return Err(Error::InvalidParameter(
                "protocol needs at least one level, mode and classifier".into(),
            ));
        }
        for &p in &self.removal_levels {
            RemovalSpec::new(RemovalMode::Point, p, 0).validate()?;
        }
        Ok(())
    }

    fn removal(&self, mode: RemovalMode, p: f64, seed: u64) -> RemovalSpec {
        RemovalSpec {
            block_width_mean: self.block_width_mean,
            block_width_std: self.block_width_std,
            ..RemovalSpec::new(mode, p, seed)
        }
    }
}

/// One (subject, session pair, mode, level, classifier) cell.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReportRow {
    pub subject: u32,
    pub train_session: u32,
    pub test_session: u32,
    pub mode: RemovalMode,
    pub removal_fraction: f64,
    pub classifier: ClassifierKind,
    pub window_accuracy: f64,
    pub trial_accuracy: f64,
    pub valid_segments: usize,
    pub dropped_segments: usize,
    pub evaluated_trials: usize,
    pub excluded_trials: usize,
    /// Fine-tuning learning rate actually used (DAE only).
    pub learning_rate: Option<f64>,
    /// Selected `(C, γ)` (SVM only).
    pub svm_c: Option<f64>,
    pub svm_gamma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    pub master_seed: u64,
    pub rows: Vec<ReportRow>,
}

impl EvalReport {
    /// Sorts rows into a canonical order, so assembly order does not matter.
    pub fn from_rows(master_seed: u64, mut rows: Vec<ReportRow>) -> Self {
        rows.sort_by(|a, b| {
            (a.subject, a.train_session, a.mode, a.classifier)
                .cmp(&(b.subject, b.train_session, b.mode, b.classifier))
                .then(a.removal_fraction.total_cmp(&b.removal_fraction))
        });
        Self { master_seed, rows }
    }

    /// Mean window accuracy over rows matching `mode`, `p` and `classifier`.
    pub fn mean_window_accuracy(&self, mode: RemovalMode, p: f64, classifier: ClassifierKind) -> Option<f64> {
        let vals: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.mode == mode && r.classifier == classifier && (r.removal_fraction - p).abs() < 1e-12)
            .map(|r| r.window_accuracy)
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

/// `(subject, train_session, test_session)` for every subject and every
/// session `s` whose successor `s + 1` exists.
pub fn session_pairs(dataset: &Dataset) -> Vec<(u32, u32, u32)> {
    let mut out = Vec::new();
    for subject in dataset.subjects() {
        let sessions = dataset.sessions(subject);
        for w in sessions.windows(2) {
            if w[1] == w[0] + 1 {
                out.push((subject, w[0], w[1]));
            }
        }
    }
    out
}

struct TrialWindows {
    label: usize,
    windows: Vec<Option<Vec<f64>>>,
}

fn session_windows(
    trials: &[&Trial],
    pipeline: &FeaturePipeline,
    mask: Option<&dyn Fn(&Trial) -> RemovalSpec>,
) -> Result<Vec<TrialWindows>> {
    trials
        .iter()
        .map(|&trial| {
            let masked;
            let source = match mask {
                Some(spec_for) => {
                    masked = spec_for(trial).mask(trial.len())?.apply(trial)?;
                    &masked
                }
                None => trial,
            };
            let windows = pipeline
                .trial_features(source)?
                .into_iter()
                .map(|w| w.map(|fv| fv.into_values()))
                .collect();
            Ok(TrialWindows {
                label: trial.label,
                windows,
            })
        })
        .collect()
}

fn training_set(sessions: &[TrialWindows]) -> (Vec<Vec<f64>>, Vec<usize>) {
    sessions
        .iter()
        .flat_map(|t| t.windows.iter().flatten().map(move |w| (w.clone(), t.label)))
        .unzip()
}

fn train_all(
    protocol: &Protocol,
    windows: &[TrialWindows],
    subject: u32,
    train_session: u32,
) -> Result<Vec<Classifier>> {
    let (features, mut labels) = training_set(windows);
    if features.is_empty() {
        return Err(Error::EmptyInput);
    }
    let base = [u64::from(subject), u64::from(train_session)];
    if protocol.shuffle_training_labels {
        labels.shuffle(&mut seed::rng_at(
            protocol.master_seed,
            &[SHUFFLE_STREAM, base[0], base[1]],
        ));
    }
    protocol
        .classifiers
        .iter()
        .map(|&kind| {
            let stream = match kind {
                ClassifierKind::Dae => DAE_STREAM,
                ClassifierKind::Svm => SVM_STREAM,
            };
            let s = seed::derive(protocol.master_seed, &[stream, base[0], base[1]]);
            train_classifier(kind, &features, &labels, &protocol.training, s)
        })
        .collect()
}

fn score_cell(classifier: &Classifier, windows: &[TrialWindows]) -> Result<(WindowScore, TrialScore)> {
    let mut flat_pred = Vec::new();
    let mut flat_label = Vec::new();
    let mut per_trial = Vec::with_capacity(windows.len());
    for t in windows {
        let preds = t
            .windows
            .iter()
            .map(|w| w.as_ref().map(|x| classifier.predict(x).map(|p| p.0)).transpose())
            .collect::<Result<Vec<_>>>()?;
        flat_label.extend(core::iter::repeat_n(t.label, preds.len()));
        flat_pred.extend_from_slice(&preds);
        per_trial.push(preds);
    }
    let labels: Vec<usize> = windows.iter().map(|t| t.label).collect();
    Ok((
        window_accuracy(&flat_pred, &flat_label)?,
        trial_accuracy(&per_trial, &labels)?,
    ))
}

fn mask_seed(master: u64, stream: u64, trial: &Trial, mode: RemovalMode, p: f64) -> u64 {
    seed::derive(
        master,
        &[
            stream,
            u64::from(trial.subject),
            u64::from(trial.session),
            u64::from(trial.trial),
            mode as u64,
            p.to_bits(),
        ],
    )
}

/// Evaluates every mode, level and classifier for one session pair.
pub fn evaluate_pair(
    dataset: &Dataset,
    protocol: &Protocol,
    subject: u32,
    train_session: u32,
    test_session: u32,
) -> Result<Vec<ReportRow>> {
    let with_context = |p: f64| {
        move |e: Error| Error::Cell {
            subject,
            train: train_session,
            test: test_session,
            p,
            source: Box::new(e),
        }
    };
    let train_trials = dataset.session_trials(subject, train_session);
    let test_trials = dataset.session_trials(subject, test_session);
    if train_trials.is_empty() || test_trials.is_empty() {
        return Err(with_context(0.0)(Error::EmptyInput));
    }
    let master = protocol.master_seed;

    let clean_classifiers = if protocol.mask_training {
        None
    } else {
        let windows = session_windows(&train_trials, &protocol.pipeline, None).map_err(with_context(0.0))?;
        Some(train_all(protocol, &windows, subject, train_session).map_err(with_context(0.0))?)
    };

    let mut rows = Vec::new();
    for &mode in &protocol.modes {
        for &p in &protocol.removal_levels {
            let spec_for = |t: &Trial| protocol.removal(mode, p, mask_seed(master, MASK_STREAM, t, mode, p));
            let test_windows =
                session_windows(&test_trials, &protocol.pipeline, Some(&spec_for)).map_err(with_context(p))?;
            let masked_classifiers;
            let classifiers = match &clean_classifiers {
                Some(c) => c,
                None => {
                    let train_spec =
                        |t: &Trial| protocol.removal(mode, p, mask_seed(master, TRAIN_MASK_STREAM, t, mode, p));
                    let windows = session_windows(&train_trials, &protocol.pipeline, Some(&train_spec))
                        .map_err(with_context(p))?;
                    masked_classifiers =
                        train_all(protocol, &windows, subject, train_session).map_err(with_context(p))?;
                    &masked_classifiers
                }
            };
            for classifier in classifiers {
                let (ws, ts) = score_cell(classifier, &test_windows).map_err(with_context(p))?;
                let (learning_rate, svm_c, svm_gamma) = match classifier {
                    Classifier::Dae(d) => (Some(d.params.lr_finetune), None, None),
                    Classifier::Svm(m) => (None, Some(m.params.c), Some(m.gamma)),
                };
                rows.push(ReportRow {
                    subject,
                    train_session,
                    test_session,
                    mode,
                    removal_fraction: p,
                    classifier: classifier.kind(),
                    window_accuracy: ws.accuracy,
                    trial_accuracy: ts.accuracy,
                    valid_segments: ws.valid,
                    dropped_segments: ws.dropped,
                    evaluated_trials: ts.evaluated,
                    excluded_trials: ts.excluded.len(),
                    learning_rate,
                    svm_c,
                    svm_gamma,
                });
            }
        }
    }
    Ok(rows)
}

/// Runs every session pair of `dataset` sequentially.
pub fn run_protocol(dataset: &Dataset, protocol: &Protocol) -> Result<EvalReport> {
    protocol.validate()?;
    let mut rows = Vec::new();
    for (subject, train, test) in session_pairs(dataset) {
        rows.extend(evaluate_pair(dataset, protocol, subject, train, test)?);
    }
    Ok(EvalReport::from_rows(protocol.master_seed, rows))
}

/// DAE minus SVM accuracy for one cell.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DifferenceCell {
    pub subject: u32,
    pub train_session: u32,
    pub test_session: u32,
    pub mode: RemovalMode,
    pub removal_fraction: f64,
    pub window_difference: f64,
    pub trial_difference: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SessionMean {
    pub subject: u32,
    pub train_session: u32,
    pub test_session: u32,
    pub mode: RemovalMode,
    pub mean_window_difference: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Comparison {
    pub cells: Vec<DifferenceCell>,
    pub session_means: Vec<SessionMean>,
    /// Mean window difference over all cells of each mode.
    pub mode_means: Vec<(RemovalMode, f64)>,
    pub grand_mean: f64,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// Window- and trial-accuracy differences, DAE minus SVM, per cell, per
/// session pair and overall.
pub fn compare_dae_svm(report: &EvalReport) -> Result<Comparison> {
    let key = |r: &ReportRow| {
        (
            r.subject,
            r.train_session,
            r.test_session,
            r.mode,
            r.removal_fraction.to_bits(),
        )
    };
    let mut cells = Vec::new();
    for dae in report.rows.iter().filter(|r| r.classifier == ClassifierKind::Dae) {
        let svm = report
            .rows
            .iter()
            .find(|r| r.classifier == ClassifierKind::Svm && key(r) == key(dae))
            .ok_or_else(|| Error::MissingCounterpart(describe(dae, "svm")))?;
        cells.push(DifferenceCell {
            subject: dae.subject,
            train_session: dae.train_session,
            test_session: dae.test_session,
            mode: dae.mode,
            removal_fraction: dae.removal_fraction,
            window_difference: dae.window_accuracy - svm.window_accuracy,
            trial_difference: dae.trial_accuracy - svm.trial_accuracy,
        });
    }
    if let Some(orphan) = report.rows.iter().find(|r| {
        r.classifier == ClassifierKind::Svm
            && !report
                .rows
                .iter()
                .any(|d| d.classifier == ClassifierKind::Dae && key(d) == key(r))
    }) {
        return Err(Error::MissingCounterpart(describe(orphan, "dae")));
    }
    if cells.is_empty() {
        return Err(Error::EmptyInput);
    }

    let mut groups: Vec<(u32, u32, u32, RemovalMode)> = cells
        .iter()
        .map(|c| (c.subject, c.train_session, c.test_session, c.mode))
        .collect();
    groups.sort();
    groups.dedup();
    let session_means = groups
        .into_iter()
        .map(|(subject, train_session, test_session, mode)| SessionMean {
            subject,
            train_session,
            test_session,
            mode,
            mean_window_difference: mean(
                cells
                    .iter()
                    .filter(|c| {
                        (c.subject, c.train_session, c.test_session, c.mode)
                            == (subject, train_session, test_session, mode)
                    })
                    .map(|c| c.window_difference),
            ),
        })
        .collect();
    let mut modes: Vec<RemovalMode> = cells.iter().map(|c| c.mode).collect();
    modes.sort();
    modes.dedup();
    let mode_means = modes
        .into_iter()
        .map(|m| {
            (
                m,
                mean(cells.iter().filter(|c| c.mode == m).map(|c| c.window_difference)),
            )
        })
        .collect();
    let grand_mean = mean(cells.iter().map(|c| c.window_difference));
    Ok(Comparison {
        cells,
        session_means,
        mode_means,
        grand_mean,
    })
}

fn describe(row: &ReportRow, missing: &str) -> String {
    alloc::format!(
        "{missing} at subject {}, sessions {}->{}, {} removal p = {}",
        row.subject,
        row.train_session,
        row.test_session,
        row.mode.name(),
        row.removal_fraction
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_accuracy_arithmetic() {
        let labels = vec![1; 25];
        let all: Vec<Option<usize>> = vec![Some(1); 25];
        assert_eq!(window_accuracy(&all, &labels).unwrap().accuracy, 1.0);
        let some: Vec<Option<usize>> = (0..25).map(|i| Some(usize::from(i < 13))).collect();
        assert_eq!(window_accuracy(&some, &labels).unwrap().accuracy, 0.52);
        assert_eq!(window_accuracy(&[], &[]).unwrap_err(), Error::EmptyInput);
    }

    #[test]
    fn dropped_windows_are_excluded() {
        let labels = vec![0; 25];
        let mut preds: Vec<Option<usize>> = (0..20).map(|i| Some(i % 2)).collect();
        preds.extend([None; 5]);
        let s = window_accuracy(&preds, &labels).unwrap();
        assert_eq!((s.accuracy, s.valid, s.dropped), (0.5, 20, 5));
    }

    #[test]
    fn margin_of_one_wins() {
        let w: Vec<Option<usize>> = (0..25).map(|i| Some(usize::from(i < 13))).collect();
        assert_eq!(majority_vote(&w), Some(1));
        assert_eq!(majority_vote(&[Some(0); 25]), Some(0));
    }

    #[test]
    fn tie_goes_to_last_window() {
        let mut w: Vec<Option<usize>> = (0..24).map(|i| Some(usize::from(i % 2 == 0))).collect();
        w.push(None);
        assert_eq!(*w.iter().rev().flatten().next().unwrap(), 0);
        assert_eq!(majority_vote(&w), Some(0));
        assert_eq!(majority_vote(&[None, None]), None);
    }

    #[test]
    fn trials_without_windows_are_excluded() {
        let preds = vec![vec![Some(1), Some(1)], vec![None, None], vec![Some(0)]];
        let s = trial_accuracy(&preds, &[1, 1, 1]).unwrap();
        assert_eq!(s.excluded, vec![1]);
        assert_eq!(s.evaluated, 2);
        assert_eq!(s.accuracy, 0.5);
        assert!(matches!(
            trial_accuracy(&[vec![None]], &[0]),
            Err(Error::TrialWithNoValidWindows { trial: 0 })
        ));
    }

    fn row(classifier: ClassifierKind, session: u32, p: f64, acc: f64) -> ReportRow {
        ReportRow {
            subject: 1,
            train_session: session,
            test_session: session + 1,
            mode: RemovalMode::Point,
            removal_fraction: p,
            classifier,
            window_accuracy: acc,
            trial_accuracy: acc,
            valid_segments: 1,
            dropped_segments: 0,
            evaluated_trials: 1,
            excluded_trials: 0,
            learning_rate: None,
            svm_c: None,
            svm_gamma: None,
        }
    }

    #[test]
    fn difference_sign_and_means() {
        let report = EvalReport::from_rows(
            0,
            vec![
                row(ClassifierKind::Dae, 1, 0.1, 0.9),
                row(ClassifierKind::Svm, 1, 0.1, 0.8),
                row(ClassifierKind::Dae, 1, 0.2, 0.7),
                row(ClassifierKind::Svm, 1, 0.2, 0.8),
                row(ClassifierKind::Dae, 2, 0.1, 0.6),
                row(ClassifierKind::Svm, 2, 0.1, 0.6),
                row(ClassifierKind::Dae, 2, 0.2, 0.5),
                row(ClassifierKind::Svm, 2, 0.2, 0.4),
            ],
        );
        let c = compare_dae_svm(&report).unwrap();
        assert!((c.cells[0].window_difference - 0.1).abs() < 1e-12);
        assert_eq!(c.session_means.len(), 2);
        let mean_of_means = c.session_means.iter().map(|s| s.mean_window_difference).sum::<f64>() / 2.0;
        assert!((c.grand_mean - mean_of_means).abs() < 1e-12);
    }

    #[test]
    fn self_comparison_is_zero() {
        let rows = vec![
            row(ClassifierKind::Dae, 1, 0.3, 0.75),
            row(ClassifierKind::Svm, 1, 0.3, 0.75),
        ];
        let c = compare_dae_svm(&EvalReport::from_rows(0, rows)).unwrap();
        assert!(c
            .cells
            .iter()
            .all(|d| d.window_difference == 0.0 && d.trial_difference == 0.0));
    }

    #[test]
    fn missing_counterpart() {
        let only_dae = EvalReport::from_rows(0, vec![row(ClassifierKind::Dae, 1, 0.3, 0.75)]);
        assert!(matches!(compare_dae_svm(&only_dae), Err(Error::MissingCounterpart(_))));
        let only_svm = EvalReport::from_rows(0, vec![row(ClassifierKind::Svm, 1, 0.3, 0.75)]);
        assert!(matches!(compare_dae_svm(&only_svm), Err(Error::MissingCounterpart(_))));
    }
}
