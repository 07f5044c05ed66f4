//! Binary RBF-kernel SVM trained on the dual with an SMO-style solver.
//!
//! The solver minimises `f(α) = ½ αᵀQα − eᵀα` subject to `0 ≤ α ≤ C` and
//! `yᵀα = 0`, with `Q_ij = y_i y_j K(x_i, x_j)`. Each iteration updates the
//! maximal violating pair analytically; iteration stops once the pair's
//! violation drops below the tolerance.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::seed;
use crate::{Error, Result};

const MIN_CURVATURE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SvmParams {
    /// Box constraint.
    pub c: f64,
    /// RBF width; `None` resolves to `1 / feature_dim`.
    pub gamma: Option<f64>,
    /// KKT tolerance on the maximal violating pair.
    pub tolerance: f64,
    /// Iteration cap, in multiples of the training-set size.
    pub max_passes: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            gamma: None,
            tolerance: 1e-3,
            max_passes: 1000,
        }
    }
}

impl SvmParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.c) || !positive(self.tolerance) || self.gamma.is_some_and(|g| !positive(g)) {
            return Err(Error::InvalidParameter(alloc::format!("svm params {self:?}")));
        }
        if self.max_passes == 0 {
            return Err(Error::InvalidParameter("svm max_passes must be positive".into()));
        }
        Ok(())
    }

    pub fn resolved_gamma(&self, dim: usize) -> f64 {
        self.gamma.unwrap_or(1.0 / dim as f64)
    }
}

pub fn squared_distance(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `exp(−γ‖u − v‖²)`
pub fn rbf(u: &[f64], v: &[f64], gamma: f64) -> f64 {
    libm::exp(-gamma * squared_distance(u, v))
}

/// Maps class ids {0, 1} to SVM labels {−1, +1}.
pub fn labels_from_classes(classes: &[usize]) -> Result<Vec<i8>> {
    classes
        .iter()
        .map(|&c| match c {
            0 => Ok(-1),
            1 => Ok(1),
            other => Err(Error::InvalidLabel(other as i64)),
        })
        .collect()
}

pub fn class_from_label(label: i8) -> usize {
    usize::from(label > 0)
}

/// Solution of the dual problem on a precomputed kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// SMO on a dense row-major `n × n` kernel matrix.
pub fn solve_dual(kernel: &[f64], y: &[f64], c: f64, tolerance: f64, max_iterations: usize) -> DualSolution {
    let n = y.len();
    let q = |i: usize, j: usize| y[i] * y[j] * kernel[i * n + j];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iterations {
        // i maximises −y∇f over I_up, j minimises it over I_low.
        let (mut i, mut gmax) = (usize::MAX, f64::NEG_INFINITY);
        let (mut j, mut gmin) = (usize::MAX, f64::INFINITY);
        for t in 0..n {
            let v = -y[t] * grad[t];
            let up = (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0);
            let low = (y[t] < 0.0 && alpha[t] < c) || (y[t] > 0.0 && alpha[t] > 0.0);
            if up && v > gmax {
                gmax = v;
                i = t;
            }
            if low && v < gmin {
                gmin = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let curvature = (q(i, i) + q(j, j) + 2.0 * q(i, j)).max(MIN_CURVATURE);
            let delta = (-grad[i] - grad[j]) / curvature;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let curvature = (q(i, i) + q(j, j) - 2.0 * q(i, j)).max(MIN_CURVATURE);
            let delta = (grad[i] - grad[j]) / curvature;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (k, g) in grad.iter_mut().enumerate() {
            *g += q(i, k) * di + q(j, k) * dj;
        }
    }
    let rho = compute_rho(&alpha, &grad, y, c);
    DualSolution {
        alpha,
        rho,
        iterations,
        converged,
    }
}

fn compute_rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum) = (0usize, 0.0);
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum += yg;
        }
    }
    if free > 0 {
        sum / free as f64
    } else {
        0.5 * (ub + lb)
    }
}

/// Dual objective `Σα − ½ Σ α_i α_j y_i y_j K_ij` (to be maximised).
pub fn dual_objective(kernel: &[f64], y: &[f64], alpha: &[f64]) -> f64 {
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alpha[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * kernel[i * n + j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

pub fn kernel_matrix(features: &[Vec<f64>], gamma: f64) -> Vec<f64> {
    let n = features.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = 1.0;
        for j in 0..i {
            let v = rbf(&features[i], &features[j], gamma);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

/// Trained binary RBF SVM.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SvmModel {
    pub support_vectors: Vec<Vec<f64>>,
    /// `α_i y_i` per support vector.
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub params: SvmParams,
    pub converged: bool,
    pub iterations: usize,
}

fn check_training_set(features: &[Vec<f64>], labels: &[i8]) -> Result<usize> {
    if features.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: features.len(),
            found: labels.len(),
        });
    }
    if features.len() < 2 {
        return Err(Error::EmptyInput);
    }
    if let Some(&bad) = labels.iter().find(|&&l| l != 1 && l != -1) {
        return Err(Error::InvalidLabel(bad as i64));
    }
    if !(labels.contains(&1) && labels.contains(&-1)) {
        return Err(Error::SingleClassData);
    }
    let dim = features[0].len();
    if let Some(row) = features.iter().find(|r| r.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: row.len(),
        });
    }
    Ok(dim)
}

/// Trains on labels in {−1, +1}. A model that hit the iteration cap is still
/// returned, with `converged = false`.
pub fn train_svm(features: &[Vec<f64>], labels: &[i8], params: &SvmParams) -> Result<SvmModel> {
    params.validate()?;
    let dim = check_training_set(features, labels)?;
    let gamma = params.resolved_gamma(dim);
    let kernel = kernel_matrix(features, gamma);
    let y: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
    let sol = solve_dual(
        &kernel,
        &y,
        params.c,
        params.tolerance,
        params.max_passes.saturating_mul(features.len()),
    );
    Ok(SvmModel::from_solution(features, &y, &sol, gamma, *params))
}

impl SvmModel {
    fn from_solution(features: &[Vec<f64>], y: &[f64], sol: &DualSolution, gamma: f64, params: SvmParams) -> Self {
        let (support_vectors, coefficients) = sol
            .alpha
            .iter()
            .zip(y)
            .zip(features)
            .filter(|((&a, _), _)| a > 0.0)
            .map(|((&a, &yi), x)| (x.clone(), a * yi))
            .unzip();
        Self {
            support_vectors,
            coefficients,
            bias: -sol.rho,
            gamma,
            params,
            converged: sol.converged,
            iterations: sol.iterations,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.support_vectors.first().map_or(0, Vec::len)
    }

    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        Ok(self
            .support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, coef)| coef * rbf(sv, x, self.gamma))
            .sum::<f64>()
            + self.bias)
    }

    /// Dual objective of the stored solution; zero coefficients do not contribute.
    pub fn dual_objective(&self) -> f64 {
        let mut value: f64 = self.coefficients.iter().map(|c| c.abs()).sum();
        for (si, ci) in self.support_vectors.iter().zip(&self.coefficients) {
            for (sj, cj) in self.support_vectors.iter().zip(&self.coefficients) {
                value -= 0.5 * ci * cj * rbf(si, sj, self.gamma);
            }
        }
        value
    }
}

/// Sign of the decision value (0 maps to +1) and the value itself.
pub fn predict_svm(model: &SvmModel, x: &[f64]) -> Result<(i8, f64)> {
    let v = model.decision_value(x)?;
    Ok((if v >= 0.0 { 1 } else { -1 }, v))
}

/// Candidate `(C, γ)` values for cross-validation; `None` in `gammas` is `1/d`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct HyperGrid {
    pub cs: Vec<f64>,
    #[cfg_attr(feature = "serde", serde(with = "gamma_list"))]
    pub gammas: Vec<Option<f64>>,
}

/// Writes `None` as the string `"auto"` so the grid survives formats
/// without nulls.
#[cfg(feature = "serde")]
mod gamma_list {
    use alloc::vec::Vec;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Entry {
        Value(f64),
        Auto(Auto),
    }

    #[derive(Serialize, Deserialize)]
    #[serde(rename_all = "lowercase")]
    enum Auto {
        Auto,
    }

    pub fn serialize<S: Serializer>(gammas: &[Option<f64>], s: S) -> Result<S::Ok, S::Error> {
        let entries: Vec<Entry> = gammas
            .iter()
            .map(|g| g.map_or(Entry::Auto(Auto::Auto), Entry::Value))
            .collect();
        entries.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Option<f64>>, D::Error> {
        let entries = Vec::<Entry>::deserialize(d)?;
        Ok(entries
            .into_iter()
            .map(|e| match e {
                Entry::Value(v) => Some(v),
                Entry::Auto(_) => None,
            })
            .collect())
    }
}

impl Default for HyperGrid {
    fn default() -> Self {
        Self {
            cs: vec![0.1, 1.0, 10.0, 100.0],
            gammas: vec![Some(0.01), Some(0.1), None, Some(1.0), Some(10.0)],
        }
    }
}

/// Outcome of [`select_hyperparams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub params: SvmParams,
    pub cv_accuracy: f64,
}

/// Stratified, seeded fold assignment.
pub fn stratified_folds(labels: &[i8], folds: usize, seed: u64) -> Vec<usize> {
    let mut assignment = vec![0; labels.len()];
    let mut rng = seed::rng(seed);
    let mut next = 0;
    for class in [-1i8, 1] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            assignment[i] = next % folds;
            next += 1;
        }
    }
    assignment
}

/// K-fold cross-validated grid search. Ties prefer the smaller `C`, then
/// the smaller resolved `γ`.
pub fn select_hyperparams(
    features: &[Vec<f64>],
    labels: &[i8],
    grid: &HyperGrid,
    base: &SvmParams,
    folds: usize,
    seed: u64,
) -> Result<Selection> {
    let dim = check_training_set(features, labels)?;
    if grid.cs.is_empty() || grid.gammas.is_empty() {
        return Err(Error::InvalidParameter("empty hyperparameter grid".into()));
    }
    if folds < 2 {
        return Err(Error::InvalidParameter(
            "cross-validation needs at least 2 folds".into(),
        ));
    }
    let n = features.len();
    let assignment = stratified_folds(labels, folds, seed);
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..i {
            let d = squared_distance(&features[i], &features[j]);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }

    let mut candidates: Vec<SvmParams> = Vec::new();
    for &c in &grid.cs {
        for &gamma in &grid.gammas {
            candidates.push(SvmParams {
                c,
                gamma: Some(SvmParams { gamma, ..*base }.resolved_gamma(dim)),
                ..*base
            });
        }
    }
    candidates.sort_by(|a, b| a.c.total_cmp(&b.c).then(a.gamma.unwrap().total_cmp(&b.gamma.unwrap())));

    let mut best: Option<Selection> = None;
    for params in candidates {
        params.validate()?;
        let gamma = params.gamma.unwrap();
        let mut fold_acc = 0.0;
        for fold in 0..folds {
            let train: Vec<usize> = (0..n).filter(|&i| assignment[i] != fold).collect();
            let test: Vec<usize> = (0..n).filter(|&i| assignment[i] == fold).collect();
            if test.is_empty() {
                continue;
            }
            let train_x: Vec<Vec<f64>> = train.iter().map(|&i| features[i].clone()).collect();
            let train_y: Vec<i8> = train.iter().map(|&i| labels[i]).collect();
            check_training_set(&train_x, &train_y)?;
            let m = train.len();
            let mut kernel = vec![0.0; m * m];
            for (a, &i) in train.iter().enumerate() {
                for (b, &j) in train.iter().enumerate() {
                    kernel[a * m + b] = libm::exp(-gamma * dist[i * n + j]);
                }
            }
            let y: Vec<f64> = train_y.iter().map(|&l| f64::from(l)).collect();
            let sol = solve_dual(
                &kernel,
                &y,
                params.c,
                params.tolerance,
                params.max_passes.saturating_mul(m),
            );
            let model = SvmModel::from_solution(&train_x, &y, &sol, gamma, params);
            let hits = test
                .iter()
                .filter(|&&i| predict_svm(&model, &features[i]).map(|p| p.0) == Ok(labels[i]))
                .count();
            fold_acc += hits as f64 / test.len() as f64;
        }
        let cv_accuracy = fold_acc / folds as f64;
        if best.as_ref().is_none_or(|b| cv_accuracy > b.cv_accuracy) {
            best = Some(Selection { params, cv_accuracy });
        }
    }
    best.ok_or(Error::EmptyInput)
}
