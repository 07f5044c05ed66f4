//! Independent reference computations shared by the integration tests.
//! Nothing here calls into the solver paths it is used to check.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Dense Gaussian elimination with partial pivoting.
pub fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            let (upper, lower) = a.split_at_mut(row);
            for (target, source) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *target -= f * source;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Fits `a cos(Ωt) + b sin(Ωt)` by forming the design matrix explicitly and
/// returns the mean square of the fitted sinusoid over the samples.
pub fn brute_force_ls_power(times: &[f64], values: &[f64], omega: f64) -> f64 {
    let design: Vec<[f64; 2]> = times.iter().map(|t| [(omega * t).cos(), (omega * t).sin()]).collect();
    let mut ata = vec![vec![0.0; 2]; 2];
    let mut aty = vec![0.0; 2];
    for (row, y) in design.iter().zip(values) {
        for i in 0..2 {
            aty[i] += row[i] * y;
            for j in 0..2 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let coef = solve_linear(ata, aty);
    design
        .iter()
        .map(|row| {
            let fit = coef[0] * row[0] + coef[1] * row[1];
            fit * fit
        })
        .sum::<f64>()
        / times.len() as f64
}

/// Direct DFT at bin `k`, scaled to the least-squares convention `2|X_k|²/T²`.
pub fn dft_power(values: &[f64], k: usize) -> f64 {
    let n = values.len() as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for (i, y) in values.iter().enumerate() {
        let ang = std::f64::consts::TAU * (k * i) as f64 / n;
        re += y * ang.cos();
        im -= y * ang.sin();
    }
    2.0 * (re * re + im * im) / (n * n)
}

/// Maximises `Σα − ½αᵀQα` over `{0 ≤ α ≤ C, yᵀα = 0}` by accelerated
/// projected gradient ascent. The projection solves for the multiplier of
/// the equality constraint by bisection.
pub fn projected_gradient_dual(kernel: &[Vec<f64>], y: &[f64], c: f64, iterations: usize) -> Vec<f64> {
    let n = y.len();
    let q: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| y[i] * y[j] * kernel[i][j]).collect())
        .collect();
    // Largest eigenvalue by power iteration.
    let mut v = vec![1.0; n];
    let mut lambda = 0.0;
    for _ in 0..500 {
        let w: Vec<f64> = (0..n).map(|i| (0..n).map(|j| q[i][j] * v[j]).sum()).collect();
        lambda = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = w.iter().map(|x| x / lambda).collect();
    }
    let step = 1.0 / (lambda * 1.01);
    let project = |v: &[f64]| -> Vec<f64> {
        let at = |mu: f64| -> (Vec<f64>, f64) {
            let a: Vec<f64> = v.iter().zip(y).map(|(vi, yi)| (vi - mu * yi).clamp(0.0, c)).collect();
            let s = a.iter().zip(y).map(|(ai, yi)| ai * yi).sum();
            (a, s)
        };
        let (mut lo, mut hi) = (-1e6, 1e6);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if at(mid).1 > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        at(0.5 * (lo + hi)).0
    };
    let objective = |a: &[f64]| -> f64 {
        let quad: f64 = (0..n).map(|i| (0..n).map(|j| a[i] * q[i][j] * a[j]).sum::<f64>()).sum();
        a.iter().sum::<f64>() - 0.5 * quad
    };
    let mut alpha = vec![0.0; n];
    let mut momentum = alpha.clone();
    let mut t = 1.0f64;
    let mut best = objective(&alpha);
    for _ in 0..iterations {
        let grad: Vec<f64> = (0..n)
            .map(|i| 1.0 - (0..n).map(|j| q[i][j] * momentum[j]).sum::<f64>())
            .collect();
        let next = project(
            &momentum
                .iter()
                .zip(&grad)
                .map(|(m, g)| m + step * g)
                .collect::<Vec<_>>(),
        );
        let value = objective(&next);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        if value < best {
            // Restart momentum when the objective stops increasing.
            momentum = alpha.clone();
            t = 1.0;
            continue;
        }
        best = value;
        momentum = next
            .iter()
            .zip(&alpha)
            .map(|(x, xp)| x + (t - 1.0) / t_next * (x - xp))
            .collect();
        alpha = next;
        t = t_next;
    }
    alpha
}

pub fn dual_value(kernel: &[Vec<f64>], y: &[f64], alpha: &[f64]) -> f64 {
    let n = y.len();
    let quad: f64 = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| alpha[i] * alpha[j] * y[i] * y[j] * kernel[i][j])
                .sum::<f64>()
        })
        .sum();
    alpha.iter().sum::<f64>() - 0.5 * quad
}

pub fn gaussian(rng: &mut impl Rng) -> f64 {
    // Box-Muller; test-only.
    let u1: f64 = rng.random_range(f64::EPSILON..1.0);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Two 56-dimensional Gaussian blobs at ±0.2·1 with σ = 0.05.
pub fn separable_blobs(per_class: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut r = rng(seed);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..2 * per_class {
        let class = i % 2;
        let centre = if class == 0 { -0.2 } else { 0.2 };
        x.push((0..56).map(|_| centre + 0.05 * gaussian(&mut r)).collect());
        y.push(class);
    }
    (x, y)
}

/// Central difference of `f` along every coordinate of `params`.
pub fn numeric_gradient(params: &[f64], eps: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut p = params.to_vec();
    (0..p.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + eps;
            let plus = f(&p);
            p[i] = orig - eps;
            let minus = f(&p);
            p[i] = orig;
            (plus - minus) / (2.0 * eps)
        })
        .collect()
}

/// Relative error with a floor on the denominator so that near-zero
/// gradients are compared in absolute terms.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}
