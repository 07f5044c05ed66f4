//! Least-squares (Lomb-Scargle) periodogram for unevenly spaced samples.
//!
//! At each probe frequency the model `a·cos(Ωt) + b·sin(Ωt)` is fitted to the
//! retained samples by solving the 2×2 normal equations `R [a b]ᵀ = r`. The
//! reported power is `(1/T)·rᵀR⁻¹r`, i.e. the mean square of the fitted
//! sinusoid over the `T` retained samples.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use crate::signal::TimeStampedSeries;
use crate::{Error, Result};

/// Fewest retained samples a fit is attempted on.
pub const MIN_SAMPLES: usize = 8;

/// Normal matrices with a larger 2-norm condition number are treated as singular.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Probe frequencies in Hz, strictly increasing and positive.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "Vec<f64>", into = "Vec<f64>"))]
pub struct FrequencyGrid {
    frequencies: Vec<f64>,
}

impl TryFrom<Vec<f64>> for FrequencyGrid {
    type Error = Error;

    fn try_from(frequencies: Vec<f64>) -> Result<Self> {
        Self::new(frequencies)
    }
}

impl From<FrequencyGrid> for Vec<f64> {
    fn from(grid: FrequencyGrid) -> Self {
        grid.frequencies
    }
}

impl FrequencyGrid {
    pub fn new(frequencies: Vec<f64>) -> Result<Self> {
        if frequencies.is_empty() {
            return Err(Error::InvalidParameter("empty frequency grid".into()));
        }
        if frequencies.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(Error::InvalidParameter(
                "grid frequencies must be finite and positive".into(),
            ));
        }
        if frequencies.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "grid frequencies must be strictly increasing".into(),
            ));
        }
        Ok(Self { frequencies })
    }

    /// `low, low + step, …` up to and including `high` (within 1e-9 · step).
    pub fn linear(low: f64, high: f64, step: f64) -> Result<Self> {
        if step.is_nan() || step <= 0.0 || high < low {
            return Err(Error::InvalidParameter(alloc::format!(
                "grid range [{low}, {high}] with step {step}"
            )));
        }
        let n = libm::floor((high - low) / step + 1e-9) as usize + 1;
        Self::new((0..n).map(|k| low + k as f64 * step).collect())
    }

    /// 8–27 Hz in 1 Hz steps: five points per motor-imagery subband.
    pub fn band_power_default() -> Self {
        Self::linear(8.0, 27.0, 1.0).expect("static grid")
    }

    /// 0.5–10 Hz in 0.25 Hz steps, used for the two-tone mixture display.
    pub fn mixture_default() -> Self {
        Self::linear(0.5, 10.0, 0.25).expect("static grid")
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// Fails if any probe frequency lies above the Nyquist limit of `sample_rate`.
    pub fn check_nyquist(&self, sample_rate: f64) -> Result<()> {
        let nyquist = sample_rate / 2.0;
        match self.frequencies.last() {
            Some(&f) if f > nyquist => Err(Error::InvalidParameter(alloc::format!(
                "grid frequency {f} Hz exceeds Nyquist limit {nyquist} Hz"
            ))),
            _ => Ok(()),
        }
    }
}

/// Accumulated normal equations of the two-parameter fit at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalMatrixStats {
    /// `Σ [cos cos, cos sin; sin cos, sin sin]`
    pub r_matrix: [[f64; 2]; 2],
    /// `Σ [cos·y, sin·y]`
    pub r_vector: [f64; 2],
    pub sample_count: usize,
}

/// Solution of the normal equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeastSquaresFit {
    pub cos_coef: f64,
    pub sin_coef: f64,
    pub power: f64,
}

impl NormalMatrixStats {
    pub fn accumulate(times: &[f64], values: &[f64], omega: f64) -> Self {
        let (mut cc, mut cs, mut ss, mut cy, mut sy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&t, &y) in times.iter().zip(values) {
            let (s, c) = libm::sincos(omega * t);
            cc += c * c;
            cs += c * s;
            ss += s * s;
            cy += c * y;
            sy += s * y;
        }
        Self {
            r_matrix: [[cc, cs], [cs, ss]],
            r_vector: [cy, sy],
            sample_count: times.len(),
        }
    }

    /// Ratio of the extreme eigenvalues of `R`; infinite when `R` is singular.
    pub fn condition_estimate(&self) -> f64 {
        let [[a, b], [_, c]] = self.r_matrix;
        let mean = 0.5 * (a + c);
        let radius = libm::hypot(0.5 * (a - c), b);
        let (hi, lo) = (mean + radius, mean - radius);
        if lo <= 0.0 || !lo.is_finite() {
            f64::INFINITY
        } else {
            hi / lo
        }
    }

    pub fn solve(&self, omega: f64) -> Result<LeastSquaresFit> {
        let condition = self.condition_estimate();
        if condition > CONDITION_LIMIT {
            return Err(Error::SingularNormalMatrix { omega, condition });
        }
        let [[a, b], [_, c]] = self.r_matrix;
        let [ry, sy] = self.r_vector;
        let det = a * c - b * b;
        let cos_coef = (c * ry - b * sy) / det;
        let sin_coef = (a * sy - b * ry) / det;
        let power = (cos_coef * ry + sin_coef * sy) / self.sample_count as f64;
        Ok(LeastSquaresFit {
            cos_coef,
            sin_coef,
            power: power.max(0.0),
        })
    }
}

fn check_inputs(count: usize, omega: f64) -> Result<()> {
    if count < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            found: count,
            required: MIN_SAMPLES,
        });
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!("omega {omega}")));
    }
    Ok(())
}

/// Least-squares power at angular frequency `omega` (rad/s).
pub fn power_at(series: &TimeStampedSeries, omega: f64) -> Result<f64> {
    check_inputs(series.len(), omega)?;
    NormalMatrixStats::accumulate(series.times(), series.values(), omega)
        .solve(omega)
        .map(|fit| fit.power)
}

/// Power per grid frequency. Frequencies whose normal matrix is singular are
/// left as `None` and listed in [`PowerSpectrum::skipped`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PowerSpectrum {
    grid: FrequencyGrid,
    powers: Vec<Option<f64>>,
    sample_count: usize,
}

impl PowerSpectrum {
    pub fn from_parts(grid: FrequencyGrid, powers: Vec<Option<f64>>, sample_count: usize) -> Result<Self> {
        if powers.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: powers.len(),
            });
        }
        if powers.iter().flatten().any(|p| p.is_nan() || *p < 0.0) {
            return Err(Error::InvalidParameter("negative or NaN power".into()));
        }
        Ok(Self {
            grid,
            powers,
            sample_count,
        })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn frequencies(&self) -> &[f64] {
        self.grid.frequencies()
    }

    pub fn powers(&self) -> &[Option<f64>] {
        &self.powers
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    /// Grid indices whose solve was singular.
    pub fn skipped(&self) -> Vec<usize> {
        self.powers
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_none())
            .map(|(i, _)| i)
            .collect()
    }

    /// `(frequency, power)` for every non-skipped grid point.
    pub fn valid(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.grid
            .frequencies()
            .iter()
            .zip(&self.powers)
            .filter_map(|(&f, p)| p.map(|p| (f, p)))
    }

    /// Frequency of the largest valid power; ties resolve to the lowest frequency.
    pub fn argmax(&self) -> Option<f64> {
        self.valid()
            .fold(None, |best: Option<(f64, f64)>, (f, p)| match best {
                Some((_, bp)) if bp >= p => best,
                _ => Some((f, p)),
            })
            .map(|(f, _)| f)
    }

    /// Local maxima (strictly above both valid neighbours; edges compare to
    /// their single neighbour), sorted by decreasing power.
    pub fn peaks(&self) -> Vec<(f64, f64)> {
        let pts: Vec<(f64, f64)> = self.valid().collect();
        let mut peaks: Vec<(f64, f64)> = (0..pts.len())
            .filter(|&i| {
                let p = pts[i].1;
                let left = i == 0 || pts[i - 1].1 < p;
                let right = i + 1 == pts.len() || pts[i + 1].1 < p;
                left && right
            })
            .map(|i| pts[i])
            .collect();
        peaks.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.total_cmp(&b.0)));
        peaks
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            powers: self.powers.iter().map(|p| p.map(|p| p * factor)).collect(),
            sample_count: self.sample_count,
        }
    }
}

fn finish(grid: &FrequencyGrid, powers: Vec<Option<f64>>, sample_count: usize) -> Result<PowerSpectrum> {
    if powers.iter().all(Option::is_none) {
        return Err(Error::AllFrequenciesSingular);
    }
    Ok(PowerSpectrum {
        grid: grid.clone(),
        powers,
        sample_count,
    })
}

fn omega_of(frequency: f64) -> f64 {
    TAU * frequency
}

/// Applies [`power_at`] at every grid frequency.
pub fn periodogram(series: &TimeStampedSeries, grid: &FrequencyGrid) -> Result<PowerSpectrum> {
    check_inputs(series.len(), 1.0)?;
    let powers = grid
        .frequencies()
        .iter()
        .map(|&f| {
            let omega = omega_of(f);
            match NormalMatrixStats::accumulate(series.times(), series.values(), omega).solve(omega) {
                Ok(fit) => Ok(Some(fit.power)),
                Err(Error::SingularNormalMatrix { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    finish(grid, powers, series.len())
}

/// Periodograms of several channels that share one set of time stamps.
///
/// The basis functions and `R` depend only on the time stamps, so they are
/// computed once per frequency. The arithmetic matches [`periodogram`] term
/// for term, so results are bit-identical to the per-channel route.
pub fn periodogram_shared(times: &[f64], channels: &[&[f64]], grid: &FrequencyGrid) -> Result<Vec<PowerSpectrum>> {
    check_inputs(times.len(), 1.0)?;
    if let Some(c) = channels.iter().find(|c| c.len() != times.len()) {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            found: c.len(),
        });
    }
    let mut powers = alloc::vec![Vec::with_capacity(grid.len()); channels.len()];
    let mut cos = alloc::vec![0.0; times.len()];
    let mut sin = alloc::vec![0.0; times.len()];
    for &f in grid.frequencies() {
        let omega = omega_of(f);
        let (mut cc, mut cs, mut ss) = (0.0, 0.0, 0.0);
        for ((&t, c_out), s_out) in times.iter().zip(cos.iter_mut()).zip(sin.iter_mut()) {
            let (s, c) = libm::sincos(omega * t);
            cc += c * c;
            cs += c * s;
            ss += s * s;
            *c_out = c;
            *s_out = s;
        }
        for (ch, out) in channels.iter().zip(powers.iter_mut()) {
            let (mut cy, mut sy) = (0.0, 0.0);
            for ((&c, &s), &y) in cos.iter().zip(&sin).zip(ch.iter()) {
                cy += c * y;
                sy += s * y;
            }
            let stats = NormalMatrixStats {
                r_matrix: [[cc, cs], [cs, ss]],
                r_vector: [cy, sy],
                sample_count: times.len(),
            };
            out.push(match stats.solve(omega) {
                Ok(fit) => Some(fit.power),
                Err(_) => None,
            });
        }
    }
    powers.into_iter().map(|p| finish(grid, p, times.len())).collect()
}

/// Divides every power by `1 − p` so spectra with different removal levels
/// share a scale. Display only: log-ratio features are invariant to it.
pub fn normalize_by_retention(spectrum: &PowerSpectrum, removed_fraction: f64) -> Result<PowerSpectrum> {
    if !(0.0..1.0).contains(&removed_fraction) {
        return Err(Error::InvalidFraction(removed_fraction));
    }
    Ok(spectrum.scaled(1.0 / (1.0 - removed_fraction)))
}
