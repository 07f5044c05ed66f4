//! Subband averaging and log-normalized feature vectors.

use alloc::vec::Vec;

use crate::signal::{segment_trial, Segment, SegmentationSpec, Trial};
use crate::spectral::{periodogram_shared, FrequencyGrid, PowerSpectrum};
use crate::{Error, Result};

/// Relative floor applied to raw powers before taking logs.
pub const DEFAULT_POWER_FLOOR: f64 = 1e-12;

/// Inclusive frequency bands in Hz.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SubbandSpec {
    pub bands: Vec<(f64, f64)>,
}

impl Default for SubbandSpec {
    fn default() -> Self {
        Self {
            bands: alloc::vec![(8.0, 12.0), (13.0, 17.0), (18.0, 22.0), (23.0, 27.0)],
        }
    }
}

impl SubbandSpec {
    pub fn validate(&self) -> Result<()> {
        if self.bands.is_empty() {
            return Err(Error::InvalidParameter("no subbands".into()));
        }
        if self.bands.iter().any(|&(lo, hi)| lo.is_nan() || hi.is_nan() || lo > hi) {
            return Err(Error::InvalidParameter("subband with low > high".into()));
        }
        let mut sorted = self.bands.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        if sorted.windows(2).any(|w| w[1].0 <= w[0].1) {
            return Err(Error::InvalidParameter("overlapping subbands".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }
}

/// Mean valid power per band.
pub fn band_powers(spectrum: &PowerSpectrum, spec: &SubbandSpec) -> Result<Vec<f64>> {
    spec.bands
        .iter()
        .map(|&(low, high)| {
            let (sum, n) = spectrum
                .valid()
                .filter(|&(f, _)| f >= low && f <= high)
                .fold((0.0, 0usize), |(s, n), (_, p)| (s + p, n + 1));
            if n == 0 {
                Err(Error::EmptyBand { low, high })
            } else {
                Ok(sum / n as f64)
            }
        })
        .collect()
}

/// Log-normalized subband powers of one segment, channel-major:
/// `[ch1·band1, ch1·band2, …, chN·bandB]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeatureVector {
    values: Vec<f64>,
    channel_count: usize,
    band_count: usize,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>, channel_count: usize, band_count: usize) -> Result<Self> {
        if values.len() != channel_count * band_count {
            return Err(Error::DimensionMismatch {
                expected: channel_count * band_count,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite feature".into()));
        }
        Ok(Self {
            values,
            channel_count,
            band_count,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn channel_count(&self) -> usize {
        self.channel_count
    }

    pub fn band_count(&self) -> usize {
        self.band_count
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Zero-based channel and band.
    pub fn get(&self, channel: usize, band: usize) -> f64 {
        self.values[channel * self.band_count + band]
    }
}

/// Concatenates per-channel band powers and replaces each by
/// `ln(f / Σ f)`.
///
/// With `floor = Some(r)`, powers are first raised to at least `r × max`.
pub fn assemble_features(per_channel: &[Vec<f64>], floor: Option<f64>) -> Result<FeatureVector> {
    let channel_count = per_channel.len();
    let band_count = per_channel.first().map_or(0, Vec::len);
    if channel_count == 0 || band_count == 0 {
        return Err(Error::EmptyInput);
    }
    if let Some(row) = per_channel.iter().find(|r| r.len() != band_count) {
        return Err(Error::DimensionMismatch {
            expected: band_count,
            found: row.len(),
        });
    }
    let mut raw: Vec<f64> = per_channel.iter().flatten().copied().collect();
    if let Some(rel) = floor {
        let max = raw.iter().copied().fold(0.0, f64::max);
        let min_allowed = rel * max;
        for p in raw.iter_mut() {
            if *p < min_allowed {
                *p = min_allowed;
            }
        }
    }
    if let Some(index) = raw.iter().position(|&p| p.is_nan() || p <= 0.0) {
        return Err(Error::NonPositivePower { index });
    }
    let total: f64 = raw.iter().sum();
    let values = raw.iter().map(|p| libm::log(p / total)).collect();
    FeatureVector::new(values, channel_count, band_count)
}

/// Segmentation, spectral grid, bands and floor: everything needed to turn
/// a trial into feature vectors.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct FeaturePipeline {
    pub segmentation: SegmentationSpec,
    pub grid: FrequencyGrid,
    pub bands: SubbandSpec,
    pub power_floor: Option<f64>,
}

impl Default for FeaturePipeline {
    fn default() -> Self {
        Self {
            segmentation: SegmentationSpec::default(),
            grid: FrequencyGrid::band_power_default(),
            bands: SubbandSpec::default(),
            power_floor: Some(DEFAULT_POWER_FLOOR),
        }
    }
}

impl FeaturePipeline {
    pub fn validate(&self) -> Result<()> {
        self.segmentation.validate()?;
        self.bands.validate()?;
        if let Some(f) = self.power_floor {
            if !(0.0..1.0).contains(&f) {
                return Err(Error::InvalidParameter(alloc::format!("power floor {f}")));
            }
        }
        Ok(())
    }

    pub fn feature_dim(&self, channel_count: usize) -> usize {
        channel_count * self.bands.len()
    }

    pub fn segment_features(&self, segment: &Segment<'_>) -> Result<FeatureVector> {
        let spectra = periodogram_shared(segment.times, &segment.channels, &self.grid)?;
        let per_channel = spectra
            .iter()
            .map(|s| band_powers(s, &self.bands))
            .collect::<Result<Vec<_>>>()?;
        assemble_features(&per_channel, self.power_floor)
    }

    /// One entry per window. `None` marks a window that cannot be estimated
    /// (too few retained samples, or no valid frequency in some band).
    pub fn trial_features(&self, trial: &Trial) -> Result<Vec<Option<FeatureVector>>> {
        self.grid.check_nyquist(trial.sample_rate())?;
        segment_trial(trial, &self.segmentation)?
            .iter()
            .map(|seg| match self.segment_features(seg) {
                Ok(fv) => Ok(Some(fv)),
                Err(e) if is_degenerate_window(&e) => Ok(None),
                Err(e) => Err(e),
            })
            .collect()
    }
}

/// Errors that mark a window as unusable rather than the run as failed.
pub fn is_degenerate_window(err: &Error) -> bool {
    matches!(
        err,
        Error::TooFewSamples { .. } | Error::AllFrequenciesSingular | Error::EmptyBand { .. }
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{periodogram, FrequencyGrid};
    use crate::TimeStampedSeries;
    use alloc::vec;
    use core::f64::consts::TAU;

    fn spectrum(freqs: Vec<f64>, powers: Vec<f64>) -> PowerSpectrum {
        let grid = FrequencyGrid::new(freqs).unwrap();
        PowerSpectrum::from_parts(grid, powers.into_iter().map(Some).collect(), 100).unwrap()
    }

    #[test]
    fn flat_spectrum_gives_equal_bands() {
        let grid = FrequencyGrid::band_power_default();
        let s = spectrum(grid.frequencies().to_vec(), vec![2.5; 20]);
        assert_eq!(band_powers(&s, &SubbandSpec::default()).unwrap(), vec![2.5; 4]);
    }

    #[test]
    fn band_mean_is_arithmetic() {
        let s = spectrum(vec![8.0, 9.0, 10.0, 11.0, 12.0], vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        let spec = SubbandSpec {
            bands: vec![(8.0, 12.0)],
        };
        assert_eq!(band_powers(&s, &spec).unwrap(), vec![3.0]);
    }

    #[test]
    fn empty_band_is_an_error() {
        let s = spectrum(vec![8.0, 9.0], vec![1.0, 2.0]);
        assert!(matches!(
            band_powers(&s, &SubbandSpec::default()),
            Err(Error::EmptyBand { low, .. }) if low == 13.0
        ));
    }

    #[test]
    fn ten_hz_tone_dominates_first_band() {
        let series = TimeStampedSeries::uniform(
            250.0,
            (0..250).map(|i| libm::sin(TAU * 10.0 * i as f64 / 250.0)).collect(),
        )
        .unwrap();
        let spec = periodogram(&series, &FrequencyGrid::band_power_default()).unwrap();
        let bands = band_powers(&spec, &SubbandSpec::default()).unwrap();
        assert!(bands[1..].iter().all(|&b| bands[0] > b));
    }

    #[test]
    fn equal_powers_give_uniform_log_shares() {
        let rows = vec![vec![3.0; 4]; 14];
        let fv = assemble_features(&rows, None).unwrap();
        assert_eq!(fv.len(), 56);
        for &v in fv.values() {
            assert!((v - libm::log(1.0 / 56.0)).abs() < 1e-12);
        }
        assert!((fv.values()[0] + 4.0254).abs() < 1e-4);

        let one = assemble_features(&[vec![1.0; 4]], None).unwrap();
        for &v in one.values() {
            assert!((v + libm::log(4.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn direct_evaluation_two_channels() {
        let fv = assemble_features(&[vec![2.0, 1.0, 1.0, 1.0], vec![1.0; 4]], None).unwrap();
        assert!((fv.values()[0] - libm::log(2.0 / 9.0)).abs() < 1e-15);
        for &v in &fv.values()[1..] {
            assert!((v - libm::log(1.0 / 9.0)).abs() < 1e-15);
        }
        assert_eq!(fv.get(1, 0), fv.values()[4]);
    }

    #[test]
    fn zero_power_floor() {
        let rows = vec![vec![1.0, 0.0, 1.0, 1.0]];
        assert_eq!(
            assemble_features(&rows, None).unwrap_err(),
            Error::NonPositivePower { index: 1 }
        );
        let fv = assemble_features(&rows, Some(DEFAULT_POWER_FLOOR)).unwrap();
        assert!(fv.values().iter().all(|v| v.is_finite()));
        assert!(assemble_features(&[vec![0.0; 4]], Some(DEFAULT_POWER_FLOOR)).is_err());
    }

    #[test]
    fn subband_validation() {
        assert!(SubbandSpec::default().validate().is_ok());
        let overlap = SubbandSpec {
            bands: vec![(8.0, 12.0), (12.0, 16.0)],
        };
        assert!(overlap.validate().is_err());
    }
}
