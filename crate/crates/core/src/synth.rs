//! Synthetic signals: the two-tone mixture used to check spectral estimates,
//! and a two-class surrogate for lateralised motor-imagery recordings.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::seed;
use crate::signal::{Dataset, TimeStampedSeries, Trial};
use crate::{Error, Result};

/// Sum of sinusoids with optional white noise on an even grid.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct MixtureSpec {
    /// `(frequency Hz, amplitude)` pairs.
    pub tones: Vec<(f64, f64)>,
    pub duration: f64,
    pub sample_rate: f64,
    pub noise_std: f64,
}

impl Default for MixtureSpec {
    /// 3 Hz at amplitude 1.5 plus 6 Hz at amplitude 1.0, 30 s at 1 kHz.
    fn default() -> Self {
        Self {
            tones: alloc::vec![(3.0, 1.5), (6.0, 1.0)],
            duration: 30.0,
            sample_rate: 1000.0,
            noise_std: 0.0,
        }
    }
}

impl MixtureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.sample_rate > 0.0 && self.noise_std >= 0.0) {
            return Err(Error::InvalidParameter(alloc::format!(
                "mixture duration {} s, rate {} Hz, noise {}",
                self.duration,
                self.sample_rate,
                self.noise_std
            )));
        }
        if let Some(&(f, _)) = self
            .tones
            .iter()
            .find(|(f, _)| !(*f > 0.0 && *f < self.sample_rate / 2.0))
        {
            return Err(Error::InvalidParameter(alloc::format!(
                "tone at {f} Hz outside (0, Nyquist)"
            )));
        }
        Ok(())
    }

    pub fn sample_count(&self) -> usize {
        libm::round(self.duration * self.sample_rate) as usize
    }
}

/// `y(t_i) = Σ a_k sin(2π f_k t_i + φ_k) + noise` at `t_i = i / rate`, with
/// seeded phases.
pub fn generate_mixture(spec: &MixtureSpec, seed: u64) -> Result<TimeStampedSeries> {
    spec.validate()?;
    let mut rng = seed::rng(seed);
    let phases: Vec<f64> = spec.tones.iter().map(|_| rng.random_range(0.0..TAU)).collect();
    let noise = Normal::new(0.0, spec.noise_std).map_err(|_| Error::InvalidParameter("noise std".into()))?;
    let values = (0..spec.sample_count())
        .map(|i| {
            let t = i as f64 / spec.sample_rate;
            let clean: f64 = spec
                .tones
                .iter()
                .zip(&phases)
                .map(|(&(f, a), &phi)| a * libm::sin(TAU * f * t + phi))
                .sum();
            if spec.noise_std > 0.0 {
                clean + noise.sample(&mut rng)
            } else {
                clean
            }
        })
        .collect();
    TimeStampedSeries::uniform(spec.sample_rate, values)
}

/// Shape of the surrogate two-class dataset.
///
/// Every channel carries an alpha-band (8.5–11.5 Hz) rhythm, a weaker beta
/// rhythm (18–24 Hz) and white noise. For class 0 the alpha amplitude of the
/// first half of the channels is multiplied by `class_effect`; for class 1
/// the second half is. Each session also gets its own per-channel gain.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SurrogateDatasetSpec {
    pub subjects: u32,
    pub sessions: u32,
    pub trials_per_session: u32,
    pub channels: usize,
    pub sample_rate: f64,
    pub trial_duration: f64,
    pub alpha_amplitude: f64,
    pub beta_amplitude: f64,
    /// Alpha amplitude multiplier on the class-specific hemisphere.
    pub class_effect: f64,
    /// Half-width of the uniform per-trial, per-channel amplitude jitter.
    pub trial_jitter: f64,
    /// Half-width of the uniform per-session, per-channel gain.
    pub session_gain_jitter: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for SurrogateDatasetSpec {
    fn default() -> Self {
        Self {
            subjects: 3,
            sessions: 4,
            trials_per_session: 15,
            channels: 14,
            sample_rate: 250.0,
            trial_duration: 4.0,
            alpha_amplitude: 1.0,
            beta_amplitude: 0.5,
            class_effect: 2.0,
            trial_jitter: 0.1,
            session_gain_jitter: 0.1,
            noise_std: 4.0,
            seed: 0,
        }
    }
}

impl SurrogateDatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.subjects == 0 || self.sessions == 0 || self.trials_per_session == 0 || self.channels == 0 {
            return Err(Error::InvalidParameter("surrogate counts must be positive".into()));
        }
        let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !(self.sample_rate > 24.0 * 2.0 && self.trial_duration > 0.0)
            || ![
                self.alpha_amplitude,
                self.beta_amplitude,
                self.class_effect,
                self.noise_std,
            ]
            .into_iter()
            .all(finite_nonneg)
            || !(0.0..1.0).contains(&self.trial_jitter)
            || !(0.0..1.0).contains(&self.session_gain_jitter)
        {
            return Err(Error::InvalidParameter(alloc::format!("surrogate spec {self:?}")));
        }
        Ok(())
    }

    pub fn samples_per_trial(&self) -> usize {
        libm::round(self.sample_rate * self.trial_duration) as usize
    }

    /// Channels whose alpha rhythm is boosted for `label`.
    pub fn is_boosted(&self, channel: usize, label: usize) -> bool {
        let first_half = channel < self.channels.div_ceil(2);
        (label == 0) == first_half
    }
}

/// Generates `subjects × sessions × trials_per_session` complete trials.
/// Labels are balanced within each session (counts differ by at most one).
pub fn generate_surrogate_dataset(spec: &SurrogateDatasetSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut trials = Vec::new();
    for subject in 1..=spec.subjects {
        for session in 1..=spec.sessions {
            let mut rng = seed::rng_at(spec.seed, &[u64::from(subject), u64::from(session)]);
            let gains: Vec<f64> = (0..spec.channels)
                .map(|_| 1.0 + rng.random_range(-1.0..=1.0) * spec.session_gain_jitter)
                .collect();
            let mut labels: Vec<usize> = (0..spec.trials_per_session as usize).map(|i| i % 2).collect();
            labels.shuffle(&mut rng);
            for (k, &label) in labels.iter().enumerate() {
                let trial_id = k as u32 + 1;
                let mut rng = seed::rng_at(
                    spec.seed,
                    &[u64::from(subject), u64::from(session), u64::from(trial_id)],
                );
                let channels = (0..spec.channels)
                    .map(|c| surrogate_channel(spec, gains[c], spec.is_boosted(c, label), &mut rng))
                    .collect::<Result<Vec<_>>>()?;
                trials.push(Trial::complete(
                    subject,
                    session,
                    trial_id,
                    label,
                    spec.sample_rate,
                    channels,
                )?);
            }
        }
    }
    Ok(Dataset::new(trials))
}

fn surrogate_channel(spec: &SurrogateDatasetSpec, gain: f64, boosted: bool, rng: &mut seed::Rng) -> Result<Vec<f64>> {
    let noise = Normal::new(0.0, spec.noise_std).map_err(|_| Error::InvalidParameter("noise std".into()))?;
    let jitter = 1.0 + rng.random_range(-1.0..=1.0) * spec.trial_jitter;
    let effect = if boosted { spec.class_effect } else { 1.0 };
    let alpha_amp = spec.alpha_amplitude * effect * jitter;
    let alpha_freq = rng.random_range(8.5..11.5);
    let alpha_phase = rng.random_range(0.0..TAU);
    let beta_freq = rng.random_range(18.0..24.0);
    let beta_phase = rng.random_range(0.0..TAU);
    Ok((0..spec.samples_per_trial())
        .map(|i| {
            let t = i as f64 / spec.sample_rate;
            let clean = alpha_amp * libm::sin(TAU * alpha_freq * t + alpha_phase)
                + spec.beta_amplitude * libm::sin(TAU * beta_freq * t + beta_phase);
            let n = if spec.noise_std > 0.0 { noise.sample(rng) } else { 0.0 };
            gain * (clean + n)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_mixture_tones() {
        assert_eq!(MixtureSpec::default().tones, alloc::vec![(3.0, 1.5), (6.0, 1.0)]);
    }

    #[test]
    fn empty_tone_list_is_silent() {
        let spec = MixtureSpec {
            tones: Vec::new(),
            duration: 1.0,
            sample_rate: 100.0,
            noise_std: 0.0,
        };
        let s = generate_mixture(&spec, 1).unwrap();
        assert_eq!(s.len(), 100);
        assert!(s.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn tone_above_nyquist_is_rejected() {
        let spec = MixtureSpec {
            tones: alloc::vec![(60.0, 1.0)],
            duration: 1.0,
            sample_rate: 100.0,
            noise_std: 0.0,
        };
        assert!(generate_mixture(&spec, 0).is_err());
    }

    #[test]
    fn labels_are_balanced() {
        let spec = SurrogateDatasetSpec {
            subjects: 1,
            sessions: 2,
            channels: 2,
            trial_duration: 1.0,
            ..Default::default()
        };
        let ds = generate_surrogate_dataset(&spec).unwrap();
        for session in [1, 2] {
            let ones = ds.session_trials(1, session).iter().filter(|t| t.label == 1).count();
            assert!(ones == 7 || ones == 8);
        }
    }

    #[test]
    fn hemisphere_assignment() {
        let spec = SurrogateDatasetSpec::default();
        assert!(spec.is_boosted(0, 0) && spec.is_boosted(6, 0) && !spec.is_boosted(7, 0));
        assert!(spec.is_boosted(7, 1) && spec.is_boosted(13, 1) && !spec.is_boosted(0, 1));
    }
}
