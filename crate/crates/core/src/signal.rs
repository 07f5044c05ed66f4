//! Gappy multichannel signals, trials and overlapping segmentation.

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Slack used when counting how many windows fit into a trial, so that
/// `3.0 / 0.125` style quotients are not floored to one less than intended.
const WINDOW_COUNT_SLACK: f64 = 1e-9;

/// One channel's retained samples.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TimeStampedSeries {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TimeStampedSeries {
    /// Times must be finite and strictly increasing; lengths must agree.
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidSeries(format!(
                "{} time stamps but {} values",
                times.len(),
                values.len()
            )));
        }
        check_times(&times).map_err(Error::InvalidSeries)?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!("non-finite value at index {i}")));
        }
        Ok(Self { times, values })
    }

    /// Samples at `i / sample_rate` for every value.
    pub fn uniform(sample_rate: f64, values: Vec<f64>) -> Result<Self> {
        let times = (0..values.len()).map(|i| i as f64 / sample_rate).collect();
        Self::new(times, values)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Keeps the samples whose mask entry is `true`.
    pub fn retain(&self, keep: &[bool]) -> Result<Self> {
        if keep.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: keep.len(),
            });
        }
        let (times, values) = self
            .times
            .iter()
            .zip(&self.values)
            .zip(keep)
            .filter(|(_, &k)| k)
            .map(|((&t, &v), _)| (t, v))
            .unzip();
        Ok(Self { times, values })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            times: self.times.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

fn check_times(times: &[f64]) -> core::result::Result<(), alloc::string::String> {
    if let Some(i) = times.iter().position(|t| !t.is_finite()) {
        return Err(format!("non-finite time stamp at index {i}"));
    }
    if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
        return Err(format!(
            "time stamps not strictly increasing at index {} ({} after {})",
            i + 1,
            times[i + 1],
            times[i]
        ));
    }
    Ok(())
}

/// A multichannel recording with one retention pattern shared by all
/// channels, so the time stamps are stored once.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trial {
    pub subject: u32,
    pub session: u32,
    pub trial: u32,
    /// Class id: 0 = left, 1 = right.
    pub label: usize,
    sample_rate: f64,
    nominal_duration: f64,
    times: Vec<f64>,
    channels: Vec<Vec<f64>>,
}

impl Trial {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        subject: u32,
        session: u32,
        trial: u32,
        label: usize,
        sample_rate: f64,
        nominal_duration: f64,
        times: Vec<f64>,
        channels: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::InvalidTrial(format!("sample rate {sample_rate}")));
        }
        if !(nominal_duration > 0.0 && nominal_duration.is_finite()) {
            return Err(Error::InvalidTrial(format!("duration {nominal_duration}")));
        }
        if channels.is_empty() {
            return Err(Error::InvalidTrial("no channels".into()));
        }
        check_times(&times).map_err(Error::InvalidTrial)?;
        if let (Some(&first), Some(&last)) = (times.first(), times.last()) {
            if first < 0.0 || last >= nominal_duration {
                return Err(Error::InvalidTrial(format!(
                    "time stamps span [{first}, {last}], outside [0, {nominal_duration})"
                )));
            }
        }
        for (c, ch) in channels.iter().enumerate() {
            if ch.len() != times.len() {
                return Err(Error::InvalidTrial(format!(
                    "channel {} has {} values for {} time stamps",
                    c + 1,
                    ch.len(),
                    times.len()
                )));
            }
            if ch.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidTrial(format!("channel {} has non-finite values", c + 1)));
            }
        }
        Ok(Self {
            subject,
            session,
            trial,
            label,
            sample_rate,
            nominal_duration,
            times,
            channels,
        })
    }

    /// A trial with every sampling instant `i / sample_rate` present.
    pub fn complete(
        subject: u32,
        session: u32,
        trial: u32,
        label: usize,
        sample_rate: f64,
        channels: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = channels.first().map_or(0, Vec::len);
        let times = (0..n).map(|i| i as f64 / sample_rate).collect();
        let duration = n as f64 / sample_rate;
        Self::new(subject, session, trial, label, sample_rate, duration, times, channels)
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn nominal_duration(&self) -> f64 {
        self.nominal_duration
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    /// Number of retained sampling instants.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Number of instants a complete recording would hold.
    pub fn nominal_instants(&self) -> usize {
        libm::round(self.sample_rate * self.nominal_duration) as usize
    }

    pub fn channel(&self, index: usize) -> TimeStampedSeries {
        TimeStampedSeries {
            times: self.times.clone(),
            values: self.channels[index].clone(),
        }
    }

    /// Retained instants over `sample_rate × nominal_duration`.
    pub fn retained_fraction(&self) -> f64 {
        self.len() as f64 / (self.sample_rate * self.nominal_duration)
    }

    /// Drops every sampling instant whose mask entry is `false`, across all
    /// channels at once. The mask covers the currently retained instants.
    pub fn retain(&self, keep: &[bool]) -> Result<Self> {
        if keep.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: keep.len(),
            });
        }
        let pick = |xs: &[f64]| -> Vec<f64> { xs.iter().zip(keep).filter(|(_, &k)| k).map(|(&x, _)| x).collect() };
        Ok(Self {
            times: pick(&self.times),
            channels: self.channels.iter().map(|c| pick(c)).collect(),
            ..self.clone_meta()
        })
    }

    fn clone_meta(&self) -> Self {
        Self {
            subject: self.subject,
            session: self.session,
            trial: self.trial,
            label: self.label,
            sample_rate: self.sample_rate,
            nominal_duration: self.nominal_duration,
            times: Vec::new(),
            channels: Vec::new(),
        }
    }
}

/// Window layout used to cut a trial into overlapping segments.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SegmentationSpec {
    /// Seconds.
    pub window_length: f64,
    /// Fraction of a window shared with the next one, in `[0, 1)`.
    pub overlap_fraction: f64,
    pub expected_count: Option<usize>,
}

impl Default for SegmentationSpec {
    /// One-second windows with 87.5 % overlap (0.125 s step).
    fn default() -> Self {
        Self {
            window_length: 1.0,
            overlap_fraction: 0.875,
            expected_count: None,
        }
    }
}

impl SegmentationSpec {
    pub fn step(&self) -> f64 {
        (1.0 - self.overlap_fraction) * self.window_length
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.window_length > 0.0 && self.window_length.is_finite()) {
            return Err(Error::InvalidParameter(format!("window length {}", self.window_length)));
        }
        if !(0.0..1.0).contains(&self.overlap_fraction) {
            return Err(Error::InvalidParameter(format!(
                "overlap fraction {} outside [0, 1)",
                self.overlap_fraction
            )));
        }
        Ok(())
    }

    /// Window start times for a recording of `duration` seconds, stepped in
    /// continuous time.
    pub fn window_starts(&self, duration: f64) -> Result<Vec<f64>> {
        self.validate()?;
        if self.window_length > duration {
            return Err(Error::WindowTooLong {
                window: self.window_length,
                duration,
            });
        }
        let step = self.step();
        let count = libm::floor((duration - self.window_length) / step + WINDOW_COUNT_SLACK) as usize + 1;
        if let Some(expected) = self.expected_count {
            if expected != count {
                return Err(Error::SegmentCountMismatch {
                    expected,
                    actual: count,
                });
            }
        }
        Ok((0..count).map(|k| k as f64 * step).collect())
    }
}

/// The retained samples of a trial inside `[window_start, window_start + window_length)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment<'a> {
    pub window_start: f64,
    pub window_length: f64,
    pub times: &'a [f64],
    pub channels: Vec<&'a [f64]>,
}

impl Segment<'_> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn channel_series(&self, index: usize) -> TimeStampedSeries {
        TimeStampedSeries {
            times: self.times.to_vec(),
            values: self.channels[index].to_vec(),
        }
    }
}

/// Cuts `trial` into overlapping half-open windows.
pub fn segment_trial<'a>(trial: &'a Trial, spec: &SegmentationSpec) -> Result<Vec<Segment<'a>>> {
    let starts = spec.window_starts(trial.nominal_duration)?;
    let times = trial.times();
    Ok(starts
        .into_iter()
        .map(|start| {
            let end = start + spec.window_length;
            let lo = times.partition_point(|&t| t < start);
            let hi = times.partition_point(|&t| t < end);
            Segment {
                window_start: start,
                window_length: spec.window_length,
                times: &times[lo..hi],
                channels: trial.channels.iter().map(|c| &c[lo..hi]).collect(),
            }
        })
        .collect())
}

/// A collection of trials across subjects and sessions.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dataset {
    pub trials: Vec<Trial>,
}

impl Dataset {
    pub fn new(trials: Vec<Trial>) -> Self {
        Self { trials }
    }

    /// Sorted, de-duplicated subject ids.
    pub fn subjects(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.trials.iter().map(|t| t.subject).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Sorted session ids recorded for `subject`.
    pub fn sessions(&self, subject: u32) -> Vec<u32> {
        let mut ids: Vec<u32> = self
            .trials
            .iter()
            .filter(|t| t.subject == subject)
            .map(|t| t.session)
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Trials of one session, in trial-id order.
    pub fn session_trials(&self, subject: u32, session: u32) -> Vec<&Trial> {
        let mut out: Vec<&Trial> = self
            .trials
            .iter()
            .filter(|t| t.subject == subject && t.session == session)
            .collect();
        out.sort_by_key(|t| t.trial);
        out
    }

    pub fn channel_count(&self) -> Option<usize> {
        self.trials.first().map(Trial::channel_count)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn full_trial(duration: f64, rate: f64, channels: usize) -> Trial {
        let n = libm::round(duration * rate) as usize;
        let chans = (0..channels)
            .map(|c| (0..n).map(|i| (i + c) as f64).collect())
            .collect();
        Trial::complete(1, 1, 0, 0, rate, chans).unwrap()
    }

    #[test]
    fn four_second_trial_gives_25_windows() {
        let trial = full_trial(4.0, 250.0, 2);
        let segs = segment_trial(&trial, &SegmentationSpec::default()).unwrap();
        assert_eq!(segs.len(), 25);
        for (k, s) in segs.iter().enumerate() {
            assert_eq!(s.window_start, 0.125 * k as f64);
        }
        assert_eq!(segs.last().unwrap().window_start, 3.0);
    }

    #[test]
    fn duration_equal_to_window_gives_one_segment() {
        let trial = full_trial(1.0, 250.0, 1);
        for overlap in [0.0, 0.5, 0.875, 0.99] {
            let spec = SegmentationSpec {
                overlap_fraction: overlap,
                ..Default::default()
            };
            assert_eq!(segment_trial(&trial, &spec).unwrap().len(), 1);
        }
    }

    #[test]
    fn two_second_trial_brute_force_counts() {
        let trial = full_trial(2.0, 250.0, 3);
        let segs = segment_trial(&trial, &SegmentationSpec::default()).unwrap();
        // Oracle: enumerate starts 0, 0.125, ... while start + 1 <= 2 and
        // count instants i/250 inside each half-open window.
        let mut starts = vec![];
        let mut k = 0;
        while k as f64 * 0.125 + 1.0 <= 2.0 {
            starts.push(k as f64 * 0.125);
            k += 1;
        }
        assert_eq!(starts.len(), 9);
        assert_eq!(segs.len(), 9);
        for (seg, start) in segs.iter().zip(starts) {
            let count = (0..500)
                .filter(|&i| {
                    let t = i as f64 / 250.0;
                    t >= start && t < start + 1.0
                })
                .count();
            assert_eq!(count, 250);
            assert_eq!(seg.len(), count);
            assert_eq!(seg.channels.len(), 3);
        }
    }

    #[test]
    fn window_longer_than_trial_is_rejected() {
        let trial = full_trial(0.5, 250.0, 1);
        assert!(matches!(
            segment_trial(&trial, &SegmentationSpec::default()),
            Err(Error::WindowTooLong { .. })
        ));
    }

    #[test]
    fn expected_count_is_checked() {
        let trial = full_trial(4.0, 250.0, 1);
        let spec = SegmentationSpec {
            expected_count: Some(24),
            ..Default::default()
        };
        assert_eq!(
            segment_trial(&trial, &spec).unwrap_err(),
            Error::SegmentCountMismatch {
                expected: 24,
                actual: 25
            }
        );
    }

    #[test]
    fn empty_window_after_removal() {
        let trial = full_trial(2.0, 250.0, 1);
        let keep: Vec<bool> = (0..500).map(|i| i < 100).collect();
        let gappy = trial.retain(&keep).unwrap();
        let segs = segment_trial(&gappy, &SegmentationSpec::default()).unwrap();
        assert!(segs.last().unwrap().is_empty());
        assert_eq!(segs[0].len(), 100);
    }

    #[test]
    fn retained_fraction_counts_instants() {
        let trial = full_trial(4.0, 250.0, 2);
        assert_eq!(trial.retained_fraction(), 1.0);
        let keep: Vec<bool> = (0..1000).map(|i| i >= 300).collect();
        assert_eq!(trial.retain(&keep).unwrap().retained_fraction(), 0.7);
    }

    #[test]
    fn series_rejects_non_monotone_times() {
        assert!(TimeStampedSeries::new(vec![0.0, 0.2, 0.1], vec![1.0; 3]).is_err());
        assert!(TimeStampedSeries::new(vec![0.0, 0.0], vec![1.0; 2]).is_err());
        assert!(TimeStampedSeries::new(vec![0.0], vec![]).is_err());
        assert!(TimeStampedSeries::new(vec![], vec![]).unwrap().is_empty());
    }

    #[test]
    fn trial_rejects_out_of_range_times() {
        let err = Trial::new(1, 1, 0, 0, 250.0, 1.0, vec![0.0, 1.0], vec![vec![0.0, 0.0]]);
        assert!(err.is_err());
    }
}
