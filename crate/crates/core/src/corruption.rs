//! Simulated artefact excision: random point removal and random block removal.
//!
//! Masks act on sampling instants, so a removed instant disappears from every
//! channel of a trial at once.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::seed;
use crate::signal::Trial;
use crate::{Error, Result};

/// Largest removal fraction the pipeline accepts.
pub const MAX_REMOVAL: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum RemovalMode {
    Point,
    Block,
}

impl RemovalMode {
    pub fn name(self) -> &'static str {
        match self {
            RemovalMode::Point => "point",
            RemovalMode::Block => "block",
        }
    }
}

impl core::str::FromStr for RemovalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "point" => Ok(RemovalMode::Point),
            "block" => Ok(RemovalMode::Block),
            other => Err(Error::InvalidParameter(alloc::format!("removal mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RemovalSpec {
    pub mode: RemovalMode,
    /// Fraction of instants removed, in `[0, 0.8]`.
    pub fraction: f64,
    /// Block widths in samples are drawn from `Normal(mean, std)`.
    pub block_width_mean: f64,
    pub block_width_std: f64,
    pub seed: u64,
}

impl RemovalSpec {
    pub fn new(mode: RemovalMode, fraction: f64, seed: u64) -> Self {
        Self {
            mode,
            fraction,
            block_width_mean: 20.0,
            block_width_std: 10.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_fraction(self.fraction)?;
        if !(self.block_width_mean.is_finite() && self.block_width_std >= 0.0 && self.block_width_std.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!(
                "block width distribution N({}, {})",
                self.block_width_mean,
                self.block_width_std
            )));
        }
        Ok(())
    }

    pub fn mask(&self, total_instants: usize) -> Result<RetentionMask> {
        match self.mode {
            RemovalMode::Point => point_removal(total_instants, self.fraction, self.seed),
            RemovalMode::Block => block_removal(total_instants, self, self.seed),
        }
    }
}

fn check_fraction(p: f64) -> Result<()> {
    if (0.0..=MAX_REMOVAL).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidFraction(p))
    }
}

fn removal_target(total: usize, p: f64) -> usize {
    libm::round(p * total as f64) as usize
}

/// `true` = instant kept.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RetentionMask {
    kept: Vec<bool>,
}

impl RetentionMask {
    pub fn from_kept(kept: Vec<bool>) -> Self {
        Self { kept }
    }

    pub fn full(total: usize) -> Self {
        Self {
            kept: vec![true; total],
        }
    }

    pub fn kept(&self) -> &[bool] {
        &self.kept
    }

    pub fn len(&self) -> usize {
        self.kept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept.is_empty()
    }

    pub fn removed_count(&self) -> usize {
        self.kept.iter().filter(|k| !**k).count()
    }

    pub fn removed_fraction(&self) -> f64 {
        self.removed_count() as f64 / self.kept.len() as f64
    }

    /// `(kept, length)` runs in order.
    pub fn runs(&self) -> Vec<(bool, usize)> {
        let mut runs: Vec<(bool, usize)> = Vec::new();
        for &k in &self.kept {
            match runs.last_mut() {
                Some((state, n)) if *state == k => *n += 1,
                _ => runs.push((k, 1)),
            }
        }
        runs
    }

    /// Lengths of maximal removed spans.
    pub fn removed_runs(&self) -> Vec<usize> {
        self.runs().into_iter().filter(|r| !r.0).map(|r| r.1).collect()
    }

    pub fn apply(&self, trial: &Trial) -> Result<Trial> {
        trial.retain(&self.kept)
    }
}

/// Removes exactly `round(p × total)` distinct instants chosen uniformly.
pub fn point_removal(total_instants: usize, p: f64, seed: u64) -> Result<RetentionMask> {
    check_fraction(p)?;
    let target = removal_target(total_instants, p);
    let mut mask = RetentionMask::full(total_instants);
    let mut rng = seed::rng(seed);
    for i in rand::seq::index::sample(&mut rng, total_instants, target) {
        mask.kept[i] = false;
    }
    Ok(mask)
}

/// Removes random blocks until exactly `round(p × total)` instants are gone.
///
/// Widths are `round(Normal(mean, std))` clamped to `[1, total]`; starts are
/// uniform. Blocks may overlap. The final block is trimmed from its tail so
/// the removed count is exact.
pub fn block_removal(total_instants: usize, spec: &RemovalSpec, seed: u64) -> Result<RetentionMask> {
    spec.validate()?;
    let target = removal_target(total_instants, spec.fraction);
    let mut mask = RetentionMask::full(total_instants);
    if target == 0 {
        return Ok(mask);
    }
    let widths = Normal::new(spec.block_width_mean, spec.block_width_std)
        .map_err(|_| Error::InvalidParameter("block width distribution".into()))?;
    let mut rng = seed::rng(seed);
    let mut removed = 0;
    while removed < target {
        let w = libm::round(widths.sample(&mut rng)).clamp(1.0, total_instants as f64) as usize;
        let start = rng.random_range(0..=total_instants - w);
        let mut fresh = Vec::new();
        for i in start..start + w {
            if mask.kept[i] {
                mask.kept[i] = false;
                fresh.push(i);
            }
        }
        removed += fresh.len();
        for &i in fresh.iter().rev().take(removed.saturating_sub(target)) {
            mask.kept[i] = true;
        }
        removed = removed.min(target);
    }
    Ok(mask)
}
