//! Band-power decoding of gappy multichannel time series.
//!
//! The crate estimates spectral power from unevenly sampled data with the
//! least-squares (Lomb-Scargle) periodogram, turns per-channel subband powers
//! into log-normalized feature vectors, and classifies them with either a
//! denoising-autoencoder-initialized network or an RBF-kernel SVM.
//!
//! ```text
//! Trial ──mask──▶ Trial (gappy) ──segment──▶ Segment × K
//!                                              │
//!                       least-squares periodogram per channel
//!                                              │
//!                      subband means ─▶ log(f / Σ f) ─▶ FeatureVector
//!                                              │
//!                               DaeClassifier | SvmModel
//!                                              │
//!                         window accuracy / trial majority vote
//! ```
//!
//! Everything here is `no_std` + `alloc`; file formats, plotting and the
//! command line live in the `gapband` crate.

#![no_std]
#![deny(rust_2018_idioms)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod corruption;
pub mod dae;
mod error;
pub mod eval;
pub mod features;
pub mod seed;
pub mod signal;
pub mod spectral;
pub mod svm;
pub mod synth;

pub use error::{Error, Result};
pub use signal::{Dataset, Segment, SegmentationSpec, TimeStampedSeries, Trial};
