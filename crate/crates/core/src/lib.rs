//! Isotopic envelope detection for MALDI mass spectrometry imaging peak models.
//!
//! The pipeline works on Gaussian peak components that were already fitted
//! upstream. It runs in two stages:
//!
//! 1. [`preselect`]: candidate peak pairs are scored by a Mamdani fuzzy
//!    inference system on their spacing `m` and width ratio `s`, and pairs
//!    below a threshold derived from a 1-D Gaussian mixture ([`gmm`]) are
//!    dropped.
//! 2. [`features`] + [`bayes`]: the remaining pairs are described by texture
//!    and intensity statistics of their differential ion image ([`image`],
//!    [`texture`]) and classified by an Epanechnikov-kernel naive Bayes model.
//!
//! Pairs labelled as envelope steps are merged into envelopes by
//! [`assemble`], and [`evaluate`] provides confusion-matrix metrics, set
//! intersections across methods and an intensity-only baseline.
//! [`synth`] generates seeded datasets with known ground truth.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, parallel drivers and
//! the command-line interface live in the `deisolab` crate.
//!
//! ```
//! use deisolab_core::fuzzy::{Fis, FisConfig};
//! use deisolab_core::preselect::{candidate_pairs, preselect, score_pairs, PairingConfig, PreselectModel, ThresholdOptions};
//! use deisolab_core::synth::{generate, SynthConfig};
//!
//! let (dataset, truth) = generate(&SynthConfig::default())?;
//! let fis = Fis::new(FisConfig::default())?;
//! let mut pairs = candidate_pairs(&dataset, &PairingConfig::default())?;
//! score_pairs(&mut pairs, &fis);
//! let possibilities: Vec<f64> = pairs.iter().filter_map(|p| p.possibility).collect();
//! let model = PreselectModel::from_possibilities(FisConfig::default(), &possibilities, &ThresholdOptions::default())?;
//! let (kept, report) = preselect(&pairs, &model)?;
//! assert_eq!(report.retained_pairs, kept.len());
//! assert!(truth.adjacent_pairs().iter().all(|p| kept.iter().any(|k| k.ids() == *p)));
//! # Ok::<(), deisolab_core::Error>(())
//! ```
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod assemble;
pub mod bayes;
pub mod cv;
pub mod data;
pub mod error;
pub mod evaluate;
pub mod features;
pub mod fuzzy;
pub mod gmm;
pub mod image;
pub mod preselect;
pub mod synth;
pub mod texture;

mod math;
pub mod stats;

pub use data::{AbundanceMatrix, Dataset, PairLabel, PeakComponent, Pixel, PixelGrid};
pub use error::{Error, Result};

/// Nominal isotope spacing for a singly charged ion, in Da.
pub const ISOTOPE_SPACING: f64 = 1.003;

/// Threshold used when the possibility distribution cannot be decomposed.
pub const FALLBACK_THRESHOLD: f64 = 0.8966;
