//! Repeated stratified k-fold cross-validation of the kernel naive Bayes model.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bayes::{KernelNbModel, NbConfig};
use crate::data::PairLabel;
use crate::error::{bail, Result};
use crate::evaluate::ConfusionCounts;
use crate::math;

/// RNG for one repeat: the master seed selects the key, the repeat index the stream.
pub fn repeat_rng(seed: u64, repeat: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(repeat as u64);
    rng
}

/// Fold index per sample. Each class is shuffled and dealt round-robin, so
/// every fold receives `⌊n_c / folds⌋` or `⌈n_c / folds⌉` samples of class `c`.
pub fn stratified_folds(labels: &[PairLabel], folds: usize, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    if folds < 2 {
        bail!(InvalidParameter, "cross-validation needs at least 2 folds");
    }
    let mut assignment = vec![0usize; labels.len()];
    for class in [PairLabel::Envelope, PairLabel::NonEnvelope] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < folds {
            bail!(InvalidData, "class {class:?} has {} samples, fewer than {folds} folds", idx.len());
        }
        idx.shuffle(rng);
        for (k, i) in idx.into_iter().enumerate() {
            assignment[i] = k % folds;
        }
    }
    Ok(assignment)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
    /// Pooled accuracy over all test folds of each repeat.
    pub accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    /// Sample standard deviation across repeats (0 for a single repeat).
    pub std_accuracy: f64,
    /// `[repeat][fold]` confusion tallies on the held-out fold.
    pub fold_confusion: Vec<Vec<ConfusionCounts>>,
}

impl CvReport {
    pub fn pooled_confusion(&self) -> ConfusionCounts {
        let mut c = ConfusionCounts::default();
        for rep in &self.fold_confusion {
            for f in rep {
                c.merge(f);
            }
        }
        c
    }
}

/// Held-out predictions for one repeat, with per-fold tallies.
fn run_repeat(
    rows: &[Vec<f64>],
    labels: &[PairLabel],
    features: &[String],
    nb: &NbConfig,
    assignment: &[usize],
    folds: usize,
) -> Result<Vec<ConfusionCounts>> {
    let mut tallies = vec![ConfusionCounts::default(); folds];
    for (fold, tally) in tallies.iter_mut().enumerate() {
        let (mut train_rows, mut train_labels) = (Vec::new(), Vec::new());
        for (i, row) in rows.iter().enumerate() {
            if assignment[i] != fold {
                train_rows.push(row.clone());
                train_labels.push(labels[i]);
            }
        }
        let model = KernelNbModel::fit(&train_rows, &train_labels, features.to_vec(), nb)?;
        for (i, row) in rows.iter().enumerate() {
            if assignment[i] == fold {
                tally.add(model.predict_row(row).0, labels[i]);
            }
        }
    }
    Ok(tallies)
}

/// Per-fold held-out tallies for repeat `repeat`; the split depends only on
/// `seed` and `repeat`, so repeats can run in any order.
pub fn cv_repeat(
    rows: &[Vec<f64>],
    labels: &[PairLabel],
    features: &[String],
    nb: &NbConfig,
    folds: usize,
    seed: u64,
    repeat: usize,
) -> Result<Vec<ConfusionCounts>> {
    if rows.len() != labels.len() {
        bail!(DimensionMismatch, "{} rows but {} labels", rows.len(), labels.len());
    }
    let assignment = stratified_folds(labels, folds, &mut repeat_rng(seed, repeat))?;
    run_repeat(rows, labels, features, nb, &assignment, folds)
}

impl CvReport {
    /// Summary of per-repeat fold tallies, in repeat order.
    pub fn from_repeats(folds: usize, seed: u64, fold_confusion: Vec<Vec<ConfusionCounts>>) -> Result<Self> {
        let repeats = fold_confusion.len();
        if repeats == 0 {
            bail!(InvalidParameter, "at least one repeat is required");
        }
        let accuracies: Vec<f64> = fold_confusion
            .iter()
            .map(|tallies| {
                let mut pooled = ConfusionCounts::default();
                tallies.iter().for_each(|t| pooled.merge(t));
                pooled.accuracy()
            })
            .collect();
        let mean = crate::stats::mean(&accuracies);
        let std = if repeats > 1 {
            math::sqrt(accuracies.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (repeats - 1) as f64)
        } else {
            0.0
        };
        Ok(CvReport { folds, repeats, seed, accuracies, mean_accuracy: mean, std_accuracy: std, fold_confusion })
    }
}

pub fn cross_validate(
    rows: &[Vec<f64>],
    labels: &[PairLabel],
    features: &[String],
    nb: &NbConfig,
    folds: usize,
    repeats: usize,
    seed: u64,
) -> Result<CvReport> {
    if repeats == 0 {
        bail!(InvalidParameter, "at least one repeat is required");
    }
    let fold_confusion =
        (0..repeats).map(|r| cv_repeat(rows, labels, features, nb, folds, seed, r)).collect::<Result<Vec<_>>>()?;
    CvReport::from_repeats(folds, seed, fold_confusion)
}

/// Balanced accuracy of held-out predictions pooled over one stratified k-fold split.
pub fn cv_balanced_accuracy(
    rows: &[Vec<f64>],
    labels: &[PairLabel],
    features: &[String],
    nb: &NbConfig,
    folds: usize,
    seed: u64,
) -> Result<f64> {
    let assignment = stratified_folds(labels, folds, &mut repeat_rng(seed, 0))?;
    let tallies = run_repeat(rows, labels, features, nb, &assignment, folds)?;
    let mut c = ConfusionCounts::default();
    tallies.iter().for_each(|t| c.merge(t));
    let recall = c.tp as f64 / (c.tp + c.fn_).max(1) as f64;
    let specificity = c.tn as f64 / (c.tn + c.fp).max(1) as f64;
    Ok(0.5 * (recall + specificity))
}
