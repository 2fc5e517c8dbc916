//! Pair classification with a trained model and merging of envelope steps
//! into isotopic envelopes.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::bayes::KernelNbModel;
use crate::data::PairLabel;
use crate::error::{bail, Result};
use crate::features::{FeatureName, FeatureVector};
use crate::preselect::PeakPair;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedPair {
    pub pair: PeakPair,
    pub label: PairLabel,
    /// Posterior probability of `Envelope` (0 for pairs dropped by preselection).
    pub posterior: f64,
    pub preselect_rejected: bool,
}

/// Column indices of the model's features in a full [`FeatureVector`].
pub fn model_feature_names(model: &KernelNbModel) -> Result<Vec<FeatureName>> {
    model
        .features
        .iter()
        .map(|name| match FeatureName::parse(name) {
            Some(f) => Ok(f),
            None => bail!(InvalidData, "model uses unknown feature {name:?}"),
        })
        .collect()
}

pub fn classify_pair(model: &KernelNbModel, names: &[FeatureName], pair: &PeakPair, features: &FeatureVector) -> ClassifiedPair {
    let (label, posterior) = model.predict_row(&features.project(names));
    ClassifiedPair { pair: *pair, label, posterior, preselect_rejected: false }
}

pub fn classify_pairs(model: &KernelNbModel, pairs: &[PeakPair], features: &[FeatureVector]) -> Result<Vec<ClassifiedPair>> {
    if pairs.len() != features.len() {
        bail!(DimensionMismatch, "{} pairs but {} feature vectors", pairs.len(), features.len());
    }
    let names = model_feature_names(model)?;
    Ok(pairs.iter().zip(features).map(|(p, f)| classify_pair(model, &names, p, f)).collect())
}

/// Results over the full candidate list: pairs absent from `classified` were
/// dropped by preselection and become non-envelope with posterior 0.
pub fn with_rejected(candidates: &[PeakPair], classified: &[ClassifiedPair]) -> Vec<ClassifiedPair> {
    let by_ids: BTreeMap<(usize, usize), &ClassifiedPair> = classified.iter().map(|c| (c.pair.ids(), c)).collect();
    candidates
        .iter()
        .map(|p| match by_ids.get(&p.ids()) {
            Some(c) => **c,
            None => ClassifiedPair { pair: *p, label: PairLabel::NonEnvelope, posterior: 0.0, preselect_rejected: true },
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssembleConfig {
    /// Envelope steps with `|m - 1.003/z|` above this are not linked.
    pub spacing_tolerance: f64,
    pub charge: u32,
}

impl Default for AssembleConfig {
    fn default() -> Self {
        Self { spacing_tolerance: 0.25, charge: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvelopeSet {
    /// Member ids of each envelope in ascending mass, ordered by first member.
    pub envelopes: Vec<Vec<usize>>,
    /// Envelope length to number of envelopes.
    pub histogram: BTreeMap<usize, usize>,
}

/// Chains envelope steps into envelopes.
///
/// Steps are taken in order of decreasing posterior, then closeness to the
/// isotope spacing; a step `(i, j)` is accepted only while `i` has no successor
/// and `j` no predecessor, so each peak joins at most one envelope and
/// consecutive members are always classified steps.
pub fn assemble_envelopes(classified: &[ClassifiedPair], config: &AssembleConfig) -> Result<EnvelopeSet> {
    if config.charge == 0 {
        bail!(InvalidParameter, "charge must be at least 1");
    }
    let step = crate::ISOTOPE_SPACING / config.charge as f64;
    let mut edges: Vec<&ClassifiedPair> = classified
        .iter()
        .filter(|c| c.label.is_envelope() && (c.pair.m - step).abs() <= config.spacing_tolerance)
        .collect();
    edges.sort_by(|a, b| {
        b.posterior
            .total_cmp(&a.posterior)
            .then((a.pair.m - step).abs().total_cmp(&(b.pair.m - step).abs()))
            .then(a.pair.ids().cmp(&b.pair.ids()))
    });
    let n = classified.iter().map(|c| c.pair.j + 1).max().unwrap_or(0);
    let mut next = vec![None; n];
    let mut prev = vec![None; n];
    for e in edges {
        let (i, j) = e.pair.ids();
        if next[i].is_none() && prev[j].is_none() {
            next[i] = Some(j);
            prev[j] = Some(i);
        }
    }
    let mut envelopes = Vec::new();
    for start in 0..n {
        if prev[start].is_none() && next[start].is_some() {
            let mut chain = vec![start];
            let mut cur = start;
            while let Some(j) = next[cur] {
                chain.push(j);
                cur = j;
            }
            envelopes.push(chain);
        }
    }
    let mut histogram = BTreeMap::new();
    for e in &envelopes {
        *histogram.entry(e.len()).or_insert(0) += 1;
    }
    Ok(EnvelopeSet { envelopes, histogram })
}
