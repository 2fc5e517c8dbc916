//! Candidate pair construction, fuzzy scoring and threshold-based preselection.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, PeakComponent};
use crate::error::{bail, Result};
use crate::fuzzy::{Fis, FisConfig};
use crate::gmm::{self, EmConfig};

/// How the width ratio `s` of a pair is formed from the component sigmas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaRatio {
    /// `max(σ²) / min(σ²)`
    #[default]
    Variance,
    /// `max(σ) / min(σ)`
    StdDev,
}

impl SigmaRatio {
    pub fn ratio(self, a: f64, b: f64) -> f64 {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        match self {
            SigmaRatio::Variance => (hi * hi) / (lo * lo),
            SigmaRatio::StdDev => hi / lo,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairingConfig {
    /// Largest allowed spacing in Da; `None` disables the window.
    pub window_da: Option<f64>,
    /// Keep at most this many right-hand neighbours per peak; `None` disables the cap.
    pub k_neighbors: Option<usize>,
    pub ratio: SigmaRatio,
}

impl Default for PairingConfig {
    fn default() -> Self {
        Self { window_da: Some(10.0), k_neighbors: Some(60), ratio: SigmaRatio::Variance }
    }
}

/// Candidate pair of components `i < j` (ascending mu).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakPair {
    pub i: usize,
    pub j: usize,
    /// `mu_j - mu_i` in Da.
    pub m: f64,
    /// Width ratio, always `>= 1`.
    pub s: f64,
    pub possibility: Option<f64>,
}

impl PeakPair {
    pub fn new(a: &PeakComponent, b: &PeakComponent, ratio: SigmaRatio) -> Self {
        let (lo, hi) = if a.mu <= b.mu { (a, b) } else { (b, a) };
        Self { i: lo.id, j: hi.id, m: hi.mu - lo.mu, s: ratio.ratio(lo.sigma, hi.sigma), possibility: None }
    }

    pub fn ids(&self) -> (usize, usize) {
        (self.i, self.j)
    }
}

/// All pairs `(i, j)`, `i < j`, with `mu_j - mu_i <= window`, keeping at most the
/// `k` nearest right neighbours of each `i`. Ordered by `i`, then `j`.
pub fn candidate_pairs(dataset: &Dataset, config: &PairingConfig) -> Result<Vec<PeakPair>> {
    let window = match config.window_da {
        Some(w) if !(w > 0.0) => bail!(InvalidParameter, "pair window must be positive, got {w}"),
        w => w,
    };
    let k = match config.k_neighbors {
        Some(0) => bail!(InvalidParameter, "k_neighbors must be at least 1"),
        k => k,
    };
    if window.is_none() && k.is_none() {
        bail!(InvalidParameter, "either a pair window or a neighbour cap is required");
    }
    let comps = dataset.components();
    let mut pairs = Vec::new();
    for (i, a) in comps.iter().enumerate() {
        let limit = k.unwrap_or(usize::MAX);
        for b in comps[i + 1..].iter().take(limit) {
            if let Some(w) = window {
                if b.mu - a.mu > w {
                    break;
                }
            }
            pairs.push(PeakPair::new(a, b, config.ratio));
        }
    }
    Ok(pairs)
}

/// Fills in the fuzzy possibility of every pair.
pub fn score_pairs(pairs: &mut [PeakPair], fis: &Fis) {
    for p in pairs {
        p.possibility = Some(fis.possibility(p.m, p.s));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThresholdSource {
    GmmDerived { k: usize, bic: Vec<f64> },
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreselectModel {
    pub fis: FisConfig,
    pub threshold: f64,
    pub source: ThresholdSource,
}

/// Settings for deriving the threshold from the possibility distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdOptions {
    pub k_max: usize,
    /// Elbow fraction passed to [`gmm::select_k_by_bic`].
    pub elbow_fraction: f64,
    pub seed: u64,
    /// Larger inputs are reduced to a seeded random subsample of this size before fitting.
    pub max_samples: usize,
    pub em: EmConfig,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        Self { k_max: 8, elbow_fraction: 0.05, seed: 0, max_samples: 5000, em: EmConfig::default() }
    }
}

impl PreselectModel {
    pub fn fixed(fis: FisConfig, threshold: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold < 1.0) {
            bail!(InvalidParameter, "threshold must lie in (0, 1), got {threshold}");
        }
        Fis::new(fis.clone())?;
        Ok(Self { fis, threshold, source: ThresholdSource::Fixed })
    }

    pub fn fallback(fis: FisConfig) -> Result<Self> {
        Self::fixed(fis, crate::FALLBACK_THRESHOLD)
    }

    /// Threshold from a BIC-selected Gaussian mixture over the possibilities. A
    /// single selected component means there is nothing to separate, and the
    /// fixed fallback threshold is used.
    pub fn from_possibilities(fis: FisConfig, possibilities: &[f64], options: &ThresholdOptions) -> Result<Self> {
        let mut values = possibilities.to_vec();
        if values.len() > options.max_samples {
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            let (chosen, _) = values.partial_shuffle(&mut rng, options.max_samples);
            values = chosen.to_vec();
        }
        let selection =
            gmm::select_k_by_bic_with(&values, options.k_max, options.seed, options.elbow_fraction, &options.em)?;
        if selection.k == 1 {
            log::info!("BIC selected a single component; using the fixed threshold");
            return Self::fallback(fis);
        }
        let threshold = gmm::threshold_from_gmm(selection.selected())?;
        if !(threshold > 0.0 && threshold < 1.0) {
            bail!(Numeric, "mixture crossing {threshold} lies outside (0, 1)");
        }
        Ok(Self { fis, threshold, source: ThresholdSource::GmmDerived { k: selection.k, bic: selection.bic } })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub input_pairs: usize,
    pub retained_pairs: usize,
    /// `100 · (1 - retained / input)`; 0 for empty input.
    pub reduction_percent: f64,
}

impl ReductionReport {
    pub fn new(input_pairs: usize, retained_pairs: usize) -> Self {
        let reduction_percent =
            if input_pairs == 0 { 0.0 } else { 100.0 * (1.0 - retained_pairs as f64 / input_pairs as f64) };
        Self { input_pairs, retained_pairs, reduction_percent }
    }
}

/// Keeps pairs whose possibility is at least the model threshold.
pub fn preselect(pairs: &[PeakPair], model: &PreselectModel) -> Result<(Vec<PeakPair>, ReductionReport)> {
    let mut retained = Vec::new();
    for p in pairs {
        match p.possibility {
            Some(v) if v >= model.threshold => retained.push(*p),
            Some(_) => {}
            None => bail!(InvalidParameter, "pair ({}, {}) has not been scored", p.i, p.j),
        }
    }
    let report = ReductionReport::new(pairs.len(), retained.len());
    Ok((retained, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{AbundanceMatrix, PixelGrid};
    use alloc::vec;

    fn dataset(mus: &[f64]) -> Dataset {
        let comps = mus.iter().enumerate().map(|(id, &mu)| PeakComponent { id, mu, sigma: 0.05, area: 1.0 }).collect();
        let m = AbundanceMatrix::new(1, mus.len(), vec![1.0; mus.len()]).unwrap();
        Dataset::from_parts(comps, PixelGrid::full(1, 1).unwrap(), m, None).unwrap().0
    }

    fn ids(pairs: &[PeakPair]) -> Vec<(usize, usize)> {
        pairs.iter().map(PeakPair::ids).collect()
    }

    #[test]
    fn window_enumeration() {
        let ds = dataset(&[1000.0, 1001.0, 1005.0]);
        let narrow = PairingConfig { window_da: Some(2.0), k_neighbors: None, ..Default::default() };
        let p = candidate_pairs(&ds, &narrow).unwrap();
        assert_eq!(ids(&p), [(0, 1)]);
        assert_eq!(p[0].m, 1.0);
        let wide = PairingConfig { window_da: Some(10.0), ..narrow };
        assert_eq!(ids(&candidate_pairs(&ds, &wide).unwrap()), [(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn neighbour_cap() {
        let ds = dataset(&[1.0, 2.0, 3.0, 4.0]);
        let cfg = PairingConfig { window_da: None, k_neighbors: Some(1), ..Default::default() };
        assert_eq!(ids(&candidate_pairs(&ds, &cfg).unwrap()), [(0, 1), (1, 2), (2, 3)]);
        let none = PairingConfig { window_da: None, k_neighbors: None, ..Default::default() };
        assert!(candidate_pairs(&ds, &none).is_err());
    }

    #[test]
    fn ratio_is_order_free() {
        assert_eq!(SigmaRatio::Variance.ratio(0.1, 0.2), SigmaRatio::Variance.ratio(0.2, 0.1));
        assert!((SigmaRatio::Variance.ratio(0.1, 0.2) - 4.0).abs() < 1e-12);
        assert!((SigmaRatio::StdDev.ratio(0.2, 0.1) - 2.0).abs() < 1e-12);
    }

    fn scored(values: &[f64]) -> Vec<PeakPair> {
        values
            .iter()
            .enumerate()
            .map(|(k, &v)| PeakPair { i: k, j: k + 1, m: 1.0, s: 1.0, possibility: Some(v) })
            .collect()
    }

    #[test]
    fn reduction_arithmetic() {
        let model = PreselectModel::fixed(FisConfig::default(), 0.5).unwrap();
        let pairs = scored(&[0.9, 0.1, 0.6, 0.2, 0.3, 0.95, 0.1, 0.2, 0.4, 0.0]);
        let (kept, report) = preselect(&pairs, &model).unwrap();
        assert_eq!(kept.len(), 3);
        assert!((report.reduction_percent - 70.0).abs() < 1e-12);

        let (kept, report) = preselect(&scored(&[0.1, 0.2]), &model).unwrap();
        assert!(kept.is_empty());
        assert_eq!(report.reduction_percent, 100.0);
    }

    #[test]
    fn unscored_pairs_are_rejected() {
        let model = PreselectModel::fallback(FisConfig::default()).unwrap();
        let mut pairs = scored(&[0.9]);
        pairs[0].possibility = None;
        assert!(preselect(&pairs, &model).is_err());
        assert!(PreselectModel::fixed(FisConfig::default(), 1.0).is_err());
    }

    #[test]
    fn fallback_threshold_value() {
        let model = PreselectModel::fallback(FisConfig::default()).unwrap();
        assert_eq!(model.threshold, 0.8966);
        assert_eq!(model.source, ThresholdSource::Fixed);
    }
}
