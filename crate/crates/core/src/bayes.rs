//! Naive Bayes with Epanechnikov kernel density estimates per class and feature.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::PairLabel;
use crate::error::{bail, Result};
use crate::math;
use crate::stats;

/// Lower bound applied to densities before taking logs, so a point outside the
/// compact kernel support of one class still ranks both classes.
pub const DENSITY_FLOOR: f64 = 1e-300;

pub const MODEL_VERSION: u32 = 1;

#[inline]
pub fn epanechnikov(u: f64) -> f64 {
    if u.abs() <= 1.0 {
        0.75 * (1.0 - u * u)
    } else {
        0.0
    }
}

/// `(1 / (n h)) Σ K((x - s_i) / h)`.
pub fn epanechnikov_density(samples: &[f64], bandwidth: f64, x: f64) -> f64 {
    debug_assert!(bandwidth > 0.0 && !samples.is_empty());
    samples.iter().map(|&s| epanechnikov((x - s) / bandwidth)).sum::<f64>() / (samples.len() as f64 * bandwidth)
}

/// Same as [`epanechnikov_density`] over ascending `sorted` samples, visiting
/// only those inside the kernel support.
pub fn epanechnikov_density_sorted(sorted: &[f64], bandwidth: f64, x: f64) -> f64 {
    let start = sorted.partition_point(|&s| s < x - bandwidth);
    let end = sorted.partition_point(|&s| s <= x + bandwidth);
    sorted[start..end].iter().map(|&s| epanechnikov((x - s) / bandwidth)).sum::<f64>()
        / (sorted.len() as f64 * bandwidth)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorMode {
    #[default]
    Empirical,
    Balanced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbConfig {
    pub priors: PriorMode,
    /// Multiplier in `h = c · σ̂ · n^(-1/5)`.
    pub bandwidth_constant: f64,
    pub bandwidth_floor: f64,
    /// When set, a pair is labelled `Envelope` iff its envelope posterior reaches
    /// this value; otherwise the larger posterior wins.
    pub decision_threshold: Option<f64>,
}

impl Default for NbConfig {
    fn default() -> Self {
        Self { priors: PriorMode::Empirical, bandwidth_constant: 2.345, bandwidth_floor: 1e-6, decision_threshold: None }
    }
}

/// Class-conditional kernel density estimates for one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDensities {
    /// Training values per feature, ascending.
    pub samples: Vec<Vec<f64>>,
    pub bandwidths: Vec<f64>,
}

impl ClassDensities {
    fn log_likelihood(&self, row: &[f64]) -> f64 {
        row.iter()
            .zip(&self.samples)
            .zip(&self.bandwidths)
            .map(|((&x, s), &h)| math::ln(epanechnikov_density_sorted(s, h, x).max(DENSITY_FLOOR)))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelNbModel {
    pub version: u32,
    pub features: Vec<String>,
    /// `[envelope, non-envelope]`.
    pub priors: [f64; 2],
    /// `[envelope, non-envelope]`.
    pub classes: [ClassDensities; 2],
    pub decision_threshold: Option<f64>,
    /// Features whose within-class spread was zero and fell back to the bandwidth floor.
    #[serde(default)]
    pub floored: Vec<String>,
}

/// Plug-in bandwidth `c · σ̂ · n^(-1/5)` with `σ̂ = min(std, IQR / 1.349)`.
/// If that robust scale is zero the standard deviation is used alone.
pub fn silverman_bandwidth(values: &[f64], constant: f64, floor: f64) -> (f64, bool) {
    let n = values.len();
    let std = if n > 1 { math::sqrt(stats::variance(values) * n as f64 / (n - 1) as f64) } else { 0.0 };
    let sorted = stats::sorted_copy(values);
    let iqr = stats::quantile_sorted(&sorted, 0.75) - stats::quantile_sorted(&sorted, 0.25);
    let robust = std.min(iqr / 1.349);
    let scale = if robust > 0.0 { robust } else { std };
    let h = constant * scale * math::powf(n as f64, -0.2);
    if h > floor {
        (h, false)
    } else {
        (floor, true)
    }
}

impl KernelNbModel {
    /// Fits on a row-major table whose columns are named by `features`.
    pub fn fit(rows: &[Vec<f64>], labels: &[PairLabel], features: Vec<String>, config: &NbConfig) -> Result<Self> {
        if rows.len() != labels.len() {
            bail!(DimensionMismatch, "{} rows but {} labels", rows.len(), labels.len());
        }
        if features.is_empty() {
            bail!(InvalidParameter, "at least one feature is required");
        }
        if let Some(r) = rows.iter().find(|r| r.len() != features.len()) {
            bail!(DimensionMismatch, "row has {} values for {} features", r.len(), features.len());
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            bail!(InvalidData, "training features must be finite");
        }
        let n_env = labels.iter().filter(|l| l.is_envelope()).count();
        let n_non = labels.len() - n_env;
        if n_env == 0 || n_non == 0 {
            bail!(InvalidData, "training data must contain both classes ({n_env} envelope, {n_non} non-envelope)");
        }
        if let Some(t) = config.decision_threshold {
            if !(0.0..=1.0).contains(&t) {
                bail!(InvalidParameter, "decision threshold must lie in [0, 1]");
            }
        }
        let mut floored = Vec::new();
        let mut class = |label: PairLabel| {
            let members: Vec<&Vec<f64>> = rows.iter().zip(labels).filter(|(_, &l)| l == label).map(|(r, _)| r).collect();
            let mut samples = Vec::with_capacity(features.len());
            let mut bandwidths = Vec::with_capacity(features.len());
            for (f, name) in features.iter().enumerate() {
                let mut col: Vec<f64> = members.iter().map(|r| r[f]).collect();
                col.sort_by(f64::total_cmp);
                let (h, hit_floor) = silverman_bandwidth(&col, config.bandwidth_constant, config.bandwidth_floor);
                if hit_floor && !floored.contains(name) {
                    log::debug!("feature {name} has no spread within class {label:?}; bandwidth floored");
                    floored.push(name.clone());
                }
                samples.push(col);
                bandwidths.push(h);
            }
            ClassDensities { samples, bandwidths }
        };
        let classes = [class(PairLabel::Envelope), class(PairLabel::NonEnvelope)];
        let priors = match config.priors {
            PriorMode::Empirical => {
                let n = labels.len() as f64;
                [n_env as f64 / n, n_non as f64 / n]
            }
            PriorMode::Balanced => [0.5, 0.5],
        };
        Ok(Self { version: MODEL_VERSION, features, priors, classes, decision_threshold: config.decision_threshold, floored })
    }

    /// Log of prior times the product of per-feature densities, per class.
    pub fn log_joint(&self, row: &[f64]) -> [f64; 2] {
        [
            math::ln(self.priors[0]) + self.classes[0].log_likelihood(row),
            math::ln(self.priors[1]) + self.classes[1].log_likelihood(row),
        ]
    }

    /// Label and envelope posterior for one row in model feature order.
    pub fn predict_row(&self, row: &[f64]) -> (PairLabel, f64) {
        let lj = self.log_joint(row);
        let posterior = math::exp(lj[0] - math::log_sum_exp(&lj));
        let envelope = match self.decision_threshold {
            Some(t) => posterior >= t,
            None => lj[0] > lj[1],
        };
        (if envelope { PairLabel::Envelope } else { PairLabel::NonEnvelope }, posterior)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    #[test]
    fn kernel_peak_and_support() {
        assert_eq!(epanechnikov_density(&[2.0], 0.5, 2.0), 0.75 / 0.5);
        assert_eq!(epanechnikov_density(&[2.0, 3.0], 0.4, 5.0), 0.0);
    }

    #[test]
    fn density_integrates_to_one() {
        let samples = [0.1, 0.4, 0.45, 1.3, 2.0];
        let h = 0.3;
        let (a, b) = (0.1 - h, 2.0 + h);
        let n = 10_000;
        let step = (b - a) / n as f64;
        let mut integral = 0.0;
        for k in 0..=n {
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            integral += w * epanechnikov_density(&samples, h, a + k as f64 * step);
        }
        assert!((integral * step - 1.0).abs() < 1e-4);
    }

    #[test]
    fn sorted_evaluation_matches_direct() {
        let s = [0.0, 0.2, 0.25, 0.9, 1.5];
        for x in [-0.5, 0.0, 0.22, 0.6, 1.49, 2.0] {
            assert!((epanechnikov_density(&s, 0.3, x) - epanechnikov_density_sorted(&s, 0.3, x)).abs() < 1e-15);
        }
    }

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|k| alloc::format!("f{k}")).collect()
    }

    #[test]
    fn separated_data_is_learned_perfectly() {
        let rows: Vec<Vec<f64>> = (0..20).map(|k| vec![if k < 10 { k as f64 * 0.1 } else { 5.0 + k as f64 * 0.1 }]).collect();
        let labels: Vec<PairLabel> =
            (0..20).map(|k| if k < 10 { PairLabel::Envelope } else { PairLabel::NonEnvelope }).collect();
        let m = KernelNbModel::fit(&rows, &labels, names(1), &NbConfig::default()).unwrap();
        for (r, l) in rows.iter().zip(&labels) {
            assert_eq!(m.predict_row(r).0, *l);
        }
    }

    #[test]
    fn empirical_and_balanced_priors() {
        let rows: Vec<Vec<f64>> = (0..100).map(|k| vec![k as f64]).collect();
        let labels: Vec<PairLabel> =
            (0..100).map(|k| if k < 90 { PairLabel::Envelope } else { PairLabel::NonEnvelope }).collect();
        let m = KernelNbModel::fit(&rows, &labels, names(1), &NbConfig::default()).unwrap();
        assert!((m.priors[0] - 0.9).abs() < 1e-12 && (m.priors[1] - 0.1).abs() < 1e-12);
        let cfg = NbConfig { priors: PriorMode::Balanced, ..Default::default() };
        assert_eq!(KernelNbModel::fit(&rows, &labels, names(1), &cfg).unwrap().priors, [0.5, 0.5]);
    }

    #[test]
    fn single_class_is_an_error() {
        let rows = vec![vec![1.0], vec![2.0]];
        let labels = vec![PairLabel::Envelope; 2];
        assert!(KernelNbModel::fit(&rows, &labels, names(1), &NbConfig::default()).is_err());
    }

    #[test]
    fn zero_variance_feature_is_floored() {
        let rows = vec![vec![1.0], vec![1.0], vec![2.0], vec![3.0]];
        let labels = vec![PairLabel::Envelope, PairLabel::Envelope, PairLabel::NonEnvelope, PairLabel::NonEnvelope];
        let m = KernelNbModel::fit(&rows, &labels, names(1), &NbConfig::default()).unwrap();
        assert_eq!(m.classes[0].bandwidths[0], 1e-6);
        assert_eq!(m.floored, ["f0"]);
    }

    #[test]
    fn one_sided_support_gives_confident_posterior() {
        let rows = vec![vec![0.0], vec![0.1], vec![0.2], vec![10.0], vec![10.1], vec![10.2]];
        let labels = [PairLabel::Envelope; 3].into_iter().chain([PairLabel::NonEnvelope; 3]).collect::<Vec<_>>();
        let m = KernelNbModel::fit(&rows, &labels, names(1), &NbConfig::default()).unwrap();
        let (label, post) = m.predict_row(&[0.1]);
        assert_eq!(label, PairLabel::Envelope);
        assert!(post > 0.99);
    }

    #[test]
    fn symmetric_case_is_even() {
        let rows = vec![vec![-1.0], vec![-1.2], vec![1.0], vec![1.2]];
        let labels = vec![PairLabel::Envelope, PairLabel::Envelope, PairLabel::NonEnvelope, PairLabel::NonEnvelope];
        let m = KernelNbModel::fit(&rows, &labels, names(1), &NbConfig::default()).unwrap();
        assert!((m.predict_row(&[0.0]).1 - 0.5).abs() < 1e-9);
    }

    #[test]
    fn duplicated_training_set_only_changes_bandwidths() {
        let rows: Vec<Vec<f64>> = (0..12).map(|k| vec![(k * 7 % 12) as f64 * 0.3, k as f64]).collect();
        let labels: Vec<PairLabel> =
            (0..12).map(|k| if k % 3 == 0 { PairLabel::Envelope } else { PairLabel::NonEnvelope }).collect();
        let cfg = NbConfig::default();
        let a = KernelNbModel::fit(&rows, &labels, names(2), &cfg).unwrap();
        let doubled: Vec<Vec<f64>> = rows.iter().chain(&rows).cloned().collect();
        let dl: Vec<PairLabel> = labels.iter().chain(&labels).copied().collect();
        let b = KernelNbModel::fit(&doubled, &dl, names(2), &cfg).unwrap();
        assert_eq!(a.priors, b.priors);
        for c in 0..2 {
            for f in 0..2 {
                // refit oracle: bandwidth from the doubled sample directly
                let (h, _) = silverman_bandwidth(&b.classes[c].samples[f], cfg.bandwidth_constant, cfg.bandwidth_floor);
                assert_eq!(b.classes[c].bandwidths[f], h);
                let mut twice = a.classes[c].samples[f].iter().flat_map(|&v| [v, v]).collect::<Vec<_>>();
                twice.sort_by(f64::total_cmp);
                assert_eq!(b.classes[c].samples[f], twice);
            }
        }
    }
}
