//! Confusion-matrix metrics, cross-method set intersections and an
//! intensity-only isotope-pattern baseline.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::assemble::ClassifiedPair;
use crate::data::{Dataset, PairLabel};
use crate::error::{bail, Result};
use crate::math;
use crate::preselect::PeakPair;
use crate::synth;

/// 2×2 tallies with `Envelope` as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fp: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, tn: u64, fn_: u64, fp: u64) -> Self {
        Self { tp, tn, fn_, fp }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fn_ + self.fp
    }

    pub fn add(&mut self, predicted: PairLabel, truth: PairLabel) {
        match (predicted, truth) {
            (PairLabel::Envelope, PairLabel::Envelope) => self.tp += 1,
            (PairLabel::NonEnvelope, PairLabel::NonEnvelope) => self.tn += 1,
            (PairLabel::NonEnvelope, PairLabel::Envelope) => self.fn_ += 1,
            (PairLabel::Envelope, PairLabel::NonEnvelope) => self.fp += 1,
        }
    }

    pub fn merge(&mut self, other: &Self) {
        self.tp += other.tp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
        self.fp += other.fp;
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total().max(1) as f64
    }
}

pub fn confusion(predicted: &[PairLabel], truth: &[PairLabel]) -> Result<ConfusionCounts> {
    if predicted.len() != truth.len() {
        bail!(DimensionMismatch, "{} predictions for {} truth labels", predicted.len(), truth.len());
    }
    let mut c = ConfusionCounts::default();
    for (&p, &t) in predicted.iter().zip(truth) {
        c.add(p, t);
    }
    Ok(c)
}

/// A metric value as a fraction, or the reason it is undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reason: Option<String>,
}

impl Metric {
    fn defined(v: f64) -> Self {
        Self { value: Some(v), reason: None }
    }

    fn undefined(reason: &str) -> Self {
        Self { value: None, reason: Some(reason.to_string()) }
    }

    fn ratio(num: f64, den: f64, reason: &str) -> Self {
        if den > 0.0 {
            Self::defined(num / den)
        } else {
            Self::undefined(reason)
        }
    }

    /// Percentage rounded half away from zero to two decimals.
    pub fn percent(&self) -> Option<f64> {
        self.value.map(to_percent)
    }
}

pub fn to_percent(fraction: f64) -> f64 {
    math::round(fraction * 10_000.0) / 100.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub specificity: Metric,
    pub precision: Metric,
    pub recall: Metric,
    pub balanced_accuracy: Metric,
    pub csi: Metric,
    pub mcc: Metric,
    pub prevalence_threshold: Metric,
    pub fowlkes_mallows: Metric,
}

impl MetricReport {
    pub fn named(&self) -> [(&'static str, &Metric); 8] {
        [
            ("specificity", &self.specificity),
            ("precision", &self.precision),
            ("recall", &self.recall),
            ("balanced_accuracy", &self.balanced_accuracy),
            ("csi", &self.csi),
            ("mcc", &self.mcc),
            ("prevalence_threshold", &self.prevalence_threshold),
            ("fowlkes_mallows", &self.fowlkes_mallows),
        ]
    }
}

pub fn metrics(c: &ConfusionCounts) -> Result<MetricReport> {
    if c.total() == 0 {
        bail!(InvalidData, "confusion matrix is empty");
    }
    let (tp, tn, fn_, fp) = (c.tp as f64, c.tn as f64, c.fn_ as f64, c.fp as f64);
    let specificity = Metric::ratio(tn, tn + fp, "no actual negatives");
    let precision = Metric::ratio(tp, tp + fp, "no predicted positives");
    let recall = Metric::ratio(tp, tp + fn_, "no actual positives");
    let balanced_accuracy = match (recall.value, specificity.value) {
        (Some(r), Some(s)) => Metric::defined(0.5 * (r + s)),
        _ => Metric::undefined("needs both recall and specificity"),
    };
    let csi = Metric::ratio(tp, tp + fn_ + fp, "no positives predicted or present");
    let mcc_den = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    let mcc = if mcc_den > 0.0 {
        Metric::defined((tp * tn - fp * fn_) / math::sqrt(mcc_den))
    } else {
        Metric::undefined("a row or column of the confusion matrix is empty")
    };
    let prevalence_threshold = match (recall.value, specificity.value) {
        (Some(tpr), Some(tnr)) => {
            let fpr = 1.0 - tnr;
            let (a, b) = (math::sqrt(fpr), math::sqrt(tpr));
            if a + b > 0.0 {
                Metric::defined(a / (a + b))
            } else {
                Metric::undefined("true and false positive rates are both zero")
            }
        }
        _ => Metric::undefined("needs both recall and specificity"),
    };
    let fowlkes_mallows = match (precision.value, recall.value) {
        (Some(p), Some(r)) => Metric::defined(math::sqrt(p * r)),
        _ => Metric::undefined("needs both precision and recall"),
    };
    Ok(MetricReport { specificity, precision, recall, balanced_accuracy, csi, mcc, prevalence_threshold, fowlkes_mallows })
}

/// One Venn region: items labelled with `polarity` by exactly `methods` (and
/// by no other method).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub methods: Vec<String>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionReport {
    pub methods: Vec<String>,
    pub universe: usize,
    /// Exact regions for the non-envelope polarity, one per subset of methods
    /// (including the empty subset); counts sum to `universe`.
    pub non_envelope_regions: Vec<Region>,
    pub envelope_regions: Vec<Region>,
    /// Items every method labels non-envelope.
    pub common_non_envelope: usize,
    pub common_envelope: usize,
    /// `common_non_envelope / universe` as a percentage.
    pub overall_intersection_percent: f64,
}

const MAX_COMPARED_METHODS: usize = 16;

pub fn compare_label_sets(methods: &[(String, Vec<PairLabel>)]) -> Result<IntersectionReport> {
    if methods.len() < 2 {
        bail!(InvalidParameter, "at least two methods are needed for a comparison");
    }
    if methods.len() > MAX_COMPARED_METHODS {
        bail!(InvalidParameter, "at most {MAX_COMPARED_METHODS} methods can be compared");
    }
    let universe = methods[0].1.len();
    if let Some((name, _)) = methods.iter().find(|(_, l)| l.len() != universe) {
        bail!(DimensionMismatch, "method {name} labels a different universe size");
    }
    let k = methods.len();
    let mut ne_counts = vec![0usize; 1 << k];
    let mut e_counts = vec![0usize; 1 << k];
    for item in 0..universe {
        let mut ne_mask = 0usize;
        let mut e_mask = 0usize;
        for (m, (_, labels)) in methods.iter().enumerate() {
            match labels[item] {
                PairLabel::NonEnvelope => ne_mask |= 1 << m,
                PairLabel::Envelope => e_mask |= 1 << m,
            }
        }
        ne_counts[ne_mask] += 1;
        e_counts[e_mask] += 1;
    }
    let region = |mask: usize, count: usize| Region {
        methods: (0..k).filter(|m| mask & (1 << m) != 0).map(|m| methods[m].0.clone()).collect(),
        count,
    };
    let full = (1 << k) - 1;
    let common_non_envelope = ne_counts[full];
    Ok(IntersectionReport {
        methods: methods.iter().map(|(n, _)| n.clone()).collect(),
        universe,
        non_envelope_regions: ne_counts.iter().enumerate().map(|(m, &c)| region(m, c)).collect(),
        envelope_regions: e_counts.iter().enumerate().map(|(m, &c)| region(m, c)).collect(),
        common_non_envelope,
        common_envelope: e_counts[full],
        overall_intersection_percent: if universe == 0 { 0.0 } else { 100.0 * common_non_envelope as f64 / universe as f64 },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    /// Pairs with `|m - 1.003/z|` above this are non-envelope outright.
    pub spacing_tolerance: f64,
    /// Largest accepted `|observed - predicted| / predicted` intensity ratio error.
    pub max_relative_error: f64,
    /// Envelope positions tried for the lighter peak (0 = monoisotopic).
    pub max_position: usize,
    pub charge: u32,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self { spacing_tolerance: 0.25, max_relative_error: 0.5, max_position: 3, charge: 1 }
    }
}

/// Theoretical-versus-experimental matching on mean intensities only.
///
/// For a pair `(i, j)` at one isotope step, the lighter peak is assumed to sit
/// at position `k` of a Poisson envelope whose monoisotopic mass is
/// `mu_i - k · 1.003/z`; the predicted ratio `I_j / I_i` is then read off that
/// envelope. The pair is an envelope step if any `k` predicts the observed
/// ratio within the error bound. Spatial information is not used. The reported
/// posterior is `max(0, 1 - best relative error)`.
pub fn baseline_tve(dataset: &Dataset, pairs: &[PeakPair], config: &BaselineConfig) -> Result<Vec<ClassifiedPair>> {
    if config.charge == 0 {
        bail!(InvalidParameter, "charge must be at least 1");
    }
    let step = crate::ISOTOPE_SPACING / config.charge as f64;
    let means = dataset.mean_abundance();
    let comps = dataset.components();
    let mut out = Vec::with_capacity(pairs.len());
    for p in pairs {
        let mut best = f64::INFINITY;
        if (p.m - step).abs() <= config.spacing_tolerance && means[p.i] > 0.0 {
            let observed = means[p.j] / means[p.i];
            for k in 0..=config.max_position {
                let mono = comps[p.i].mu - k as f64 * step;
                if mono <= 0.0 {
                    break;
                }
                let env = synth::poisson_envelope(mono, config.charge, k + 2)?;
                let predicted = env[k + 1].1 / env[k].1;
                if predicted > 0.0 {
                    best = best.min((observed - predicted).abs() / predicted);
                }
            }
        }
        let label = if best <= config.max_relative_error { PairLabel::Envelope } else { PairLabel::NonEnvelope };
        let posterior = if best.is_finite() { (1.0 - best).max(0.0) } else { 0.0 };
        out.push(ClassifiedPair { pair: *p, label, posterior, preselect_rejected: false });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use PairLabel::{Envelope as E, NonEnvelope as N};

    #[test]
    fn confusion_tallies() {
        let truth = [E, E, E, N, N, N, N, N, N, N];
        assert_eq!(confusion(&truth, &truth).unwrap(), ConfusionCounts::new(3, 7, 0, 0));
        let inverted: Vec<_> = truth.iter().map(|l| if *l == E { N } else { E }).collect();
        assert_eq!(confusion(&inverted, &truth).unwrap(), ConfusionCounts::new(0, 0, 3, 7));
        let pred = [E, N, E, E, N, N, E, N, N, N];
        // hand tally: tp at 0,2; fn at 1; fp at 3,6; tn elsewhere
        assert_eq!(confusion(&pred, &truth).unwrap(), ConfusionCounts::new(2, 5, 1, 2));
        assert!(confusion(&pred[..3], &truth).is_err());
    }

    fn pct(m: &Metric) -> f64 {
        m.percent().unwrap()
    }

    #[test]
    fn first_dataset_row() {
        let r = metrics(&ConfusionCounts::new(48, 47691, 3, 8)).unwrap();
        assert_eq!(pct(&r.specificity), 99.98);
        assert_eq!(pct(&r.precision), 85.71);
        assert_eq!(pct(&r.recall), 94.12);
        assert_eq!(pct(&r.balanced_accuracy), 97.05);
        assert_eq!(pct(&r.csi), 81.36);
        assert_eq!(pct(&r.mcc), 89.81);
        assert_eq!(pct(&r.prevalence_threshold), 1.32);
        assert_eq!(pct(&r.fowlkes_mallows), 89.82);
    }

    #[test]
    fn perfect_classifier() {
        let r = metrics(&ConfusionCounts::new(5, 20, 0, 0)).unwrap();
        for (name, m) in r.named() {
            let expected = if name == "prevalence_threshold" { 0.0 } else { 1.0 };
            assert_eq!(m.value, Some(expected), "{name}");
        }
    }

    #[test]
    fn undefined_metrics_carry_reasons() {
        let r = metrics(&ConfusionCounts::new(0, 10, 0, 0)).unwrap();
        assert!(r.precision.value.is_none() && r.precision.reason.is_some());
        assert!(r.recall.value.is_none());
        assert!(r.mcc.value.is_none());
        assert!(r.fowlkes_mallows.value.is_none());
        assert_eq!(r.specificity.value, Some(1.0));
        assert!(metrics(&ConfusionCounts::default()).is_err());
    }

    #[test]
    fn rounding_is_half_away_from_zero() {
        assert_eq!(to_percent(0.123_45), 12.35);
        assert_eq!(to_percent(0.5), 50.0);
    }

    proptest! {
        #[test]
        fn mcc_is_class_symmetric(tp in 0u64..500, tn in 0u64..500, f1 in 0u64..500, f2 in 0u64..500) {
            prop_assume!(tp + tn + f1 + f2 > 0);
            let a = metrics(&ConfusionCounts::new(tp, tn, f1, f2)).unwrap();
            let b = metrics(&ConfusionCounts::new(tn, tp, f2, f1)).unwrap();
            prop_assert_eq!(a.mcc.value, b.mcc.value);
        }

        #[test]
        fn fmi_squared_is_precision_times_recall(tp in 1u64..500, tn in 0u64..500, f1 in 0u64..500, f2 in 0u64..500) {
            let r = metrics(&ConfusionCounts::new(tp, tn, f1, f2)).unwrap();
            let fmi = r.fowlkes_mallows.value.unwrap();
            prop_assert!((fmi * fmi - r.precision.value.unwrap() * r.recall.value.unwrap()).abs() < 1e-12);
        }

        #[test]
        fn regions_partition_the_universe(labels in proptest::collection::vec(proptest::collection::vec(proptest::bool::ANY, 30), 2..5)) {
            let methods: Vec<(String, Vec<PairLabel>)> = labels
                .iter()
                .enumerate()
                .map(|(k, l)| (alloc::format!("m{k}"), l.iter().map(|&b| if b { E } else { N }).collect()))
                .collect();
            let r = compare_label_sets(&methods).unwrap();
            prop_assert_eq!(r.non_envelope_regions.iter().map(|x| x.count).sum::<usize>(), 30);
            prop_assert_eq!(r.envelope_regions.iter().map(|x| x.count).sum::<usize>(), 30);
        }
    }

    #[test]
    fn identical_and_complementary_lists() {
        let a = vec![E, N, N, E, N];
        let r = compare_label_sets(&[("a".into(), a.clone()), ("b".into(), a.clone())]).unwrap();
        assert_eq!(r.common_non_envelope, 3);
        assert!((r.overall_intersection_percent - 60.0).abs() < 1e-12);
        let inv: Vec<_> = a.iter().map(|l| if *l == E { N } else { E }).collect();
        let r = compare_label_sets(&[("a".into(), a), ("b".into(), inv)]).unwrap();
        assert_eq!(r.common_non_envelope, 0);
    }

    #[test]
    fn three_way_regions_match_enumeration() {
        let x = [E, N, N, N, E, N, N, E, N, N];
        let y = [N, N, E, N, E, N, N, N, N, E];
        let z = [N, E, N, N, E, N, E, N, N, N];
        let methods = vec![("x".to_string(), x.to_vec()), ("y".to_string(), y.to_vec()), ("z".to_string(), z.to_vec())];
        let r = compare_label_sets(&methods).unwrap();
        // brute force: for each subset, items that are nE in exactly that subset
        for region in &r.non_envelope_regions {
            let expected = (0..10)
                .filter(|&i| {
                    methods.iter().all(|(name, l)| (l[i] == N) == region.methods.contains(name))
                })
                .count();
            assert_eq!(region.count, expected, "{:?}", region.methods);
        }
        assert_eq!(r.common_non_envelope, 3); // items 3, 5 and 8
    }

    #[test]
    fn too_few_methods_or_mismatched_universe() {
        assert!(compare_label_sets(&[("a".into(), vec![E])]).is_err());
        assert!(compare_label_sets(&[("a".into(), vec![E]), ("b".into(), vec![E, N])]).is_err());
    }
}
