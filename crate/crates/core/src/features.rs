//! The 17 pair descriptors, their rank-correlation structure and greedy
//! wrapper feature selection.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::bayes::NbConfig;
use crate::cv;
use crate::data::{Dataset, PairLabel};
use crate::error::{bail, Result};
use crate::image::{build_ion_image, differential_image, enhance, EnhanceConfig, IonImage};
use crate::preselect::PeakPair;
use crate::stats;
use crate::texture::{self, GlcmConfig};

/// Descriptor names in their fixed column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureName {
    M,
    S,
    Contrast,
    Homogeneity,
    M1,
    Entropy,
    Energy,
    GlcmCorrelation,
    Mean,
    Std,
    Variance,
    Moment,
    Median,
    Iqr,
    Cv,
    /// Pearson correlation between the two enhanced single-peak images.
    Correlation,
    Autocorrelation,
}

pub const FEATURE_COUNT: usize = 17;

/// Bumped whenever the set or order of descriptors changes.
pub const FEATURE_SCHEMA_VERSION: u32 = 1;

impl FeatureName {
    pub const ALL: [FeatureName; FEATURE_COUNT] = [
        FeatureName::M,
        FeatureName::S,
        FeatureName::Contrast,
        FeatureName::Homogeneity,
        FeatureName::M1,
        FeatureName::Entropy,
        FeatureName::Energy,
        FeatureName::GlcmCorrelation,
        FeatureName::Mean,
        FeatureName::Std,
        FeatureName::Variance,
        FeatureName::Moment,
        FeatureName::Median,
        FeatureName::Iqr,
        FeatureName::Cv,
        FeatureName::Correlation,
        FeatureName::Autocorrelation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureName::M => "m",
            FeatureName::S => "s",
            FeatureName::Contrast => "contrast",
            FeatureName::Homogeneity => "homogeneity",
            FeatureName::M1 => "m1",
            FeatureName::Entropy => "entropy",
            FeatureName::Energy => "energy",
            FeatureName::GlcmCorrelation => "glcm_correlation",
            FeatureName::Mean => "mean",
            FeatureName::Std => "std",
            FeatureName::Variance => "variance",
            FeatureName::Moment => "moment",
            FeatureName::Median => "median",
            FeatureName::Iqr => "iqr",
            FeatureName::Cv => "cv",
            FeatureName::Correlation => "correlation",
            FeatureName::Autocorrelation => "autocorrelation",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.as_str() == name)
    }
}

impl core::fmt::Display for FeatureName {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Descriptors the classifier uses unless told otherwise.
pub const DEFAULT_SELECTED: [FeatureName; 8] = [
    FeatureName::M,
    FeatureName::S,
    FeatureName::Correlation,
    FeatureName::Entropy,
    FeatureName::Median,
    FeatureName::Contrast,
    FeatureName::Homogeneity,
    FeatureName::Moment,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; FEATURE_COUNT]);

impl FeatureVector {
    pub fn get(&self, name: FeatureName) -> f64 {
        self.0[name.index()]
    }

    pub fn project(&self, names: &[FeatureName]) -> Vec<f64> {
        names.iter().map(|&n| self.get(n)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub enhance: EnhanceConfig,
    pub glcm: GlcmConfig,
    pub entropy_base: f64,
    /// `(rows, cols)` displacement for the differential-image autocorrelation.
    pub autocorrelation_lag: (i32, i32),
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self { enhance: EnhanceConfig::default(), glcm: GlcmConfig::default(), entropy_base: 2.0, autocorrelation_lag: (0, 1) }
    }
}

/// Enhanced single-peak images of a pair and their differential image.
#[derive(Debug, Clone)]
pub struct PairImages {
    pub first: IonImage,
    pub second: IonImage,
    pub differential: IonImage,
}

/// Ion image of one component after enhancement.
pub fn enhanced_image(dataset: &Dataset, id: usize, config: &FeatureConfig) -> Result<IonImage> {
    Ok(enhance(&build_ion_image(dataset, id)?, &config.enhance))
}

pub fn pair_images(pair: &PeakPair, dataset: &Dataset, config: &FeatureConfig) -> Result<PairImages> {
    let first = enhanced_image(dataset, pair.i, config)?;
    let second = enhanced_image(dataset, pair.j, config)?;
    let differential = differential_image(&first, &second)?;
    Ok(PairImages { first, second, differential })
}

/// Descriptors of a pair from the already enhanced images of its two peaks.
pub fn pair_features(pair: &PeakPair, first: &IonImage, second: &IonImage, config: &FeatureConfig) -> Result<FeatureVector> {
    let differential = differential_image(first, second)?;
    let glcm = texture::compute_glcm(&differential, &config.glcm)?;
    let g = texture::glcm_metrics_with_base(&glcm, config.entropy_base);
    let st = texture::image_stats(&differential)?;
    let correlation = texture::cross_correlation(first, second)?;
    let autocorrelation = texture::autocorrelation(&differential, config.autocorrelation_lag)?;
    let v = FeatureVector([
        pair.m,
        pair.s,
        g.contrast,
        g.homogeneity,
        g.m1,
        g.entropy,
        g.energy,
        g.correlation,
        st.mean,
        st.std,
        st.variance,
        st.moment,
        st.median,
        st.iqr,
        st.cv,
        correlation,
        autocorrelation,
    ]);
    if let Some(k) = v.0.iter().position(|x| !x.is_finite()) {
        bail!(Numeric, "feature {} of pair ({}, {}) is not finite", FeatureName::ALL[k], pair.i, pair.j);
    }
    Ok(v)
}

/// All 17 descriptors of a candidate pair.
pub fn feature_vector(pair: &PeakPair, dataset: &Dataset, config: &FeatureConfig) -> Result<FeatureVector> {
    let first = enhanced_image(dataset, pair.i, config)?;
    let second = enhanced_image(dataset, pair.j, config)?;
    pair_features(pair, &first, &second, config)
}

/// Component ids referenced by `pairs`, ascending and unique.
pub fn referenced_components(pairs: &[PeakPair]) -> Vec<usize> {
    let mut ids: Vec<usize> = pairs.iter().flat_map(|p| [p.i, p.j]).collect();
    ids.sort_unstable();
    ids.dedup();
    ids
}

/// Descriptors for many pairs, enhancing each referenced component once.
pub fn extract_features(pairs: &[PeakPair], dataset: &Dataset, config: &FeatureConfig) -> Result<Vec<FeatureVector>> {
    let mut images: Vec<Option<IonImage>> = vec![None; dataset.components().len()];
    for id in referenced_components(pairs) {
        images[id] = Some(enhanced_image(dataset, id, config)?);
    }
    pairs
        .iter()
        .map(|p| match (&images[p.i], &images[p.j]) {
            (Some(a), Some(b)) => pair_features(p, a, b, config),
            _ => bail!(InvalidParameter, "pair ({}, {}) references an unknown component", p.i, p.j),
        })
        .collect()
}

/// Rows of the named features, one per vector.
pub fn project_all(vectors: &[FeatureVector], names: &[FeatureName]) -> Vec<Vec<f64>> {
    vectors.iter().map(|v| v.project(names)).collect()
}

pub fn names_to_strings(names: &[FeatureName]) -> Vec<String> {
    names.iter().map(|n| n.as_str().to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpearmanMatrix {
    pub features: Vec<FeatureName>,
    /// Row-major `n × n`.
    pub values: Vec<f64>,
    /// Features that were constant across the vectors; their off-diagonal entries are 0.
    pub constant: Vec<FeatureName>,
}

impl SpearmanMatrix {
    pub fn get(&self, a: FeatureName, b: FeatureName) -> f64 {
        let n = self.features.len();
        let i = self.features.iter().position(|&f| f == a).expect("feature in matrix");
        let j = self.features.iter().position(|&f| f == b).expect("feature in matrix");
        self.values[i * n + j]
    }
}

/// Spearman rank correlation (average ranks for ties) between all 17 descriptors.
pub fn spearman_matrix(vectors: &[FeatureVector]) -> Result<SpearmanMatrix> {
    if vectors.len() < 3 {
        bail!(InvalidData, "rank correlation needs at least 3 vectors, got {}", vectors.len());
    }
    let ranks: Vec<Vec<f64>> = FeatureName::ALL
        .iter()
        .map(|&f| stats::average_ranks(&vectors.iter().map(|v| v.get(f)).collect::<Vec<_>>()))
        .collect();
    let n = FEATURE_COUNT;
    let mut values = vec![0.0; n * n];
    let mut constant = Vec::new();
    for i in 0..n {
        values[i * n + i] = 1.0;
        for j in (i + 1)..n {
            let r = stats::pearson(&ranks[i], &ranks[j]).unwrap_or(0.0);
            values[i * n + j] = r;
            values[j * n + i] = r;
        }
        if stats::variance(&ranks[i]) == 0.0 {
            log::warn!("feature {} is constant; its rank correlations are set to 0", FeatureName::ALL[i]);
            constant.push(FeatureName::ALL[i]);
        }
    }
    Ok(SpearmanMatrix { features: FeatureName::ALL.to_vec(), values, constant })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub folds: usize,
    pub seed: u64,
    /// Stop once the best candidate improves balanced accuracy by less than this.
    pub min_improvement: f64,
    pub nb: NbConfig,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self { folds: 5, seed: 0, min_improvement: 1e-3, nb: NbConfig::default() }
    }
}

/// One accepted step of forward selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionStep {
    pub feature: FeatureName,
    pub balanced_accuracy: f64,
}

/// Greedy forward selection scored by cross-validated balanced accuracy of the
/// kernel naive Bayes model. Ties go to the earlier feature in column order.
pub fn forward_select(
    vectors: &[FeatureVector],
    labels: &[PairLabel],
    config: &SelectionConfig,
) -> Result<Vec<SelectionStep>> {
    if vectors.len() != labels.len() {
        bail!(DimensionMismatch, "{} vectors but {} labels", vectors.len(), labels.len());
    }
    let n_env = labels.iter().filter(|l| l.is_envelope()).count();
    if n_env == 0 || n_env == labels.len() {
        bail!(InvalidData, "forward selection needs both classes");
    }
    let mut selected: Vec<FeatureName> = Vec::new();
    let mut steps = Vec::new();
    let mut current = 0.0;
    while selected.len() < FEATURE_COUNT {
        let mut best: Option<(FeatureName, f64)> = None;
        for f in FeatureName::ALL {
            if selected.contains(&f) {
                continue;
            }
            let mut trial = selected.clone();
            trial.push(f);
            let rows = project_all(vectors, &trial);
            let score =
                cv::cv_balanced_accuracy(&rows, labels, &names_to_strings(&trial), &config.nb, config.folds, config.seed)?;
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((f, score));
            }
        }
        let Some((feature, score)) = best else { break };
        if score - current < config.min_improvement {
            break;
        }
        current = score;
        selected.push(feature);
        steps.push(SelectionStep { feature, balanced_accuracy: score });
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{AbundanceMatrix, PeakComponent, PixelGrid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn names_round_trip_and_order_is_fixed() {
        for (k, f) in FeatureName::ALL.iter().enumerate() {
            assert_eq!(f.index(), k);
            assert_eq!(FeatureName::parse(f.as_str()), Some(*f));
        }
        assert_eq!(FeatureName::ALL[0].as_str(), "m");
        assert_eq!(FeatureName::ALL[16].as_str(), "autocorrelation");
    }

    fn two_component_dataset(a: Vec<f32>, b: Vec<f32>, w: u32, h: u32) -> Dataset {
        let comps = vec![
            PeakComponent { id: 0, mu: 800.0, sigma: 0.05, area: 1.0 },
            PeakComponent { id: 1, mu: 801.003, sigma: 0.05, area: 1.0 },
        ];
        let values = a.iter().zip(&b).flat_map(|(&x, &y)| [x, y]).collect();
        let m = AbundanceMatrix::new((w * h) as usize, 2, values).unwrap();
        Dataset::from_parts(comps, PixelGrid::full(w, h).unwrap(), m, None).unwrap().0
    }

    fn pair(ds: &Dataset) -> PeakPair {
        PeakPair::new(&ds.components()[0], &ds.components()[1], crate::preselect::SigmaRatio::Variance)
    }

    fn blob(w: u32, h: u32) -> Vec<f32> {
        (0..h)
            .flat_map(|y| (0..w).map(move |x| (x, y)))
            .map(|(x, y)| {
                let (dx, dy) = (x as f64 - 6.0, y as f64 - 8.0);
                (100.0 * libm::exp(-(dx * dx + dy * dy) / 30.0)) as f32
            })
            .collect()
    }

    #[test]
    fn duplicate_component_has_flat_differential() {
        let a = blob(16, 16);
        let ds = two_component_dataset(a.clone(), a, 16, 16);
        let v = feature_vector(&pair(&ds), &ds, &FeatureConfig::default()).unwrap();
        assert_eq!(v.get(FeatureName::Contrast), 0.0);
        assert_eq!(v.get(FeatureName::Entropy), 0.0);
        assert_eq!(v.get(FeatureName::Median), 0.0);
        assert!((v.get(FeatureName::Correlation) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn power_of_two_rescaling_leaves_features_unchanged() {
        let a = blob(16, 16);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b: Vec<f32> = (0..256).map(|_| rng.random::<f32>() * 50.0).collect();
        let ds = two_component_dataset(a.clone(), b.clone(), 16, 16);
        let scaled = two_component_dataset(a.iter().map(|v| v * 8.0).collect(), b.iter().map(|v| v * 8.0).collect(), 16, 16);
        let cfg = FeatureConfig::default();
        assert_eq!(feature_vector(&pair(&ds), &ds, &cfg).unwrap(), feature_vector(&pair(&scaled), &scaled, &cfg).unwrap());
    }

    #[test]
    fn batch_extraction_matches_single_pairs() {
        let a = blob(16, 16);
        let b: Vec<f32> = a.iter().rev().copied().collect();
        let ds = two_component_dataset(a, b, 16, 16);
        let p = pair(&ds);
        let cfg = FeatureConfig::default();
        let batch = extract_features(&[p, p], &ds, &cfg).unwrap();
        assert_eq!(batch, [feature_vector(&p, &ds, &cfg).unwrap(); 2]);
        let bad = PeakPair { j: 7, ..p };
        assert!(extract_features(&[bad], &ds, &cfg).is_err());
    }

    fn vec_with(f: impl Fn(usize) -> f64) -> FeatureVector {
        FeatureVector(core::array::from_fn(f))
    }

    #[test]
    fn spearman_of_duplicates_and_negations() {
        // entropy is a monotone transform of contrast, energy reverses it, iqr is constant
        let vectors: Vec<FeatureVector> = (0..6)
            .map(|r| {
                let base = (r * 5 % 6) as f64;
                vec_with(|k| match FeatureName::ALL[k] {
                    FeatureName::Contrast => base,
                    FeatureName::Entropy => base * base + 1.0,
                    FeatureName::Energy => -base,
                    FeatureName::Iqr => 1.0,
                    _ => libm::sin((r * (k + 1)) as f64 + 0.5),
                })
            })
            .collect();
        let m = spearman_matrix(&vectors).unwrap();
        assert!((m.get(FeatureName::Contrast, FeatureName::Entropy) - 1.0).abs() < 1e-12);
        assert!((m.get(FeatureName::Contrast, FeatureName::Energy) + 1.0).abs() < 1e-12);
        assert_eq!(m.get(FeatureName::Iqr, FeatureName::Mean), 0.0);
        assert_eq!(m.constant, [FeatureName::Iqr]);
        for f in FeatureName::ALL {
            assert_eq!(m.get(f, f), 1.0);
        }
        assert!(spearman_matrix(&vectors[..2]).is_err());
    }

    fn selection_data(seed: u64) -> (Vec<FeatureVector>, Vec<PairLabel>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels: Vec<PairLabel> =
            (0..60).map(|i| if i % 3 == 0 { PairLabel::Envelope } else { PairLabel::NonEnvelope }).collect();
        let vectors = labels
            .iter()
            .map(|l| {
                let sep = if l.is_envelope() { 0.0 } else { 5.0 } + rng.random::<f64>();
                let noise: [f64; FEATURE_COUNT] = core::array::from_fn(|_| rng.random::<f64>());
                vec_with(|k| match FeatureName::ALL[k] {
                    FeatureName::Median => sep,
                    FeatureName::Iqr => sep, // exact duplicate
                    _ => noise[k],
                })
            })
            .collect();
        (vectors, labels)
    }

    #[test]
    fn separating_feature_is_chosen_first_and_duplicate_never() {
        let (vectors, labels) = selection_data(9);
        let steps = forward_select(&vectors, &labels, &SelectionConfig::default()).unwrap();
        assert_eq!(steps[0].feature, FeatureName::Median);
        assert_eq!(steps[0].balanced_accuracy, 1.0);
        assert!(steps.iter().all(|s| s.feature != FeatureName::Iqr));
        let single = vec![PairLabel::Envelope; vectors.len()];
        assert!(forward_select(&vectors, &single, &SelectionConfig::default()).is_err());
    }

    #[test]
    fn default_selection_is_the_standard_eight() {
        let names: Vec<&str> = DEFAULT_SELECTED.iter().map(|f| f.as_str()).collect();
        assert_eq!(names, ["m", "s", "correlation", "entropy", "median", "contrast", "homogeneity", "moment"]);
    }
}
