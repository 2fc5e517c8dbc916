//! Gray-level co-occurrence matrices, Haralick-style metrics and pixel statistics.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::image::IonImage;
use crate::math;
use crate::stats;

/// Intensity interval mapped onto the gray levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QuantRange {
    /// Fixed interval; values outside are clamped to the end levels.
    Fixed { lo: f64, hi: f64 },
    /// Each image's own `[min, max]` over valid pixels.
    ImageMinMax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlcmConfig {
    pub levels: usize,
    /// `(row, column)` displacements pooled into one matrix.
    pub offsets: Vec<(i32, i32)>,
    pub symmetric: bool,
    pub range: QuantRange,
}

impl Default for GlcmConfig {
    fn default() -> Self {
        Self {
            levels: 8,
            offsets: vec![(0, 1), (1, 0), (1, 1), (1, -1)],
            symmetric: true,
            range: QuantRange::Fixed { lo: 0.0, hi: 1.0 },
        }
    }
}

/// Normalized co-occurrence distribution, `levels × levels`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Glcm {
    levels: usize,
    p: Vec<f64>,
    offsets: Vec<(i32, i32)>,
    symmetric: bool,
}

impl Glcm {
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.levels + j]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    pub fn offsets(&self) -> &[(i32, i32)] {
        &self.offsets
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    fn cells(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let l = self.levels;
        self.p.iter().enumerate().map(move |(k, &v)| (k / l, k % l, v))
    }
}

/// Uniform quantization of valid pixels into `levels` gray levels.
pub fn quantize(image: &IonImage, levels: usize, range: QuantRange) -> Vec<Option<usize>> {
    let (lo, hi) = match range {
        QuantRange::Fixed { lo, hi } => (lo, hi),
        QuantRange::ImageMinMax => {
            let v = image.valid_values();
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        }
    };
    let span = hi - lo;
    image
        .values()
        .iter()
        .zip(image.mask())
        .map(|(&v, &ok)| {
            ok.then(|| {
                if !(span > 0.0) {
                    0
                } else {
                    let t = ((v - lo) / span).clamp(0.0, 1.0);
                    (math::floor(t * levels as f64) as usize).min(levels - 1)
                }
            })
        })
        .collect()
}

pub fn compute_glcm(image: &IonImage, config: &GlcmConfig) -> Result<Glcm> {
    let l = config.levels;
    if l < 2 {
        bail!(InvalidParameter, "a co-occurrence matrix needs at least 2 levels");
    }
    if config.offsets.is_empty() {
        bail!(InvalidParameter, "at least one offset is required");
    }
    if let QuantRange::Fixed { lo, hi } = config.range {
        if !(hi > lo) {
            bail!(InvalidParameter, "quantization range [{lo}, {hi}] is empty");
        }
    }
    let q = quantize(image, l, config.range);
    let (w, h) = (image.width() as i64, image.height() as i64);
    let mut counts = vec![0u64; l * l];
    let mut pairs = 0u64;
    for &(dr, dc) in &config.offsets {
        for r in 0..h {
            let nr = r + dr as i64;
            if nr < 0 || nr >= h {
                continue;
            }
            for c in 0..w {
                let nc = c + dc as i64;
                if nc < 0 || nc >= w {
                    continue;
                }
                let (Some(a), Some(b)) = (q[(r * w + c) as usize], q[(nr * w + nc) as usize]) else {
                    continue;
                };
                counts[a * l + b] += 1;
                if config.symmetric {
                    counts[b * l + a] += 1;
                }
                pairs += 1;
            }
        }
    }
    if pairs < 2 {
        bail!(InvalidData, "only {pairs} co-occurring valid pixel pair(s); at least 2 required");
    }
    let total: u64 = counts.iter().sum();
    let p = counts.iter().map(|&c| c as f64 / total as f64).collect();
    Ok(Glcm { levels: l, p, offsets: config.offsets.clone(), symmetric: config.symmetric })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlcmMetrics {
    pub contrast: f64,
    pub homogeneity: f64,
    /// First absolute moment of the level difference, `Σ p |i - j|` (dissimilarity).
    pub m1: f64,
    pub entropy: f64,
    pub energy: f64,
    pub correlation: f64,
}

pub fn glcm_metrics(g: &Glcm) -> GlcmMetrics {
    glcm_metrics_with_base(g, 2.0)
}

/// Metrics with entropy in the given logarithm base.
pub fn glcm_metrics_with_base(g: &Glcm, entropy_base: f64) -> GlcmMetrics {
    let (mut contrast, mut homogeneity, mut m1, mut entropy, mut energy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut mu_i, mut mu_j) = (0.0, 0.0);
    for (i, j, p) in g.cells() {
        let d = i as f64 - j as f64;
        contrast += p * d * d;
        homogeneity += p / (1.0 + d.abs());
        m1 += p * d.abs();
        if p > 0.0 {
            entropy -= p * math::ln(p);
        }
        energy += p * p;
        mu_i += i as f64 * p;
        mu_j += j as f64 * p;
    }
    let (mut var_i, mut var_j, mut cov) = (0.0, 0.0, 0.0);
    for (i, j, p) in g.cells() {
        let (di, dj) = (i as f64 - mu_i, j as f64 - mu_j);
        var_i += p * di * di;
        var_j += p * dj * dj;
        cov += p * di * dj;
    }
    let correlation = if var_i > 0.0 && var_j > 0.0 { cov / math::sqrt(var_i * var_j) } else { 0.0 };
    let entropy = if entropy_base == core::f64::consts::E { entropy } else { entropy / math::ln(entropy_base) };
    GlcmMetrics { contrast, homogeneity, m1, entropy: entropy.max(0.0), energy, correlation }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageStats {
    pub mean: f64,
    pub std: f64,
    pub variance: f64,
    /// Third central moment.
    pub moment: f64,
    pub median: f64,
    pub iqr: f64,
    /// `std / mean`, 0 when the mean is 0.
    pub cv: f64,
}

/// Population statistics over valid pixels.
pub fn image_stats(image: &IonImage) -> Result<ImageStats> {
    let v = image.valid_values();
    if v.is_empty() {
        bail!(InvalidData, "image has no valid pixels");
    }
    let mean = stats::mean(&v);
    let n = v.len() as f64;
    let (mut m2, mut m3) = (0.0, 0.0);
    for &x in &v {
        let d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    let variance = m2 / n;
    let std = math::sqrt(variance);
    let sorted = stats::sorted_copy(&v);
    let median = stats::quantile_sorted(&sorted, 0.5);
    let iqr = stats::quantile_sorted(&sorted, 0.75) - stats::quantile_sorted(&sorted, 0.25);
    let cv = if mean == 0.0 { 0.0 } else { std / mean };
    Ok(ImageStats { mean, std, variance, moment: m3 / n, median, iqr, cv })
}

/// Pearson correlation of the valid pixels of two images; 0 if either is constant.
pub fn cross_correlation(a: &IonImage, b: &IonImage) -> Result<f64> {
    if a.width() != b.width() || a.height() != b.height() || a.mask() != b.mask() {
        bail!(DimensionMismatch, "images differ in shape or mask");
    }
    Ok(stats::pearson(&a.valid_values(), &b.valid_values()).unwrap_or(0.0))
}

/// Pearson correlation between each valid pixel and its valid neighbour at
/// `lag = (rows, cols)`; 0 if either side is constant.
pub fn autocorrelation(image: &IonImage, lag: (i32, i32)) -> Result<f64> {
    let (w, h) = (image.width() as i64, image.height() as i64);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for r in 0..h {
        let nr = r + lag.0 as i64;
        if nr < 0 || nr >= h {
            continue;
        }
        for c in 0..w {
            let nc = c + lag.1 as i64;
            if nc < 0 || nc >= w {
                continue;
            }
            if let (Some(a), Some(b)) = (image.get(r as usize, c as usize), image.get(nr as usize, nc as usize)) {
                xs.push(a);
                ys.push(b);
            }
        }
    }
    if xs.len() < 2 {
        bail!(InvalidData, "only {} lagged valid pixel pair(s); at least 2 required", xs.len());
    }
    Ok(stats::pearson(&xs, &ys).unwrap_or(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn img(w: usize, h: usize, v: Vec<f64>) -> IonImage {
        IonImage::from_values(w, h, v).unwrap()
    }

    fn checkerboard(n: usize) -> IonImage {
        img(n, n, (0..n * n).map(|k| ((k / n + k % n) % 2) as f64).collect())
    }

    #[test]
    fn constant_image_metrics() {
        let g = compute_glcm(&img(4, 4, vec![0.3; 16]), &GlcmConfig::default()).unwrap();
        let nonzero: Vec<_> = g.cells().filter(|c| c.2 > 0.0).collect();
        assert_eq!(nonzero.len(), 1);
        assert_eq!(nonzero[0].0, nonzero[0].1);
        assert_eq!(nonzero[0].2, 1.0);
        let m = glcm_metrics(&g);
        assert_eq!((m.contrast, m.homogeneity, m.energy, m.entropy), (0.0, 1.0, 1.0, 0.0));
    }

    #[test]
    fn checkerboard_matches_enumeration() {
        let cfg = GlcmConfig { levels: 2, offsets: vec![(0, 1)], ..Default::default() };
        let g = compute_glcm(&checkerboard(4), &cfg).unwrap();
        assert_eq!((g.get(0, 0), g.get(0, 1), g.get(1, 0), g.get(1, 1)), (0.0, 0.5, 0.5, 0.0));
        let m = glcm_metrics(&g);
        assert_relative_eq!(m.contrast, 1.0);
        assert_relative_eq!(m.homogeneity, 0.5);
        assert_relative_eq!(m.energy, 0.5);
        assert_relative_eq!(m.entropy, 1.0);
        assert_relative_eq!(m.m1, 1.0);
        assert_relative_eq!(m.correlation, -1.0);
    }

    #[test]
    fn masked_pixels_contribute_nothing() {
        let mut valid = vec![true; 9];
        valid[4] = false;
        // centre value would add a level-7 row/column if counted
        let im = IonImage::with_mask(3, 3, vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0], valid).unwrap();
        let g = compute_glcm(&im, &GlcmConfig::default()).unwrap();
        assert_eq!(g.get(0, 0), 1.0);
    }

    #[test]
    fn too_few_pairs() {
        let im = img(2, 1, vec![0.0, 1.0]);
        let cfg = GlcmConfig { offsets: vec![(0, 1)], ..Default::default() };
        assert!(compute_glcm(&im, &cfg).is_err());
        assert!(autocorrelation(&im, (0, 1)).is_err());
    }

    #[test]
    fn stats_of_one_to_nine() {
        let s = image_stats(&img(3, 3, (1..=9).map(f64::from).collect())).unwrap();
        assert_eq!(s.mean, 5.0);
        assert_eq!(s.median, 5.0);
        assert_relative_eq!(s.variance, 20.0 / 3.0, epsilon = 1e-12);
        assert_eq!(s.moment, 0.0);
        assert_eq!(s.iqr, 4.0);
    }

    #[test]
    fn stats_of_constant_and_skewed() {
        let s = image_stats(&img(2, 2, vec![3.0; 4])).unwrap();
        assert_eq!((s.std, s.cv, s.iqr), (0.0, 0.0, 0.0));

        let s = image_stats(&img(2, 2, vec![0.0, 0.0, 0.0, 10.0])).unwrap();
        let std = libm::sqrt((3.0 * 2.5 * 2.5 + 7.5 * 7.5) / 4.0);
        assert_eq!(s.mean, 2.5);
        assert_relative_eq!(s.std, libm::sqrt(18.75), epsilon = 1e-12);
        assert_relative_eq!(s.std, std, epsilon = 1e-12);
        assert_relative_eq!(s.cv, libm::sqrt(18.75) / 2.5, epsilon = 1e-12);

        let zeros = image_stats(&img(2, 1, vec![0.0, 0.0])).unwrap();
        assert_eq!(zeros.cv, 0.0);
        let empty = IonImage::with_mask(1, 1, vec![1.0], vec![false]).unwrap();
        assert!(image_stats(&empty).is_err());
    }

    #[test]
    fn cross_correlation_cases() {
        let a = img(3, 2, vec![0.1, 0.4, 0.2, 0.9, 0.5, 0.3]);
        assert_relative_eq!(cross_correlation(&a, &a).unwrap(), 1.0, epsilon = 1e-12);
        let b = img(3, 2, a.values().iter().map(|v| 2.0 - v).collect());
        assert_relative_eq!(cross_correlation(&a, &b).unwrap(), -1.0, epsilon = 1e-12);
        assert_eq!(cross_correlation(&a, &img(3, 2, vec![1.0; 6])).unwrap(), 0.0);
    }

    #[test]
    fn independent_images_are_uncorrelated() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let a = img(100, 100, (0..10_000).map(|_| rng.random::<f64>()).collect());
        let b = img(100, 100, (0..10_000).map(|_| rng.random::<f64>()).collect());
        assert!(cross_correlation(&a, &b).unwrap().abs() < 0.05);
    }

    /// Lagged-pair Pearson correlation computed straight from the definition.
    fn brute_autocorr(v: &[f64], w: usize, h: usize) -> f64 {
        let mut pairs = Vec::new();
        for r in 0..h {
            for c in 0..w - 1 {
                pairs.push((v[r * w + c], v[r * w + c + 1]));
            }
        }
        let n = pairs.len() as f64;
        let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pairs.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let syy: f64 = pairs.iter().map(|p| (p.1 - my).powi(2)).sum();
        sxy / (sxx * syy).sqrt()
    }

    #[test]
    fn autocorrelation_cases() {
        assert_eq!(autocorrelation(&img(3, 3, vec![1.0; 9]), (0, 1)).unwrap(), 0.0);
        let ramp: Vec<f64> = (0..100).map(|k| (k % 10) as f64 + 0.5 * (k / 10) as f64).collect();
        let r = autocorrelation(&img(10, 10, ramp.clone()), (0, 1)).unwrap();
        assert_relative_eq!(r, brute_autocorr(&ramp, 10, 10), epsilon = 1e-12);
        assert!(r > 0.8);
        let cb = checkerboard(4);
        assert_relative_eq!(autocorrelation(&cb, (0, 1)).unwrap(), -1.0, epsilon = 1e-12);
        assert_relative_eq!(brute_autocorr(cb.values(), 4, 4), -1.0, epsilon = 1e-12);
    }

    fn arb_image() -> impl Strategy<Value = IonImage> {
        (2usize..9, 2usize..9).prop_flat_map(|(w, h)| {
            (proptest::collection::vec(0.0f64..1.0, w * h), proptest::collection::vec(proptest::bool::weighted(0.9), w * h))
                .prop_map(move |(v, m)| IonImage::with_mask(w, h, v, m).unwrap())
        })
    }

    proptest! {
        #[test]
        fn glcm_is_a_symmetric_distribution(im in arb_image(), levels in 2usize..10) {
            let cfg = GlcmConfig { levels, ..Default::default() };
            if let Ok(g) = compute_glcm(&im, &cfg) {
                let sum: f64 = g.probabilities().iter().sum();
                prop_assert!((sum - 1.0).abs() < 1e-9);
                for i in 0..levels {
                    for j in 0..levels {
                        prop_assert_eq!(g.get(i, j), g.get(j, i));
                    }
                }
                let m = glcm_metrics(&g);
                prop_assert!(m.energy > 0.0 && m.energy <= 1.0 + 1e-12);
                prop_assert!(m.homogeneity > 0.0 && m.homogeneity <= 1.0 + 1e-12);
                prop_assert!(m.entropy <= libm::log2((levels * levels) as f64) + 1e-9);
            }
        }
    }
}
