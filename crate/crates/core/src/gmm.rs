//! One-dimensional Gaussian mixtures fitted by EM, BIC-based choice of the
//! component count, and the density-crossing threshold used by preselection.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GmmComponent {
    pub weight: f64,
    pub mean: f64,
    pub variance: f64,
}

/// Mixture with components ordered by ascending mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gmm1D {
    pub components: Vec<GmmComponent>,
    /// Total log-likelihood of the training values.
    pub log_likelihood: f64,
    pub n_samples: usize,
    pub iterations: usize,
}

impl Gmm1D {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn n_parameters(&self) -> usize {
        3 * self.k() - 1
    }

    /// Bayesian information criterion, `-2 ln L + p ln n`.
    pub fn bic(&self) -> f64 {
        -2.0 * self.log_likelihood + self.n_parameters() as f64 * math::ln(self.n_samples as f64)
    }

    pub fn density(&self, x: f64) -> f64 {
        self.components.iter().map(|c| c.weight * math::normal_pdf(x, c.mean, c.variance)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    pub max_iterations: usize,
    /// Convergence bound on the change of the mean per-sample log-likelihood.
    pub tolerance: f64,
    pub restarts: usize,
    /// Added to every variance estimate.
    pub variance_floor: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self { max_iterations: 500, tolerance: 1e-8, restarts: 5, variance_floor: 1e-6 }
    }
}

/// A component variance below this is treated as a collapsed fit.
const DEGENERATE_VARIANCE: f64 = 1e-12;

pub fn fit_gmm_1d(values: &[f64], k: usize, seed: u64) -> Result<Gmm1D> {
    fit_gmm_1d_with(values, k, seed, &EmConfig::default())
}

/// Best of `config.restarts` EM runs from k-means++ seeds. A run whose variance
/// collapses is replaced by a fresh initialization; if no run survives the fit fails.
pub fn fit_gmm_1d_with(values: &[f64], k: usize, seed: u64, config: &EmConfig) -> Result<Gmm1D> {
    if k == 0 {
        bail!(InvalidParameter, "a mixture needs at least one component");
    }
    if values.len() < 10 * k {
        bail!(InvalidParameter, "{} values are too few for {k} components (need at least {})", values.len(), 10 * k);
    }
    if values.iter().any(|v| !v.is_finite()) {
        bail!(InvalidData, "mixture input contains non-finite values");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<Gmm1D> = None;
    let mut successes = 0;
    let max_attempts = config.restarts.max(1) * 3;
    for _ in 0..max_attempts {
        if successes == config.restarts.max(1) {
            break;
        }
        let init = kmeans_pp_init(values, k, &mut rng, config.variance_floor);
        match run_em(values, init, config) {
            Ok(model) => {
                successes += 1;
                if best.as_ref().is_none_or(|b| model.log_likelihood > b.log_likelihood) {
                    best = Some(model);
                }
            }
            Err(Error::Numeric(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    match best {
        Some(m) => Ok(m),
        None => bail!(Numeric, "EM with {k} components collapsed in every initialization"),
    }
}

fn kmeans_pp_init(values: &[f64], k: usize, rng: &mut ChaCha8Rng, floor: f64) -> Vec<GmmComponent> {
    let n = values.len();
    let mut centers = Vec::with_capacity(k);
    centers.push(values[rng.random_range(0..n)]);
    let mut d2: Vec<f64> = values.iter().map(|&v| (v - centers[0]) * (v - centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            values[pick]
        } else {
            values[rng.random_range(0..n)]
        };
        centers.push(next);
        for (d, &v) in d2.iter_mut().zip(values) {
            *d = d.min((v - next) * (v - next));
        }
    }

    // hard assignment to the nearest center gives the starting moments
    let mut sums = vec![(0.0f64, 0.0f64, 0usize); k];
    for &v in values {
        let c = nearest(&centers, v);
        sums[c].0 += v;
        sums[c].1 += v * v;
        sums[c].2 += 1;
    }
    let overall = crate::stats::variance(values).max(floor);
    sums.iter()
        .zip(&centers)
        .map(|(&(s, s2, cnt), &center)| {
            if cnt == 0 {
                return GmmComponent { weight: 1.0 / n as f64, mean: center, variance: overall };
            }
            let mean = s / cnt as f64;
            let var = (s2 / cnt as f64 - mean * mean).max(0.0);
            GmmComponent {
                weight: cnt as f64 / n as f64,
                mean,
                variance: if var > floor { var + floor } else { overall * 1e-2 + floor },
            }
        })
        .collect()
}

fn nearest(centers: &[f64], v: f64) -> usize {
    let mut best = 0;
    for (i, &c) in centers.iter().enumerate() {
        if (v - c).abs() < (v - centers[best]).abs() {
            best = i;
        }
    }
    best
}

fn run_em(values: &[f64], mut comps: Vec<GmmComponent>, config: &EmConfig) -> Result<Gmm1D> {
    let n = values.len();
    let k = comps.len();
    let mut prev_mean_ll = f64::NEG_INFINITY;
    let mut terms = vec![0.0f64; k];
    // per component: responsibility sum and first two moments about the current mean
    let mut stats = vec![(0.0f64, 0.0f64, 0.0f64); k];
    let mut iterations = 0;
    let mut total_ll;
    loop {
        // E step, accumulating the M-step sufficient statistics in the same pass
        let consts: Vec<(f64, f64, f64)> = comps
            .iter()
            .map(|c| (math::ln(c.weight) - 0.5 * (math::LN_2PI + math::ln(c.variance)), c.mean, 0.5 / c.variance))
            .collect();
        stats.iter_mut().for_each(|s| *s = (0.0, 0.0, 0.0));
        total_ll = 0.0;
        for &x in values {
            let mut max = f64::NEG_INFINITY;
            for (t, &(c0, mean, inv2v)) in terms.iter_mut().zip(&consts) {
                let d = x - mean;
                *t = c0 - d * d * inv2v;
                max = max.max(*t);
            }
            if !max.is_finite() {
                bail!(Numeric, "log-likelihood became non-finite");
            }
            let mut sum = 0.0;
            for t in terms.iter_mut() {
                *t = math::exp(*t - max);
                sum += *t;
            }
            total_ll += max + math::ln(sum);
            for ((s, &t), &(_, mean, _)) in stats.iter_mut().zip(&terms).zip(&consts) {
                let r = t / sum;
                let d = x - mean;
                s.0 += r;
                s.1 += r * d;
                s.2 += r * d * d;
            }
        }
        let mean_ll = total_ll / n as f64;
        if !mean_ll.is_finite() {
            bail!(Numeric, "log-likelihood became non-finite");
        }
        if (mean_ll - prev_mean_ll).abs() < config.tolerance || iterations >= config.max_iterations {
            break;
        }
        prev_mean_ll = mean_ll;

        // M step
        for (j, (c, &(nk, s1, s2))) in comps.iter_mut().zip(&stats).enumerate() {
            if nk <= f64::MIN_POSITIVE {
                bail!(Numeric, "component {j} lost all responsibility");
            }
            let shift = s1 / nk;
            let raw_var = (s2 / nk - shift * shift).max(0.0);
            let variance = raw_var + config.variance_floor;
            if variance < DEGENERATE_VARIANCE {
                bail!(Numeric, "component {j} variance collapsed to {variance:e}");
            }
            *c = GmmComponent { weight: nk / n as f64, mean: c.mean + shift, variance };
        }
        iterations += 1;
    }
    comps.sort_by(|a, b| a.mean.total_cmp(&b.mean));
    Ok(Gmm1D { components: comps, log_likelihood: total_ll, n_samples: n, iterations })
}

/// Outcome of fitting `K = 1..=k_max` and applying the elbow rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BicSelection {
    pub k: usize,
    /// BIC for `K = 1..=k_max`.
    pub bic: Vec<f64>,
    pub models: Vec<Gmm1D>,
}

impl BicSelection {
    pub fn selected(&self) -> &Gmm1D {
        &self.models[self.k - 1]
    }
}

/// Smallest `K` whose next BIC improvement, `BIC(K) - BIC(K+1)`, falls below
/// `fraction` of the largest improvement along the curve. Steps that make BIC
/// worse count as zero improvement, so a curve that never improves selects `K = 1`.
pub fn select_k_by_bic(values: &[f64], k_max: usize, seed: u64, fraction: f64) -> Result<BicSelection> {
    select_k_by_bic_with(values, k_max, seed, fraction, &EmConfig::default())
}

pub fn select_k_by_bic_with(
    values: &[f64],
    k_max: usize,
    seed: u64,
    fraction: f64,
    config: &EmConfig,
) -> Result<BicSelection> {
    if k_max < 1 {
        bail!(InvalidParameter, "k_max must be at least 1");
    }
    if !(0.0..1.0).contains(&fraction) {
        bail!(InvalidParameter, "elbow fraction must lie in [0, 1)");
    }
    let mut models = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        models.push(fit_gmm_1d_with(values, k, seed.wrapping_add(k as u64), config)?);
    }
    let bic: Vec<f64> = models.iter().map(Gmm1D::bic).collect();
    let k = elbow(&bic, fraction);
    Ok(BicSelection { k, bic, models })
}

fn elbow(bic: &[f64], fraction: f64) -> usize {
    let gains: Vec<f64> = bic.windows(2).map(|w| (w[0] - w[1]).max(0.0)).collect();
    let max_gain = gains.iter().copied().fold(0.0, f64::max);
    if max_gain <= 0.0 {
        return 1;
    }
    gains.iter().position(|&g| g < fraction * max_gain).map_or(bic.len(), |i| i + 1)
}

/// Point between the two highest-mean components where their weighted
/// densities are equal, found by bisection on the interval between the means.
pub fn threshold_from_gmm(model: &Gmm1D) -> Result<f64> {
    if model.k() < 2 {
        bail!(
            InvalidParameter,
            "a single-component mixture has no crossing; use the fixed threshold {}",
            crate::FALLBACK_THRESHOLD
        );
    }
    let mut comps = model.components.clone();
    comps.sort_by(|a, b| a.mean.total_cmp(&b.mean));
    let b = comps[comps.len() - 1];
    let a = comps[comps.len() - 2];
    density_crossing(a, b)
}

/// Crossing of `w_a N(x; a)` and `w_b N(x; b)` on `[a.mean, b.mean]`.
pub fn density_crossing(a: GmmComponent, b: GmmComponent) -> Result<f64> {
    let g = |x: f64| {
        (math::ln(a.weight) + math::ln_normal_pdf(x, a.mean, a.variance))
            - (math::ln(b.weight) + math::ln_normal_pdf(x, b.mean, b.variance))
    };
    let (mut lo, mut hi) = (a.mean, b.mean);
    if !(lo < hi) {
        bail!(Numeric, "component means coincide at {lo}");
    }
    if g(lo).signum() == g(hi).signum() {
        // the lighter component may be swamped at one end; look for an interior sign change
        let steps = 1000;
        let mut found = None;
        let mut prev = lo;
        for s in 1..=steps {
            let x = a.mean + (b.mean - a.mean) * s as f64 / steps as f64;
            if g(x).signum() != g(prev).signum() {
                found = Some((prev, x));
                break;
            }
            prev = x;
        }
        match found {
            Some((l, h)) => {
                lo = l;
                hi = h;
            }
            None => bail!(Numeric, "weighted densities do not cross between {} and {}", a.mean, b.mean),
        }
    }
    let g_lo = g(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid).signum() == g_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
