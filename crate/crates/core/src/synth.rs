//! Seeded synthetic datasets with known envelope ground truth.
//!
//! Each analyte gets one spatial pattern; every member of its isotopic envelope
//! is that pattern scaled by the member's Poisson relative intensity, with
//! independent multiplicative noise per pixel. Decoy peaks get independent
//! patterns and random masses.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{pair_labels_from_envelopes, AbundanceMatrix, Dataset, PairLabel, PeakComponent, Pixel, PixelGrid};
use crate::error::{bail, Result};
use crate::math;

/// Mass of one averagine residue, in Da.
pub const AVERAGINE_MASS: f64 = 111.1254;
/// Carbon atoms per averagine residue.
pub const AVERAGINE_CARBONS: f64 = 4.9384;
/// Natural abundance of carbon-13.
pub const C13_ABUNDANCE: f64 = 0.0107;

/// Poisson mean of the number of heavy isotopes for a peptide of the given mass.
pub fn poisson_lambda(mass: f64) -> f64 {
    mass / AVERAGINE_MASS * AVERAGINE_CARBONS * C13_ABUNDANCE
}

/// `(mu_k, relative intensity)` for `k = 0..length`, intensities scaled to a maximum of 1.
pub fn poisson_envelope(mass: f64, charge: u32, length: usize) -> Result<Vec<(f64, f64)>> {
    if !(mass.is_finite() && mass > 0.0) {
        bail!(InvalidParameter, "monoisotopic mass must be positive, got {mass}");
    }
    if charge == 0 {
        bail!(InvalidParameter, "charge must be at least 1");
    }
    if length == 0 {
        bail!(InvalidParameter, "envelope length must be at least 1");
    }
    let lambda = poisson_lambda(mass);
    let step = crate::ISOTOPE_SPACING / charge as f64;
    let log_p: Vec<f64> =
        (0..length).map(|k| -lambda + k as f64 * math::ln(lambda) - math::lgamma(k as f64 + 1.0)).collect();
    let top = log_p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(log_p.iter().enumerate().map(|(k, lp)| (mass + k as f64 * step, math::exp(lp - top))).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternFamily {
    /// Sums of isotropic Gaussian blobs.
    Blobs,
    /// Blobs attenuated outside a random half-plane.
    Regions,
    /// Each pattern is `Blobs` or `Regions` with equal probability.
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub width: u32,
    pub height: u32,
    pub n_analytes: usize,
    /// Range for monoisotopic and decoy masses, in Da.
    pub mass_range: (f64, f64),
    pub charge: u32,
    /// Relative weights of envelope lengths `min_length`, `min_length + 1`, ...
    pub length_weights: Vec<f64>,
    pub min_length: usize,
    pub n_decoys: usize,
    /// When set, the number of decoys is chosen so the dataset has exactly this
    /// many components; `n_decoys` is then ignored.
    pub total_components: Option<usize>,
    pub pattern: PatternFamily,
    /// Standard deviation of the per-pixel multiplicative noise `1 + eps`.
    pub noise_sigma: f64,
    /// Component width before jitter, in Da.
    pub base_sigma: f64,
    /// Component widths are `base_sigma * (1 + u * sigma_jitter)`, `u` uniform in `[-1, 1]`.
    pub sigma_jitter: f64,
    /// Each member mass is shifted by up to this many Da, so adjacent spacings
    /// deviate from `1.003/z` by at most twice this.
    pub mu_jitter: f64,
    /// Share of analytes placed in interleaving pairs.
    pub overlap_fraction: f64,
    /// Minimum distance between any two component masses, in Da.
    pub min_spacing: f64,
    /// Analyte and decoy amplitudes are log-uniform in this range.
    pub amplitude_range: (f64, f64),
    /// Restrict the grid to an elliptical tissue section.
    pub tissue_mask: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            width: 64,
            height: 64,
            n_analytes: 40,
            mass_range: (600.0, 1600.0),
            charge: 1,
            length_weights: vec![0.5, 0.25, 0.15, 0.07, 0.03],
            min_length: 2,
            n_decoys: 400,
            total_components: None,
            pattern: PatternFamily::Mixed,
            noise_sigma: 0.05,
            base_sigma: 0.05,
            sigma_jitter: 0.05,
            mu_jitter: 0.002,
            overlap_fraction: 0.0,
            min_spacing: 0.02,
            amplitude_range: (10.0, 1000.0),
            tissue_mask: true,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            bail!(InvalidParameter, "grid must be at least 1x1");
        }
        let (lo, hi) = self.mass_range;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi > lo) {
            bail!(InvalidParameter, "mass range must be positive and ordered, got ({lo}, {hi})");
        }
        if self.charge == 0 {
            bail!(InvalidParameter, "charge must be at least 1");
        }
        if self.min_length == 0 {
            bail!(InvalidParameter, "minimum envelope length must be at least 1");
        }
        if self.length_weights.is_empty()
            || self.length_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0))
            || !(self.length_weights.iter().sum::<f64>() > 0.0)
        {
            bail!(InvalidParameter, "length weights must be non-negative with a positive sum");
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            bail!(InvalidParameter, "noise sigma must be >= 0, got {}", self.noise_sigma);
        }
        if !(self.base_sigma.is_finite() && self.base_sigma > 0.0) {
            bail!(InvalidParameter, "base sigma must be > 0, got {}", self.base_sigma);
        }
        if !(0.0..1.0).contains(&self.sigma_jitter) {
            bail!(InvalidParameter, "sigma jitter must be in [0, 1), got {}", self.sigma_jitter);
        }
        if !(self.mu_jitter.is_finite() && self.mu_jitter >= 0.0) {
            bail!(InvalidParameter, "mu jitter must be >= 0, got {}", self.mu_jitter);
        }
        if !(0.0..=1.0).contains(&self.overlap_fraction) {
            bail!(InvalidParameter, "overlap fraction must be in [0, 1], got {}", self.overlap_fraction);
        }
        if !(self.min_spacing.is_finite() && self.min_spacing >= 0.0) {
            bail!(InvalidParameter, "minimum spacing must be >= 0, got {}", self.min_spacing);
        }
        let (a, b) = self.amplitude_range;
        if !(a.is_finite() && b.is_finite() && a > 0.0 && b >= a) {
            bail!(InvalidParameter, "amplitude range must be positive and ordered, got ({a}, {b})");
        }
        Ok(())
    }

    fn step(&self) -> f64 {
        crate::ISOTOPE_SPACING / self.charge as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Member component ids of each analyte, in ascending mass.
    pub envelopes: Vec<Vec<usize>>,
    /// Components that belong to no envelope.
    pub decoys: Vec<usize>,
    /// Envelope indices placed as interleaving pairs.
    pub overlapping: Vec<(usize, usize)>,
}

impl GroundTruth {
    pub fn pair_labels(&self, pairs: &[(usize, usize)]) -> Vec<PairLabel> {
        pair_labels_from_envelopes(&self.envelopes, pairs)
    }

    /// Consecutive members of every envelope.
    pub fn adjacent_pairs(&self) -> Vec<(usize, usize)> {
        crate::data::adjacent_pairs(&self.envelopes).into_iter().collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct Blob {
    x: f64,
    y: f64,
    inv_two_var: f64,
    weight: f64,
}

#[derive(Debug, Clone)]
struct Pattern {
    blobs: Vec<Blob>,
    /// `(nx, ny, offset, outside factor)`: points with `nx·x + ny·y < offset` are attenuated.
    half_plane: Option<(f64, f64, f64, f64)>,
}

impl Pattern {
    fn sample(rng: &mut ChaCha8Rng, family: PatternFamily, w: u32, h: u32) -> Self {
        let (wf, hf) = (w as f64, h as f64);
        let side = wf.min(hf);
        let n = rng.random_range(1..=3);
        let blobs = (0..n)
            .map(|_| {
                let s = (rng.random_range(0.08..0.25) * side).max(1.0);
                Blob {
                    x: rng.random::<f64>() * wf,
                    y: rng.random::<f64>() * hf,
                    inv_two_var: 1.0 / (2.0 * s * s),
                    weight: rng.random_range(0.5..1.0),
                }
            })
            .collect();
        let regions = match family {
            PatternFamily::Blobs => false,
            PatternFamily::Regions => true,
            PatternFamily::Mixed => rng.random_bool(0.5),
        };
        let half_plane = regions.then(|| {
            let (sin, cos) = math::sin_cos(rng.random::<f64>() * core::f64::consts::TAU);
            let px = (0.25 + 0.5 * rng.random::<f64>()) * wf;
            let py = (0.25 + 0.5 * rng.random::<f64>()) * hf;
            (cos, sin, cos * px + sin * py, rng.random_range(0.1..0.2))
        });
        Pattern { blobs, half_plane }
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        let v: f64 = self
            .blobs
            .iter()
            .map(|b| {
                let (dx, dy) = (x - b.x, y - b.y);
                b.weight * math::exp(-(dx * dx + dy * dy) * b.inv_two_var)
            })
            .sum();
        match self.half_plane {
            Some((nx, ny, off, f)) if nx * x + ny * y < off => v * f,
            _ => v,
        }
    }
}

enum Source {
    Member { analyte: usize, position: usize },
    Decoy(usize),
}

struct Placed {
    mu: f64,
    sigma: f64,
    source: Source,
}

struct Analyte {
    members: Vec<(f64, f64)>,
    amplitude: f64,
}

/// Sorted set of occupied masses.
struct Occupancy {
    mus: Vec<f64>,
    min_spacing: f64,
}

impl Occupancy {
    fn is_free(&self, mu: f64) -> bool {
        let k = self.mus.partition_point(|&m| m < mu);
        let left = k.checked_sub(1).map(|i| mu - self.mus[i]);
        let right = self.mus.get(k).map(|&m| m - mu);
        // min_spacing 0 still forbids equal masses
        [left, right].into_iter().flatten().all(|d| d > self.min_spacing || (self.min_spacing == 0.0 && d > 0.0))
    }

    fn all_free(&self, mus: &[f64]) -> bool {
        mus.iter().all(|&m| self.is_free(m))
            && mus.iter().enumerate().all(|(a, &x)| {
                mus[a + 1..].iter().all(|&y| (x - y).abs() > self.min_spacing || (self.min_spacing == 0.0 && x != y))
            })
    }

    fn insert(&mut self, mu: f64) {
        let k = self.mus.partition_point(|&m| m < mu);
        self.mus.insert(k, mu);
    }
}

const MAX_ATTEMPTS: usize = 10_000;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn log_uniform(rng: &mut ChaCha8Rng, (a, b): (f64, f64)) -> f64 {
    if a == b {
        a
    } else {
        math::exp(rng.random_range(math::ln(a)..math::ln(b)))
    }
}

fn sample_length(rng: &mut ChaCha8Rng, config: &SynthConfig) -> usize {
    let total: f64 = config.length_weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (k, w) in config.length_weights.iter().enumerate() {
        if u < *w {
            return config.min_length + k;
        }
        u -= w;
    }
    config.min_length + config.length_weights.len() - 1
}

fn member_masses(rng: &mut ChaCha8Rng, mono: f64, length: usize, config: &SynthConfig) -> Vec<f64> {
    let step = config.step();
    (0..length)
        .map(|k| {
            let jitter = if config.mu_jitter > 0.0 { rng.random_range(-config.mu_jitter..=config.mu_jitter) } else { 0.0 };
            mono + k as f64 * step + jitter
        })
        .collect()
}

fn relative_intensities(mono: f64, length: usize, charge: u32) -> Result<Vec<f64>> {
    Ok(poisson_envelope(mono, charge, length)?.into_iter().map(|(_, r)| r).collect())
}

/// Places analytes (interleaving pairs first) and returns their member masses.
fn place_analytes(rng: &mut ChaCha8Rng, config: &SynthConfig, occ: &mut Occupancy) -> Result<(Vec<Analyte>, Vec<(usize, usize)>)> {
    let step = config.step();
    let (lo, hi) = config.mass_range;
    let n = config.n_analytes;
    let n_overlap = (math::round(config.overlap_fraction * n as f64) as usize).min(n) / 2 * 2;
    let mut analytes: Vec<Analyte> = Vec::with_capacity(n);
    let mut overlapping = Vec::new();
    let mut a = 0;
    while a < n {
        let paired = a < n_overlap;
        let lengths: Vec<usize> = (0..if paired { 2 } else { 1 }).map(|_| sample_length(rng, config)).collect();
        let mut placed = None;
        for _ in 0..MAX_ATTEMPTS {
            let span = (lengths.iter().max().copied().unwrap_or(1) - 1) as f64 * step + step;
            if hi - lo <= span {
                break;
            }
            let mono = rng.random_range(lo..hi - span);
            let mut sets = vec![member_masses(rng, mono, lengths[0], config)];
            if paired {
                let delta = rng.random_range(0.05..0.95) * step;
                sets.push(member_masses(rng, mono + delta, lengths[1], config));
            }
            let all: Vec<f64> = sets.iter().flatten().copied().collect();
            if occ.all_free(&all) {
                placed = Some(sets);
                break;
            }
        }
        let Some(sets) = placed else {
            bail!(
                InvalidParameter,
                "could not place analyte {a} in mass range ({lo}, {hi}) with spacing {} Da; widen the range or reduce counts",
                config.min_spacing
            );
        };
        let anchor_amplitude = log_uniform(rng, config.amplitude_range);
        for (k, mus) in sets.into_iter().enumerate() {
            mus.iter().for_each(|&m| occ.insert(m));
            let amplitude = if k == 0 { anchor_amplitude } else { anchor_amplitude * rng.random_range(0.5..2.0) };
            let rel = relative_intensities(mus[0], mus.len(), config.charge)?;
            analytes.push(Analyte { members: mus.into_iter().zip(rel).collect(), amplitude });
        }
        if paired {
            overlapping.push((a, a + 1));
            a += 2;
        } else {
            a += 1;
        }
    }
    Ok((analytes, overlapping))
}

fn tissue_grid(config: &SynthConfig) -> Result<PixelGrid> {
    if !config.tissue_mask {
        return PixelGrid::full(config.width, config.height);
    }
    let (cx, cy) = ((config.width as f64 - 1.0) / 2.0, (config.height as f64 - 1.0) / 2.0);
    let (rx, ry) = ((config.width as f64 / 2.0).max(0.5), (config.height as f64 / 2.0).max(0.5));
    let mut pixels = Vec::new();
    for y in 0..config.height {
        for x in 0..config.width {
            let (dx, dy) = ((x as f64 - cx) / rx, (y as f64 - cy) / ry);
            if dx * dx + dy * dy <= 1.0 {
                pixels.push(Pixel { index: pixels.len(), x, y });
            }
        }
    }
    PixelGrid::new(config.width, config.height, pixels)
}

/// Draws a dataset and its ground truth. Identical configs give identical output.
pub fn generate(config: &SynthConfig) -> Result<(Dataset, GroundTruth)> {
    config.validate()?;
    let mut rng = stream_rng(config.seed, 0);
    let mut occ = Occupancy { mus: Vec::new(), min_spacing: config.min_spacing };
    let (analytes, overlapping) = place_analytes(&mut rng, config, &mut occ)?;

    let n_members: usize = analytes.iter().map(|a| a.members.len()).sum();
    let n_decoys = match config.total_components {
        Some(total) if total < n_members => {
            bail!(InvalidParameter, "{total} components requested but the analytes alone have {n_members} members")
        }
        Some(total) => total - n_members,
        None => config.n_decoys,
    };

    let sigma = |rng: &mut ChaCha8Rng| {
        let u = if config.sigma_jitter > 0.0 { rng.random_range(-1.0..=1.0) } else { 0.0 };
        config.base_sigma * (1.0 + u * config.sigma_jitter)
    };
    let mut placed = Vec::with_capacity(n_members + n_decoys);
    for (a, analyte) in analytes.iter().enumerate() {
        for (position, &(mu, _)) in analyte.members.iter().enumerate() {
            placed.push(Placed { mu, sigma: sigma(&mut rng), source: Source::Member { analyte: a, position } });
        }
    }
    let (lo, hi) = config.mass_range;
    let mut decoy_amplitudes = Vec::with_capacity(n_decoys);
    for d in 0..n_decoys {
        let mut mu = None;
        for _ in 0..MAX_ATTEMPTS {
            let m = rng.random_range(lo..hi);
            if occ.is_free(m) {
                mu = Some(m);
                break;
            }
        }
        let Some(mu) = mu else {
            bail!(InvalidParameter, "could not place decoy {d} in mass range ({lo}, {hi}) with spacing {} Da", config.min_spacing);
        };
        occ.insert(mu);
        decoy_amplitudes.push(log_uniform(&mut rng, config.amplitude_range));
        placed.push(Placed { mu, sigma: sigma(&mut rng), source: Source::Decoy(d) });
    }
    placed.sort_by(|a, b| a.mu.total_cmp(&b.mu));

    let mut column_of_member: Vec<Vec<usize>> = analytes.iter().map(|a| vec![0; a.members.len()]).collect();
    let mut column_of_decoy = vec![0; n_decoys];
    let mut components = Vec::with_capacity(placed.len());
    for (id, p) in placed.iter().enumerate() {
        let area = match p.source {
            Source::Member { analyte, position } => {
                column_of_member[analyte][position] = id;
                analytes[analyte].amplitude * analytes[analyte].members[position].1
            }
            Source::Decoy(d) => {
                column_of_decoy[d] = id;
                decoy_amplitudes[d]
            }
        };
        components.push(PeakComponent { id, mu: p.mu, sigma: p.sigma, area });
    }

    let grid = tissue_grid(config)?;
    let cols = components.len();
    let mut values = vec![0f32; grid.len() * cols];
    let noise = Normal::new(0.0, config.noise_sigma).map_err(|e| crate::Error::InvalidParameter(alloc::format!("{e}")))?;
    let mut fill = |rng: &mut ChaCha8Rng, pattern: &Pattern, scaled: &[(usize, f64)]| {
        let base: Vec<f64> = grid.pixels().iter().map(|p| pattern.eval(p.x as f64, p.y as f64)).collect();
        for &(col, scale) in scaled {
            for (row, b) in base.iter().enumerate() {
                let factor = if config.noise_sigma > 0.0 { (1.0 + noise.sample(rng)).max(0.0) } else { 1.0 };
                values[row * cols + col] = (b * scale * factor) as f32;
            }
        }
    };
    for (a, analyte) in analytes.iter().enumerate() {
        let mut rng = stream_rng(config.seed, (1 << 32) | a as u64);
        let pattern = Pattern::sample(&mut rng, config.pattern, config.width, config.height);
        let scaled: Vec<(usize, f64)> =
            analyte.members.iter().enumerate().map(|(k, &(_, rel))| (column_of_member[a][k], analyte.amplitude * rel)).collect();
        fill(&mut rng, &pattern, &scaled);
    }
    for d in 0..n_decoys {
        let mut rng = stream_rng(config.seed, (2 << 32) | d as u64);
        let pattern = Pattern::sample(&mut rng, config.pattern, config.width, config.height);
        fill(&mut rng, &pattern, &[(column_of_decoy[d], decoy_amplitudes[d])]);
    }

    let envelopes: Vec<Vec<usize>> = column_of_member;
    let mut decoys = column_of_decoy;
    decoys.sort_unstable();
    let abundance = AbundanceMatrix::new(grid.len(), cols, values)?;
    let annotations = (!envelopes.is_empty()).then(|| envelopes.clone());
    let (dataset, _) = Dataset::from_parts(components, grid, abundance, annotations)?;
    Ok((dataset, GroundTruth { envelopes, decoys, overlapping }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_spacing_is_the_isotope_step() {
        let env = poisson_envelope(1000.0, 1, 3).unwrap();
        for w in env.windows(2) {
            assert!((w[1].0 - w[0].0 - 1.003).abs() < 1e-9);
        }
        let env2 = poisson_envelope(1000.0, 2, 3).unwrap();
        assert!((env2[1].0 - env2[0].0 - 0.5015).abs() < 1e-9);
    }

    #[test]
    fn light_molecules_are_monoisotopic() {
        let env = poisson_envelope(50.0, 1, 3).unwrap();
        assert_eq!(env[0].1, 1.0);
        assert!(env[1].1 / env[0].1 < 0.03);
    }

    #[test]
    fn first_ratio_equals_expected_heavy_carbons() {
        // averagine units in 1000 Da, carbons per unit, 13C abundance
        let units = 1000.0 / 111.1254;
        let carbons = units * 4.9384;
        let expected = carbons * 0.0107;
        let env = poisson_envelope(1000.0, 1, 2).unwrap();
        assert!((env[1].1 / env[0].1 - expected).abs() < 1e-12);
        // heavy masses peak past the monoisotope
        let heavy = poisson_envelope(4000.0, 1, 4).unwrap();
        assert!(heavy[0].1 < 1.0 && heavy.iter().any(|(_, r)| *r == 1.0));
    }

    #[test]
    fn invalid_envelope_requests() {
        assert!(poisson_envelope(0.0, 1, 3).is_err());
        assert!(poisson_envelope(-5.0, 1, 3).is_err());
        assert!(poisson_envelope(100.0, 0, 3).is_err());
        assert!(poisson_envelope(100.0, 1, 0).is_err());
    }

    fn small(seed: u64) -> SynthConfig {
        SynthConfig { seed, width: 20, height: 16, n_analytes: 6, n_decoys: 30, ..Default::default() }
    }

    #[test]
    fn decoys_only() {
        let cfg = SynthConfig { n_analytes: 0, n_decoys: 5, ..small(1) };
        let (ds, gt) = generate(&cfg).unwrap();
        assert!(gt.envelopes.is_empty());
        assert_eq!(ds.components().len(), 5);
        assert_eq!(gt.decoys, [0, 1, 2, 3, 4]);
        assert!(ds.annotations().is_none());
    }

    #[test]
    fn same_seed_same_dataset() {
        let (a, ga) = generate(&small(7)).unwrap();
        let (b, gb) = generate(&small(7)).unwrap();
        assert_eq!(a, b);
        assert_eq!(ga, gb);
        let (c, _) = generate(&small(8)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn ids_are_consistent_with_mass_order() {
        let (ds, gt) = generate(&small(3)).unwrap();
        let n = ds.components().len();
        let mut all: Vec<usize> = gt.envelopes.iter().flatten().copied().chain(gt.decoys.iter().copied()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..n).collect::<Vec<_>>());
        for env in &gt.envelopes {
            assert!(env.windows(2).all(|w| w[0] < w[1]));
        }
        assert_eq!(ds.annotations().unwrap(), gt.envelopes.as_slice());
    }

    #[test]
    fn adjacent_spacing_within_jitter() {
        for jitter in [0.0, 0.002] {
            let cfg = SynthConfig { mu_jitter: jitter, ..small(5) };
            let (ds, gt) = generate(&cfg).unwrap();
            for env in &gt.envelopes {
                for w in env.windows(2) {
                    let d = ds.components()[w[1]].mu - ds.components()[w[0]].mu;
                    assert!((d - 1.003).abs() <= 2.0 * jitter + 1e-9, "{d}");
                }
            }
        }
    }

    #[test]
    fn noiseless_members_are_scalar_multiples() {
        let cfg = SynthConfig { noise_sigma: 0.0, ..small(11) };
        let (ds, gt) = generate(&cfg).unwrap();
        let m = ds.abundance();
        for env in &gt.envelopes {
            let first: Vec<f64> = m.column(env[0]).map(f64::from).collect();
            let peak = first.iter().copied().fold(0.0, f64::max);
            for &other in &env[1..] {
                let col: Vec<f64> = m.column(other).map(f64::from).collect();
                let k = first.iter().position(|&v| v == peak).unwrap();
                let c = col[k] / first[k];
                assert!(c > 0.0);
                for (x, y) in first.iter().zip(&col) {
                    assert!((y - c * x).abs() <= 1e-5 * y.abs().max(c * x.abs()) + 1e-30);
                }
            }
        }
    }

    #[test]
    fn sigmas_respect_jitter() {
        let (ds, _) = generate(&small(2)).unwrap();
        for c in ds.components() {
            assert!((c.sigma / 0.05 - 1.0).abs() <= 0.05 + 1e-12);
        }
    }

    #[test]
    fn two_overlapping_analytes_interleave() {
        let cfg = SynthConfig { n_analytes: 2, n_decoys: 0, overlap_fraction: 1.0, mu_jitter: 0.0, ..small(4) };
        let (ds, gt) = generate(&cfg).unwrap();
        assert_eq!(gt.overlapping, [(0, 1)]);
        let mono = |e: &Vec<usize>| ds.components()[e[0]].mu;
        let (a, b) = (mono(&gt.envelopes[0]), mono(&gt.envelopes[1]));
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        assert!(hi - lo > 0.0 && hi - lo < 1.003);
        // the two monoisotopic peaks are adjacent in mass order
        let ids: Vec<usize> = gt.envelopes.iter().map(|e| e[0]).collect();
        assert_eq!(ids.iter().max().unwrap() - ids.iter().min().unwrap(), 1);
    }

    #[test]
    fn crowded_mass_range_is_rejected() {
        let cfg = SynthConfig { mass_range: (600.0, 601.0), n_analytes: 5, n_decoys: 100, ..small(1) };
        assert!(generate(&cfg).is_err());
        let cfg = SynthConfig { total_components: Some(3), ..small(1) };
        assert!(generate(&cfg).is_err());
    }

    #[test]
    fn total_components_sets_the_decoy_count() {
        let cfg = SynthConfig { total_components: Some(50), ..small(9) };
        let (ds, gt) = generate(&cfg).unwrap();
        assert_eq!(ds.components().len(), 50);
        assert_eq!(gt.decoys.len() + gt.envelopes.iter().map(Vec::len).sum::<usize>(), 50);
    }

    #[test]
    fn invalid_configs() {
        for bad in [
            SynthConfig { mass_range: (10.0, 5.0), ..small(0) },
            SynthConfig { mass_range: (0.0, 5.0), ..small(0) },
            SynthConfig { noise_sigma: -0.1, ..small(0) },
            SynthConfig { charge: 0, ..small(0) },
            SynthConfig { width: 0, ..small(0) },
            SynthConfig { length_weights: vec![], ..small(0) },
            SynthConfig { overlap_fraction: 1.5, ..small(0) },
        ] {
            assert!(generate(&bad).is_err());
        }
    }

    #[test]
    fn tissue_mask_is_an_ellipse() {
        let (ds, _) = generate(&small(0)).unwrap();
        assert!(ds.grid().len() < 20 * 16);
        assert!(ds.grid().row_at(10, 8).is_some());
        assert!(ds.grid().row_at(0, 0).is_none());
    }
}
