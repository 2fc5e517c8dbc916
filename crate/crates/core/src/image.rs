//! Ion images and their preprocessing.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{bail, Result};
use crate::math;

/// Intensity map over the dataset raster. Positions without a measured pixel
/// are masked out and ignored by every statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct IonImage {
    width: usize,
    height: usize,
    values: Vec<f64>,
    valid: Vec<bool>,
}

impl IonImage {
    /// Row-major values with every pixel valid.
    pub fn from_values(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        let valid = vec![true; values.len()];
        Self::with_mask(width, height, values, valid)
    }

    pub fn with_mask(width: usize, height: usize, mut values: Vec<f64>, valid: Vec<bool>) -> Result<Self> {
        if width * height != values.len() || values.len() != valid.len() {
            bail!(DimensionMismatch, "{width}x{height} image needs {} values and mask entries", width * height);
        }
        for (v, &ok) in values.iter_mut().zip(&valid) {
            if !ok {
                *v = 0.0;
            } else if !v.is_finite() || *v < 0.0 {
                bail!(InvalidData, "image intensities must be finite and >= 0, got {v}");
            }
        }
        Ok(Self { width, height, values, valid })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Row-major values; masked positions hold 0.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.valid
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let k = row * self.width + col;
        if self.valid[k] {
            Some(self.values[k])
        } else {
            None
        }
    }

    /// Values of the unmasked pixels in row-major order.
    pub fn valid_values(&self) -> Vec<f64> {
        self.values.iter().zip(&self.valid).filter(|(_, &ok)| ok).map(|(&v, _)| v).collect()
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&ok| ok).count()
    }

    fn valid_range(&self) -> Option<(f64, f64)> {
        let mut it = self.values.iter().zip(&self.valid).filter(|(_, &ok)| ok).map(|(&v, _)| v);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v))))
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.width == other.width && self.height == other.height
    }

    fn map_valid(&self, f: impl Fn(f64) -> f64) -> Self {
        let values = self.values.iter().zip(&self.valid).map(|(&v, &ok)| if ok { f(v) } else { 0.0 }).collect();
        Self { values, ..self.clone() }
    }
}

/// Spatial map of one component over the dataset grid.
pub fn build_ion_image(dataset: &Dataset, component_id: usize) -> Result<IonImage> {
    if component_id >= dataset.components().len() {
        bail!(InvalidParameter, "unknown component id {component_id}");
    }
    let grid = dataset.grid();
    let (w, h) = (grid.width() as usize, grid.height() as usize);
    let mut values = vec![0.0; w * h];
    let mut valid = vec![false; w * h];
    let abundance = dataset.abundance();
    for p in grid.pixels() {
        let k = p.y as usize * w + p.x as usize;
        values[k] = abundance.get(p.index, component_id) as f64;
        valid[k] = true;
    }
    Ok(IonImage { width: w, height: h, values, valid })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnhanceConfig {
    pub equalize: bool,
    pub histogram_bins: usize,
    pub median_filter: bool,
    pub normalize: bool,
}

impl Default for EnhanceConfig {
    fn default() -> Self {
        Self { equalize: true, histogram_bins: 256, median_filter: true, normalize: true }
    }
}

/// Histogram equalization, then a 3×3 median filter, then min-max scaling to `[0, 1]`.
pub fn enhance(image: &IonImage, config: &EnhanceConfig) -> IonImage {
    let mut out = image.clone();
    if config.equalize {
        out = equalize_histogram(&out, config.histogram_bins.max(1));
    }
    if config.median_filter {
        out = median_filter_3x3(&out);
    }
    if config.normalize {
        out = min_max_normalize(&out);
    }
    out
}

/// Maps each valid pixel through the cumulative histogram of the valid pixels:
/// `(cdf(bin) - cdf_min) / (n - cdf_min)`. A constant image is returned unchanged.
pub fn equalize_histogram(image: &IonImage, bins: usize) -> IonImage {
    let Some((lo, hi)) = image.valid_range() else {
        return image.clone();
    };
    if !(hi > lo) {
        return image.clone();
    }
    let span = hi - lo;
    let bin_of = |v: f64| (math::floor((v - lo) / span * bins as f64) as usize).min(bins - 1);
    let mut cdf = vec![0usize; bins];
    let mut n = 0usize;
    for (&v, &ok) in image.values.iter().zip(&image.valid) {
        if ok {
            cdf[bin_of(v)] += 1;
            n += 1;
        }
    }
    for b in 1..bins {
        cdf[b] += cdf[b - 1];
    }
    let cdf_min = cdf[bin_of(lo)];
    let denom = (n - cdf_min) as f64;
    image.map_valid(|v| (cdf[bin_of(v)] - cdf_min) as f64 / denom)
}

/// Median of the valid pixels in each valid pixel's 3×3 neighbourhood (the
/// pixel included). Even counts average the two middle values.
pub fn median_filter_3x3(image: &IonImage) -> IonImage {
    let (w, h) = (image.width, image.height);
    let mut values = vec![0.0; w * h];
    let mut window = Vec::with_capacity(9);
    for r in 0..h {
        for c in 0..w {
            let k = r * w + c;
            if !image.valid[k] {
                continue;
            }
            window.clear();
            for nr in r.saturating_sub(1)..=(r + 1).min(h - 1) {
                for nc in c.saturating_sub(1)..=(c + 1).min(w - 1) {
                    if let Some(v) = image.get(nr, nc) {
                        window.push(v);
                    }
                }
            }
            window.sort_unstable_by(f64::total_cmp);
            let n = window.len();
            values[k] = if n % 2 == 1 { window[n / 2] } else { 0.5 * (window[n / 2 - 1] + window[n / 2]) };
        }
    }
    IonImage { values, ..image.clone() }
}

/// Scales valid pixels to `[0, 1]`. A constant image maps to all zeros.
pub fn min_max_normalize(image: &IonImage) -> IonImage {
    match image.valid_range() {
        Some((lo, hi)) if hi > lo => image.map_valid(|v| ((v - lo) / (hi - lo)).clamp(0.0, 1.0)),
        _ => image.map_valid(|_| 0.0),
    }
}

/// Per-pixel `|a - b|`. Both images must share dimensions and mask.
pub fn differential_image(a: &IonImage, b: &IonImage) -> Result<IonImage> {
    if !a.same_shape(b) {
        bail!(DimensionMismatch, "{}x{} vs {}x{} images", a.width, a.height, b.width, b.height);
    }
    if a.valid != b.valid {
        bail!(DimensionMismatch, "images have different masks");
    }
    let values = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).collect();
    Ok(IonImage { values, ..a.clone() })
}
