//! Domain types for peak-model MSI data and their validation.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};

/// One Gaussian model component standing in for a spectral peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakComponent {
    pub id: usize,
    /// Location (m/z) in Da.
    pub mu: f64,
    /// Shape parameter in Da.
    pub sigma: f64,
    /// Abundance scale, arbitrary units.
    pub area: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pixel {
    /// Row of this pixel in the abundance matrix.
    pub index: usize,
    pub x: u32,
    pub y: u32,
}

/// Raster positions of the measured pixels. Tissue outlines are irregular,
/// so the pixel list may leave positions of the `width × height` raster empty.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelGrid {
    width: u32,
    height: u32,
    pixels: Vec<Pixel>,
    // raster position -> matrix row
    lookup: Vec<Option<u32>>,
}

impl PixelGrid {
    /// Builds a grid from pixels in any order. Pixel indices must be exactly `0..n`.
    pub fn new(width: u32, height: u32, mut pixels: Vec<Pixel>) -> Result<Self> {
        if width == 0 || height == 0 {
            bail!(InvalidData, "grid dimensions must be positive, got {width}x{height}");
        }
        let cells = width as usize * height as usize;
        if pixels.len() > cells {
            bail!(InvalidData, "{} pixels do not fit a {width}x{height} grid", pixels.len());
        }
        pixels.sort_by_key(|p| p.index);
        let mut lookup = vec![None; cells];
        for (pos, p) in pixels.iter().enumerate() {
            if p.index != pos {
                bail!(InvalidData, "pixel indices must be dense 0..{}, found {}", pixels.len(), p.index);
            }
            if p.x >= width || p.y >= height {
                bail!(InvalidData, "pixel {} at ({}, {}) outside {width}x{height} grid", p.index, p.x, p.y);
            }
            let cell = &mut lookup[p.y as usize * width as usize + p.x as usize];
            if cell.is_some() {
                bail!(InvalidData, "duplicate pixel at ({}, {})", p.x, p.y);
            }
            *cell = Some(pos as u32);
        }
        Ok(Self { width, height, pixels, lookup })
    }

    /// Every raster position, row-major, in index order.
    pub fn full(width: u32, height: u32) -> Result<Self> {
        let pixels = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .enumerate()
            .map(|(index, (x, y))| Pixel { index, x, y })
            .collect();
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[Pixel] {
        &self.pixels
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    /// Matrix row measured at raster position `(x, y)`, if any.
    pub fn row_at(&self, x: u32, y: u32) -> Option<usize> {
        if x >= self.width || y >= self.height {
            return None;
        }
        self.lookup[y as usize * self.width as usize + x as usize].map(|r| r as usize)
    }
}

/// Per-pixel abundance of every component, row-major (`rows` = pixels, `cols` = components).
#[derive(Debug, Clone, PartialEq)]
pub struct AbundanceMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f32>,
}

impl AbundanceMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f32>) -> Result<Self> {
        if rows.checked_mul(cols) != Some(values.len()) {
            bail!(DimensionMismatch, "{rows}x{cols} matrix needs {} values, got {}", rows * cols, values.len());
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            bail!(InvalidData, "abundance at row {}, column {} is {} (must be finite and >= 0)", pos / cols.max(1), pos % cols.max(1), values[pos]);
        }
        Ok(Self { rows, cols, values })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.values[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f32] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> impl ExactSizeIterator<Item = f32> + '_ {
        (0..self.rows).map(move |r| self.values[r * self.cols + col])
    }

    fn permute_columns(&self, new_of_old: &[usize]) -> Self {
        let mut values = vec![0.0; self.values.len()];
        for r in 0..self.rows {
            let src = self.row(r);
            let dst = &mut values[r * self.cols..(r + 1) * self.cols];
            for (old, &v) in src.iter().enumerate() {
                dst[new_of_old[old]] = v;
            }
        }
        Self { rows: self.rows, cols: self.cols, values }
    }
}

/// Binary classification target for a peak pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PairLabel {
    #[serde(rename = "E")]
    Envelope,
    #[serde(rename = "nE")]
    NonEnvelope,
}

impl PairLabel {
    pub fn is_envelope(self) -> bool {
        self == PairLabel::Envelope
    }
}

/// Mapping from the ids found in an input component table to the dense,
/// mu-ordered ids used after loading.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdRemap {
    /// `(input id, loaded id)` in input-table order.
    pub entries: Vec<(usize, usize)>,
}

impl IdRemap {
    pub fn is_identity(&self) -> bool {
        self.entries.iter().all(|(a, b)| a == b)
    }

    pub fn loaded_id(&self, input_id: usize) -> Option<usize> {
        self.entries.iter().find(|(a, _)| *a == input_id).map(|(_, b)| *b)
    }
}

/// A validated, immutable dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    components: Vec<PeakComponent>,
    grid: PixelGrid,
    abundance: AbundanceMatrix,
    annotations: Option<Vec<Vec<usize>>>,
}

impl Dataset {
    /// Validates the parts and normalizes component order.
    ///
    /// `components` may come in any order with arbitrary unique ids; column `k` of
    /// `abundance` belongs to `components[k]` and annotation envelopes refer to the
    /// input ids. Components are sorted by `mu` and renumbered `0..n`; the returned
    /// [`IdRemap`] records the renumbering.
    pub fn from_parts(
        components: Vec<PeakComponent>,
        grid: PixelGrid,
        abundance: AbundanceMatrix,
        annotations: Option<Vec<Vec<usize>>>,
    ) -> Result<(Self, IdRemap)> {
        if abundance.rows() != grid.len() {
            bail!(DimensionMismatch, "abundance has {} rows but the grid has {} pixels", abundance.rows(), grid.len());
        }
        if abundance.cols() != components.len() {
            bail!(DimensionMismatch, "abundance has {} columns but there are {} components", abundance.cols(), components.len());
        }
        let mut seen = BTreeSet::new();
        for c in &components {
            if !(c.mu.is_finite() && c.mu > 0.0) {
                bail!(InvalidData, "component {} has mu {} (must be > 0)", c.id, c.mu);
            }
            if !(c.sigma.is_finite() && c.sigma > 0.0) {
                bail!(InvalidData, "component {} has sigma {} (must be > 0)", c.id, c.sigma);
            }
            if !(c.area.is_finite() && c.area >= 0.0) {
                bail!(InvalidData, "component {} has area {} (must be >= 0)", c.id, c.area);
            }
            if !seen.insert(c.id) {
                bail!(InvalidData, "duplicate component id {}", c.id);
            }
        }

        let mut order: Vec<usize> = (0..components.len()).collect();
        order.sort_by(|&a, &b| components[a].mu.total_cmp(&components[b].mu));
        for w in order.windows(2) {
            if components[w[0]].mu == components[w[1]].mu {
                bail!(InvalidData, "components {} and {} share mu {}", components[w[0]].id, components[w[1]].id, components[w[0]].mu);
            }
        }
        let mut new_of_old = vec![0; components.len()];
        for (new, &old) in order.iter().enumerate() {
            new_of_old[old] = new;
        }
        let remap = IdRemap {
            entries: components.iter().enumerate().map(|(old, c)| (c.id, new_of_old[old])).collect(),
        };
        let sorted: Vec<PeakComponent> = order
            .iter()
            .enumerate()
            .map(|(new, &old)| PeakComponent { id: new, ..components[old] })
            .collect();

        let annotations = match annotations {
            None => None,
            Some(envs) => {
                let mut out = Vec::with_capacity(envs.len());
                for (k, env) in envs.into_iter().enumerate() {
                    if env.len() < 2 {
                        bail!(InvalidData, "annotated envelope {k} has {} member(s); at least 2 required", env.len());
                    }
                    let mut mapped = Vec::with_capacity(env.len());
                    for id in env {
                        match remap.loaded_id(id) {
                            Some(new) => mapped.push(new),
                            None => bail!(InvalidData, "annotated envelope {k} references unknown component {id}"),
                        }
                    }
                    mapped.sort_unstable();
                    mapped.dedup();
                    if mapped.len() < 2 {
                        bail!(InvalidData, "annotated envelope {k} has fewer than 2 distinct members");
                    }
                    out.push(mapped);
                }
                Some(out)
            }
        };

        let abundance = if remap.is_identity() { abundance } else { abundance.permute_columns(&new_of_old) };
        Ok((Self { components: sorted, grid, abundance, annotations }, remap))
    }

    pub fn components(&self) -> &[PeakComponent] {
        &self.components
    }

    pub fn component(&self, id: usize) -> Option<&PeakComponent> {
        self.components.get(id)
    }

    pub fn grid(&self) -> &PixelGrid {
        &self.grid
    }

    pub fn abundance(&self) -> &AbundanceMatrix {
        &self.abundance
    }

    /// Expert envelopes in loaded ids, each sorted ascending (and hence by mu).
    pub fn annotations(&self) -> Option<&[Vec<usize>]> {
        self.annotations.as_deref()
    }

    /// Mean abundance of each component over all pixels.
    pub fn mean_abundance(&self) -> Vec<f64> {
        let mut sums = vec![0.0f64; self.abundance.cols()];
        for r in 0..self.abundance.rows() {
            for (s, &v) in sums.iter_mut().zip(self.abundance.row(r)) {
                *s += v as f64;
            }
        }
        let n = self.abundance.rows().max(1) as f64;
        sums.iter().map(|s| s / n).collect()
    }
}

/// Set of unordered adjacent-member pairs `(lo, hi)` over a list of envelopes.
pub fn adjacent_pairs(envelopes: &[Vec<usize>]) -> BTreeSet<(usize, usize)> {
    let mut set = BTreeSet::new();
    for env in envelopes {
        for w in env.windows(2) {
            set.insert((w[0].min(w[1]), w[0].max(w[1])));
        }
    }
    set
}

/// Labels each pair `Envelope` iff its two components are consecutive members
/// of the same envelope. Envelopes are taken in mu order (ascending id).
pub fn pair_labels_from_envelopes(envelopes: &[Vec<usize>], pairs: &[(usize, usize)]) -> Vec<PairLabel> {
    let sorted: Vec<Vec<usize>> = envelopes
        .iter()
        .map(|e| {
            let mut e = e.clone();
            e.sort_unstable();
            e
        })
        .collect();
    let adjacent = adjacent_pairs(&sorted);
    pairs
        .iter()
        .map(|&(i, j)| {
            if adjacent.contains(&(i.min(j), i.max(j))) {
                PairLabel::Envelope
            } else {
                PairLabel::NonEnvelope
            }
        })
        .collect()
}

/// Ground-truth labels for candidate pairs from the dataset's expert annotations.
pub fn annotation_to_pair_labels(dataset: &Dataset, pairs: &[(usize, usize)]) -> Result<Vec<PairLabel>> {
    match dataset.annotations() {
        Some(envs) => Ok(pair_labels_from_envelopes(envs, pairs)),
        None => bail!(InvalidData, "dataset has no envelope annotations"),
    }
}
