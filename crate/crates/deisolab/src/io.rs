//! Dataset files: a JSON manifest pointing at component, grid, abundance and
//! optional annotation tables. See `docs/formats.md` for the layouts.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use deisolab_core::data::IdRemap;
use deisolab_core::image::IonImage;
use deisolab_core::{AbundanceMatrix, Dataset, PeakComponent, Pixel, PixelGrid};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const FORMAT_VERSION: u32 = 1;
pub const MATRIX_MAGIC: &[u8; 8] = b"DLABMAT1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    /// Paths are relative to the manifest's directory.
    pub components: PathBuf,
    pub grid: PathBuf,
    /// `.bin` for the binary matrix layout, anything else is read as CSV.
    pub abundance: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotations: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Binary,
    Csv,
}

pub struct LoadedDataset {
    pub dataset: Dataset,
    pub remap: IdRemap,
    pub manifest: PathBuf,
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::read(path, e))
}

pub fn load_dataset(manifest_path: &Path) -> Result<LoadedDataset> {
    let manifest: Manifest =
        serde_json::from_str(&read_to_string(manifest_path)?).map_err(|e| CliError::read(manifest_path, e))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(CliError::Data(format!(
            "{}: unsupported format version {} (expected {FORMAT_VERSION})",
            manifest_path.display(),
            manifest.format_version
        )));
    }
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let components = read_components(&base.join(&manifest.components))?;
    let grid = read_grid(&base.join(&manifest.grid))?;
    let abundance_path = base.join(&manifest.abundance);
    let abundance = if abundance_path.extension().is_some_and(|e| e == "bin") {
        read_matrix_bin(&abundance_path)?
    } else {
        read_matrix_csv(&abundance_path)?
    };
    let annotations = manifest.annotations.as_ref().map(|a| read_annotations(&base.join(a))).transpose()?;
    let (dataset, remap) = Dataset::from_parts(components, grid, abundance, annotations)?;
    if !remap.is_identity() {
        log::info!("component ids were renumbered in ascending mass order");
    }
    Ok(LoadedDataset { dataset, remap, manifest: manifest_path.to_path_buf() })
}

/// Writes `manifest.json` and its tables into `dir`; returns the manifest path.
pub fn save_dataset(dir: &Path, dataset: &Dataset, format: MatrixFormat) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| CliError::write(dir, e))?;
    let abundance = match format {
        MatrixFormat::Binary => PathBuf::from("abundance.bin"),
        MatrixFormat::Csv => PathBuf::from("abundance.csv"),
    };
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        components: "components.csv".into(),
        grid: "grid.csv".into(),
        abundance: abundance.clone(),
        annotations: dataset.annotations().map(|_| "annotations.csv".into()),
    };
    let mut written = Vec::new();
    let path = dir.join(&manifest.components);
    write_components(&path, dataset.components())?;
    written.push(path);
    let path = dir.join(&manifest.grid);
    write_grid(&path, dataset.grid())?;
    written.push(path);
    let path = dir.join(&abundance);
    match format {
        MatrixFormat::Binary => write_matrix_bin(&path, dataset.abundance())?,
        MatrixFormat::Csv => write_matrix_csv(&path, dataset.abundance())?,
    }
    written.push(path);
    if let (Some(a), Some(envs)) = (&manifest.annotations, dataset.annotations()) {
        let path = dir.join(a);
        write_annotations(&path, envs)?;
        written.push(path);
    }
    let path = dir.join("manifest.json");
    write_json(&path, &manifest)?;
    written.insert(0, path);
    Ok(written)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|e| CliError::write(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_to_string(path)?).map_err(|e| CliError::read(path, e))
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes())
}

pub fn read_components(path: &Path) -> Result<Vec<PeakComponent>> {
    let text = read_to_string(path)?;
    csv_reader(&text).deserialize().map(|r| r.map_err(|e| CliError::read(path, e))).collect()
}

pub fn write_components(path: &Path, components: &[PeakComponent]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::write(path, e))?;
    for c in components {
        w.serialize(c).map_err(|e| CliError::write(path, e))?;
    }
    w.flush().map_err(|e| CliError::write(path, e))
}

#[derive(Serialize, Deserialize)]
struct GridRow {
    index: usize,
    x: u32,
    y: u32,
}

/// First line `# width=W height=H`, then `index,x,y` rows.
pub fn read_grid(path: &Path) -> Result<PixelGrid> {
    let text = read_to_string(path)?;
    let (first, rest) = text.split_once('\n').unwrap_or((&text, ""));
    let mut size = BTreeMap::new();
    for kv in first.trim().trim_start_matches('#').split_whitespace() {
        if let Some((k, v)) = kv.split_once('=') {
            size.insert(k, v);
        }
    }
    let dim = |k: &str| -> Result<u32> {
        size.get(k)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| CliError::Data(format!("{}: first line must be '# width=W height=H'", path.display())))
    };
    let (width, height) = (dim("width")?, dim("height")?);
    let pixels = csv_reader(rest)
        .deserialize::<GridRow>()
        .map(|r| r.map(|g| Pixel { index: g.index, x: g.x, y: g.y }).map_err(|e| CliError::read(path, e)))
        .collect::<Result<Vec<_>>>()?;
    Ok(PixelGrid::new(width, height, pixels)?)
}

pub fn write_grid(path: &Path, grid: &PixelGrid) -> Result<()> {
    let mut text = format!("# width={} height={}\nindex,x,y\n", grid.width(), grid.height());
    for p in grid.pixels() {
        text.push_str(&format!("{},{},{}\n", p.index, p.x, p.y));
    }
    fs::write(path, text).map_err(|e| CliError::write(path, e))
}

/// `DLABMAT1`, rows and columns as little-endian u32, then row-major little-endian f32.
pub fn read_matrix_bin(path: &Path) -> Result<AbundanceMatrix> {
    let mut bytes = Vec::new();
    fs::File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(|e| CliError::read(path, e))?;
    if bytes.len() < 16 || &bytes[..8] != MATRIX_MAGIC {
        return Err(CliError::Data(format!("{}: not a DLABMAT1 matrix", path.display())));
    }
    let rows = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let cols = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")) as usize;
    let body = &bytes[16..];
    if Some(body.len()) != rows.checked_mul(cols).and_then(|n| n.checked_mul(4)) {
        return Err(CliError::Data(format!(
            "{}: header says {rows}x{cols} but the file holds {} bytes of values",
            path.display(),
            body.len()
        )));
    }
    let values = body.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
    Ok(AbundanceMatrix::new(rows, cols, values)?)
}

pub fn write_matrix_bin(path: &Path, m: &AbundanceMatrix) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| CliError::write(path, e))?;
    let mut w = BufWriter::new(file);
    let dims = |n: usize| {
        u32::try_from(n).map_err(|_| CliError::Data(format!("matrix dimension {n} exceeds the binary format limit")))
    };
    let header = [MATRIX_MAGIC.as_slice(), &dims(m.rows())?.to_le_bytes(), &dims(m.cols())?.to_le_bytes()].concat();
    w.write_all(&header).map_err(|e| CliError::write(path, e))?;
    for v in m.values() {
        w.write_all(&v.to_le_bytes()).map_err(|e| CliError::write(path, e))?;
    }
    w.flush().map_err(|e| CliError::write(path, e))
}

/// One line per pixel, one column per component, no header.
pub fn read_matrix_csv(path: &Path) -> Result<AbundanceMatrix> {
    let text = read_to_string(path)?;
    let mut r = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
    let (mut rows, mut cols, mut values) = (0, None, Vec::new());
    for rec in r.records() {
        let rec = rec.map_err(|e| CliError::read(path, e))?;
        if *cols.get_or_insert(rec.len()) != rec.len() {
            return Err(CliError::Data(format!("{}: row {} has {} values", path.display(), rows + 1, rec.len())));
        }
        for field in rec.iter() {
            values.push(
                field
                    .parse::<f32>()
                    .map_err(|e| CliError::Data(format!("{}: row {}: {field:?}: {e}", path.display(), rows + 1)))?,
            );
        }
        rows += 1;
    }
    Ok(AbundanceMatrix::new(rows, cols.unwrap_or(0), values)?)
}

pub fn write_matrix_csv(path: &Path, m: &AbundanceMatrix) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(|e| CliError::write(path, e))?;
    for r in 0..m.rows() {
        w.write_record(m.row(r).iter().map(|v| v.to_string())).map_err(|e| CliError::write(path, e))?;
    }
    w.flush().map_err(|e| CliError::write(path, e))
}

#[derive(Serialize, Deserialize)]
struct AnnotationRow {
    envelope_id: u64,
    component_id: usize,
}

/// `envelope_id,component_id` rows; envelopes come back ordered by envelope id.
pub fn read_annotations(path: &Path) -> Result<Vec<Vec<usize>>> {
    let text = read_to_string(path)?;
    let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for row in csv_reader(&text).deserialize::<AnnotationRow>() {
        let row = row.map_err(|e| CliError::read(path, e))?;
        groups.entry(row.envelope_id).or_default().push(row.component_id);
    }
    Ok(groups.into_values().collect())
}

pub fn write_annotations(path: &Path, envelopes: &[Vec<usize>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::write(path, e))?;
    for (k, env) in envelopes.iter().enumerate() {
        for &id in env {
            w.serialize(AnnotationRow { envelope_id: k as u64, component_id: id }).map_err(|e| CliError::write(path, e))?;
        }
    }
    w.flush().map_err(|e| CliError::write(path, e))
}

/// Binary greymap of `image` clamped to `[0, 1]`; masked pixels are written as 0.
pub fn write_pgm(path: &Path, image: &IonImage) -> Result<()> {
    let mut bytes = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    bytes.extend(
        image
            .values()
            .iter()
            .zip(image.mask())
            .map(|(&v, &ok)| if ok { (v.clamp(0.0, 1.0) * 255.0).round() as u8 } else { 0 }),
    );
    fs::write(path, bytes).map_err(|e| CliError::write(path, e))
}

/// Tissue mask as a binary greymap: 255 inside, 0 outside.
pub fn write_mask_pgm(path: &Path, image: &IonImage) -> Result<()> {
    let mut bytes = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    bytes.extend(image.mask().iter().map(|&ok| if ok { 255u8 } else { 0 }));
    fs::write(path, bytes).map_err(|e| CliError::write(path, e))
}
