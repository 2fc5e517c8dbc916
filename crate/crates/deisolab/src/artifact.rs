//! JSON and CSV artifacts written by the pipeline. Every artifact carries the
//! tool version and the hash of the configuration that produced it.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use deisolab_core::assemble::{ClassifiedPair, EnvelopeSet};
use deisolab_core::bayes::KernelNbModel;
use deisolab_core::cv::CvReport;
use deisolab_core::evaluate::{ConfusionCounts, IntersectionReport, MetricReport};
use deisolab_core::features::{FeatureName, FeatureVector, SelectionStep, SpearmanMatrix, FEATURE_COUNT, FEATURE_SCHEMA_VERSION};
use deisolab_core::fuzzy::FisConfig;
use deisolab_core::preselect::{PeakPair, ReductionReport, ThresholdSource};
use deisolab_core::PairLabel;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub tool_version: String,
    pub schema_version: u32,
    pub config_hash: String,
}

impl Meta {
    pub fn new(config_hash: &str) -> Self {
        Self {
            tool: "deisolab".into(),
            tool_version: TOOL_VERSION.into(),
            schema_version: SCHEMA_VERSION,
            config_hash: config_hash.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub i: usize,
    pub j: usize,
    pub m: f64,
    pub s: f64,
    pub possibility: f64,
    pub retained: bool,
}

impl PairRecord {
    pub fn pair(&self) -> PeakPair {
        PeakPair { i: self.i, j: self.j, m: self.m, s: self.s, possibility: Some(self.possibility) }
    }
}

/// `pairs.json`: every candidate pair with its possibility and whether it passed the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairsArtifact {
    #[serde(flatten)]
    pub meta: Meta,
    pub fis: FisConfig,
    pub threshold: f64,
    pub threshold_source: ThresholdSource,
    pub reduction: ReductionReport,
    pub pairs: Vec<PairRecord>,
}

impl PairsArtifact {
    pub fn candidates(&self) -> Vec<PeakPair> {
        self.pairs.iter().map(PairRecord::pair).collect()
    }

    pub fn retained(&self) -> Vec<PeakPair> {
        self.pairs.iter().filter(|p| p.retained).map(PairRecord::pair).collect()
    }
}

/// `model.json`: the trained classifier and its cross-validation summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    #[serde(flatten)]
    pub meta: Meta,
    pub feature_schema_version: u32,
    pub model: KernelNbModel,
    pub training_pairs: usize,
    pub training_envelope_pairs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<Vec<SelectionStep>>,
    pub cv: CvReport,
}

/// `result.json` / `baseline.json`: a label for every candidate pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultArtifact {
    #[serde(flatten)]
    pub meta: Meta,
    pub method: String,
    pub pairs: Vec<ClassifiedPair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelopes: Option<EnvelopeSet>,
}

impl ResultArtifact {
    pub fn labels(&self) -> Vec<PairLabel> {
        self.pairs.iter().map(|c| c.label).collect()
    }

    pub fn ids(&self) -> Vec<(usize, usize)> {
        self.pairs.iter().map(|c| c.pair.ids()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: String,
    pub confusion: ConfusionCounts,
    pub metrics: MetricReport,
    /// Metric values as percentages rounded to two decimals.
    pub percent: std::collections::BTreeMap<String, Option<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelopes: Option<EnvelopeRecovery>,
}

/// Assembled envelopes that reproduce a ground-truth envelope exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvelopeRecovery {
    pub truth: usize,
    pub predicted: usize,
    pub exact: usize,
}

/// `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportArtifact {
    #[serde(flatten)]
    pub meta: Meta,
    pub universe: usize,
    pub truth_envelope_pairs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduction: Option<ReductionReport>,
    pub methods: Vec<MethodReport>,
}

/// `spearman.json`: rank correlation between all descriptors of the retained pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpearmanArtifact {
    #[serde(flatten)]
    pub meta: Meta,
    pub spearman: SpearmanMatrix,
}

/// `venn.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareArtifact {
    #[serde(flatten)]
    pub meta: Meta,
    pub report: IntersectionReport,
}

/// Feature rows of the retained pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub pairs: Vec<(usize, usize)>,
    pub vectors: Vec<FeatureVector>,
}

pub fn feature_header() -> String {
    let mut h = String::from("i,j");
    for f in FeatureName::ALL {
        h.push(',');
        h.push_str(f.as_str());
    }
    h
}

impl FeatureTable {
    /// A `#` comment line with version and config hash, the header, then one row per pair.
    pub fn to_csv(&self, meta: &Meta) -> String {
        let mut out = format!(
            "# {} {} config_hash={} feature_schema={}\n{}\n",
            meta.tool,
            meta.tool_version,
            meta.config_hash,
            FEATURE_SCHEMA_VERSION,
            feature_header()
        );
        for ((i, j), v) in self.pairs.iter().zip(&self.vectors) {
            let _ = write!(out, "{i},{j}");
            for x in v.0 {
                let _ = write!(out, ",{x}");
            }
            out.push('\n');
        }
        out
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
        let mut lines = text.lines().filter(|l| !l.starts_with('#'));
        let header = lines.next().unwrap_or_default();
        if header.trim() != feature_header() {
            return Err(CliError::Data(format!("{}: unexpected header {header:?}", path.display())));
        }
        let (mut pairs, mut vectors) = (Vec::new(), Vec::new());
        for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let err = |what: &str| CliError::Data(format!("{}: row {}: {what}", path.display(), n + 1));
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != FEATURE_COUNT + 2 {
                return Err(err(&format!("{} fields, expected {}", fields.len(), FEATURE_COUNT + 2)));
            }
            let id = |k: usize| fields[k].parse::<usize>().map_err(|e| err(&e.to_string()));
            pairs.push((id(0)?, id(1)?));
            let mut v = [0.0; FEATURE_COUNT];
            for (k, slot) in v.iter_mut().enumerate() {
                *slot = fields[k + 2].parse().map_err(|e: std::num::ParseFloatError| err(&e.to_string()))?;
            }
            vectors.push(FeatureVector(v));
        }
        Ok(Self { pairs, vectors })
    }
}

fn label_str(l: PairLabel) -> &'static str {
    match l {
        PairLabel::Envelope => "E",
        PairLabel::NonEnvelope => "nE",
    }
}

/// `i,j,label` with labels `E` / `nE`.
pub fn labels_to_csv(pairs: &[(usize, usize)], labels: &[PairLabel]) -> String {
    let mut out = String::from("i,j,label\n");
    for ((i, j), l) in pairs.iter().zip(labels) {
        let _ = writeln!(out, "{i},{j},{}", label_str(*l));
    }
    out
}

pub fn read_labels_csv(path: &Path) -> Result<Vec<((usize, usize), PairLabel)>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
    let mut out = Vec::new();
    for (n, line) in text.lines().skip(1).enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let err = || CliError::Data(format!("{}: row {}: expected 'i,j,E|nE'", path.display(), n + 1));
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 3 {
            return Err(err());
        }
        let (i, j) = (f[0].parse().map_err(|_| err())?, f[1].parse().map_err(|_| err())?);
        let label = match f[2] {
            "E" => PairLabel::Envelope,
            "nE" => PairLabel::NonEnvelope,
            _ => return Err(err()),
        };
        out.push(((i, j), label));
    }
    Ok(out)
}

/// `length,count` rows of the envelope length histogram.
pub fn histogram_to_csv(set: &EnvelopeSet) -> String {
    let mut out = String::from("length,count\n");
    for (len, count) in &set.histogram {
        let _ = writeln!(out, "{len},{count}");
    }
    out
}
