//! Flat pipeline configuration. Every field can be set in a JSON file and
//! overridden by the command-line flag of the same name.

use std::path::PathBuf;

use deisolab_core::assemble::AssembleConfig;
use deisolab_core::bayes::{NbConfig, PriorMode};
use deisolab_core::evaluate::BaselineConfig;
use deisolab_core::features::{FeatureConfig, FeatureName, SelectionConfig, DEFAULT_SELECTED};
use deisolab_core::fuzzy::FisConfig;
use deisolab_core::gmm::EmConfig;
use deisolab_core::image::EnhanceConfig;
use deisolab_core::preselect::{PairingConfig, SigmaRatio, ThresholdOptions};
use deisolab_core::texture::{GlcmConfig, QuantRange};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Generate,
    Preselect,
    Features,
    Train,
    Classify,
    Assemble,
    Evaluate,
    Baseline,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Generate,
        Stage::Preselect,
        Stage::Features,
        Stage::Train,
        Stage::Classify,
        Stage::Assemble,
        Stage::Evaluate,
        Stage::Baseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Generate => "generate",
            Stage::Preselect => "preselect",
            Stage::Features => "features",
            Stage::Train => "train",
            Stage::Classify => "classify",
            Stage::Assemble => "assemble",
            Stage::Evaluate => "evaluate",
            Stage::Baseline => "baseline",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    pub train_input: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub synth: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub stages: String,

    pub fis: Option<PathBuf>,
    pub threshold: String,
    pub window_da: f64,
    pub k_neighbors: usize,
    pub sigma_ratio: String,
    pub gmm_k_max: usize,
    pub gmm_elbow_fraction: f64,
    pub gmm_seed: u64,
    pub gmm_max_samples: usize,

    pub equalize: bool,
    pub histogram_bins: usize,
    pub median_filter: bool,
    pub normalize: bool,
    pub glcm_levels: usize,
    pub glcm_offsets: String,
    pub glcm_symmetric: bool,
    pub glcm_range: String,
    pub entropy_base: f64,
    pub autocorrelation_lag: String,

    pub feature_set: String,
    pub select_features: bool,
    pub priors: String,
    pub bandwidth_constant: f64,
    pub bandwidth_floor: f64,
    pub decision_threshold: Option<f64>,
    pub cv_folds: usize,
    pub cv_repeats: usize,
    pub cv_seed: u64,

    pub charge: u32,
    pub spacing_tolerance: f64,
    pub baseline_max_error: f64,
    pub baseline_max_position: usize,

    pub dump_images: usize,
    pub threads: usize,
    pub verbosity: String,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let th = ThresholdOptions::default();
        let nb = NbConfig::default();
        let bl = BaselineConfig::default();
        Self {
            input: None,
            train_input: None,
            model: None,
            truth: None,
            synth: None,
            out_dir: "deisolab-out".into(),
            stages: "preselect,features,train,classify,assemble,evaluate,baseline".into(),
            fis: None,
            threshold: "auto".into(),
            window_da: 10.0,
            k_neighbors: 60,
            sigma_ratio: "variance".into(),
            gmm_k_max: th.k_max,
            gmm_elbow_fraction: th.elbow_fraction,
            gmm_seed: th.seed,
            gmm_max_samples: th.max_samples,
            equalize: true,
            histogram_bins: 256,
            median_filter: true,
            normalize: true,
            glcm_levels: 8,
            glcm_offsets: "0,1;1,0;1,1;1,-1".into(),
            glcm_symmetric: true,
            glcm_range: "fixed".into(),
            entropy_base: 2.0,
            autocorrelation_lag: "0,1".into(),
            feature_set: DEFAULT_SELECTED.iter().map(|f| f.as_str()).collect::<Vec<_>>().join(","),
            select_features: false,
            priors: "empirical".into(),
            bandwidth_constant: nb.bandwidth_constant,
            bandwidth_floor: nb.bandwidth_floor,
            decision_threshold: None,
            cv_folds: 5,
            cv_repeats: 100,
            cv_seed: 0,
            charge: bl.charge,
            spacing_tolerance: bl.spacing_tolerance,
            baseline_max_error: bl.max_relative_error,
            baseline_max_position: bl.max_position,
            dump_images: 0,
            threads: 0,
            verbosity: "info".into(),
        }
    }
}

fn bad(field: &str, value: impl std::fmt::Display, expected: &str) -> CliError {
    CliError::Config(format!("{field} = '{value}': expected {expected}"))
}

fn parse_pair(field: &str, s: &str) -> Result<(i32, i32)> {
    let (a, b) = s.split_once(',').ok_or_else(|| bad(field, s, "'row,col'"))?;
    match (a.trim().parse(), b.trim().parse()) {
        (Ok(a), Ok(b)) => Ok((a, b)),
        _ => Err(bad(field, s, "two integers 'row,col'")),
    }
}

impl PipelineConfig {
    /// Field names as they appear in the JSON file.
    pub fn keys() -> Vec<String> {
        match serde_json::to_value(Self::default()) {
            Ok(serde_json::Value::Object(m)) => m.keys().cloned().collect(),
            _ => Vec::new(),
        }
    }

    pub fn stages(&self) -> Result<Vec<Stage>> {
        let mut out = Vec::new();
        for name in self.stages.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match Stage::ALL.iter().find(|s| s.name() == name) {
                Some(s) if !out.contains(s) => out.push(*s),
                Some(_) => {}
                None => {
                    let known: Vec<&str> = Stage::ALL.iter().map(|s| s.name()).collect();
                    return Err(bad("stages", name, &format!("one of {}", known.join(", "))));
                }
            }
        }
        out.sort();
        Ok(out)
    }

    pub fn threshold_value(&self) -> Result<Option<f64>> {
        if self.threshold == "auto" {
            return Ok(None);
        }
        match self.threshold.parse::<f64>() {
            Ok(t) if (0.0..=1.0).contains(&t) => Ok(Some(t)),
            _ => Err(bad("threshold", &self.threshold, "'auto' or a number in [0, 1]")),
        }
    }

    pub fn pairing(&self) -> Result<PairingConfig> {
        let ratio = match self.sigma_ratio.as_str() {
            "variance" => SigmaRatio::Variance,
            "std" => SigmaRatio::StdDev,
            other => return Err(bad("sigma_ratio", other, "'variance' or 'std'")),
        };
        if !(self.window_da.is_finite() && self.window_da >= 0.0) {
            return Err(bad("window_da", self.window_da, "a non-negative number (0 disables the window)"));
        }
        Ok(PairingConfig {
            window_da: (self.window_da > 0.0).then_some(self.window_da),
            k_neighbors: (self.k_neighbors > 0).then_some(self.k_neighbors),
            ratio,
        })
    }

    pub fn threshold_options(&self) -> ThresholdOptions {
        ThresholdOptions {
            k_max: self.gmm_k_max,
            elbow_fraction: self.gmm_elbow_fraction,
            seed: self.gmm_seed,
            max_samples: self.gmm_max_samples,
            em: EmConfig::default(),
        }
    }

    pub fn fis_config(&self) -> Result<FisConfig> {
        match &self.fis {
            None => Ok(FisConfig::default()),
            Some(path) => {
                let cfg: FisConfig = crate::io::read_json(path).map_err(|e| CliError::Config(e.to_string()))?;
                Ok(cfg)
            }
        }
    }

    pub fn feature_config(&self) -> Result<FeatureConfig> {
        let offsets = self
            .glcm_offsets
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| parse_pair("glcm_offsets", s))
            .collect::<Result<Vec<_>>>()?;
        let range = match self.glcm_range.as_str() {
            "fixed" => QuantRange::Fixed { lo: 0.0, hi: 1.0 },
            "minmax" => QuantRange::ImageMinMax,
            other => return Err(bad("glcm_range", other, "'fixed' or 'minmax'")),
        };
        if !(self.entropy_base.is_finite() && self.entropy_base > 1.0) {
            return Err(bad("entropy_base", self.entropy_base, "a number > 1"));
        }
        Ok(FeatureConfig {
            enhance: EnhanceConfig {
                equalize: self.equalize,
                histogram_bins: self.histogram_bins,
                median_filter: self.median_filter,
                normalize: self.normalize,
            },
            glcm: GlcmConfig { levels: self.glcm_levels, offsets, symmetric: self.glcm_symmetric, range },
            entropy_base: self.entropy_base,
            autocorrelation_lag: parse_pair("autocorrelation_lag", &self.autocorrelation_lag)?,
        })
    }

    pub fn selected_features(&self) -> Result<Vec<FeatureName>> {
        let mut out = Vec::new();
        for name in self.feature_set.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let f = FeatureName::parse(name).ok_or_else(|| bad("feature_set", name, "names from the features.csv header"))?;
            if !out.contains(&f) {
                out.push(f);
            }
        }
        if out.is_empty() {
            return Err(bad("feature_set", &self.feature_set, "at least one feature name"));
        }
        Ok(out)
    }

    pub fn nb_config(&self) -> Result<NbConfig> {
        let priors = match self.priors.as_str() {
            "empirical" => PriorMode::Empirical,
            "balanced" => PriorMode::Balanced,
            other => return Err(bad("priors", other, "'empirical' or 'balanced'")),
        };
        Ok(NbConfig {
            priors,
            bandwidth_constant: self.bandwidth_constant,
            bandwidth_floor: self.bandwidth_floor,
            decision_threshold: self.decision_threshold,
        })
    }

    pub fn selection_config(&self) -> Result<SelectionConfig> {
        Ok(SelectionConfig { folds: self.cv_folds, seed: self.cv_seed, nb: self.nb_config()?, ..Default::default() })
    }

    pub fn assemble_config(&self) -> AssembleConfig {
        AssembleConfig { spacing_tolerance: self.spacing_tolerance, charge: self.charge }
    }

    pub fn baseline_config(&self) -> BaselineConfig {
        BaselineConfig {
            spacing_tolerance: self.spacing_tolerance,
            max_relative_error: self.baseline_max_error,
            max_position: self.baseline_max_position,
            charge: self.charge,
        }
    }

    /// Checks every derived setting once, up front.
    pub fn validate(&self) -> Result<()> {
        self.stages()?;
        self.threshold_value()?;
        self.pairing()?;
        self.feature_config()?;
        self.selected_features()?;
        self.nb_config()?;
        if self.cv_folds < 2 || self.cv_repeats == 0 {
            return Err(bad("cv_folds/cv_repeats", format!("{}/{}", self.cv_folds, self.cv_repeats), "folds >= 2 and repeats >= 1"));
        }
        if self.charge == 0 {
            return Err(bad("charge", self.charge, "an integer >= 1"));
        }
        Ok(())
    }

    /// SHA-256 of the configuration with run-local settings (output
    /// directory, thread count, verbosity) reset, as lowercase hex.
    pub fn hash(&self) -> String {
        let d = Self::default();
        let semantic = Self { out_dir: d.out_dir, threads: d.threads, verbosity: d.verbosity, ..self.clone() };
        let bytes = serde_json::to_vec(&semantic).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}
