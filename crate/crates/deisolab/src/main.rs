//! `deisolab` command-line entry point.

use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use deisolab::artifact::{read_labels_csv, FeatureTable, ModelArtifact, PairsArtifact, ResultArtifact};
use deisolab::config::PipelineConfig;
use deisolab::error::{CliError, Result};
use deisolab::io;
use deisolab::pipeline::{self as pl, FeatureOutputs, Session};
use deisolab_core::synth::SynthConfig;
use serde::Serialize;
use serde_json::Value;

#[derive(Parser)]
#[command(name = "deisolab", version, about = "Isotopic envelope detection in MALDI imaging peak data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset with known envelopes.
    Generate(GenerateArgs),
    /// Score candidate peak pairs with the fuzzy system and keep those above the threshold.
    Preselect(PreselectArgs),
    /// Compute the texture descriptors of the retained pairs.
    Features(FeaturesArgs),
    /// Fit the kernel naive Bayes classifier and cross-validate it.
    Train(TrainArgs),
    /// Label the retained pairs with a trained model and assemble envelopes.
    Classify(ClassifyArgs),
    /// Label the candidate pairs with the theoretical-envelope baseline.
    Baseline(BaselineArgs),
    /// Score result files against ground truth.
    Evaluate(EvaluateArgs),
    /// Intersect the envelope-pair sets of several result files.
    Compare(CompareArgs),
    /// Run the stages selected by --stages.
    Run(RunArgs),
}

/// Pipeline settings. Each flag overrides the same key of the --config file.
#[derive(Args, Serialize, Default)]
#[command(next_help_heading = "Configuration")]
struct ConfigArgs {
    /// JSON file with any of the keys below; flags take precedence.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    config: Option<PathBuf>,

    /// Dataset manifest, or a directory containing manifest.json.
    #[arg(long, visible_alias = "in", value_name = "PATH")]
    input: Option<PathBuf>,
    /// Annotated dataset used for training; without it the input's own labels are used.
    #[arg(long, value_name = "PATH")]
    train_input: Option<PathBuf>,
    /// Trained model.json to classify with instead of training.
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
    /// ground_truth.json with the true envelopes; defaults to the input's annotations.
    #[arg(long, value_name = "FILE")]
    truth: Option<PathBuf>,
    /// Synthetic data configuration read by the generate stage of `run`.
    #[arg(long, value_name = "FILE")]
    synth: Option<PathBuf>,
    /// Directory for artifacts [default: deisolab-out].
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    /// Comma-separated stages: generate, preselect, features, train, classify, assemble, evaluate, baseline
    /// [default: preselect,features,train,classify,assemble,evaluate,baseline].
    #[arg(long, value_name = "LIST")]
    stages: Option<String>,

    /// Fuzzy inference system JSON; the built-in system when unset.
    #[arg(long, value_name = "FILE")]
    fis: Option<PathBuf>,
    /// Possibility threshold: 'auto' (Gaussian mixture) or a number in [0, 1] [default: auto].
    #[arg(long, value_name = "auto|T")]
    threshold: Option<String>,
    /// Pair only peaks within this many Da; 0 disables the window [default: 10].
    #[arg(long, visible_alias = "window", value_name = "DA")]
    window_da: Option<f64>,
    /// Pair each peak with at most this many heavier neighbours; 0 disables the cap [default: 60].
    #[arg(long, visible_alias = "kneighbors", value_name = "N")]
    k_neighbors: Option<usize>,
    /// Width ratio input to the fuzzy system: 'variance' or 'std' [default: variance].
    #[arg(long, value_name = "MODE")]
    sigma_ratio: Option<String>,
    /// Largest mixture size tried by the automatic threshold [default: 8].
    #[arg(long, value_name = "K")]
    gmm_k_max: Option<usize>,
    /// Stop adding mixture components once the next BIC gain falls below this share of the largest gain [default: 0.05].
    #[arg(long, value_name = "F")]
    gmm_elbow_fraction: Option<f64>,
    /// Seed of the mixture initialisation and subsampling [default: 0].
    #[arg(long, value_name = "SEED")]
    gmm_seed: Option<u64>,
    /// Possibilities used to fit the mixture, drawn without replacement [default: 5000].
    #[arg(long, value_name = "N")]
    gmm_max_samples: Option<usize>,

    /// Histogram-equalise ion images [default: true].
    #[arg(long, value_name = "BOOL")]
    equalize: Option<bool>,
    /// Bins of the equalisation histogram [default: 256].
    #[arg(long, value_name = "N")]
    histogram_bins: Option<usize>,
    /// Apply the 3x3 median filter [default: true].
    #[arg(long, value_name = "BOOL")]
    median_filter: Option<bool>,
    /// Rescale ion images to [0, 1] [default: true].
    #[arg(long, value_name = "BOOL")]
    normalize: Option<bool>,
    /// Grey levels of the co-occurrence matrix [default: 8].
    #[arg(long, value_name = "N")]
    glcm_levels: Option<usize>,
    /// Co-occurrence offsets as 'row,col' separated by ';' [default: 0,1;1,0;1,1;1,-1].
    #[arg(long, value_name = "LIST", allow_hyphen_values = true)]
    glcm_offsets: Option<String>,
    /// Count each co-occurrence in both directions [default: true].
    #[arg(long, value_name = "BOOL")]
    glcm_symmetric: Option<bool>,
    /// Quantisation range: 'fixed' ([0, 1]) or 'minmax' (per image) [default: fixed].
    #[arg(long, value_name = "MODE")]
    glcm_range: Option<String>,
    /// Logarithm base of the entropy descriptors [default: 2].
    #[arg(long, value_name = "B")]
    entropy_base: Option<f64>,
    /// Lag 'row,col' of the spatial autocorrelation descriptor [default: 0,1].
    #[arg(long, value_name = "LAG", allow_hyphen_values = true)]
    autocorrelation_lag: Option<String>,

    /// Comma-separated descriptors used by the classifier [default: m,s,correlation,entropy,median,contrast,homogeneity,moment].
    #[arg(long, value_name = "LIST")]
    feature_set: Option<String>,
    /// Choose descriptors by greedy forward selection instead of --feature-set [default: false].
    #[arg(long, value_name = "BOOL")]
    select_features: Option<bool>,
    /// Class priors: 'empirical' or 'balanced' [default: empirical].
    #[arg(long, value_name = "MODE")]
    priors: Option<String>,
    /// Constant c of the kernel bandwidth c * min(sd, IQR/1.349) * n^(-1/5) [default: 2.345].
    #[arg(long, value_name = "C")]
    bandwidth_constant: Option<f64>,
    /// Smallest kernel bandwidth [default: 1e-6].
    #[arg(long, value_name = "H")]
    bandwidth_floor: Option<f64>,
    /// Label a pair as envelope when its posterior reaches this value; maximum posterior when unset.
    #[arg(long, value_name = "P")]
    decision_threshold: Option<f64>,
    /// Cross-validation folds [default: 5].
    #[arg(long, value_name = "K")]
    cv_folds: Option<usize>,
    /// Cross-validation repeats [default: 100].
    #[arg(long, value_name = "N")]
    cv_repeats: Option<usize>,
    /// Seed of the fold assignment [default: 0].
    #[arg(long, value_name = "SEED")]
    cv_seed: Option<u64>,

    /// Charge state of the envelopes [default: 1].
    #[arg(long, value_name = "Z")]
    charge: Option<u32>,
    /// Largest deviation from the isotope spacing accepted when chaining envelopes, in Da [default: 0.25].
    #[arg(long, value_name = "DA")]
    spacing_tolerance: Option<f64>,
    /// Largest relative error between observed and theoretical intensity ratios in the baseline [default: 0.5].
    #[arg(long, value_name = "E")]
    baseline_max_error: Option<f64>,
    /// Highest isotope position the baseline tries for the lighter peak [default: 3].
    #[arg(long, value_name = "N")]
    baseline_max_position: Option<usize>,

    /// Write PGM images of this many retained pairs [default: 0].
    #[arg(long, value_name = "N")]
    dump_images: Option<usize>,
    /// Worker threads; 0 uses all cores. Results do not depend on it [default: 0].
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// Log level on standard error: off, error, warn, info, debug or trace [default: info].
    #[arg(long, value_name = "LEVEL")]
    verbosity: Option<String>,
}

/// Overlays the non-null entries of `flags` on `base`.
fn overlay(base: &mut Value, flags: Value) {
    if let (Value::Object(b), Value::Object(f)) = (base, flags) {
        for (k, v) in f.into_iter().filter(|(_, v)| !v.is_null()) {
            b.insert(k, v);
        }
    }
}

/// Reads a JSON object from `path`, or returns `default` serialized.
fn base_object(path: Option<&Path>, default: impl Serialize) -> Result<Value> {
    let value = match path {
        Some(p) => io::read_json::<Value>(p).map_err(|e| CliError::Config(e.to_string()))?,
        None => serde_json::to_value(default).map_err(|e| CliError::Internal(e.to_string()))?,
    };
    if !value.is_object() {
        return Err(CliError::Config("configuration file must hold a JSON object".into()));
    }
    Ok(value)
}

impl ConfigArgs {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut value = base_object(self.config.as_deref(), PipelineConfig::default())?;
        overlay(&mut value, serde_json::to_value(self).map_err(|e| CliError::Internal(e.to_string()))?);
        serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Synthetic data settings. Each flag overrides the same key of the --config file.
#[derive(Args, Serialize, Default)]
#[command(next_help_heading = "Synthetic data")]
struct SynthArgs {
    /// Seed of every random draw [default: 0].
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
    /// Grid width in pixels [default: 64].
    #[arg(long, value_name = "N")]
    width: Option<u32>,
    /// Grid height in pixels [default: 64].
    #[arg(long, value_name = "N")]
    height: Option<u32>,
    /// Number of analytes, each contributing one envelope [default: 40].
    #[arg(long, value_name = "N")]
    n_analytes: Option<usize>,
    /// Mass range 'lo,hi' for analytes and decoys, in Da [default: 600,1600].
    #[arg(long, value_name = "LO,HI", value_delimiter = ',', num_args = 2)]
    mass_range: Option<Vec<f64>>,
    /// Charge state of the analytes [default: 1].
    #[arg(long, value_name = "Z")]
    charge: Option<u32>,
    /// Relative weights of envelope lengths min_length, min_length+1, ... [default: 0.5,0.25,0.15,0.07,0.03].
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    length_weights: Option<Vec<f64>>,
    /// Shortest envelope [default: 2].
    #[arg(long, value_name = "N")]
    min_length: Option<usize>,
    /// Number of unrelated single peaks [default: 400].
    #[arg(long, value_name = "N")]
    n_decoys: Option<usize>,
    /// Total number of components; sets the decoy count and overrides --n-decoys.
    #[arg(long, value_name = "N")]
    total_components: Option<usize>,
    /// Spatial pattern family: 'blobs', 'regions' or 'mixed' [default: mixed].
    #[arg(long, value_name = "FAMILY")]
    pattern: Option<String>,
    /// Standard deviation of the multiplicative pixel noise [default: 0.05].
    #[arg(long, value_name = "SD")]
    noise_sigma: Option<f64>,
    /// Peak width before jitter, in Da [default: 0.05].
    #[arg(long, value_name = "DA")]
    base_sigma: Option<f64>,
    /// Relative jitter of peak widths [default: 0.05].
    #[arg(long, value_name = "F")]
    sigma_jitter: Option<f64>,
    /// Largest shift of each member mass, in Da [default: 0.002].
    #[arg(long, value_name = "DA")]
    mu_jitter: Option<f64>,
    /// Share of analytes placed in interleaving pairs [default: 0].
    #[arg(long, value_name = "F")]
    overlap_fraction: Option<f64>,
    /// Smallest distance between two component masses, in Da [default: 0.02].
    #[arg(long, value_name = "DA")]
    min_spacing: Option<f64>,
    /// Log-uniform amplitude range 'lo,hi' [default: 10,1000].
    #[arg(long, value_name = "LO,HI", value_delimiter = ',', num_args = 2)]
    amplitude_range: Option<Vec<f64>>,
    /// Restrict the grid to an elliptical tissue section [default: true].
    #[arg(long, value_name = "BOOL")]
    tissue_mask: Option<bool>,
}

#[derive(Args)]
struct GenerateArgs {
    /// Synthetic data configuration JSON; flags take precedence.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory for the manifest, tables and ground_truth.json.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Log level on standard error [default: info].
    #[arg(long, value_name = "LEVEL")]
    verbosity: Option<String>,
    #[command(flatten)]
    synth: SynthArgs,
}

#[derive(Args)]
struct PreselectArgs {
    /// Output pairs.json [default: <out-dir>/pairs.json].
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct FeaturesArgs {
    /// pairs.json from preselect [default: <out-dir>/pairs.json].
    #[arg(long, value_name = "FILE")]
    pairs: Option<PathBuf>,
    /// Output feature table [default: <out-dir>/features.csv].
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Output labels when ground truth is known [default: labels.csv beside the feature table].
    #[arg(long, value_name = "FILE")]
    labels_out: Option<PathBuf>,
    /// Directory for PGM dumps of the first --dump-images pairs (all pairs when that is 0).
    #[arg(long, value_name = "DIR")]
    save_images: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct TrainArgs {
    /// Feature table [default: <out-dir>/features.csv].
    #[arg(long, value_name = "FILE")]
    features: Option<PathBuf>,
    /// Labels 'i,j,E|nE' for the rows of the feature table [default: <out-dir>/labels.csv].
    #[arg(long, value_name = "FILE")]
    labels: Option<PathBuf>,
    /// Output model [default: <out-dir>/model.json].
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct ClassifyArgs {
    /// pairs.json; computed from --input when unset.
    #[arg(long, value_name = "FILE")]
    pairs: Option<PathBuf>,
    /// Feature table of the retained pairs; computed from --input when unset.
    #[arg(long, value_name = "FILE")]
    features: Option<PathBuf>,
    /// Skip envelope assembly.
    #[arg(long)]
    no_assemble: bool,
    /// Output result [default: <out-dir>/result.json].
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct BaselineArgs {
    /// pairs.json; computed from --input when unset.
    #[arg(long, value_name = "FILE")]
    pairs: Option<PathBuf>,
    /// Output result [default: <out-dir>/baseline.json].
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Result files to score; all must cover the same pairs.
    #[arg(long, value_name = "FILE", num_args = 1.., required = true)]
    pred: Vec<PathBuf>,
    /// pairs.json whose reduction summary is copied into the report.
    #[arg(long, value_name = "FILE")]
    pairs: Option<PathBuf>,
    /// Output report [default: <out-dir>/report.json].
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct CompareArgs {
    /// Result files to intersect; all must cover the same pairs.
    #[arg(long, value_name = "FILE", num_args = 1.., required = true)]
    pred: Vec<PathBuf>,
    /// Output intersections [default: <out-dir>/venn.json].
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
}

fn init_logging(verbosity: &str) -> Result<()> {
    let level: log::LevelFilter = verbosity
        .parse()
        .map_err(|_| CliError::Config(format!("verbosity = '{verbosity}': expected off, error, warn, info, debug or trace")))?;
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_env("RUST_LOG")
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .try_init();
    Ok(())
}

/// Runs `f` in a session; on failure or panic every file it wrote is removed.
fn in_session(config: PipelineConfig, f: impl FnOnce(&mut Session) -> Result<()>) -> Result<()> {
    init_logging(&config.verbosity)?;
    let mut session = Session::new(config)?;
    let outcome = panic::catch_unwind(AssertUnwindSafe(|| f(&mut session)));
    let outcome = match outcome {
        Ok(r) => r,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            Err(CliError::Internal(msg))
        }
    };
    if outcome.is_err() {
        session.discard();
    }
    outcome
}

fn input_dataset(config: &PipelineConfig) -> Result<deisolab::io::LoadedDataset> {
    pl::load(pl::require(&config.input, "input dataset (--input)")?)
}

fn pairs_for(session: &mut Session, path: Option<&Path>, dataset: Option<&deisolab_core::Dataset>) -> Result<PairsArtifact> {
    match (path, dataset) {
        (Some(p), _) => io::read_json(p),
        (None, Some(ds)) => pl::preselect_stage(session, ds, None),
        (None, None) => Err(CliError::Config("pass --pairs or --input".into())),
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Generate(a) => {
            let mut value = base_object(a.config.as_deref(), SynthConfig::default())?;
            overlay(&mut value, serde_json::to_value(&a.synth).map_err(|e| CliError::Internal(e.to_string()))?);
            let synth: SynthConfig = serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))?;
            let config = PipelineConfig {
                out_dir: a.out.clone(),
                verbosity: a.verbosity.unwrap_or_else(|| "info".into()),
                ..Default::default()
            };
            in_session(config, |s| pl::generate(s, &synth, &a.out).map(|_| ()))
        }
        Command::Preselect(a) => {
            let config = a.config.resolve()?;
            in_session(config, |s| {
                let ds = input_dataset(&s.config)?;
                let out = a.out.clone().unwrap_or_else(|| s.path(pl::PAIRS_FILE));
                pl::preselect_stage(s, &ds.dataset, Some(&out)).map(|_| ())
            })
        }
        Command::Features(a) => {
            let config = a.config.resolve()?;
            in_session(config, |s| {
                let ds = input_dataset(&s.config)?;
                let pairs: PairsArtifact = io::read_json(&a.pairs.clone().unwrap_or_else(|| s.path(pl::PAIRS_FILE)))?;
                let truth = pl::truth_envelopes(&s.config, Some(&ds.dataset))?;
                let out = a.out.clone().unwrap_or_else(|| s.path(pl::FEATURES_FILE));
                let labels = a.labels_out.clone().unwrap_or_else(|| out.with_file_name(pl::LABELS_FILE));
                let spearman = out.with_file_name(pl::SPEARMAN_FILE);
                let n = match s.config.dump_images {
                    0 => usize::MAX,
                    n => n,
                };
                let outputs = FeatureOutputs {
                    features: Some(&out),
                    labels: Some(&labels),
                    spearman: Some(&spearman),
                    images: a.save_images.as_deref().map(|d| (d, n)),
                };
                pl::features_stage(s, &ds.dataset, &pairs, truth.as_deref(), outputs).map(|_| ())
            })
        }
        Command::Train(a) => {
            let config = a.config.resolve()?;
            in_session(config, |s| {
                let table = FeatureTable::read_csv(&a.features.clone().unwrap_or_else(|| s.path(pl::FEATURES_FILE)))?;
                let labelled = read_labels_csv(&a.labels.clone().unwrap_or_else(|| s.path(pl::LABELS_FILE)))?;
                let labels = pl::align_labels(&table, &labelled)?;
                let out = a.out.clone().unwrap_or_else(|| s.path(pl::MODEL_FILE));
                pl::train_stage(s, &table, &labels, &out).map(|_| ())
            })
        }
        Command::Classify(a) => {
            let config = a.config.resolve()?;
            in_session(config, |s| {
                let model_path = s.config.model.clone().unwrap_or_else(|| s.path(pl::MODEL_FILE));
                let model: ModelArtifact = io::read_json(&model_path)?;
                let ds = match (&a.pairs, &a.features) {
                    (Some(_), Some(_)) => None,
                    _ => Some(input_dataset(&s.config)?),
                };
                let dataset = ds.as_ref().map(|d| &d.dataset);
                let pairs = pairs_for(s, a.pairs.as_deref(), dataset)?;
                let table = match (&a.features, dataset) {
                    (Some(p), _) => FeatureTable::read_csv(p)?,
                    (None, Some(d)) => pl::features_stage(s, d, &pairs, None, FeatureOutputs::default())?.0,
                    (None, None) => unreachable!("dataset is loaded when no feature table is given"),
                };
                let out = a.out.clone().unwrap_or_else(|| s.path(pl::RESULT_FILE));
                pl::classify_stage(s, &model, &pairs, &table, !a.no_assemble, &out).map(|_| ())
            })
        }
        Command::Baseline(a) => {
            let config = a.config.resolve()?;
            in_session(config, |s| {
                let ds = input_dataset(&s.config)?;
                let pairs = pairs_for(s, a.pairs.as_deref(), Some(&ds.dataset))?;
                let out = a.out.clone().unwrap_or_else(|| s.path(pl::BASELINE_FILE));
                pl::baseline_stage(s, &ds.dataset, &pairs, &out).map(|_| ())
            })
        }
        Command::Evaluate(a) => {
            let config = a.config.resolve()?;
            in_session(config, |s| {
                let truth = truth_from(&s.config)?
                    .ok_or_else(|| CliError::Config("evaluation needs --truth or an annotated --input".into()))?;
                let results = a.pred.iter().map(|p| io::read_json::<ResultArtifact>(p)).collect::<Result<Vec<_>>>()?;
                let reduction = match &a.pairs {
                    Some(p) => Some(io::read_json::<PairsArtifact>(p)?.reduction),
                    None => None,
                };
                let out = a.out.clone().unwrap_or_else(|| s.path(pl::REPORT_FILE));
                let refs: Vec<&ResultArtifact> = results.iter().collect();
                pl::evaluate_stage(s, &refs, &truth, reduction, &out).map(|_| ())
            })
        }
        Command::Compare(a) => {
            let config = a.config.resolve()?;
            in_session(config, |s| {
                let truth = truth_from(&s.config)?;
                let results = a.pred.iter().map(|p| io::read_json::<ResultArtifact>(p)).collect::<Result<Vec<_>>>()?;
                let out = a.out.clone().unwrap_or_else(|| s.path(pl::VENN_FILE));
                pl::compare_stage(s, &results, truth.as_deref(), &out).map(|_| ())
            })
        }
        Command::Run(a) => {
            let config = a.config.resolve()?;
            in_session(config, pl::run)
        }
    }
}

/// Ground truth from --truth, or from the annotations of --input when given.
fn truth_from(config: &PipelineConfig) -> Result<Option<Vec<Vec<usize>>>> {
    if config.truth.is_none() && config.input.is_some() {
        let ds = input_dataset(config)?;
        return pl::truth_envelopes(config, Some(&ds.dataset));
    }
    pl::truth_envelopes(config, None)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("deisolab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
