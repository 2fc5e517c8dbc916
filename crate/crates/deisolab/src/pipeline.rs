//! Stage drivers shared by the subcommands. Each stage writes its artifact into
//! the output directory; a failed command removes what it wrote.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use deisolab_core::assemble::{self, ClassifiedPair};
use deisolab_core::bayes::KernelNbModel;
use deisolab_core::cv::{self, CvReport};
use deisolab_core::data::pair_labels_from_envelopes;
use deisolab_core::evaluate::{self, compare_label_sets};
use deisolab_core::features::{self, FeatureName, FeatureVector, FEATURE_SCHEMA_VERSION};
use deisolab_core::fuzzy::Fis;
use deisolab_core::image::IonImage;
use deisolab_core::preselect::{self, PeakPair, PreselectModel, ReductionReport};
use deisolab_core::synth::{self, GroundTruth, SynthConfig};
use deisolab_core::{Dataset, PairLabel};
use rayon::prelude::*;

use crate::artifact::*;
use crate::config::{PipelineConfig, Stage};
use crate::error::{CliError, Result};
use crate::io::{self, LoadedDataset, MatrixFormat};

pub const PAIRS_FILE: &str = "pairs.json";
pub const FEATURES_FILE: &str = "features.csv";
pub const LABELS_FILE: &str = "labels.csv";
pub const SPEARMAN_FILE: &str = "spearman.json";
pub const MODEL_FILE: &str = "model.json";
pub const RESULT_FILE: &str = "result.json";
pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const BASELINE_FILE: &str = "baseline.json";
pub const REPORT_FILE: &str = "report.json";
pub const VENN_FILE: &str = "venn.json";
pub const TRUTH_FILE: &str = "ground_truth.json";

/// Output directory, config hash, worker pool and the list of files written so far.
pub struct Session {
    pub config: PipelineConfig,
    hash: String,
    written: Vec<PathBuf>,
    pool: rayon::ThreadPool,
}

impl Session {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?;
        Ok(Self { hash: config.hash(), config, written: Vec::new(), pool })
    }

    pub fn meta(&self) -> Meta {
        Meta::new(&self.hash)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.config.out_dir.join(name)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn prepare(&mut self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::write(parent, e))?;
        }
        if !self.written.iter().any(|p| p == path) {
            self.written.push(path.to_path_buf());
        }
        Ok(())
    }

    pub fn write_json<T: serde::Serialize>(&mut self, path: &Path, value: &T) -> Result<()> {
        self.prepare(path)?;
        io::write_json(path, value)
    }

    pub fn write_text(&mut self, path: &Path, text: &str) -> Result<()> {
        self.prepare(path)?;
        fs::write(path, text).map_err(|e| CliError::write(path, e))
    }

    fn write_pgm(&mut self, path: &Path, image: &IonImage, mask: bool) -> Result<()> {
        self.prepare(path)?;
        if mask {
            io::write_mask_pgm(path, image)
        } else {
            io::write_pgm(path, image)
        }
    }

    /// Removes every file written in this session, then any directories left empty.
    pub fn discard(&mut self) {
        let mut dirs = BTreeSet::new();
        for p in self.written.drain(..).rev() {
            if let Err(e) = fs::remove_file(&p) {
                log::warn!("could not remove partial artifact {}: {e}", p.display());
            }
            let mut d = p.parent();
            while let Some(dir) = d {
                dirs.insert(dir.to_path_buf());
                if dir == self.config.out_dir {
                    break;
                }
                d = dir.parent();
            }
        }
        for dir in dirs.iter().rev() {
            let _ = fs::remove_dir(dir);
        }
    }

    fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        self.pool.install(f)
    }
}

pub fn require<'a>(path: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    path.as_deref().ok_or_else(|| CliError::Config(format!("missing {what}")))
}

/// Writes a synthetic dataset and its ground truth into `dir`; returns the manifest path.
pub fn generate(session: &mut Session, synth_config: &SynthConfig, dir: &Path) -> Result<(PathBuf, GroundTruth)> {
    let (dataset, truth) = synth::generate(synth_config)?;
    log::info!(
        "generated {} components ({} envelopes) on {} pixels",
        dataset.components().len(),
        truth.envelopes.len(),
        dataset.grid().len()
    );
    for p in io::save_dataset(dir, &dataset, MatrixFormat::Binary)? {
        session.prepare(&p)?;
    }
    session.write_json(&dir.join(TRUTH_FILE), &truth)?;
    Ok((dir.join("manifest.json"), truth))
}

/// Loads a dataset from its manifest, or from `manifest.json` inside a directory.
pub fn load(path: &Path) -> Result<LoadedDataset> {
    let manifest = if path.is_dir() { path.join("manifest.json") } else { path.to_path_buf() };
    let loaded = io::load_dataset(&manifest)?;
    log::info!(
        "loaded {} components on {} pixels from {}",
        loaded.dataset.components().len(),
        loaded.dataset.grid().len(),
        path.display()
    );
    Ok(loaded)
}

/// Ground-truth envelopes from `--truth` (a `ground_truth.json`) or the dataset's annotations.
pub fn truth_envelopes(config: &PipelineConfig, dataset: Option<&Dataset>) -> Result<Option<Vec<Vec<usize>>>> {
    if let Some(path) = &config.truth {
        let gt: GroundTruth = io::read_json(path)?;
        return Ok(Some(gt.envelopes));
    }
    Ok(dataset.and_then(|d| d.annotations()).map(<[Vec<usize>]>::to_vec))
}

/// Scores and thresholds the candidate pairs; writes `pairs.json` to `out` when given.
pub fn preselect_stage(session: &mut Session, dataset: &Dataset, out: Option<&Path>) -> Result<PairsArtifact> {
    let config = &session.config;
    let fis_config = config.fis_config()?;
    let fis = Fis::new(fis_config.clone())?;
    let mut pairs = preselect::candidate_pairs(dataset, &config.pairing()?)?;
    session.install(|| {
        pairs.par_iter_mut().for_each(|p| p.possibility = Some(fis.possibility(p.m, p.s)));
    });
    let model = match config.threshold_value()? {
        Some(t) => PreselectModel::fixed(fis_config, t)?,
        None => {
            let possibilities: Vec<f64> = pairs.iter().filter_map(|p| p.possibility).collect();
            PreselectModel::from_possibilities(fis_config, &possibilities, &config.threshold_options())?
        }
    };
    let (kept, reduction) = preselect::preselect(&pairs, &model)?;
    log::info!(
        "preselection: {} candidate pairs, {} retained at threshold {:.4} ({:.2}% reduction)",
        reduction.input_pairs,
        reduction.retained_pairs,
        model.threshold,
        reduction.reduction_percent
    );
    let kept: BTreeSet<(usize, usize)> = kept.iter().map(PeakPair::ids).collect();
    let artifact = PairsArtifact {
        meta: session.meta(),
        fis: model.fis,
        threshold: model.threshold,
        threshold_source: model.source,
        reduction,
        pairs: pairs
            .iter()
            .map(|p| PairRecord {
                i: p.i,
                j: p.j,
                m: p.m,
                s: p.s,
                possibility: p.possibility.unwrap_or(0.0),
                retained: kept.contains(&p.ids()),
            })
            .collect(),
    };
    if let Some(out) = out {
        session.write_json(out, &artifact)?;
    }
    Ok(artifact)
}

/// Descriptors for `pairs`, enhancing each referenced component once, in parallel.
pub fn extract_features(session: &Session, dataset: &Dataset, pairs: &[PeakPair]) -> Result<Vec<FeatureVector>> {
    let fc = session.config.feature_config()?;
    let ids = features::referenced_components(pairs);
    session.install(|| {
        let images: Vec<IonImage> =
            ids.par_iter().map(|&id| features::enhanced_image(dataset, id, &fc)).collect::<Result<_, _>>()?;
        let by_id: BTreeMap<usize, &IonImage> = ids.iter().copied().zip(&images).collect();
        pairs
            .par_iter()
            .map(|p| features::pair_features(p, by_id[&p.i], by_id[&p.j], &fc))
            .collect::<Result<Vec<_>, _>>()
            .map_err(CliError::from)
    })
}

/// Where `features_stage` writes; `None` skips that output.
#[derive(Default)]
pub struct FeatureOutputs<'a> {
    pub features: Option<&'a Path>,
    pub labels: Option<&'a Path>,
    pub spearman: Option<&'a Path>,
    /// Directory for PGM dumps and the number of pairs to dump.
    pub images: Option<(&'a Path, usize)>,
}

pub fn features_stage(
    session: &mut Session,
    dataset: &Dataset,
    pairs: &PairsArtifact,
    truth: Option<&[Vec<usize>]>,
    out: FeatureOutputs<'_>,
) -> Result<(FeatureTable, Option<Vec<PairLabel>>)> {
    let retained = pairs.retained();
    let vectors = extract_features(session, dataset, &retained)?;
    let table = FeatureTable { pairs: retained.iter().map(PeakPair::ids).collect(), vectors };
    log::info!("extracted {} descriptors for {} pairs", features::FEATURE_COUNT, table.pairs.len());
    if let Some(path) = out.features {
        session.write_text(path, &table.to_csv(&session.meta()))?;
    }
    let labels = truth.map(|envs| pair_labels_from_envelopes(envs, &table.pairs));
    if let (Some(path), Some(labels)) = (out.labels, &labels) {
        session.write_text(path, &labels_to_csv(&table.pairs, labels))?;
    }
    if let Some(path) = out.spearman {
        if table.vectors.len() >= 3 {
            let spearman = features::spearman_matrix(&table.vectors)?;
            session.write_json(path, &SpearmanArtifact { meta: session.meta(), spearman })?;
        }
    }
    if let Some((dir, n)) = out.images {
        dump_images(session, dataset, &retained[..n.min(retained.len())], dir)?;
    }
    Ok((table, labels))
}

/// PGM dumps of the first, second and differential image of each pair, plus the tissue mask.
fn dump_images(session: &mut Session, dataset: &Dataset, pairs: &[PeakPair], images_dir: &Path) -> Result<()> {
    let fc = session.config.feature_config()?;
    for (k, p) in pairs.iter().enumerate() {
        let imgs = features::pair_images(p, dataset, &fc)?;
        if k == 0 {
            session.write_pgm(&images_dir.join("mask.pgm"), &imgs.first, true)?;
        }
        let stem = format!("pair_{}_{}", p.i, p.j);
        session.write_pgm(&images_dir.join(format!("{stem}_a.pgm")), &imgs.first, false)?;
        session.write_pgm(&images_dir.join(format!("{stem}_b.pgm")), &imgs.second, false)?;
        session.write_pgm(&images_dir.join(format!("{stem}_diff.pgm")), &imgs.differential, false)?;
    }
    Ok(())
}

pub fn train_stage(session: &mut Session, table: &FeatureTable, labels: &[PairLabel], out: &Path) -> Result<ModelArtifact> {
    if table.vectors.len() != labels.len() {
        return Err(CliError::Data(format!("{} feature rows but {} labels", table.vectors.len(), labels.len())));
    }
    let config = &session.config;
    let nb = config.nb_config()?;
    let (names, selection) = if config.select_features {
        let steps = features::forward_select(&table.vectors, labels, &config.selection_config()?)?;
        if steps.is_empty() {
            return Err(CliError::Numeric("forward selection accepted no feature".into()));
        }
        (steps.iter().map(|s| s.feature).collect::<Vec<_>>(), Some(steps))
    } else {
        (config.selected_features()?, None)
    };
    let rows = features::project_all(&table.vectors, &names);
    let feature_names = features::names_to_strings(&names);
    let model = KernelNbModel::fit(&rows, labels, feature_names.clone(), &nb)?;
    if !model.floored.is_empty() {
        log::warn!("no within-class spread in {}; their bandwidth was floored", model.floored.join(", "));
    }
    let (folds, repeats, seed) = (config.cv_folds, config.cv_repeats, config.cv_seed);
    let fold_confusion = session.install(|| {
        (0..repeats)
            .into_par_iter()
            .map(|r| cv::cv_repeat(&rows, labels, &feature_names, &nb, folds, seed, r))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let cv = CvReport::from_repeats(folds, seed, fold_confusion)?;
    log::info!(
        "trained on {} pairs ({} envelope); {}x{}-fold CV accuracy {:.4} ± {:.4}",
        labels.len(),
        labels.iter().filter(|l| l.is_envelope()).count(),
        repeats,
        folds,
        cv.mean_accuracy,
        cv.std_accuracy
    );
    let artifact = ModelArtifact {
        meta: session.meta(),
        feature_schema_version: FEATURE_SCHEMA_VERSION,
        model,
        training_pairs: labels.len(),
        training_envelope_pairs: labels.iter().filter(|l| l.is_envelope()).count(),
        selection,
        cv,
    };
    session.write_json(out, &artifact)?;
    Ok(artifact)
}

/// Labels for `table.pairs` taken from a labels file, in table order.
pub fn align_labels(table: &FeatureTable, labelled: &[((usize, usize), PairLabel)]) -> Result<Vec<PairLabel>> {
    let map: BTreeMap<(usize, usize), PairLabel> = labelled.iter().copied().collect();
    table
        .pairs
        .iter()
        .map(|ids| map.get(ids).copied().ok_or_else(|| CliError::Data(format!("no label for pair {ids:?}"))))
        .collect()
}

pub fn classify_stage(
    session: &mut Session,
    model: &ModelArtifact,
    pairs: &PairsArtifact,
    table: &FeatureTable,
    assemble_envelopes: bool,
    out: &Path,
) -> Result<ResultArtifact> {
    if model.feature_schema_version != FEATURE_SCHEMA_VERSION {
        return Err(CliError::Data(format!(
            "model was trained on feature schema {}, this build writes {FEATURE_SCHEMA_VERSION}",
            model.feature_schema_version
        )));
    }
    let by_ids: BTreeMap<(usize, usize), PeakPair> = pairs.pairs.iter().map(|r| ((r.i, r.j), r.pair())).collect();
    let retained = table
        .pairs
        .iter()
        .map(|ids| by_ids.get(ids).copied().ok_or_else(|| CliError::Data(format!("pair {ids:?} is not a candidate"))))
        .collect::<Result<Vec<_>>>()?;
    let names: Vec<FeatureName> = assemble::model_feature_names(&model.model)?;
    let classified: Vec<ClassifiedPair> = session.install(|| {
        retained.par_iter().zip(&table.vectors).map(|(p, v)| assemble::classify_pair(&model.model, &names, p, v)).collect()
    });
    let all = assemble::with_rejected(&pairs.candidates(), &classified);
    let envelopes = if assemble_envelopes {
        let set = assemble::assemble_envelopes(&all, &session.config.assemble_config())?;
        log::info!("assembled {} envelopes", set.envelopes.len());
        Some(set)
    } else {
        None
    };
    log::info!(
        "classified {} pairs: {} envelope steps",
        classified.len(),
        classified.iter().filter(|c| c.label.is_envelope()).count()
    );
    let artifact = ResultArtifact { meta: session.meta(), method: "deisolab".into(), pairs: all, envelopes };
    session.write_json(out, &artifact)?;
    if let Some(set) = &artifact.envelopes {
        let hist = out.with_file_name(HISTOGRAM_FILE);
        session.write_text(&hist, &histogram_to_csv(set))?;
    }
    Ok(artifact)
}

pub fn baseline_stage(session: &mut Session, dataset: &Dataset, pairs: &PairsArtifact, out: &Path) -> Result<ResultArtifact> {
    let classified = evaluate::baseline_tve(dataset, &pairs.candidates(), &session.config.baseline_config())?;
    log::info!(
        "baseline: {} of {} pairs labelled envelope",
        classified.iter().filter(|c| c.label.is_envelope()).count(),
        classified.len()
    );
    let artifact = ResultArtifact { meta: session.meta(), method: "baseline_tve".into(), pairs: classified, envelopes: None };
    session.write_json(out, &artifact)?;
    Ok(artifact)
}

fn recovery(predicted: &[Vec<usize>], truth: &[Vec<usize>]) -> EnvelopeRecovery {
    let truth_set: BTreeSet<&Vec<usize>> = truth.iter().collect();
    EnvelopeRecovery {
        truth: truth.len(),
        predicted: predicted.len(),
        exact: predicted.iter().filter(|e| truth_set.contains(e)).count(),
    }
}

pub fn method_report(result: &ResultArtifact, truth: &[Vec<usize>]) -> Result<MethodReport> {
    let truth_labels = pair_labels_from_envelopes(truth, &result.ids());
    let confusion = evaluate::confusion(&result.labels(), &truth_labels)?;
    let metrics = evaluate::metrics(&confusion)?;
    let percent = metrics.named().iter().map(|(n, m)| (n.to_string(), m.percent())).collect();
    let envelopes = result.envelopes.as_ref().map(|set| recovery(&set.envelopes, truth));
    Ok(MethodReport { method: result.method.clone(), confusion, metrics, percent, envelopes })
}

pub fn evaluate_stage(
    session: &mut Session,
    results: &[&ResultArtifact],
    truth: &[Vec<usize>],
    reduction: Option<ReductionReport>,
    out: &Path,
) -> Result<ReportArtifact> {
    let first = results.first().ok_or_else(|| CliError::Config("nothing to evaluate".into()))?;
    let universe = first.ids();
    for r in results {
        if r.ids() != universe {
            return Err(CliError::Data(format!("{} and {} cover different pair lists", first.method, r.method)));
        }
    }
    let methods = results.iter().map(|r| method_report(r, truth)).collect::<Result<Vec<_>>>()?;
    for m in &methods {
        log::info!(
            "{}: balanced accuracy {:?}%, recall {:?}%",
            m.method,
            m.metrics.balanced_accuracy.percent(),
            m.metrics.recall.percent()
        );
    }
    let truth_envelope_pairs = pair_labels_from_envelopes(truth, &universe).iter().filter(|l| l.is_envelope()).count();
    let report = ReportArtifact { meta: session.meta(), universe: universe.len(), truth_envelope_pairs, reduction, methods };
    session.write_json(out, &report)?;
    Ok(report)
}

pub fn compare_stage(
    session: &mut Session,
    results: &[ResultArtifact],
    truth: Option<&[Vec<usize>]>,
    out: &Path,
) -> Result<CompareArtifact> {
    let universe = results.first().map(ResultArtifact::ids).unwrap_or_default();
    let mut methods = Vec::new();
    if let Some(t) = truth {
        methods.push(("expert".to_string(), pair_labels_from_envelopes(t, &universe)));
    }
    for r in results {
        if r.ids() != universe {
            return Err(CliError::Data(format!("{} covers a different pair list", r.method)));
        }
        let mut name = r.method.clone();
        let mut k = 2;
        while methods.iter().any(|(n, _)| *n == name) {
            name = format!("{}_{k}", r.method);
            k += 1;
        }
        methods.push((name, r.labels()));
    }
    let report = compare_label_sets(&methods)?;
    let artifact = CompareArtifact { meta: session.meta(), report };
    session.write_json(out, &artifact)?;
    Ok(artifact)
}

/// Runs the stages listed in the configuration, in pipeline order. Artifacts
/// of stages that are switched off are read back from the output directory.
pub fn run(session: &mut Session) -> Result<()> {
    let config = session.config.clone();
    let stages = config.stages()?;
    let has = |s: Stage| stages.contains(&s);

    let mut input = config.input.clone();
    let mut truth = None;
    if has(Stage::Generate) {
        let synth_path = require(&config.synth, "synthetic data configuration (--synth) for the generate stage")?;
        let synth_config: SynthConfig = io::read_json(synth_path).map_err(|e| CliError::Config(e.to_string()))?;
        let (manifest, gt) = generate(session, &synth_config, &session.path("data"))?;
        input = Some(manifest);
        truth = Some(gt.envelopes);
    }
    if stages.iter().all(|s| *s == Stage::Generate) {
        return Ok(());
    }
    let loaded = load(require(&input, "input dataset (--input)")?)?;
    let dataset = &loaded.dataset;
    let truth = match truth {
        Some(t) => Some(t),
        None => truth_envelopes(&config, Some(dataset))?,
    };

    let pairs_path = session.path(PAIRS_FILE);
    let pairs = if has(Stage::Preselect) {
        preselect_stage(session, dataset, Some(&pairs_path))?
    } else {
        io::read_json(&pairs_path)?
    };
    if !stages.iter().any(|s| *s > Stage::Preselect) {
        return Ok(());
    }

    let needs_features = has(Stage::Features)
        || has(Stage::Classify)
        || (has(Stage::Train) && config.train_input.is_none());
    let features_path = session.path(FEATURES_FILE);
    let (table, labels) = if !needs_features {
        (None, None)
    } else if has(Stage::Features) {
        let (labels_path, spearman_path, images_dir) =
            (session.path(LABELS_FILE), session.path(SPEARMAN_FILE), session.path("images"));
        let out = FeatureOutputs {
            features: Some(&features_path),
            labels: Some(&labels_path),
            spearman: Some(&spearman_path),
            images: (config.dump_images > 0).then_some((images_dir.as_path(), config.dump_images)),
        };
        let (t, l) = features_stage(session, dataset, &pairs, truth.as_deref(), out)?;
        (Some(t), l)
    } else {
        let t = FeatureTable::read_csv(&features_path)?;
        let l = truth.as_deref().map(|envs| pair_labels_from_envelopes(envs, &t.pairs));
        (Some(t), l)
    };

    let model_path = session.path(MODEL_FILE);
    let model = if let (Some(path), true) = (&config.model, has(Stage::Classify)) {
        if has(Stage::Train) {
            log::info!("using the model in {}; the train stage is skipped", path.display());
        }
        Some(io::read_json::<ModelArtifact>(path)?)
    } else if has(Stage::Train) {
        let (train_table, train_labels) = match &config.train_input {
            Some(path) => training_set(session, path)?,
            None => {
                log::warn!("no training dataset given; training and classifying the same data");
                let l = labels.clone().ok_or_else(|| {
                    CliError::Config("training needs labels: pass --train-input, --truth or an annotated input".into())
                })?;
                (table.clone().expect("features computed"), l)
            }
        };
        Some(train_stage(session, &train_table, &train_labels, &model_path)?)
    } else if has(Stage::Classify) {
        Some(io::read_json::<ModelArtifact>(&model_path)?)
    } else {
        None
    };

    let result_path = session.path(RESULT_FILE);
    let result = match (&model, &table) {
        (Some(m), Some(t)) if has(Stage::Classify) => {
            Some(classify_stage(session, m, &pairs, t, has(Stage::Assemble), &result_path)?)
        }
        _ if has(Stage::Evaluate) && result_path.exists() => Some(io::read_json(&result_path)?),
        _ => None,
    };
    let baseline_path = session.path(BASELINE_FILE);
    let baseline = if has(Stage::Baseline) {
        Some(baseline_stage(session, dataset, &pairs, &baseline_path)?)
    } else {
        None
    };

    if has(Stage::Evaluate) {
        let truth = truth.as_deref().ok_or_else(|| {
            CliError::Config("evaluation needs ground truth: pass --truth or an annotated input".into())
        })?;
        let results: Vec<&ResultArtifact> = result.iter().chain(baseline.iter()).collect();
        if results.is_empty() {
            return Err(CliError::Config("evaluation needs the classify or baseline stage".into()));
        }
        let report_path = session.path(REPORT_FILE);
        evaluate_stage(session, &results, truth, Some(pairs.reduction), &report_path)?;
    }
    Ok(())
}

/// Preselects and describes an annotated training dataset, writing under `train/`.
fn training_set(session: &mut Session, path: &Path) -> Result<(FeatureTable, Vec<PairLabel>)> {
    let train = load(path)?;
    let envs = train
        .dataset
        .annotations()
        .map(<[Vec<usize>]>::to_vec)
        .ok_or_else(|| CliError::Data(format!("{}: training dataset has no annotations", path.display())))?;
    let (pairs_path, features_path, labels_path) =
        (session.path("train/pairs.json"), session.path("train/features.csv"), session.path("train/labels.csv"));
    let train_pairs = preselect_stage(session, &train.dataset, Some(&pairs_path))?;
    let out = FeatureOutputs { features: Some(&features_path), labels: Some(&labels_path), ..Default::default() };
    let (t, l) = features_stage(session, &train.dataset, &train_pairs, Some(&envs), out)?;
    Ok((t, l.expect("labels from annotations")))
}
