use std::collections::BTreeSet;

use deisolab_core::assemble::{assemble_envelopes, classify_pairs, with_rejected, AssembleConfig};
use deisolab_core::bayes::{KernelNbModel, NbConfig};
use deisolab_core::evaluate::{confusion, metrics};
use deisolab_core::features::{extract_features, names_to_strings, project_all, FeatureConfig, DEFAULT_SELECTED};
use deisolab_core::fuzzy::{Fis, FisConfig};
use deisolab_core::preselect::{candidate_pairs, preselect, score_pairs, PairingConfig, PeakPair, PreselectModel, ThresholdOptions};
use deisolab_core::synth::{generate, GroundTruth, SynthConfig};
use deisolab_core::{Dataset, PairLabel};

struct Stage {
    dataset: Dataset,
    truth: GroundTruth,
    candidates: Vec<PeakPair>,
    kept: Vec<PeakPair>,
}

fn stage(seed: u64) -> Stage {
    let cfg = SynthConfig { seed, width: 40, height: 36, n_analytes: 25, n_decoys: 300, ..Default::default() };
    let (dataset, truth) = generate(&cfg).unwrap();
    let fis = Fis::new(FisConfig::default()).unwrap();
    let mut candidates = candidate_pairs(&dataset, &PairingConfig::default()).unwrap();
    score_pairs(&mut candidates, &fis);
    let poss: Vec<f64> = candidates.iter().map(|p| p.possibility.unwrap()).collect();
    let model = PreselectModel::from_possibilities(FisConfig::default(), &poss, &ThresholdOptions::default()).unwrap();
    let (kept, report) = preselect(&candidates, &model).unwrap();
    assert_eq!(report.input_pairs, candidates.len());
    assert_eq!(report.retained_pairs, kept.len());
    Stage { dataset, truth, candidates, kept }
}

fn train(s: &Stage) -> KernelNbModel {
    let vectors = extract_features(&s.kept, &s.dataset, &FeatureConfig::default()).unwrap();
    let labels = s.truth.pair_labels(&s.kept.iter().map(PeakPair::ids).collect::<Vec<_>>());
    KernelNbModel::fit(&project_all(&vectors, &DEFAULT_SELECTED), &labels, names_to_strings(&DEFAULT_SELECTED), &NbConfig::default())
        .unwrap()
}

#[test]
fn preselection_keeps_a_subset_with_every_adjacent_pair() {
    let s = stage(21);
    let all: BTreeSet<_> = s.candidates.iter().map(PeakPair::ids).collect();
    let kept: BTreeSet<_> = s.kept.iter().map(PeakPair::ids).collect();
    assert!(kept.is_subset(&all));
    assert!(kept.len() < all.len() / 5);
    for pair in s.truth.adjacent_pairs() {
        assert!(kept.contains(&pair), "adjacent pair {pair:?} dropped");
    }
}

#[test]
fn held_out_pipeline_recovers_envelopes() {
    let model = train(&stage(21));
    let test = stage(22);
    let vectors = extract_features(&test.kept, &test.dataset, &FeatureConfig::default()).unwrap();
    let classified = with_rejected(&test.candidates, &classify_pairs(&model, &test.kept, &vectors).unwrap());
    assert_eq!(classified.len(), test.candidates.len());

    let predicted: Vec<PairLabel> = classified.iter().map(|c| c.label).collect();
    let truth = test.truth.pair_labels(&classified.iter().map(|c| c.pair.ids()).collect::<Vec<_>>());
    let report = metrics(&confusion(&predicted, &truth).unwrap()).unwrap();
    assert!(report.balanced_accuracy.value.unwrap() >= 0.9);

    let set = assemble_envelopes(&classified, &AssembleConfig::default()).unwrap();
    let steps: BTreeSet<_> = classified.iter().filter(|c| c.label.is_envelope()).map(|c| c.pair.ids()).collect();
    let mut seen = BTreeSet::new();
    for env in &set.envelopes {
        assert!(env.len() >= 2);
        for w in env.windows(2) {
            assert!(steps.contains(&(w[0], w[1])), "{w:?} is not a classified step");
        }
        assert!(env.iter().all(|id| seen.insert(*id)), "a peak joined two envelopes");
    }
    assert_eq!(set.histogram.values().sum::<usize>(), set.envelopes.len());
}

#[test]
fn same_seed_same_model() {
    let a = train(&stage(5));
    let b = train(&stage(5));
    assert_eq!(a, b);
    assert!((a.priors.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(a.classes.iter().all(|c| c.bandwidths.iter().all(|&h| h > 0.0)));
}
