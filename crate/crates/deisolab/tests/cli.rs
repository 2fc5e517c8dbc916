use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use deisolab::config::PipelineConfig;
use deisolab_core::fuzzy::FisConfig;
use deisolab_core::synth::SynthConfig;

const STAGE_COMMANDS: [&str; 8] = ["preselect", "features", "train", "classify", "baseline", "evaluate", "compare", "run"];

fn deisolab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deisolab")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

/// A small annotated dataset in `dir/data`.
fn dataset(dir: &Path) -> PathBuf {
    let out = deisolab(
        &["generate", "--out", "data", "--seed", "11", "--width", "32", "--height", "28", "--n-analytes", "20", "--n-decoys", "250"],
        dir,
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    dir.join("data")
}

fn files_under(dir: &Path) -> Vec<String> {
    let mut out = Vec::new();
    if let Ok(entries) = fs::read_dir(dir) {
        for e in entries.flatten() {
            let p = e.path();
            if p.is_dir() {
                out.extend(files_under(&p));
            } else {
                out.push(p.display().to_string());
            }
        }
    }
    out.sort();
    out
}

#[test]
fn missing_manifest_exits_with_data_error_and_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = deisolab(&["run", "--input", "nowhere/manifest.json", "--out-dir", "out"], tmp.path());
    assert_eq!(code(&out), 3);
    assert!(files_under(&tmp.path().join("out")).is_empty());
}

#[test]
fn failed_run_removes_partial_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    dataset(tmp.path());
    fs::remove_file(tmp.path().join("data/annotations.csv")).unwrap();
    let manifest = tmp.path().join("data/manifest.json");
    let text = fs::read_to_string(&manifest).unwrap().replace(",\n  \"annotations\": \"annotations.csv\"", "");
    fs::write(&manifest, text).unwrap();
    // pairs.json and features.csv are written before training finds no labels
    let out = deisolab(&["run", "--input", "data", "--out-dir", "out", "--stages", "preselect,features,train"], tmp.path());
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(files_under(&tmp.path().join("out")).is_empty());
}

#[test]
fn preselect_stage_alone_writes_only_pairs() {
    let tmp = tempfile::tempdir().unwrap();
    dataset(tmp.path());
    let out = deisolab(&["run", "--input", "data", "--out-dir", "out", "--stages", "preselect"], tmp.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(files_under(&tmp.path().join("out")), [tmp.path().join("out/pairs.json").display().to_string()]);
}

#[test]
fn configuration_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    dataset(tmp.path());
    fs::write(tmp.path().join("bad.json"), r#"{"windw_da": 3}"#).unwrap();
    for args in [
        vec!["preselect", "--input", "data", "--config", "bad.json"],
        vec!["preselect", "--input", "data", "--threshold", "high"],
        vec!["preselect", "--input", "data", "--no-such-flag"],
        vec!["run", "--input", "data", "--stages", "preselect,polish"],
        vec!["generate", "--out", "g", "--pattern", "stripes"],
    ] {
        assert_eq!(code(&deisolab(&args, tmp.path())), 2, "{args:?}");
    }
}

#[test]
fn flags_override_the_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    dataset(tmp.path());
    fs::write(tmp.path().join("cfg.json"), r#"{"threshold": "0.5", "window_da": 4}"#).unwrap();
    let out = deisolab(&["preselect", "--input", "data", "--config", "cfg.json", "--threshold", "0.9", "--out", "p.json"], tmp.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let pairs: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("p.json")).unwrap()).unwrap();
    assert_eq!(pairs["threshold"], 0.9);
    assert_eq!(pairs["threshold_source"]["kind"], "fixed");
    let far = pairs["pairs"].as_array().unwrap().iter().filter(|p| p["m"].as_f64().unwrap() > 4.0).count();
    assert_eq!(far, 0, "the 4 Da window from the file still applies");
}

fn kebab(key: &str) -> String {
    format!("--{}", key.replace('_', "-"))
}

#[test]
fn every_stage_help_documents_every_config_key() {
    let tmp = tempfile::tempdir().unwrap();
    let keys = PipelineConfig::keys();
    assert!(keys.len() > 30);
    for cmd in STAGE_COMMANDS {
        let out = deisolab(&[cmd, "--help"], tmp.path());
        let help = String::from_utf8_lossy(&out.stdout);
        for key in &keys {
            assert!(help.contains(&kebab(key)), "`{cmd} --help` does not mention {}", kebab(key));
        }
    }
}

#[test]
fn generate_help_documents_every_synth_key() {
    let tmp = tempfile::tempdir().unwrap();
    let help = String::from_utf8_lossy(&deisolab(&["generate", "--help"], tmp.path()).stdout).into_owned();
    let serde_json::Value::Object(keys) = serde_json::to_value(SynthConfig::default()).unwrap() else { panic!() };
    for key in keys.keys() {
        assert!(help.contains(&kebab(key)), "`generate --help` does not mention {}", kebab(key));
    }
}

#[test]
fn shipped_fis_file_is_the_builtin_default() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("config/fis_default.json");
    let shipped: FisConfig = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(shipped, FisConfig::default());
}

fn json_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    files_under(dir)
        .into_iter()
        .filter(|p| p.ends_with(".json") || p.ends_with(".csv"))
        .map(|p| (p.strip_prefix(&dir.display().to_string()).unwrap().to_string(), fs::read(&p).unwrap()))
        .collect()
}

#[test]
fn run_output_does_not_depend_on_thread_count() {
    let tmp = tempfile::tempdir().unwrap();
    dataset(tmp.path());
    let mut outputs = Vec::new();
    for (dir, threads) in [("a", "1"), ("b", "4"), ("c", "4")] {
        let out = deisolab(
            &["run", "--input", "data", "--out-dir", dir, "--threads", threads, "--cv-repeats", "4", "--dump-images", "1"],
            tmp.path(),
        );
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(json_files(&tmp.path().join(dir)));
    }
    assert!(outputs[0].iter().any(|(p, _)| p.ends_with("report.json")));
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
}

#[test]
fn stage_commands_chain_and_agree_with_run() {
    let tmp = tempfile::tempdir().unwrap();
    dataset(tmp.path());
    let steps: [&[&str]; 6] = [
        &["preselect", "--in", "data", "--out", "s/pairs.json"],
        &["features", "--in", "data", "--pairs", "s/pairs.json", "--out", "s/features.csv"],
        &["train", "--features", "s/features.csv", "--labels", "s/labels.csv", "--out", "s/model.json", "--cv-repeats", "4"],
        &["classify", "--in", "data", "--pairs", "s/pairs.json", "--model", "s/model.json", "--out", "s/result.json"],
        &["evaluate", "--pred", "s/result.json", "--truth", "data/ground_truth.json", "--out", "s/report.json"],
        &["compare", "--pred", "s/result.json", "--truth", "data/ground_truth.json", "--out", "s/venn.json"],
    ];
    for args in steps {
        let out = deisolab(args, tmp.path());
        assert_eq!(code(&out), 0, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = deisolab(
        &["run", "--in", "data", "--out-dir", "r", "--stages", "preselect,features,train,classify,assemble", "--cv-repeats", "4"],
        tmp.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let strip = |p: &str| {
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join(p)).unwrap()).unwrap();
        (v["pairs"].clone(), v["envelopes"].clone())
    };
    assert_eq!(strip("s/result.json"), strip("r/result.json"));
    let venn: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("s/venn.json")).unwrap()).unwrap();
    assert_eq!(venn["report"]["methods"], serde_json::json!(["expert", "deisolab"]));
}
