mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::crate_dir;

fn subtypes(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subtypes"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn missing_config_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = subtypes(&["run", "--config", "nope.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("nope.toml"));
}

#[test]
fn config_naming_a_missing_cohort_exits_2_with_the_path() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), "[input]\ncohort = \"visits/missing.csv\"\n").unwrap();
    let out = subtypes(&["run", "--config", "c.toml", "--out", "run"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("missing.csv"), "{}", stderr(&out));
    assert!(!dir.path().join("run/embedding.csv").exists());
}

#[test]
fn unknown_config_key_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), "[cluster]\nrestart = 5\n").unwrap();
    let out = subtypes(&["generate", "--config", "c.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("restart"), "{}", stderr(&out));
}

#[test]
fn stage_without_its_inputs_exits_1_naming_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let out = subtypes(&["embed", "--out", "empty"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("embed") && err.contains("cohort_imputed.csv"), "{err}");
}

#[test]
fn invalid_cluster_space_is_rejected_by_the_parser() {
    let dir = tempfile::tempdir().unwrap();
    let out = subtypes(&["cluster", "--cluster-space", "pca"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn stages_run_one_at_a_time_and_record_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = crate_dir().join("configs/planted4.toml");
    let config = config.to_str().unwrap();
    for stage in ["generate", "ingest", "embed", "cluster", "characterize", "transitions", "comorbidity"] {
        let out = subtypes(&[stage, "--config", config, "--out", "run", "--seed", "9"], dir.path());
        assert!(out.status.success(), "{stage}: {}", stderr(&out));
    }
    let out = subtypes(&["report", "--config", config, "--out", "run", "--seed", "9"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("G0"), "{text}");

    let run = dir.path().join("run");
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["master_seed"], 9);
    assert_eq!(manifest["chosen_k"]["k"], 4);
    for stage in ["generate", "ingest", "embed", "cluster", "characterize", "transitions", "comorbidity", "report"] {
        assert!(manifest["stages"][stage]["outputs"].is_object(), "{stage} missing from manifest");
    }
}

#[test]
fn manual_k_overrides_the_gap_choice() {
    let dir = tempfile::tempdir().unwrap();
    let config = crate_dir().join("configs/planted4.toml");
    let config = config.to_str().unwrap();
    let out = subtypes(&["run", "--config", config, "--out", "run", "--k", "3", "--cluster-space", "raw"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["chosen_k"]["k"], 3);
    assert_eq!(manifest["chosen_k"]["provenance"], "manual");
}

#[test]
fn report_renders_the_shipped_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("fixture");
    fs::create_dir(&run).unwrap();
    for entry in fs::read_dir(crate_dir().join("fixtures/reference_matrix")).unwrap() {
        let entry = entry.unwrap();
        fs::copy(entry.path(), run.join(entry.file_name())).unwrap();
    }
    let out = subtypes(&["report", "--out", "fixture"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("170"));
    assert!(run.join("report.json").exists());
}
