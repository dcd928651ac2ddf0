//! The bundled fixture run end to end with lexical providers, compared to
//! frozen outputs. Set COUNTQA_BLESS=1 to rewrite the frozen files.

use std::path::PathBuf;

use countqa_core::dataset::{load_dataset, load_predictions, write_predictions_to, LoadMode, PredictionRecord};
use countqa_core::eval::{evaluate, DEFAULT_KS};
use countqa_core::pipeline::{answer_all, ProviderSet, RunConfig};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(jobs: usize) -> Vec<u8> {
    let dataset = load_dataset(fixture("fixture.jsonl"), LoadMode::Strict).unwrap();
    let outputs = answer_all(&dataset.records, &ProviderSet::lexical(), &RunConfig::default(), jobs).unwrap();
    let records: Vec<PredictionRecord> = outputs.into_iter().map(|o| o.record).collect();
    let mut bytes = Vec::new();
    write_predictions_to(&mut bytes, &records).unwrap();
    bytes
}

fn blessing() -> bool {
    std::env::var_os("COUNTQA_BLESS").is_some()
}

#[test]
fn fixture_has_twelve_queries() {
    let d = load_dataset(fixture("fixture.jsonl"), LoadMode::Strict).unwrap();
    assert_eq!(d.records.len(), 12);
    assert!(d.warnings.is_empty());
    assert!(d.records.iter().any(|r| r.gold_count.is_none()));
}

#[test]
fn predictions_match_golden_file() {
    let first = run(1);
    let second = run(4);
    assert_eq!(first, second, "reruns differ");
    let golden = fixture("golden/predictions.jsonl");
    if blessing() {
        std::fs::write(&golden, &first).unwrap();
    }
    assert_eq!(
        String::from_utf8(first).unwrap(),
        std::fs::read_to_string(golden).unwrap()
    );
}

#[test]
fn report_matches_frozen_report() {
    let dataset = load_dataset(fixture("fixture.jsonl"), LoadMode::Strict).unwrap();
    let predictions = load_predictions(fixture("golden/predictions.jsonl")).unwrap();
    let report = evaluate(&predictions, &dataset.records, &DEFAULT_KS).unwrap();
    let json = serde_json::to_string_pretty(&report).unwrap() + "\n";
    let text = report.to_text();
    if blessing() {
        std::fs::write(fixture("golden/report.json"), &json).unwrap();
        std::fs::write(fixture("golden/report.txt"), &text).unwrap();
    }
    assert_eq!(json, std::fs::read_to_string(fixture("golden/report.json")).unwrap());
    assert_eq!(text, std::fs::read_to_string(fixture("golden/report.txt")).unwrap());
}
