//! JSON Lines datasets and prediction dumps.
//!
//! A dataset line looks like
//! `{"id", "query", "gold_count", "gold_source", "gold_instances": [{"canonical", "aliases"}],
//! "segments": [{"id", "rank", "text"}], "cnp_gold"}`. Text is NFC-normalized on load.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::explain::ScoredInstance;
use crate::model::{
    AnswerSpan, CnpLabel, CountCandidate, CountStrategy, Diagnostic, GoldAnnotation, GoldInstance, GoldSource,
    InstanceStrategy, TextSegment,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub query: String,
    pub gold_count: Option<f64>,
    pub gold_source: GoldSource,
    #[serde(default)]
    pub gold_instances: Vec<GoldInstance>,
    #[serde(default)]
    pub segments: Vec<TextSegment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cnp_gold: Option<Vec<CnpLabel>>,
}

impl DatasetRecord {
    pub fn gold(&self) -> GoldAnnotation {
        GoldAnnotation {
            query_id: self.id.clone(),
            gold_count: self.gold_count,
            source: self.gold_source,
            gold_instances: self.gold_instances.clone(),
            category_labels: self.cnp_gold.clone(),
        }
    }

    fn normalize(&mut self) {
        let nfc = |s: &mut String| *s = s.nfc().collect();
        nfc(&mut self.id);
        nfc(&mut self.query);
        for g in &mut self.gold_instances {
            nfc(&mut g.canonical);
            g.aliases.iter_mut().for_each(nfc);
        }
        for s in &mut self.segments {
            nfc(&mut s.id);
            nfc(&mut s.text);
        }
        for l in self.cnp_gold.iter_mut().flatten() {
            nfc(&mut l.cnp_text);
        }
    }

    /// Checks one record in isolation; the error names the offending field.
    fn validate(&self) -> std::result::Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("id: empty".into());
        }
        if self.query.trim().is_empty() {
            return Err("query: empty".into());
        }
        if let Some(g) = self.gold_count {
            if !(g.is_finite() && g > 0.0) {
                return Err(format!("gold_count: {g} is not positive"));
            }
        }
        for (i, g) in self.gold_instances.iter().enumerate() {
            if g.canonical.trim().is_empty() {
                return Err(format!("gold_instances[{i}].canonical: empty"));
            }
        }
        validate_segments(&self.segments)
    }
}

/// Checks segment ids are unique, ranks start at 1 and strictly increase,
/// and no text is blank. The error names the offending field.
pub fn validate_segments(segments: &[TextSegment]) -> std::result::Result<(), String> {
    let mut ids = HashSet::new();
    let mut previous_rank = 0;
    for (i, s) in segments.iter().enumerate() {
        if s.rank <= previous_rank {
            return Err(format!(
                "segments[{i}].rank: ranks must be >= 1 and strictly increasing"
            ));
        }
        previous_rank = s.rank;
        if s.text.trim().is_empty() {
            return Err(format!("segments[{i}].text: empty"));
        }
        if !ids.insert(s.id.as_str()) {
            return Err(format!("segments[{i}].id: duplicate segment id {:?}", s.id));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoadMode {
    /// The first bad line aborts the load.
    #[default]
    Strict,
    /// Bad lines are skipped and reported as warnings.
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoadedDataset {
    pub records: Vec<DatasetRecord>,
    pub warnings: Vec<String>,
}

/// Reads a dataset from any buffered reader; `source` names it in messages.
pub fn parse_dataset(reader: impl BufRead, source: &str, mode: LoadMode) -> Result<LoadedDataset> {
    let mut out = LoadedDataset::default();
    let mut seen = HashSet::new();
    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line.map_err(|e| Error::io(Path::new(source), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = parse_line(&line).and_then(|r| {
            if seen.contains(&r.id) {
                Err(format!("id: duplicate query id {:?}", r.id))
            } else {
                Ok(r)
            }
        });
        match parsed {
            Ok(r) => {
                seen.insert(r.id.clone());
                out.records.push(r);
            }
            Err(message) => match mode {
                LoadMode::Strict => {
                    return Err(Error::Schema {
                        path: source.to_string(),
                        line: line_no,
                        message,
                    })
                }
                LoadMode::Lenient => out.warnings.push(format!("{source}:{line_no}: skipped: {message}")),
            },
        }
    }
    if out.records.is_empty() && out.warnings.is_empty() {
        out.warnings.push(format!("{source}: no records"));
    }
    Ok(out)
}

fn parse_line(line: &str) -> std::result::Result<DatasetRecord, String> {
    let de = &mut serde_json::Deserializer::from_str(line);
    let mut record: DatasetRecord = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            e.into_inner().to_string()
        } else {
            format!("{path}: {}", e.into_inner())
        }
    })?;
    record.normalize();
    record.validate()?;
    Ok(record)
}

pub fn load_dataset(path: impl AsRef<Path>, mode: LoadMode) -> Result<LoadedDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(BufReader::new(file), &path.display().to_string(), mode)
}

/// A CNP as written to predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnpEntry {
    pub cnp_text: String,
    pub value: f64,
    pub confidence: f64,
    pub segment_id: String,
}

impl From<&CountCandidate> for CnpEntry {
    fn from(c: &CountCandidate) -> Self {
        Self {
            cnp_text: c.cnp_text.clone(),
            value: c.value,
            confidence: c.confidence(),
            segment_id: c.answer_span.segment_id.clone(),
        }
    }
}

/// Every span returned by the span predictor, per stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Provenance {
    pub inference: Vec<AnswerSpan>,
    pub explanation: Vec<AnswerSpan>,
}

/// One query's full result. Field order is the serialized key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub query_id: String,
    pub query: String,
    pub c_pred: Option<f64>,
    pub strategy_count: CountStrategy,
    pub strategy_instance: InstanceStrategy,
    pub theta_inference: f64,
    pub theta_explanation: f64,
    pub alpha: f64,
    pub answer_type: Option<String>,
    pub cnp_rep: Option<CnpEntry>,
    pub synonyms: Vec<CnpEntry>,
    pub subgroups: Vec<CnpEntry>,
    pub incomparables: Vec<CnpEntry>,
    pub instances: Vec<ScoredInstance>,
    pub provenance: Provenance,
    pub diagnostics: Vec<Diagnostic>,
}

/// Serializes records as JSON Lines, one record per line.
pub fn write_predictions_to(mut writer: impl Write, records: &[PredictionRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut writer, r)?;
        writer
            .write_all(b"\n")
            .map_err(|e| Error::io(Path::new("<predictions>"), e))?;
    }
    Ok(())
}

pub fn write_predictions(path: impl AsRef<Path>, records: &[PredictionRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    write_predictions_to(&mut writer, records)?;
    writer.flush().map_err(|e| Error::io(path, e))
}

pub fn load_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictionRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let de = &mut serde_json::Deserializer::from_str(&line);
        let record = serde_path_to_error::deserialize(de).map_err(|e| Error::Schema {
            path: path.display().to_string(),
            line: n + 1,
            message: {
                let path = e.path().to_string();
                format!("{path}: {}", e.into_inner())
            },
        })?;
        out.push(record);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"{"id":"q1","query":"how many main islands in hawaii","gold_count":8,"gold_source":"KG","gold_instances":[{"canonical":"Maui","aliases":["Valley Isle"]}],"segments":[{"id":"s1","rank":1,"text":"Hawaii has eight main islands."}]}"#;

    #[test]
    fn parses_and_normalizes() {
        let text = GOOD.replace("Maui", "Mau\u{0069}\u{0301}");
        let d = parse_dataset(text.as_bytes(), "mem", LoadMode::Strict).unwrap();
        assert_eq!(d.records.len(), 1);
        assert_eq!(d.records[0].gold_instances[0].canonical, "Mau\u{00ed}");
        assert_eq!(d.records[0].gold().gold_count, Some(8.0));
        assert!(d.warnings.is_empty());
    }

    #[test]
    fn missing_field_names_field_and_line() {
        let bad = GOOD.replace(r#""query":"how many main islands in hawaii","#, "");
        let input = format!("{GOOD}\n{}\n", bad.replace("q1", "q2"));
        let err = parse_dataset(input.as_bytes(), "mem", LoadMode::Strict).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("mem:2"), "{msg}");
        assert!(msg.contains("query"), "{msg}");

        let d = parse_dataset(input.as_bytes(), "mem", LoadMode::Lenient).unwrap();
        assert_eq!(d.records.len(), 1);
        assert_eq!(d.warnings.len(), 1);
    }

    #[test]
    fn nested_errors_carry_a_path() {
        let bad = GOOD.replace(r#""rank":1"#, r#""rank":"one""#);
        let msg = parse_dataset(bad.as_bytes(), "mem", LoadMode::Strict)
            .unwrap_err()
            .to_string();
        assert!(msg.contains("segments[0].rank"), "{msg}");
    }

    #[test]
    fn semantic_checks() {
        let dup = format!("{GOOD}\n{GOOD}");
        assert!(parse_dataset(dup.as_bytes(), "mem", LoadMode::Strict).is_err());
        let zero = GOOD.replace(r#""gold_count":8"#, r#""gold_count":0"#);
        assert!(parse_dataset(zero.as_bytes(), "mem", LoadMode::Strict).is_err());
        let rank = GOOD.replace(r#""rank":1"#, r#""rank":0"#);
        assert!(parse_dataset(rank.as_bytes(), "mem", LoadMode::Strict).is_err());
        let absent = GOOD.replace(r#""gold_count":8"#, r#""gold_count":null"#);
        assert!(parse_dataset(absent.as_bytes(), "mem", LoadMode::Strict).is_ok());
    }

    #[test]
    fn empty_input_warns() {
        let d = parse_dataset("".as_bytes(), "mem", LoadMode::Strict).unwrap();
        assert!(d.records.is_empty());
        assert_eq!(d.warnings.len(), 1);
    }

    #[test]
    fn predictions_round_trip_with_null() {
        let record = PredictionRecord {
            query_id: "q1".into(),
            query: "how many".into(),
            c_pred: None,
            strategy_count: CountStrategy::WeightedMedian,
            strategy_instance: InstanceStrategy::TypeCompatibility,
            theta_inference: 0.5,
            theta_explanation: 0.2,
            alpha: 0.3,
            answer_type: None,
            cnp_rep: None,
            synonyms: vec![],
            subgroups: vec![],
            incomparables: vec![],
            instances: vec![],
            provenance: Provenance::default(),
            diagnostics: vec![],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.jsonl");
        write_predictions(&path, std::slice::from_ref(&record)).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(
            text.starts_with(r#"{"query_id":"q1","query":"how many","c_pred":null,"#),
            "{text}"
        );
        assert_eq!(load_predictions(&path).unwrap(), vec![record]);
    }
}
