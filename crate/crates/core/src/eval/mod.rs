//! Evaluation of predictions against gold annotations.

pub mod cnp;
pub mod count;
pub mod instance;

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use cnp::{cnp_accuracy, ClassAccuracy, CnpAccuracyReport, CnpItem};
pub use count::{
    count_metrics, label_segments, pc_tradeoff, proximity, relaxed_match, CountEvalReport, CountItem, CountRow,
};
pub use instance::{
    instance_metrics, instance_relevant, normalized_distance, parse_ks, InstanceEvalReport, InstanceItem, InstanceRow,
    DEFAULT_KS,
};

use crate::dataset::{DatasetRecord, PredictionRecord};
use crate::error::{Error, Result};
use crate::model::CnpCategory;

pub const MAP_NOTE: &str = "MAP@k is the mean over queries of precision among the top-k retrieved instances";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub note: String,
    pub count: CountEvalReport,
    pub instances: InstanceEvalReport,
    pub cnp: Option<CnpAccuracyReport>,
    /// Query ids that did not line up between predictions and dataset.
    pub mismatches: Vec<String>,
}

/// Aligns predictions with the dataset by query id and computes every
/// metric. Dataset queries without a prediction count as unanswered.
pub fn evaluate(predictions: &[PredictionRecord], dataset: &[DatasetRecord], ks: &[usize]) -> Result<EvalReport> {
    if dataset.is_empty() {
        return Err(Error::InvalidInput("dataset has no queries".into()));
    }
    let mut by_id: HashMap<&str, &PredictionRecord> = HashMap::new();
    let mut mismatches = Vec::new();
    for p in predictions {
        if by_id.insert(p.query_id.as_str(), p).is_some() {
            mismatches.push(format!("{}: duplicate prediction", p.query_id));
        }
    }
    let known: std::collections::HashSet<&str> = dataset.iter().map(|d| d.id.as_str()).collect();
    for p in predictions {
        if !known.contains(p.query_id.as_str()) {
            mismatches.push(format!("{}: not in dataset", p.query_id));
        }
    }

    let mut count_items = Vec::with_capacity(dataset.len());
    let mut instance_items = Vec::with_capacity(dataset.len());
    let mut cnp_items = Vec::new();
    for record in dataset {
        let prediction = by_id.get(record.id.as_str()).copied();
        if prediction.is_none() {
            mismatches.push(format!("{}: no prediction", record.id));
        }
        count_items.push(CountItem {
            query_id: record.id.clone(),
            c_pred: prediction.and_then(|p| p.c_pred),
            gold_count: record.gold_count,
        });
        instance_items.push(InstanceItem {
            query_id: record.id.clone(),
            ranked: prediction
                .map(|p| p.instances.iter().map(|i| i.instance.clone()).collect())
                .unwrap_or_default(),
            gold: &record.gold_instances,
        });
        if let Some(labels) = &record.cnp_gold {
            let predicted = prediction
                .map(|p| {
                    [
                        (&p.synonyms, CnpCategory::Synonym),
                        (&p.subgroups, CnpCategory::Subgroup),
                        (&p.incomparables, CnpCategory::Incomparable),
                    ]
                    .into_iter()
                    .flat_map(|(list, c)| list.iter().map(move |e| (e.cnp_text.as_str(), c)))
                    .collect()
                })
                .unwrap_or_default();
            cnp_items.push(CnpItem {
                predicted,
                gold: labels,
            });
        }
    }

    Ok(EvalReport {
        note: MAP_NOTE.to_string(),
        count: count_metrics(&count_items)?,
        instances: instance_metrics(&instance_items, ks)?,
        cnp: (!cnp_items.is_empty()).then(|| cnp_accuracy(&cnp_items)),
        mismatches,
    })
}

impl EvalReport {
    /// Plain-text tables: count metrics, instance metrics per k, CNP
    /// accuracy per class.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let c = &self.count;
        let _ = writeln!(
            out,
            "Counts ({} queries, {} answered, {} answered with gold)",
            c.queries, c.answered, c.answered_with_gold
        );
        let _ = writeln!(out, "{:>8} {:>8} {:>8} {:>9}", "RP", "Cov", "P/C", "Proximity");
        let _ = writeln!(
            out,
            "{:>8.2} {:>8.2} {:>8.2} {:>9.4}",
            c.relaxed_precision, c.coverage, c.pc_tradeoff, c.proximity
        );

        let i = &self.instances;
        let _ = writeln!(out);
        let _ = writeln!(out, "Instances ({} queries with gold instances)", i.queries);
        let _ = writeln!(out, "{:>5} {:>8} {:>8} {:>8}", "k", "MAP@k", "AR@k", "Hit@k");
        for k in &i.ks {
            let _ = writeln!(
                out,
                "{:>5} {:>8.4} {:>8.4} {:>8.2}",
                k, i.map_at_k[k], i.ar_at_k[k], i.hit_at_k[k]
            );
        }
        let _ = writeln!(out, "MRR {:.4}", i.mrr);
        let _ = writeln!(out, "note: {}", self.note);

        if let Some(cnp) = &self.cnp {
            let _ = writeln!(out);
            let _ = writeln!(out, "CNP accuracy ({} unlabeled predictions)", cnp.unlabeled);
            let _ = writeln!(
                out,
                "{:<14} {:>8} {:>10} {:>9}",
                "class", "correct", "predicted", "accuracy"
            );
            for (class, acc) in &cnp.classes {
                let name = match class {
                    CnpCategory::Synonym => "synonyms",
                    CnpCategory::Subgroup => "subgroups",
                    CnpCategory::Incomparable => "incomparables",
                };
                let accuracy = acc.accuracy.map_or_else(|| "-".to_string(), |a| format!("{a:.2}"));
                let _ = writeln!(
                    out,
                    "{:<14} {:>8} {:>10} {:>9}",
                    name, acc.correct, acc.predicted, accuracy
                );
            }
        }
        if !self.mismatches.is_empty() {
            let _ = writeln!(out);
            for m in &self.mismatches {
                let _ = writeln!(out, "mismatch: {m}");
            }
        }
        out
    }
}
