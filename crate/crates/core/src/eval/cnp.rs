//! Per-category accuracy of CNP classification.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{CnpCategory, CnpLabel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAccuracy {
    pub correct: usize,
    pub predicted: usize,
    /// Percentage; absent when nothing was predicted in the class.
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnpAccuracyReport {
    pub classes: BTreeMap<CnpCategory, ClassAccuracy>,
    /// Predicted CNPs with no gold label; they are not scored.
    pub unlabeled: usize,
}

fn normalize(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// One query: its predicted category assignments and its gold labels.
/// Predictions are matched to labels by case-folded, whitespace-normalized
/// CNP text.
#[derive(Debug, Clone, PartialEq)]
pub struct CnpItem<'a> {
    pub predicted: Vec<(&'a str, CnpCategory)>,
    pub gold: &'a [CnpLabel],
}

pub fn cnp_accuracy(items: &[CnpItem<'_>]) -> CnpAccuracyReport {
    let mut counts: BTreeMap<CnpCategory, (usize, usize)> = CnpCategory::ALL.iter().map(|&c| (c, (0, 0))).collect();
    let mut unlabeled = 0;
    for item in items {
        let labels: BTreeMap<String, CnpCategory> =
            item.gold.iter().map(|l| (normalize(&l.cnp_text), l.label)).collect();
        for &(text, category) in &item.predicted {
            match labels.get(&normalize(text)) {
                Some(&gold) => {
                    let entry = counts.get_mut(&category).expect("all categories present");
                    entry.1 += 1;
                    entry.0 += usize::from(gold == category);
                }
                None => unlabeled += 1,
            }
        }
    }
    CnpAccuracyReport {
        classes: counts
            .into_iter()
            .map(|(c, (correct, predicted))| {
                let accuracy = (predicted > 0).then(|| 100.0 * correct as f64 / predicted as f64);
                (
                    c,
                    ClassAccuracy {
                        correct,
                        predicted,
                        accuracy,
                    },
                )
            })
            .collect(),
        unlabeled,
    }
}
