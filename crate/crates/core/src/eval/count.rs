//! Count answer metrics: relaxed precision, coverage, their harmonic mean
//! and proximity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative half-width of the relaxed-match window.
pub const RELAXED_TOLERANCE: f64 = 0.1;

const BOUND_SLACK: f64 = 1e-12;

/// True iff `predicted` lies in `[0.9 * gold, 1.1 * gold]`, bounds included.
pub fn relaxed_match(predicted: f64, gold: f64) -> bool {
    let lower = (1.0 - RELAXED_TOLERANCE) * gold;
    let upper = (1.0 + RELAXED_TOLERANCE) * gold;
    let slack = BOUND_SLACK * gold.abs();
    predicted >= lower - slack && predicted <= upper + slack
}

/// `min(a, b) / max(a, b)` for positive counts.
pub fn proximity(a: f64, b: f64) -> f64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    if hi <= 0.0 {
        return 0.0;
    }
    lo / hi
}

/// Harmonic mean of two percentages; 0 when either is 0.
pub fn pc_tradeoff(relaxed_precision: f64, coverage: f64) -> f64 {
    if relaxed_precision <= 0.0 || coverage <= 0.0 {
        return 0.0;
    }
    2.0 * relaxed_precision * coverage / (relaxed_precision + coverage)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRow {
    pub query_id: String,
    pub c_pred: Option<f64>,
    pub gold_count: Option<f64>,
    /// Set only when both the prediction and the gold count exist.
    pub relaxed_match: Option<bool>,
    pub proximity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountEvalReport {
    pub queries: usize,
    pub answered: usize,
    /// Answered queries that have a gold count.
    pub answered_with_gold: usize,
    pub relaxed_precision: f64,
    pub coverage: f64,
    pub pc_tradeoff: f64,
    pub proximity: f64,
    pub rows: Vec<CountRow>,
}

/// One query as seen by [`count_metrics`].
#[derive(Debug, Clone, PartialEq)]
pub struct CountItem {
    pub query_id: String,
    pub c_pred: Option<f64>,
    pub gold_count: Option<f64>,
}

/// Aggregates count metrics. Queries without a gold count count towards
/// coverage only. Percentages are in [0, 100].
pub fn count_metrics(items: &[CountItem]) -> Result<CountEvalReport> {
    if items.is_empty() {
        return Err(Error::InvalidInput("count metrics need at least one query".into()));
    }
    let mut rows = Vec::with_capacity(items.len());
    let (mut answered, mut with_gold, mut matches) = (0usize, 0usize, 0usize);
    let mut proximity_sum = 0.0;

    for item in items {
        if let Some(g) = item.gold_count {
            if !(g.is_finite() && g > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "{}: gold count {g} is not positive",
                    item.query_id
                )));
            }
        }
        let mut row = CountRow {
            query_id: item.query_id.clone(),
            c_pred: item.c_pred,
            gold_count: item.gold_count,
            relaxed_match: None,
            proximity: None,
        };
        if let Some(p) = item.c_pred {
            answered += 1;
            if let Some(g) = item.gold_count {
                with_gold += 1;
                let hit = relaxed_match(p, g);
                let prox = proximity(p, g);
                matches += usize::from(hit);
                proximity_sum += prox;
                row.relaxed_match = Some(hit);
                row.proximity = Some(prox);
            }
        }
        rows.push(row);
    }

    let ratio = |num: f64, den: usize| if den == 0 { 0.0 } else { num / den as f64 };
    let relaxed_precision = 100.0 * ratio(matches as f64, with_gold);
    let coverage = 100.0 * ratio(answered as f64, items.len());
    Ok(CountEvalReport {
        queries: items.len(),
        answered,
        answered_with_gold: with_gold,
        relaxed_precision,
        coverage,
        pc_tradeoff: pc_tradeoff(relaxed_precision, coverage),
        proximity: ratio(proximity_sum, with_gold),
        rows,
    })
}

/// Segment labels for training data: positive when the extracted count is
/// within the relaxed window of `gold_count`; no count means negative.
pub fn label_segments(gold_count: f64, counts: &[Option<f64>]) -> Result<Vec<bool>> {
    if !(gold_count.is_finite() && gold_count > 0.0) {
        return Err(Error::InvalidInput(format!("gold count {gold_count} is not positive")));
    }
    Ok(counts
        .iter()
        .map(|c| c.is_some_and(|c| relaxed_match(c, gold_count)))
        .collect())
}
