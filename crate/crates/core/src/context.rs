//! Answer contextualization: choose the representative CNP and sort the
//! remaining CNPs into synonyms, subgroups and incomparables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::check_unit_interval;
use crate::model::{counts_equal, CnpCategory, CountCandidate, Diagnostic, COUNT_REL_TOLERANCE};
use crate::providers::{validate_unit_score, ProviderKind, Similarity};

pub const DEFAULT_ALPHA: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnpClassification {
    pub cnp_rep: CountCandidate,
    pub synonyms: Vec<CountCandidate>,
    pub subgroups: Vec<CountCandidate>,
    pub incomparables: Vec<CountCandidate>,
    pub c_pred: f64,
    pub alpha: f64,
    /// Candidates forced into incomparables because similarity failed.
    pub diagnostics: Vec<Diagnostic>,
}

impl CnpClassification {
    pub fn category(&self, category: CnpCategory) -> &[CountCandidate] {
        match category {
            CnpCategory::Synonym => &self.synonyms,
            CnpCategory::Subgroup => &self.subgroups,
            CnpCategory::Incomparable => &self.incomparables,
        }
    }
}

/// The synonym interval `[c_pred - alpha * c_pred, c_pred + alpha * c_pred]`.
pub fn synonym_interval(c_pred: f64, alpha: f64) -> (f64, f64) {
    (c_pred - alpha * c_pred, c_pred + alpha * c_pred)
}

/// Category of a CNP from its similarity to the representative and its
/// count. Interval bounds are inclusive, with count tolerance.
pub fn category_for(value: f64, similarity: f64, c_pred: f64, alpha: f64) -> CnpCategory {
    if similarity <= 0.0 {
        return CnpCategory::Incomparable;
    }
    let (lower, upper) = synonym_interval(c_pred, alpha);
    let slack = COUNT_REL_TOLERANCE * c_pred.abs().max(1.0);
    if value >= lower - slack && value <= upper + slack {
        CnpCategory::Synonym
    } else if value < lower {
        CnpCategory::Subgroup
    } else {
        CnpCategory::Incomparable
    }
}

/// Index of the most confident candidate whose count equals `c_pred`;
/// earlier candidates win confidence ties.
pub fn select_representative(candidates: &[CountCandidate], c_pred: f64) -> Result<usize> {
    let mut best: Option<usize> = None;
    for (i, c) in candidates.iter().enumerate() {
        if counts_equal(c.value, c_pred) && best.is_none_or(|b| c.confidence() > candidates[b].confidence()) {
            best = Some(i);
        }
    }
    best.ok_or_else(|| Error::Contract(format!("no candidate carries the predicted count {c_pred}")))
}

/// Classifies every candidate except the representative at `rep`.
///
/// A similarity failure sends the candidate to incomparables and records a
/// diagnostic.
pub fn classify(
    candidates: &[CountCandidate],
    rep: usize,
    c_pred: f64,
    alpha: f64,
    similarity: &dyn Similarity,
) -> Result<CnpClassification> {
    check_unit_interval("alpha", alpha)?;
    let cnp_rep = candidates
        .get(rep)
        .cloned()
        .ok_or_else(|| Error::Contract(format!("representative index {rep} out of range")))?;

    let mut out = CnpClassification {
        cnp_rep,
        synonyms: Vec::new(),
        subgroups: Vec::new(),
        incomparables: Vec::new(),
        c_pred,
        alpha,
        diagnostics: Vec::new(),
    };
    for (i, c) in candidates.iter().enumerate() {
        if i == rep {
            continue;
        }
        let sim = similarity
            .similarity(&c.cnp_text, &out.cnp_rep.cnp_text)
            .and_then(|s| validate_unit_score(ProviderKind::Similarity, s, -1.0));
        let category = match sim {
            Ok(s) => category_for(c.value, s, c_pred, alpha),
            Err(e) => {
                out.diagnostics
                    .push(Diagnostic::for_segment(&c.answer_span.segment_id, e.to_string()));
                CnpCategory::Incomparable
            }
        };
        match category {
            CnpCategory::Synonym => out.synonyms.push(c.clone()),
            CnpCategory::Subgroup => out.subgroups.push(c.clone()),
            CnpCategory::Incomparable => out.incomparables.push(c.clone()),
        }
    }
    Ok(out)
}

/// Representative selection followed by classification.
pub fn contextualize(
    candidates: &[CountCandidate],
    c_pred: f64,
    alpha: f64,
    similarity: &dyn Similarity,
) -> Result<CnpClassification> {
    let rep = select_representative(candidates, c_pred)?;
    classify(candidates, rep, c_pred, alpha, similarity)
}
