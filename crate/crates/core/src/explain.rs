//! Answer explanation: harvest entity mentions from confident spans of a
//! rewritten query, index them by instance, and rank the instances.

use std::collections::{BTreeMap, HashMap};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AnswerSpan, Diagnostic, InstanceStrategy, TextSegment};
use crate::providers::text::covering_sentence;
use crate::providers::{validate_span, validate_unit_score, Entailment, EntityRecognizer, ProviderKind, SpanPredictor};

pub const DEFAULT_EXPLANATION_THETA: f64 = 0.2;

static HOW_MANY: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\bhow\s+many\b").expect("valid regex"));

/// Replaces the first "how many" (any case) with "which", or prepends
/// "which " when the query has none.
pub fn rewrite_query(query_text: &str) -> String {
    if HOW_MANY.is_match(query_text) {
        HOW_MANY.replace(query_text, "which").into_owned()
    } else {
        format!("which {}", query_text.trim_start())
    }
}

fn strip_possessive(text: &str) -> &str {
    text.strip_suffix("'s")
        .or_else(|| text.strip_suffix("\u{2019}s"))
        .or_else(|| text.strip_suffix('\''))
        .unwrap_or(text)
}

/// Display form of a mention: whitespace collapsed, possessive removed.
pub fn instance_surface(mention: &str) -> String {
    let collapsed = mention.split_whitespace().collect::<Vec<_>>().join(" ");
    strip_possessive(&collapsed).trim().to_string()
}

/// Identity of an instance: the case-folded surface form.
pub fn instance_key(mention: &str) -> String {
    instance_surface(mention).to_lowercase()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceEntry {
    pub surface: String,
    /// One posting per segment: the confident span the mention came from.
    pub postings: Vec<AnswerSpan>,
}

/// A confident span and the instance keys found in it, in mention order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarvestedSpan {
    pub span: AnswerSpan,
    pub rank: u32,
    pub instances: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct InstanceIndex {
    pub entries: BTreeMap<String, InstanceEntry>,
    pub num_segments: usize,
    pub harvested: Vec<HarvestedSpan>,
    /// Every span the predictor returned, before thresholding.
    pub per_segment_spans: Vec<AnswerSpan>,
    pub diagnostics: Vec<Diagnostic>,
    /// The span predictor or the recognizer failed on every call it got.
    pub provider_unavailable: bool,
}

/// Builds the inverted instance index over `segments`.
pub fn build_instance_index(
    query_rewritten: &str,
    segments: &[TextSegment],
    predictor: &dyn SpanPredictor,
    ner: &dyn EntityRecognizer,
    theta: f64,
) -> InstanceIndex {
    let mut index = InstanceIndex {
        num_segments: segments.len(),
        ..InstanceIndex::default()
    };
    // (calls, failures) per provider
    let mut span_calls = (0, 0);
    let mut ner_calls = (0, 0);

    for segment in segments {
        span_calls.0 += 1;
        let predicted = predictor
            .predict_span(query_rewritten, &segment.text)
            .and_then(|p| match p {
                Some(p) => validate_span(ProviderKind::SpanPredictor, &segment.text, &p).map(|_| Some(p)),
                None => Ok(None),
            });
        let predicted = match predicted {
            Ok(Some(p)) => p,
            Ok(None) => continue,
            Err(e) => {
                span_calls.1 += 1;
                index
                    .diagnostics
                    .push(Diagnostic::for_segment(&segment.id, e.to_string()));
                continue;
            }
        };
        let span = AnswerSpan {
            segment_id: segment.id.clone(),
            span: predicted.span,
            confidence: predicted.confidence,
        };
        index.per_segment_spans.push(span.clone());
        if span.span.trim().is_empty() || span.confidence <= theta {
            continue;
        }
        ner_calls.0 += 1;
        let mentions = match ner.recognize(&span.span) {
            Ok(m) => m,
            Err(e) => {
                ner_calls.1 += 1;
                index
                    .diagnostics
                    .push(Diagnostic::for_segment(&segment.id, e.to_string()));
                continue;
            }
        };

        let mut keys: Vec<String> = Vec::new();
        for mention in mentions {
            let key = instance_key(&mention);
            if key.is_empty() || keys.contains(&key) {
                continue;
            }
            index
                .entries
                .entry(key.clone())
                .or_insert_with(|| InstanceEntry {
                    surface: instance_surface(&mention),
                    postings: Vec::new(),
                })
                .postings
                .push(span.clone());
            keys.push(key);
        }
        if !keys.is_empty() {
            index.harvested.push(HarvestedSpan {
                span,
                rank: segment.rank,
                instances: keys,
            });
        }
    }

    let all_failed = |(calls, failures): (usize, usize)| calls > 0 && failures == calls;
    index.provider_unavailable = all_failed(span_calls) || all_failed(ner_calls);
    if index.provider_unavailable {
        index
            .diagnostics
            .push(Diagnostic::general("instance harvesting failed on every segment"));
    }
    index
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredInstance {
    pub instance: String,
    pub score: f64,
    pub postings: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedInstances {
    pub strategy: InstanceStrategy,
    pub items: Vec<ScoredInstance>,
    pub diagnostics: Vec<Diagnostic>,
}

impl RankedInstances {
    pub fn names(&self) -> Vec<&str> {
        self.items.iter().map(|i| i.instance.as_str()).collect()
    }
}

const IRREGULAR_PLURALS: &[(&str, &str)] = &[
    ("children", "child"),
    ("feet", "foot"),
    ("geese", "goose"),
    ("knives", "knife"),
    ("leaves", "leaf"),
    ("lives", "life"),
    ("men", "man"),
    ("mice", "mouse"),
    ("people", "person"),
    ("teeth", "tooth"),
    ("wives", "wife"),
    ("women", "woman"),
];

fn singularize(word: &str) -> String {
    let lower = word.to_lowercase();
    if let Some(&(_, single)) = IRREGULAR_PLURALS.iter().find(|(p, _)| *p == lower) {
        return single.to_string();
    }
    let n = word.chars().count();
    if n > 4 && lower.ends_with("ies") {
        format!("{}y", &word[..word.len() - 3])
    } else if (n > 5 && lower.ends_with("oes")) || ["sses", "ches", "shes", "xes"].iter().any(|s| lower.ends_with(s)) {
        word[..word.len() - 2].to_string()
    } else if n > 3 && lower.ends_with('s') && !["ss", "us", "is"].iter().any(|s| lower.ends_with(s)) {
        word[..word.len() - 1].to_string()
    } else {
        word.to_string()
    }
}

/// "(instance) is a (answer type)", with the answer type's head noun in the
/// singular.
pub fn type_hypothesis(instance: &str, answer_type: &str) -> String {
    let mut words: Vec<String> = answer_type.split_whitespace().map(str::to_string).collect();
    if let Some(last) = words.last_mut() {
        *last = singularize(last);
    }
    format!("{} is a {}", instance, words.join(" "))
}

/// The sentence of `segment_text` containing `span`, or the span itself
/// when it cannot be located.
pub fn premise_for<'a>(segment_text: &'a str, span: &'a str) -> &'a str {
    match segment_text.find(span) {
        Some(start) => covering_sentence(segment_text, start, start + span.len()),
        None => span,
    }
}

/// Scores and ranks the indexed instances.
///
/// Ties fall back to the posting count (higher first) and then the instance
/// key. With [`InstanceStrategy::NoConsolidation`] the instances of the
/// single most confident span keep their mention order.
pub fn score_instances(
    index: &InstanceIndex,
    strategy: InstanceStrategy,
    entailment: Option<&dyn Entailment>,
    answer_type: Option<&str>,
    segments: &[TextSegment],
) -> Result<RankedInstances> {
    let mut diagnostics = Vec::new();
    let scored = |key: &String, score: f64| {
        let entry = &index.entries[key];
        (
            key.clone(),
            ScoredInstance {
                instance: entry.surface.clone(),
                score,
                postings: entry.postings.len(),
            },
        )
    };

    let mut items: Vec<(String, ScoredInstance)> = match strategy {
        InstanceStrategy::NoConsolidation => {
            let best = index.harvested.iter().enumerate().min_by(|(ia, a), (ib, b)| {
                b.span
                    .confidence
                    .total_cmp(&a.span.confidence)
                    .then(a.rank.cmp(&b.rank))
                    .then(ia.cmp(ib))
            });
            let items = best
                .map(|(_, h)| h.instances.iter().map(|k| scored(k, h.span.confidence).1).collect())
                .unwrap_or_default();
            return Ok(RankedInstances {
                strategy,
                items,
                diagnostics,
            });
        }
        InstanceStrategy::ContextFrequency => index
            .entries
            .iter()
            .map(|(k, e)| scored(k, e.postings.len() as f64 / index.num_segments.max(1) as f64))
            .collect(),
        InstanceStrategy::SummedConfidence => index
            .entries
            .iter()
            .map(|(k, e)| {
                let total: f64 = e.postings.iter().map(|p| p.confidence).sum();
                scored(k, total / e.postings.len() as f64)
            })
            .collect(),
        InstanceStrategy::TypeCompatibility => {
            let entailment = entailment.ok_or_else(|| {
                Error::MissingProvider("type-compatibility scoring needs an entailment provider".into())
            })?;
            let answer_type = answer_type
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .ok_or_else(|| Error::Contract("type-compatibility scoring needs an answer type".into()))?;
            let by_id: HashMap<&str, &TextSegment> = segments.iter().map(|s| (s.id.as_str(), s)).collect();
            index
                .entries
                .iter()
                .map(|(k, e)| {
                    let hypothesis = type_hypothesis(&e.surface, answer_type);
                    let total: f64 = e
                        .postings
                        .iter()
                        .map(|p| {
                            let premise = by_id
                                .get(p.segment_id.as_str())
                                .map_or(p.span.as_str(), |s| premise_for(&s.text, &p.span));
                            match entailment
                                .entail(premise, &hypothesis)
                                .and_then(|v| validate_unit_score(ProviderKind::Entailment, v, 0.0))
                            {
                                Ok(v) => v,
                                Err(err) => {
                                    diagnostics.push(Diagnostic::for_segment(&p.segment_id, err.to_string()));
                                    0.0
                                }
                            }
                        })
                        .sum();
                    scored(k, total / e.postings.len() as f64)
                })
                .collect()
        }
    };

    items.sort_by(|(ka, a), (kb, b)| {
        b.score
            .total_cmp(&a.score)
            .then(b.postings.cmp(&a.postings))
            .then(ka.cmp(kb))
    });
    Ok(RankedInstances {
        strategy,
        items: items.into_iter().map(|(_, i)| i).collect(),
        diagnostics,
    })
}
