//! Answer inference: predict one span per segment, keep the confident ones
//! that carry a count, and consolidate the counts into a single prediction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{counts_equal, AnswerSpan, CountCandidate, CountQuery, CountStrategy, Diagnostic, TextSegment};
use crate::providers::{validate_span, ProviderKind, SpanPredictor};
use crate::quantity::extract_count;

pub const DEFAULT_INFERENCE_THETA: f64 = 0.5;

// Slack on the weighted-median half-weight comparison, relative to the
// total weight, so equal-weight prefixes hit the boundary despite rounding.
const HALF_WEIGHT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InferenceConfig {
    pub theta: f64,
    pub strategy: CountStrategy,
}

impl InferenceConfig {
    pub fn new(theta: f64, strategy: CountStrategy) -> Result<Self> {
        check_unit_interval("theta", theta)?;
        Ok(Self { theta, strategy })
    }
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            theta: DEFAULT_INFERENCE_THETA,
            strategy: CountStrategy::WeightedMedian,
        }
    }
}

pub(crate) fn check_unit_interval(name: &str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} = {value} is outside [0, 1]")))
    }
}

/// One entry of the multiset handed to [`consolidate`]. `rank` is the
/// retrieval rank of the segment the count came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedCount {
    pub value: f64,
    pub confidence: f64,
    pub rank: u32,
}

impl WeightedCount {
    pub fn new(value: f64, confidence: f64) -> Self {
        Self {
            value,
            confidence,
            rank: 1,
        }
    }
}

/// Reduces a non-empty multiset of weighted counts to one of its members.
///
/// Ties: most-confident prefers the lower value, then the better rank;
/// most-frequent prefers the higher summed confidence, then the lower
/// value. An even-sized median takes the lower middle element, and the
/// weighted median returns the first value (ascending) whose cumulative
/// confidence reaches half the total.
pub fn consolidate(candidates: &[WeightedCount], strategy: CountStrategy) -> Result<f64> {
    if candidates.is_empty() {
        return Err(Error::Contract("consolidate called with no candidates".into()));
    }
    if let Some(bad) = candidates
        .iter()
        .find(|c| !(c.confidence > 0.0 && c.confidence <= 1.0) || !c.value.is_finite())
    {
        return Err(Error::Contract(format!(
            "candidate {} has confidence {} outside (0, 1]",
            bad.value, bad.confidence
        )));
    }

    let value = match strategy {
        CountStrategy::MostConfident => {
            candidates
                .iter()
                .min_by(|a, b| {
                    b.confidence
                        .total_cmp(&a.confidence)
                        .then(a.value.total_cmp(&b.value))
                        .then(a.rank.cmp(&b.rank))
                })
                .expect("non-empty")
                .value
        }
        CountStrategy::MostFrequent => {
            let groups = group_equal_values(candidates);
            groups
                .iter()
                .min_by(|a, b| {
                    b.count
                        .cmp(&a.count)
                        .then(b.weight.total_cmp(&a.weight))
                        .then(a.value.total_cmp(&b.value))
                })
                .expect("non-empty")
                .value
        }
        CountStrategy::Median => {
            let sorted = sorted_by_value(candidates);
            sorted[(sorted.len() - 1) / 2].value
        }
        CountStrategy::WeightedMedian => {
            let sorted = sorted_by_value(candidates);
            let total: f64 = sorted.iter().map(|c| c.confidence).sum();
            let half = total / 2.0 - HALF_WEIGHT_SLACK * total;
            let mut cumulative = 0.0;
            sorted
                .iter()
                .find(|c| {
                    cumulative += c.confidence;
                    cumulative >= half
                })
                .unwrap_or_else(|| sorted.last().expect("non-empty"))
                .value
        }
    };
    Ok(value)
}

fn sorted_by_value(candidates: &[WeightedCount]) -> Vec<WeightedCount> {
    let mut sorted = candidates.to_vec();
    sorted.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.rank.cmp(&b.rank)));
    sorted
}

struct ValueGroup {
    value: f64,
    count: usize,
    weight: f64,
}

// Values equal under tolerance (17 and 17.0) form one multiset entry.
fn group_equal_values(candidates: &[WeightedCount]) -> Vec<ValueGroup> {
    let mut groups: Vec<ValueGroup> = Vec::new();
    for c in sorted_by_value(candidates) {
        match groups.last_mut() {
            Some(g) if counts_equal(g.value, c.value) => {
                g.count += 1;
                g.weight += c.confidence;
            }
            _ => groups.push(ValueGroup {
                value: c.value,
                count: 1,
                weight: c.confidence,
            }),
        }
    }
    groups
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceResult {
    pub c_pred: Option<f64>,
    pub strategy: CountStrategy,
    /// Confident spans that yielded a count; handed on to contextualization.
    pub candidates: Vec<CountCandidate>,
    /// Every span the predictor returned, before thresholding.
    pub per_segment_spans: Vec<AnswerSpan>,
    pub diagnostics: Vec<Diagnostic>,
    /// True when every segment's provider call failed.
    pub provider_unavailable: bool,
}

/// Runs answer inference over `segments`. Provider failures on a segment
/// are recorded as diagnostics and the segment is skipped.
pub fn infer_answer(
    query: &CountQuery,
    segments: &[TextSegment],
    predictor: &dyn SpanPredictor,
    config: &InferenceConfig,
) -> InferenceResult {
    let mut candidates = Vec::new();
    let mut weighted = Vec::new();
    let mut per_segment_spans = Vec::new();
    let mut diagnostics = Vec::new();
    let mut failures = 0;

    for segment in segments {
        let predicted = predictor
            .predict_span(&query.text, &segment.text)
            .and_then(|p| match p {
                Some(p) => validate_span(ProviderKind::SpanPredictor, &segment.text, &p).map(|_| Some(p)),
                None => Ok(None),
            });
        let predicted = match predicted {
            Ok(Some(p)) => p,
            Ok(None) => continue,
            Err(e) => {
                failures += 1;
                diagnostics.push(Diagnostic::for_segment(&segment.id, e.to_string()));
                continue;
            }
        };
        let span = AnswerSpan {
            segment_id: segment.id.clone(),
            span: predicted.span,
            confidence: predicted.confidence,
        };
        if !span.span.trim().is_empty() && span.confidence > config.theta {
            if let Some(parsed) = extract_count(&span.span) {
                weighted.push(WeightedCount {
                    value: parsed.value,
                    confidence: span.confidence,
                    rank: segment.rank,
                });
                candidates.push(CountCandidate {
                    answer_span: span.clone(),
                    value: parsed.value,
                    cnp_text: span.span.clone(),
                });
            }
        }
        per_segment_spans.push(span);
    }

    let provider_unavailable = !segments.is_empty() && failures == segments.len();
    if provider_unavailable {
        diagnostics.push(Diagnostic::general("span prediction failed on every segment"));
    }

    // Confidences above theta >= 0 are positive, so the contract holds.
    let c_pred = if weighted.is_empty() {
        None
    } else {
        consolidate(&weighted, config.strategy).ok()
    };

    InferenceResult {
        c_pred,
        strategy: config.strategy,
        candidates,
        per_segment_spans,
        diagnostics,
        provider_unavailable,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::{PredictedSpan, ProviderError, ProviderResult};
    use std::collections::HashMap;

    fn wc(pairs: &[(f64, f64)]) -> Vec<WeightedCount> {
        pairs
            .iter()
            .enumerate()
            .map(|(i, &(value, confidence))| WeightedCount {
                value,
                confidence,
                rank: i as u32 + 1,
            })
            .collect()
    }

    const WORKED: &[(f64, f64)] = &[(150.0, 0.9), (160.0, 0.8), (180.0, 0.4), (180.0, 0.4), (210.0, 0.3)];

    #[test]
    fn worked_example_all_strategies() {
        let c = wc(WORKED);
        assert_eq!(consolidate(&c, CountStrategy::MostConfident).unwrap(), 150.0);
        assert_eq!(consolidate(&c, CountStrategy::MostFrequent).unwrap(), 180.0);
        assert_eq!(consolidate(&c, CountStrategy::Median).unwrap(), 180.0);
        assert_eq!(consolidate(&c, CountStrategy::WeightedMedian).unwrap(), 160.0);
    }

    #[test]
    fn singleton_and_uniform() {
        for s in CountStrategy::ALL {
            assert_eq!(consolidate(&wc(&[(42.0, 0.7)]), s).unwrap(), 42.0);
        }
        let c = wc(&[(1.0, 0.5), (2.0, 0.5), (3.0, 0.5)]);
        assert_eq!(consolidate(&c, CountStrategy::Median).unwrap(), 2.0);
        assert_eq!(consolidate(&c, CountStrategy::WeightedMedian).unwrap(), 2.0);
    }

    #[test]
    fn even_median_is_lower_middle() {
        let c = wc(&[(4.0, 0.5), (1.0, 0.5), (3.0, 0.5), (2.0, 0.5)]);
        assert_eq!(consolidate(&c, CountStrategy::Median).unwrap(), 2.0);
        assert_eq!(consolidate(&c, CountStrategy::WeightedMedian).unwrap(), 2.0);
    }

    #[test]
    fn tie_breaking() {
        // most confident: equal confidence -> lower value
        let c = wc(&[(30.0, 0.8), (20.0, 0.8), (40.0, 0.5)]);
        assert_eq!(consolidate(&c, CountStrategy::MostConfident).unwrap(), 20.0);
        // most frequent: equal multiplicity -> higher summed confidence
        let c = wc(&[(10.0, 0.3), (10.0, 0.3), (20.0, 0.6), (20.0, 0.5)]);
        assert_eq!(consolidate(&c, CountStrategy::MostFrequent).unwrap(), 20.0);
        // then lower value
        let c = wc(&[(20.0, 0.5), (10.0, 0.5)]);
        assert_eq!(consolidate(&c, CountStrategy::MostFrequent).unwrap(), 10.0);
    }

    #[test]
    fn tolerance_merges_frequencies() {
        let c = wc(&[(17.0, 0.5), (17.000000000001, 0.5), (30.0, 0.9)]);
        assert_eq!(consolidate(&c, CountStrategy::MostFrequent).unwrap(), 17.0);
    }

    #[test]
    fn empty_and_bad_weights_are_contract_errors() {
        assert!(matches!(
            consolidate(&[], CountStrategy::Median),
            Err(Error::Contract(_))
        ));
        assert!(consolidate(&wc(&[(3.0, 0.0)]), CountStrategy::Median).is_err());
        assert!(consolidate(&wc(&[(3.0, 1.5)]), CountStrategy::Median).is_err());
    }

    struct TableProvider(HashMap<String, ProviderResult<Option<PredictedSpan>>>);

    impl SpanPredictor for TableProvider {
        fn name(&self) -> &str {
            "table"
        }
        fn predict_span(&self, _q: &str, segment: &str) -> ProviderResult<Option<PredictedSpan>> {
            self.0.get(segment).cloned().unwrap_or(Ok(None))
        }
    }

    fn setup(spans: &[(&str, &str, f64)]) -> (Vec<TextSegment>, TableProvider) {
        let mut segments = Vec::new();
        let mut table = HashMap::new();
        for (i, &(text, span, conf)) in spans.iter().enumerate() {
            segments.push(TextSegment::new(format!("s{i}"), i as u32 + 1, text).unwrap());
            table.insert(
                text.to_string(),
                Ok(Some(PredictedSpan {
                    span: span.to_string(),
                    confidence: conf,
                })),
            );
        }
        (segments, TableProvider(table))
    }

    fn query() -> CountQuery {
        CountQuery::new("q", "how many tribes").unwrap()
    }

    #[test]
    fn infers_worked_example_end_to_end() {
        let (segments, provider) = setup(&[
            ("There are 150 tribes.", "150 tribes", 0.9),
            ("About 160 tribes live here.", "160 tribes", 0.8),
            ("Some say 180 tribes.", "180 tribes", 0.4),
            ("Maybe 180 tribes!", "180 tribes", 0.4),
            ("Or 210 tribes.", "210 tribes", 0.3),
        ]);
        let config = InferenceConfig::new(0.2, CountStrategy::WeightedMedian).unwrap();
        let r = infer_answer(&query(), &segments, &provider, &config);
        assert_eq!(r.c_pred, Some(160.0));
        assert_eq!(r.candidates.len(), 5);
        assert_eq!(r.per_segment_spans.len(), 5);

        let r = infer_answer(&query(), &segments, &provider, &InferenceConfig::default());
        // only 0.9 and 0.8 exceed 0.5
        assert_eq!(r.candidates.len(), 2);
        assert_eq!(r.c_pred, Some(150.0));
    }

    #[test]
    fn empty_segments_and_saturated_theta() {
        let (segments, provider) = setup(&[("There are 150 tribes.", "150 tribes", 1.0)]);
        let r = infer_answer(&query(), &[], &provider, &InferenceConfig::default());
        assert_eq!(r.c_pred, None);
        assert!(r.candidates.is_empty());
        assert!(!r.provider_unavailable);

        let config = InferenceConfig::new(1.0, CountStrategy::WeightedMedian).unwrap();
        let r = infer_answer(&query(), &segments, &provider, &config);
        assert_eq!(r.c_pred, None);
        assert_eq!(r.per_segment_spans.len(), 1);
    }

    #[test]
    fn spans_without_counts_are_dropped() {
        let (segments, provider) = setup(&[("The Big Island is large.", "The Big Island", 0.9)]);
        let r = infer_answer(&query(), &segments, &provider, &InferenceConfig::default());
        assert_eq!(r.c_pred, None);
        assert!(r.candidates.is_empty());
    }

    #[test]
    fn provider_failures_are_partial() {
        let (mut segments, mut provider) = setup(&[("There are 150 tribes.", "150 tribes", 0.9)]);
        segments.push(TextSegment::new("bad", 2, "broken").unwrap());
        provider.0.insert(
            "broken".into(),
            Err(ProviderError::Timeout {
                kind: ProviderKind::SpanPredictor,
            }),
        );
        let r = infer_answer(&query(), &segments, &provider, &InferenceConfig::default());
        assert_eq!(r.c_pred, Some(150.0));
        assert_eq!(r.diagnostics.len(), 1);
        assert_eq!(r.diagnostics[0].segment_id.as_deref(), Some("bad"));
        assert!(!r.provider_unavailable);

        let r = infer_answer(&query(), &segments[1..], &provider, &InferenceConfig::default());
        assert!(r.provider_unavailable);
        assert_eq!(r.c_pred, None);
    }

    #[test]
    fn span_outside_segment_is_a_failure() {
        let (segments, provider) = setup(&[("There are 150 tribes.", "999 tribes", 0.9)]);
        let r = infer_answer(&query(), &segments, &provider, &InferenceConfig::default());
        assert_eq!(r.c_pred, None);
        assert_eq!(r.diagnostics.len(), 2);
    }

    #[test]
    fn theta_is_validated() {
        assert!(InferenceConfig::new(1.2, CountStrategy::Median).is_err());
        assert!(InferenceConfig::new(-0.1, CountStrategy::Median).is_err());
    }
}
