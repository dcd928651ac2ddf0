//! End-to-end answering of one query: inference, contextualization and
//! explanation, assembled into a [`PredictionRecord`].

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::context::{contextualize, DEFAULT_ALPHA};
use crate::dataset::{CnpEntry, DatasetRecord, PredictionRecord, Provenance};
use crate::error::{Error, Result};
use crate::explain::{build_instance_index, rewrite_query, score_instances, DEFAULT_EXPLANATION_THETA};
use crate::inference::{check_unit_interval, infer_answer, InferenceConfig, DEFAULT_INFERENCE_THETA};
use crate::model::{derive_query_components, CountQuery, CountStrategy, Diagnostic, InstanceStrategy, TextSegment};
use crate::providers::lexical::{
    LexicalEntailment, LexicalEntityRecognizer, LexicalPosTagger, LexicalSimilarity, LexicalSpanPredictor,
};
use crate::providers::{
    Entailment, EntityRecognizer, PosTagger, ProviderDescriptor, ProviderKind, Similarity, SpanPredictor,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub theta_inference: f64,
    pub theta_explanation: f64,
    pub alpha: f64,
    pub strategy_count: CountStrategy,
    pub strategy_instance: InstanceStrategy,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            theta_inference: DEFAULT_INFERENCE_THETA,
            theta_explanation: DEFAULT_EXPLANATION_THETA,
            alpha: DEFAULT_ALPHA,
            strategy_count: CountStrategy::default(),
            strategy_instance: InstanceStrategy::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        check_unit_interval("theta_inference", self.theta_inference)?;
        check_unit_interval("theta_explanation", self.theta_explanation)?;
        check_unit_interval("alpha", self.alpha)
    }
}

/// Partial configuration; set fields replace those of a base config.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub theta_inference: Option<f64>,
    pub theta_explanation: Option<f64>,
    pub alpha: Option<f64>,
    pub strategy_count: Option<CountStrategy>,
    pub strategy_instance: Option<InstanceStrategy>,
}

impl ConfigOverrides {
    /// Returns `base` with the overrides applied, validated.
    pub fn apply(&self, base: &RunConfig) -> Result<RunConfig> {
        let config = RunConfig {
            theta_inference: self.theta_inference.unwrap_or(base.theta_inference),
            theta_explanation: self.theta_explanation.unwrap_or(base.theta_explanation),
            alpha: self.alpha.unwrap_or(base.alpha),
            strategy_count: self.strategy_count.unwrap_or(base.strategy_count),
            strategy_instance: self.strategy_instance.unwrap_or(base.strategy_instance),
        };
        config.validate()?;
        Ok(config)
    }

    /// Layers `other` on top of `self`.
    pub fn merge(self, other: ConfigOverrides) -> ConfigOverrides {
        ConfigOverrides {
            theta_inference: other.theta_inference.or(self.theta_inference),
            theta_explanation: other.theta_explanation.or(self.theta_explanation),
            alpha: other.alpha.or(self.alpha),
            strategy_count: other.strategy_count.or(self.strategy_count),
            strategy_instance: other.strategy_instance.or(self.strategy_instance),
        }
    }
}

/// Provider bindings. The explanation stage uses
/// `explanation_span_predictor` when set and `span_predictor` otherwise.
#[derive(Clone, Default)]
pub struct ProviderSet {
    pub span_predictor: Option<Arc<dyn SpanPredictor>>,
    pub explanation_span_predictor: Option<Arc<dyn SpanPredictor>>,
    pub similarity: Option<Arc<dyn Similarity>>,
    pub entity_recognizer: Option<Arc<dyn EntityRecognizer>>,
    pub entailment: Option<Arc<dyn Entailment>>,
    pub pos_tagger: Option<Arc<dyn PosTagger>>,
}

impl std::fmt::Debug for ProviderSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.descriptors()).finish()
    }
}

fn missing(kind: ProviderKind, why: &str) -> Error {
    Error::MissingProvider(format!("no {kind} provider is bound; {why}"))
}

impl ProviderSet {
    /// Every kind bound to its lexical reference implementation.
    pub fn lexical() -> Self {
        Self {
            span_predictor: Some(Arc::new(LexicalSpanPredictor)),
            explanation_span_predictor: None,
            similarity: Some(Arc::new(LexicalSimilarity)),
            entity_recognizer: Some(Arc::new(LexicalEntityRecognizer)),
            entailment: Some(Arc::new(LexicalEntailment)),
            pos_tagger: Some(Arc::new(LexicalPosTagger)),
        }
    }

    pub fn descriptors(&self) -> Vec<ProviderDescriptor> {
        let named = |kind, name: Option<&str>| {
            name.map(|n| ProviderDescriptor {
                kind,
                name: n.to_string(),
                endpoint: None,
            })
        };
        [
            named(
                ProviderKind::SpanPredictor,
                self.span_predictor.as_deref().map(|p| p.name()),
            ),
            named(ProviderKind::Similarity, self.similarity.as_deref().map(|p| p.name())),
            named(
                ProviderKind::EntityRecognizer,
                self.entity_recognizer.as_deref().map(|p| p.name()),
            ),
            named(ProviderKind::Entailment, self.entailment.as_deref().map(|p| p.name())),
            named(ProviderKind::PosTagger, self.pos_tagger.as_deref().map(|p| p.name())),
        ]
        .into_iter()
        .flatten()
        .collect()
    }

    /// Fails with an actionable message when `config` needs a provider
    /// that is not bound.
    pub fn check(&self, config: &RunConfig) -> Result<()> {
        if self.span_predictor.is_none() {
            return Err(missing(ProviderKind::SpanPredictor, "answer inference needs one"));
        }
        if self.similarity.is_none() {
            return Err(missing(ProviderKind::Similarity, "contextualization needs one"));
        }
        if self.entity_recognizer.is_none() {
            return Err(missing(ProviderKind::EntityRecognizer, "explanation needs one"));
        }
        if config.strategy_instance == InstanceStrategy::TypeCompatibility {
            let why = "the type-compatibility instance strategy needs one; bind it or choose another instance strategy";
            if self.entailment.is_none() {
                return Err(missing(ProviderKind::Entailment, why));
            }
            if self.pos_tagger.is_none() {
                return Err(missing(ProviderKind::PosTagger, why));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub record: PredictionRecord,
    /// Span prediction failed on every segment during inference.
    pub inference_failed: bool,
    /// Span prediction or recognition failed on every segment during
    /// explanation.
    pub explanation_failed: bool,
}

impl PipelineOutput {
    pub fn failed(&self) -> bool {
        self.inference_failed || self.explanation_failed
    }
}

/// Runs the three stages for one query. Per-segment provider failures end
/// up in the record's diagnostics.
pub fn answer_query(
    query_id: &str,
    query_text: &str,
    segments: &[TextSegment],
    providers: &ProviderSet,
    config: &RunConfig,
) -> Result<PipelineOutput> {
    config.validate()?;
    providers.check(config)?;
    let span_predictor = providers.span_predictor.as_deref().expect("checked");
    let similarity = providers.similarity.as_deref().expect("checked");
    let ner = providers.entity_recognizer.as_deref().expect("checked");
    let mut diagnostics = Vec::new();

    let query = match providers.pos_tagger.as_deref() {
        Some(tagger) => match derive_query_components(query_id, query_text, tagger) {
            Ok(q) => q,
            Err(Error::Provider(e)) => {
                diagnostics.push(Diagnostic::general(e.to_string()));
                CountQuery::new(query_id, query_text)?
            }
            Err(e) => return Err(e),
        },
        None => CountQuery::new(query_id, query_text)?,
    };

    let inference = infer_answer(
        &query,
        segments,
        span_predictor,
        &InferenceConfig::new(config.theta_inference, config.strategy_count)?,
    );
    diagnostics.extend(inference.diagnostics.iter().cloned());

    let classification = match inference.c_pred {
        Some(c_pred) => {
            let c = contextualize(&inference.candidates, c_pred, config.alpha, similarity)?;
            diagnostics.extend(c.diagnostics.iter().cloned());
            Some(c)
        }
        None => None,
    };

    let explanation_predictor = providers
        .explanation_span_predictor
        .as_deref()
        .unwrap_or(span_predictor);
    let index = build_instance_index(
        &rewrite_query(&query.text),
        segments,
        explanation_predictor,
        ner,
        config.theta_explanation,
    );
    diagnostics.extend(index.diagnostics.iter().cloned());
    let instances = if config.strategy_instance == InstanceStrategy::TypeCompatibility && query.answer_type.is_none() {
        diagnostics.push(Diagnostic::general(
            "query has no answer type; type-compatibility scoring skipped",
        ));
        Vec::new()
    } else {
        let ranked = score_instances(
            &index,
            config.strategy_instance,
            providers.entailment.as_deref(),
            query.answer_type.as_deref(),
            segments,
        )?;
        diagnostics.extend(ranked.diagnostics);
        ranked.items
    };

    let entries = |list: &[crate::model::CountCandidate]| list.iter().map(CnpEntry::from).collect::<Vec<_>>();
    let record = PredictionRecord {
        query_id: query.id.clone(),
        query: query.text.clone(),
        c_pred: inference.c_pred,
        strategy_count: config.strategy_count,
        strategy_instance: config.strategy_instance,
        theta_inference: config.theta_inference,
        theta_explanation: config.theta_explanation,
        alpha: config.alpha,
        answer_type: query.answer_type.clone(),
        cnp_rep: classification.as_ref().map(|c| CnpEntry::from(&c.cnp_rep)),
        synonyms: classification
            .as_ref()
            .map(|c| entries(&c.synonyms))
            .unwrap_or_default(),
        subgroups: classification
            .as_ref()
            .map(|c| entries(&c.subgroups))
            .unwrap_or_default(),
        incomparables: classification
            .as_ref()
            .map(|c| entries(&c.incomparables))
            .unwrap_or_default(),
        instances,
        provenance: Provenance {
            inference: inference.per_segment_spans,
            explanation: index.per_segment_spans,
        },
        diagnostics,
    };
    Ok(PipelineOutput {
        record,
        inference_failed: inference.provider_unavailable,
        explanation_failed: index.provider_unavailable,
    })
}

pub fn answer_record(record: &DatasetRecord, providers: &ProviderSet, config: &RunConfig) -> Result<PipelineOutput> {
    answer_query(&record.id, &record.query, &record.segments, providers, config)
}

/// Answers every record on up to `jobs` threads. Outputs keep the input
/// order whatever the completion order.
pub fn answer_all(
    records: &[DatasetRecord],
    providers: &ProviderSet,
    config: &RunConfig,
    jobs: usize,
) -> Result<Vec<PipelineOutput>> {
    config.validate()?;
    providers.check(config)?;
    let slots: Vec<Mutex<Option<Result<PipelineOutput>>>> = records.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, records.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(record) = records.get(i) else { break };
                let out = answer_record(record, providers, config);
                *slots[i].lock().expect("slot lock") = Some(out);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().expect("slot lock").expect("every slot filled"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn segments() -> Vec<TextSegment> {
        [
            "Hawaii has eight main islands. Maui, Oahu and Kauai are popular.",
            "The state of Hawaii, Maui, Oahu, Kauai, Molokai and Lanai are islands.",
            "Hawaii counts 8 main islands and 137 islets.",
        ]
        .iter()
        .enumerate()
        .map(|(i, t)| TextSegment::new(format!("s{}", i + 1), i as u32 + 1, *t).unwrap())
        .collect()
    }

    #[test]
    fn defaults() {
        let c = RunConfig::default();
        assert_eq!((c.theta_inference, c.theta_explanation, c.alpha), (0.5, 0.2, 0.3));
        assert_eq!(c.strategy_count, CountStrategy::WeightedMedian);
        assert_eq!(c.strategy_instance, InstanceStrategy::TypeCompatibility);
    }

    #[test]
    fn overrides_apply_and_validate() {
        let o = ConfigOverrides {
            alpha: Some(0.0),
            ..Default::default()
        };
        assert_eq!(o.apply(&RunConfig::default()).unwrap().alpha, 0.0);
        let bad = ConfigOverrides {
            theta_inference: Some(1.5),
            ..Default::default()
        };
        assert!(bad.apply(&RunConfig::default()).is_err());
        let merged = o.merge(ConfigOverrides {
            alpha: Some(0.1),
            ..Default::default()
        });
        assert_eq!(merged.alpha, Some(0.1));
        let parsed: ConfigOverrides = serde_json::from_str(r#"{"strategy_count":"most-confident"}"#).unwrap();
        assert_eq!(parsed.strategy_count, Some(CountStrategy::MostConfident));
        assert!(serde_json::from_str::<ConfigOverrides>(r#"{"beta":1}"#).is_err());
    }

    #[test]
    fn answers_end_to_end() {
        let out = answer_query(
            "q1",
            "how many main islands in hawaii",
            &segments(),
            &ProviderSet::lexical(),
            &RunConfig::default(),
        )
        .unwrap();
        let r = &out.record;
        assert_eq!(r.c_pred, Some(8.0));
        assert_eq!(r.answer_type.as_deref(), Some("main islands"));
        assert!(r.cnp_rep.is_some());
        assert!(!r.instances.is_empty());
        assert_eq!(r.provenance.inference.len(), 3);
        assert!(!out.failed());
    }

    #[test]
    fn theta_one_gives_no_count() {
        let config = RunConfig {
            theta_inference: 1.0,
            ..RunConfig::default()
        };
        let out = answer_query(
            "q",
            "how many main islands in hawaii",
            &segments(),
            &ProviderSet::lexical(),
            &config,
        )
        .unwrap();
        assert_eq!(out.record.c_pred, None);
        assert!(out.record.cnp_rep.is_none());
    }

    #[test]
    fn missing_entailment_is_reported() {
        let providers = ProviderSet {
            entailment: None,
            ..ProviderSet::lexical()
        };
        let err = answer_query("q", "how many x", &segments(), &providers, &RunConfig::default()).unwrap_err();
        assert!(
            matches!(err, Error::MissingProvider(ref m) if m.contains("entailment")),
            "{err}"
        );
        let config = RunConfig {
            strategy_instance: InstanceStrategy::ContextFrequency,
            ..RunConfig::default()
        };
        assert!(answer_query("q", "how many x", &segments(), &providers, &config).is_ok());
    }

    #[test]
    fn parallel_matches_sequential() {
        let records: Vec<DatasetRecord> = (0..7)
            .map(|i| DatasetRecord {
                id: format!("q{i}"),
                query: "how many main islands in hawaii".into(),
                gold_count: None,
                gold_source: crate::model::GoldSource::NoDirectAnswer,
                gold_instances: vec![],
                segments: segments()[..(i % 3) + 1].to_vec(),
                cnp_gold: None,
            })
            .collect();
        let p = ProviderSet::lexical();
        let c = RunConfig::default();
        let seq = answer_all(&records, &p, &c, 1).unwrap();
        let par = answer_all(&records, &p, &c, 4).unwrap();
        assert_eq!(seq, par);
        assert_eq!(par[3].record.query_id, "q3");
    }
}
