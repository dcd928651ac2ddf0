use std::sync::Arc;

use countqa_core::pipeline::ProviderSet;
use countqa_core::providers::cache::{Cached, ProviderCache};
use countqa_core::providers::lexical::{
    LexicalEntailment, LexicalEntityRecognizer, LexicalPosTagger, LexicalSimilarity, LexicalSpanPredictor,
};
use countqa_core::providers::{Entailment, EntityRecognizer, PosTagger, ProviderKind, Similarity, SpanPredictor};
use countqa_remote::{RemoteOptions, RemoteProvider};

use crate::settings::{Binding, Settings};
use crate::CliError;

fn remote(kind: ProviderKind, url: &str, options: &RemoteOptions) -> Result<Arc<RemoteProvider>, CliError> {
    RemoteProvider::new(kind, url, options.clone())
        .map(Arc::new)
        .map_err(|e| CliError::Usage(e.to_string()))
}

macro_rules! bind {
    ($binding:expr, $kind:expr, $lexical:expr, $trait:ident, $settings:expr, $cache:expr) => {{
        let inner: Option<Arc<dyn $trait>> = match $binding {
            Binding::Lexical => Some(Arc::new($lexical)),
            Binding::Unbound => None,
            Binding::Remote(url) => Some(remote($kind, url, &$settings.remote)?),
        };
        match (inner, $cache) {
            (Some(p), Some(cache)) => Some(Arc::new(Cached::new(p, Arc::clone(cache))) as Arc<dyn $trait>),
            (p, _) => p,
        }
    }};
}

/// Builds the provider set named by the bindings, wrapped in the replay
/// cache when one is configured.
pub fn build(settings: &Settings) -> Result<ProviderSet, CliError> {
    let cache = match &settings.cache {
        Some((path, mode)) => Some(Arc::new(ProviderCache::open(path, *mode).map_err(CliError::from)?)),
        None => None,
    };
    let cache = cache.as_ref();
    let b = &settings.bindings;
    let kind = ProviderKind::SpanPredictor;
    let explanation_span_predictor = match &b.explanation_span_predictor {
        Some(binding) => bind!(binding, kind, LexicalSpanPredictor, SpanPredictor, settings, cache),
        None => None,
    };
    Ok(ProviderSet {
        span_predictor: bind!(
            &b.span_predictor,
            kind,
            LexicalSpanPredictor,
            SpanPredictor,
            settings,
            cache
        ),
        explanation_span_predictor,
        similarity: bind!(
            &b.similarity,
            ProviderKind::Similarity,
            LexicalSimilarity,
            Similarity,
            settings,
            cache
        ),
        entity_recognizer: bind!(
            &b.entity_recognizer,
            ProviderKind::EntityRecognizer,
            LexicalEntityRecognizer,
            EntityRecognizer,
            settings,
            cache
        ),
        entailment: bind!(
            &b.entailment,
            ProviderKind::Entailment,
            LexicalEntailment,
            Entailment,
            settings,
            cache
        ),
        pos_tagger: bind!(
            &b.pos_tagger,
            ProviderKind::PosTagger,
            LexicalPosTagger,
            PosTagger,
            settings,
            cache
        ),
    })
}
