//! Domain value objects shared across the engine.
//!
//! Counts are stored as `f64` ("17.0" stays `17.0`) and compared with a
//! relative tolerance through [`counts_equal`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::providers::{PosTag, PosTagger, TaggedToken};

/// Relative tolerance used whenever two counts are compared for equality.
pub const COUNT_REL_TOLERANCE: f64 = 1e-9;

/// Equality of counts under [`COUNT_REL_TOLERANCE`].
pub fn counts_equal(a: f64, b: f64) -> bool {
    let scale = a.abs().max(b.abs()).max(1.0);
    (a - b).abs() <= COUNT_REL_TOLERANCE * scale
}

/// A usable count is positive and not a fraction in (0, 1).
pub fn is_valid_count(value: f64) -> bool {
    value.is_finite() && value >= 1.0
}

/// A non-fatal problem met while processing a query, usually a provider
/// failure on one segment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub segment_id: Option<String>,
    pub message: String,
}

impl Diagnostic {
    pub fn for_segment(segment_id: &str, message: impl Into<String>) -> Self {
        Self {
            segment_id: Some(segment_id.to_string()),
            message: message.into(),
        }
    }

    pub fn general(message: impl Into<String>) -> Self {
        Self {
            segment_id: None,
            message: message.into(),
        }
    }
}

/// A count question plus the components derived from its text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountQuery {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub answer_type: Option<String>,
    #[serde(default)]
    pub entities: Vec<String>,
    #[serde(default)]
    pub relation: Option<String>,
    #[serde(default)]
    pub context_terms: Vec<String>,
}

impl CountQuery {
    /// A query with no derived components yet.
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(Error::InvalidInput("query text is empty".into()));
        }
        Ok(Self {
            id: id.into(),
            text,
            answer_type: None,
            entities: Vec::new(),
            relation: None,
            context_terms: Vec::new(),
        })
    }
}

/// One retrieved text segment. Ranks start at 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextSegment {
    pub id: String,
    pub rank: u32,
    pub text: String,
}

impl TextSegment {
    pub fn new(id: impl Into<String>, rank: u32, text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        if rank == 0 {
            return Err(Error::InvalidInput("segment rank must be >= 1".into()));
        }
        if text.trim().is_empty() {
            return Err(Error::InvalidInput("segment text is empty".into()));
        }
        Ok(Self {
            id: id.into(),
            rank,
            text,
        })
    }
}

/// A span predicted over one segment together with the model confidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerSpan {
    pub segment_id: String,
    pub span: String,
    pub confidence: f64,
}

impl AnswerSpan {
    pub fn new(segment_id: impl Into<String>, span: impl Into<String>, confidence: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::InvalidInput(format!("confidence {confidence} outside [0, 1]")));
        }
        Ok(Self {
            segment_id: segment_id.into(),
            span: span.into(),
            confidence,
        })
    }
}

/// An answer span with its extracted count. The whole span doubles as the
/// count-modified noun phrase (CNP).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountCandidate {
    pub answer_span: AnswerSpan,
    pub value: f64,
    pub cnp_text: String,
}

impl CountCandidate {
    pub fn new(answer_span: AnswerSpan, value: f64) -> Result<Self> {
        if !is_valid_count(value) {
            return Err(Error::InvalidInput(format!("{value} is not a usable count")));
        }
        let cnp_text = answer_span.span.clone();
        Ok(Self {
            answer_span,
            value,
            cnp_text,
        })
    }

    pub fn confidence(&self) -> f64 {
        self.answer_span.confidence
    }
}

/// How a multiset of weighted counts is reduced to a single prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(try_from = "String", into = "&'static str")]
pub enum CountStrategy {
    MostConfident,
    MostFrequent,
    Median,
    #[default]
    WeightedMedian,
}

impl CountStrategy {
    pub const ALL: [CountStrategy; 4] = [
        CountStrategy::MostConfident,
        CountStrategy::MostFrequent,
        CountStrategy::Median,
        CountStrategy::WeightedMedian,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CountStrategy::MostConfident => "most-confident",
            CountStrategy::MostFrequent => "most-frequent",
            CountStrategy::Median => "median",
            CountStrategy::WeightedMedian => "weighted-median",
        }
    }
}

impl std::fmt::Display for CountStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl From<CountStrategy> for &'static str {
    fn from(s: CountStrategy) -> Self {
        s.as_str()
    }
}

impl TryFrom<String> for CountStrategy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl std::str::FromStr for CountStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = normalize_enum_key(s);
        CountStrategy::ALL
            .into_iter()
            .find(|st| normalize_enum_key(st.as_str()) == key)
            .ok_or_else(|| Error::InvalidInput(format!("unknown count strategy `{s}`")))
    }
}

/// How instances harvested from spans are scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(try_from = "String", into = "&'static str")]
pub enum InstanceStrategy {
    NoConsolidation,
    ContextFrequency,
    SummedConfidence,
    #[default]
    TypeCompatibility,
}

impl InstanceStrategy {
    pub const ALL: [InstanceStrategy; 4] = [
        InstanceStrategy::NoConsolidation,
        InstanceStrategy::ContextFrequency,
        InstanceStrategy::SummedConfidence,
        InstanceStrategy::TypeCompatibility,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            InstanceStrategy::NoConsolidation => "no-consolidation",
            InstanceStrategy::ContextFrequency => "context-frequency",
            InstanceStrategy::SummedConfidence => "summed-confidence",
            InstanceStrategy::TypeCompatibility => "type-compatibility",
        }
    }
}

impl std::fmt::Display for InstanceStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl From<InstanceStrategy> for &'static str {
    fn from(s: InstanceStrategy) -> Self {
        s.as_str()
    }
}

impl TryFrom<String> for InstanceStrategy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl std::str::FromStr for InstanceStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = normalize_enum_key(s);
        InstanceStrategy::ALL
            .into_iter()
            .find(|st| normalize_enum_key(st.as_str()) == key)
            .ok_or_else(|| Error::InvalidInput(format!("unknown instance strategy `{s}`")))
    }
}

// Accepts "weighted-median", "WeightedMedian", "weighted_median".
fn normalize_enum_key(s: &str) -> String {
    s.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

/// Output of consolidation: the predicted count and the multiset it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Consolidation {
    pub c_pred: Option<f64>,
    pub strategy: CountStrategy,
    pub candidates: Vec<CountCandidate>,
}

/// Where the gold count of a query comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GoldSource {
    KG,
    Snippet,
    NoDirectAnswer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldInstance {
    pub canonical: String,
    #[serde(default)]
    pub aliases: Vec<String>,
}

impl GoldInstance {
    /// Canonical name followed by the aliases.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.canonical.as_str()).chain(self.aliases.iter().map(String::as_str))
    }
}

/// Category a CNP is placed in relative to the representative CNP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CnpCategory {
    Synonym,
    Subgroup,
    Incomparable,
}

impl CnpCategory {
    pub const ALL: [CnpCategory; 3] = [CnpCategory::Synonym, CnpCategory::Subgroup, CnpCategory::Incomparable];
}

/// A gold category label for one CNP of a query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnpLabel {
    pub cnp_text: String,
    pub label: CnpCategory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldAnnotation {
    pub query_id: String,
    pub gold_count: Option<f64>,
    pub source: GoldSource,
    pub gold_instances: Vec<GoldInstance>,
    pub category_labels: Option<Vec<CnpLabel>>,
}

const WH_WORDS: &[&str] = &["how", "many", "which", "what", "who", "whom", "whose", "much"];

/// Fills the answer type, entities, relation and context terms of a query
/// from part-of-speech tags.
///
/// The answer type is the first common noun together with the adjectives
/// directly in front of it; consecutive nouns after it are kept as a
/// compound ("nfl stadium"). Absent components are not an error.
pub fn derive_query_components(id: impl Into<String>, query_text: &str, tagger: &dyn PosTagger) -> Result<CountQuery> {
    let mut query = CountQuery::new(id, query_text)?;
    let tokens = tagger.tag(query_text)?;
    let mut used = vec![false; tokens.len()];

    if let Some(noun) = tokens.iter().position(|t| t.tag == PosTag::Noun) {
        let mut start = noun;
        while start > 0 && tokens[start - 1].tag == PosTag::Adjective {
            start -= 1;
        }
        let mut end = noun + 1;
        while end < tokens.len() && tokens[end].tag == PosTag::Noun {
            end += 1;
        }
        query.answer_type = Some(join_tokens(&tokens[start..end]));
        used[start..end].iter_mut().for_each(|u| *u = true);
    }

    let mut i = 0;
    while i < tokens.len() {
        if tokens[i].tag == PosTag::ProperNoun {
            let start = i;
            while i < tokens.len() && tokens[i].tag == PosTag::ProperNoun {
                used[i] = true;
                i += 1;
            }
            query.entities.push(join_tokens(&tokens[start..i]));
        } else {
            i += 1;
        }
    }

    if let Some(verb) = tokens.iter().position(|t| t.tag == PosTag::Verb) {
        query.relation = Some(tokens[verb].text.clone());
        used[verb] = true;
    }

    query.context_terms = tokens
        .iter()
        .zip(&used)
        .filter(|(t, used)| {
            !**used
                && matches!(
                    t.tag,
                    PosTag::Noun | PosTag::Adjective | PosTag::Verb | PosTag::Number | PosTag::Other
                )
                && !WH_WORDS.contains(&t.text.to_lowercase().as_str())
        })
        .map(|(t, _)| t.text.clone())
        .collect();

    Ok(query)
}

fn join_tokens(tokens: &[TaggedToken]) -> String {
    tokens.iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join(" ")
}
