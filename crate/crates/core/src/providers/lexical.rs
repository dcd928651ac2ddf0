//! Deterministic, model-free reference providers.
//!
//! These are good enough to drive the pipeline offline and in tests; they
//! make no attempt to match a neural model's behaviour.

use std::collections::BTreeSet;

use super::text::{content_terms, is_stopword, sentence_ranges, stem, tokenize, Token};
use super::{
    require_non_empty, Entailment, EntityRecognizer, PosTag, PosTagger, PredictedSpan, ProviderKind, ProviderResult,
    Similarity, SpanPredictor, TaggedToken,
};
use crate::quantity::is_number_word;

const SPAN_WINDOW: usize = 6;
const PHRASE_WORDS: usize = 3;
const HEDGES: &[&str] = &[
    "about",
    "almost",
    "approximately",
    "around",
    "estimated",
    "nearly",
    "over",
    "roughly",
    "some",
];

/// Entailment score when the hypothesis' type noun is missing from the premise.
pub const ENTAILMENT_FALLBACK: f64 = 0.25;

fn is_capitalized(token: &str) -> bool {
    token.chars().next().is_some_and(char::is_uppercase)
}

fn is_numeric_token(token: &str) -> bool {
    token.chars().next().is_some_and(|c| c.is_ascii_digit()) || is_number_word(token)
}

/// Picks the sentence sharing the most content terms with the query.
///
/// For "how many" queries the span is a count phrase from that sentence:
/// a number with an optional hedge in front ("an estimated") and up to
/// three content words after it, ending at the first plural. Phrases that
/// mention a query term win over earlier ones. Other queries get a window
/// of six tokens starting at the first capitalized word.
///
/// Confidence is the share of the query's content terms found in the
/// sentence.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalSpanPredictor;

impl SpanPredictor for LexicalSpanPredictor {
    fn name(&self) -> &str {
        "lexical"
    }

    fn predict_span(&self, query: &str, segment_text: &str) -> ProviderResult<Option<PredictedSpan>> {
        require_non_empty(ProviderKind::SpanPredictor, "query", query)?;
        require_non_empty(ProviderKind::SpanPredictor, "segment", segment_text)?;

        let query_terms = content_terms(query);
        if query_terms.is_empty() {
            return Ok(None);
        }
        let mut best: Option<((usize, usize), usize)> = None;
        for (s, e) in sentence_ranges(segment_text) {
            let terms = content_terms(&segment_text[s..e]);
            let overlap = query_terms.intersection(&terms).count();
            if overlap > 0 && best.is_none_or(|(_, o)| overlap > o) {
                best = Some(((s, e), overlap));
            }
        }
        let Some(((s, e), overlap)) = best else {
            return Ok(None);
        };
        let confidence = overlap as f64 / query_terms.len() as f64;

        let counting = query.to_lowercase().contains("how many");
        let window = if counting {
            count_phrase(segment_text, s, e, &query_terms).or_else(|| capitalized_window(segment_text, s, e))
        } else {
            capitalized_window(segment_text, s, e).or_else(|| count_phrase(segment_text, s, e, &query_terms))
        };
        Ok(window.map(|(a, b)| PredictedSpan {
            span: segment_text[a..b].to_string(),
            confidence,
        }))
    }
}

fn tokens_in(text: &str, start: usize, end: usize) -> Vec<Token<'_>> {
    tokenize(&text[start..end])
        .into_iter()
        .map(|t| Token {
            text: t.text,
            start: t.start + start,
            end: t.end + start,
        })
        .collect()
}

fn adjacent(text: &str, left: &Token<'_>, right: &Token<'_>) -> bool {
    text[left.end..right.start].trim().is_empty()
}

fn count_phrase(text: &str, s: usize, e: usize, query_terms: &BTreeSet<String>) -> Option<(usize, usize)> {
    let tokens = tokens_in(text, s, e);
    let mut phrases = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if !is_numeric_token(tokens[i].text) {
            i += 1;
            continue;
        }
        let mut first = i;
        if i > 0
            && adjacent(text, &tokens[i - 1], &tokens[i])
            && HEDGES.contains(&tokens[i - 1].text.to_lowercase().as_str())
        {
            first = i - 1;
            if first > 0
                && tokens[first].text.eq_ignore_ascii_case("estimated")
                && tokens[first - 1].text.eq_ignore_ascii_case("an")
                && adjacent(text, &tokens[first - 1], &tokens[first])
            {
                first -= 1;
            }
        }
        // "seven hundred", "one hundred and twenty"
        let mut last = i;
        loop {
            let next = last + 1;
            if next < tokens.len()
                && adjacent(text, &tokens[last], &tokens[next])
                && is_numeric_token(tokens[next].text)
            {
                last = next;
            } else if next + 1 < tokens.len()
                && tokens[next].text.eq_ignore_ascii_case("and")
                && adjacent(text, &tokens[last], &tokens[next])
                && adjacent(text, &tokens[next], &tokens[next + 1])
                && is_number_word(tokens[next + 1].text)
            {
                last = next + 1;
            } else {
                break;
            }
        }
        let number_end = last;
        let mut words = 0;
        while words < PHRASE_WORDS && last + 1 < tokens.len() {
            let next = &tokens[last + 1];
            let lower = next.text.to_lowercase();
            if !adjacent(text, &tokens[last], next)
                || is_stopword(&lower)
                || is_numeric_token(next.text)
                || !next.text.chars().all(|c| c.is_alphabetic() || c == '-' || c == '\'')
            {
                break;
            }
            last += 1;
            words += 1;
            if lower.ends_with('s') && !lower.ends_with("ss") {
                break;
            }
        }
        let terms = content_terms(&text[tokens[first].start..tokens[last].end]);
        let relevant = !terms.is_disjoint(query_terms);
        phrases.push(((tokens[first].start, tokens[last].end), relevant));
        i = number_end + 1;
    }
    phrases
        .iter()
        .find(|(_, relevant)| *relevant)
        .or(phrases.first())
        .map(|(range, _)| *range)
}

fn capitalized_window(text: &str, s: usize, e: usize) -> Option<(usize, usize)> {
    let tokens = tokens_in(text, s, e);
    let idx = tokens
        .iter()
        .position(|t| is_capitalized(t.text) && !is_stopword(&t.text.to_lowercase()))?;
    let last = (idx + SPAN_WINDOW).min(tokens.len()) - 1;
    Some((tokens[idx].start, tokens[last].end))
}

/// `2 * J - 1` over stemmed, stopword-free term sets, where `J` is the
/// Jaccard overlap. Two empty term sets count as identical.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalSimilarity;

impl LexicalSimilarity {
    pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
        let union = a.union(b).count();
        if union == 0 {
            return 1.0;
        }
        a.intersection(b).count() as f64 / union as f64
    }
}

impl Similarity for LexicalSimilarity {
    fn name(&self) -> &str {
        "lexical"
    }

    fn similarity(&self, a: &str, b: &str) -> ProviderResult<f64> {
        require_non_empty(ProviderKind::Similarity, "a", a)?;
        require_non_empty(ProviderKind::Similarity, "b", b)?;
        let j = Self::jaccard(&content_terms(a), &content_terms(b));
        Ok(2.0 * j - 1.0)
    }
}

/// Maximal runs of capitalized words, allowing "of" and "the" between two
/// capitalized words. A lone stopword opening a sentence ("The", "In") is
/// dropped.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalEntityRecognizer;

impl EntityRecognizer for LexicalEntityRecognizer {
    fn name(&self) -> &str {
        "lexical"
    }

    fn recognize(&self, text: &str) -> ProviderResult<Vec<String>> {
        let tokens = tokenize(text);
        let sentence_starts: BTreeSet<usize> = sentence_ranges(text)
            .into_iter()
            .filter_map(|(s, e)| tokenize(&text[s..e]).first().map(|t| t.start + s))
            .collect();
        let joined = |a: &Token<'_>, b: &Token<'_>| text[a.end..b.start].trim().is_empty();

        let mut mentions = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            if !is_capitalized(tokens[i].text) {
                i += 1;
                continue;
            }
            let start = i;
            let mut end = i + 1;
            loop {
                let mut k = end;
                while tokens
                    .get(k)
                    .is_some_and(|t| matches!(t.text, "of" | "the") && joined(&tokens[k - 1], t))
                {
                    k += 1;
                }
                match tokens.get(k) {
                    Some(t) if is_capitalized(t.text) && joined(&tokens[k - 1], t) => end = k + 1,
                    _ => break,
                }
            }
            let lone_opener = end - start == 1
                && sentence_starts.contains(&tokens[start].start)
                && is_stopword(&tokens[start].text.to_lowercase());
            if !lone_opener {
                mentions.push(text[tokens[start].start..tokens[end - 1].end].to_string());
            }
            i = end;
        }
        Ok(mentions)
    }
}

/// 1.0 when the hypothesis' final noun (stemmed) occurs in the premise,
/// [`ENTAILMENT_FALLBACK`] otherwise.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalEntailment;

impl Entailment for LexicalEntailment {
    fn name(&self) -> &str {
        "lexical"
    }

    fn entail(&self, premise: &str, hypothesis: &str) -> ProviderResult<f64> {
        require_non_empty(ProviderKind::Entailment, "premise", premise)?;
        require_non_empty(ProviderKind::Entailment, "hypothesis", hypothesis)?;
        let Some(head) = tokenize(hypothesis).last().map(|t| stem(t.text)) else {
            return Ok(ENTAILMENT_FALLBACK);
        };
        let premise_terms: BTreeSet<String> = tokenize(premise).iter().map(|t| stem(t.text)).collect();
        Ok(if premise_terms.contains(&head) {
            1.0
        } else {
            ENTAILMENT_FALLBACK
        })
    }
}

const DETERMINERS: &[&str] = &[
    "a", "all", "an", "any", "each", "every", "her", "his", "its", "my", "no", "our", "some", "that", "the", "their",
    "these", "this", "those", "your",
];
const PRONOUNS: &[&str] = &[
    "he", "i", "it", "me", "she", "them", "there", "they", "us", "we", "what", "which", "who", "whom", "whose", "you",
];
const CONJUNCTIONS: &[&str] = &["and", "but", "nor", "or", "so", "yet"];
const AUXILIARIES: &[&str] = &[
    "am", "are", "be", "been", "being", "can", "could", "did", "do", "does", "had", "has", "have", "is", "may",
    "might", "must", "shall", "should", "was", "were", "will", "would",
];
const ADPOSITIONS: &[&str] = &[
    "about", "across", "after", "among", "at", "before", "between", "by", "during", "for", "from", "in", "into", "of",
    "on", "over", "per", "since", "through", "to", "under", "until", "with", "within",
];
const VERBS: &[&str] = &[
    "appear", "belong", "border", "build", "built", "compose", "contain", "die", "died", "direct", "employ", "exist",
    "feature", "found", "have", "hold", "host", "join", "live", "lose", "lost", "made", "make", "marry", "own", "play",
    "produce", "publish", "record", "release", "sang", "score", "sign", "sing", "speak", "spoke", "spoken", "star",
    "sung", "visit", "win", "won", "write", "written", "wrote",
];
const ADJECTIVES: &[&str] = &[
    "active",
    "alive",
    "american",
    "big",
    "biggest",
    "current",
    "different",
    "european",
    "famous",
    "federal",
    "first",
    "former",
    "human",
    "inactive",
    "international",
    "large",
    "largest",
    "last",
    "living",
    "main",
    "major",
    "national",
    "native",
    "new",
    "official",
    "old",
    "original",
    "principal",
    "private",
    "professional",
    "public",
    "regional",
    "separate",
    "small",
    "smallest",
    "still",
    "total",
];
const ADJECTIVE_SUFFIXES: &[&str] = &["ous", "ive", "ful", "able", "ible"];
const OTHER: &[&str] = &["how", "many", "much", "not", "only"];

/// Closed-class word lists plus a few positional rules tuned for count
/// questions, which often arrive lowercased: nouns after the counted noun
/// phrase are treated as names, and adjectives directly in front of such a
/// name join it ("new york").
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalPosTagger;

impl LexicalPosTagger {
    fn base_tag(word: &str, position: usize) -> PosTag {
        let lower = word.to_lowercase();
        let w = lower.as_str();
        let is = |list: &[&str]| list.contains(&w);
        if word.chars().next().is_some_and(|c| c.is_ascii_digit()) || is_number_word(w) {
            PosTag::Number
        } else if is(OTHER) {
            PosTag::Other
        } else if is(AUXILIARIES) {
            PosTag::Auxiliary
        } else if is(DETERMINERS) {
            PosTag::Determiner
        } else if is(PRONOUNS) {
            PosTag::Pronoun
        } else if is(CONJUNCTIONS) {
            PosTag::Conjunction
        } else if is(ADPOSITIONS) {
            PosTag::Adposition
        } else if is(VERBS) || (w.len() > 4 && w.ends_with("ed")) {
            PosTag::Verb
        } else if is(ADJECTIVES)
            || ADJECTIVE_SUFFIXES
                .iter()
                .any(|s| w.len() > s.len() + 2 && w.ends_with(s))
        {
            PosTag::Adjective
        } else if position > 0 && is_capitalized(word) {
            PosTag::ProperNoun
        } else {
            PosTag::Noun
        }
    }
}

impl PosTagger for LexicalPosTagger {
    fn name(&self) -> &str {
        "lexical"
    }

    fn tag(&self, text: &str) -> ProviderResult<Vec<TaggedToken>> {
        let words: Vec<&str> = tokenize(text).into_iter().map(|t| t.text).collect();
        let mut tags: Vec<PosTag> = words.iter().enumerate().map(|(i, w)| Self::base_tag(w, i)).collect();

        // "-ed" words right after a determiner or adjective are modifiers.
        for i in 1..tags.len() {
            let lower = words[i].to_lowercase();
            if tags[i] == PosTag::Verb
                && !VERBS.contains(&lower.as_str())
                && matches!(tags[i - 1], PosTag::Determiner | PosTag::Adjective)
            {
                tags[i] = PosTag::Adjective;
            }
        }

        // "have" is the main verb when no other verb follows it.
        for i in 0..tags.len() {
            let lower = words[i].to_lowercase();
            if matches!(lower.as_str(), "have" | "has" | "had") && !tags[i + 1..].contains(&PosTag::Verb) {
                tags[i] = PosTag::Verb;
            } else if tags[i] == PosTag::Verb && lower == "have" {
                tags[i] = PosTag::Auxiliary;
            }
        }

        // Nouns after the counted noun phrase name things.
        if let Some(first_noun) = tags.iter().position(|t| *t == PosTag::Noun) {
            let mut i = first_noun + 1;
            while i < tags.len() && tags[i] == PosTag::Noun {
                i += 1;
            }
            for tag in &mut tags[i..] {
                if *tag == PosTag::Noun {
                    *tag = PosTag::ProperNoun;
                }
            }
            for j in (i..tags.len()).rev() {
                if tags[j] == PosTag::Adjective && tags.get(j + 1) == Some(&PosTag::ProperNoun) {
                    tags[j] = PosTag::ProperNoun;
                }
            }
        }

        Ok(words
            .into_iter()
            .zip(tags)
            .map(|(w, tag)| TaggedToken {
                text: w.to_string(),
                tag,
            })
            .collect())
    }
}
