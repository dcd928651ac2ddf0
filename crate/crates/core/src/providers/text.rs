//! Small text utilities behind the lexical providers: tokenizing with byte
//! offsets, sentence and clause boundaries, a stopword list and a light
//! suffix stemmer.

use std::collections::BTreeSet;

/// A word token with its byte range in the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub text: &'a str,
    pub start: usize,
    pub end: usize,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '\'' | '\u{2019}' | '-' | '.' | ',')
}

/// Splits `text` into word tokens. Apostrophes and hyphens stay inside a
/// word, and "," / "." stay inside a word only between two digits
/// ("1,000", "17.5").
pub fn tokenize(text: &str) -> Vec<Token<'_>> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].1.is_alphanumeric() {
            i += 1;
            continue;
        }
        let start = i;
        let mut end = i + 1;
        while end < chars.len() && is_word_char(chars[end].1) {
            let c = chars[end].1;
            if !c.is_alphanumeric() {
                let prev = chars[end - 1].1;
                let next = chars.get(end + 1).map(|&(_, c)| c);
                let keep = match c {
                    '.' | ',' => prev.is_ascii_digit() && next.is_some_and(|n| n.is_ascii_digit()),
                    _ => prev.is_alphanumeric() && next.is_some_and(char::is_alphanumeric),
                };
                if !keep {
                    break;
                }
            }
            end += 1;
        }
        let byte_start = chars[start].0;
        let byte_end = chars.get(end).map_or(text.len(), |&(b, _)| b);
        tokens.push(Token {
            text: &text[byte_start..byte_end],
            start: byte_start,
            end: byte_end,
        });
        i = end;
    }
    tokens
}

/// Byte ranges of sentences, split after ". ", "? " and "! ".
pub fn sentence_ranges(text: &str) -> Vec<(usize, usize)> {
    split_ranges(text, |prev, next| {
        matches!(prev, '.' | '?' | '!') && next.is_whitespace()
    })
}

/// Byte ranges of clauses: sentences further split at ",", ";", ":" and
/// parentheses. Digit separators ("1,000") do not split.
pub fn clause_ranges(text: &str) -> Vec<(usize, usize)> {
    let bytes: Vec<(usize, char)> = text.char_indices().collect();
    let mut ranges = Vec::new();
    let mut start = 0;
    for (idx, &(b, c)) in bytes.iter().enumerate() {
        let boundary = match c {
            ';' | ':' | '(' | ')' => true,
            ',' => {
                !(idx > 0
                    && bytes[idx - 1].1.is_ascii_digit()
                    && bytes.get(idx + 1).is_some_and(|&(_, n)| n.is_ascii_digit()))
            }
            '.' | '?' | '!' => bytes.get(idx + 1).is_none_or(|&(_, n)| n.is_whitespace()),
            _ => false,
        };
        if boundary {
            let end = b + c.len_utf8();
            if end > start {
                ranges.push((start, end));
            }
            start = end;
        }
    }
    if start < text.len() {
        ranges.push((start, text.len()));
    }
    ranges
}

fn split_ranges(text: &str, is_boundary: impl Fn(char, char) -> bool) -> Vec<(usize, usize)> {
    let mut ranges = Vec::new();
    let mut start = 0;
    let mut prev: Option<char> = None;
    for (b, c) in text.char_indices() {
        if let Some(p) = prev {
            if is_boundary(p, c) {
                ranges.push((start, b));
                start = b;
            }
        }
        prev = Some(c);
    }
    if start < text.len() {
        ranges.push((start, text.len()));
    }
    ranges
}

/// Sentence covering the byte range `[start, end)`; widened to several
/// sentences when the range crosses a boundary.
pub fn covering_sentence(text: &str, start: usize, end: usize) -> &str {
    let ranges = sentence_ranges(text);
    let first = ranges
        .iter()
        .find(|&&(s, e)| start >= s && start < e)
        .map_or(0, |r| r.0);
    let last = ranges
        .iter()
        .find(|&&(s, e)| end > s && end <= e)
        .map_or(text.len(), |r| r.1);
    text[first..last.max(first)].trim()
}

/// Function words, plus hedges ("estimated", "roughly") that do not change
/// what is being counted.
pub const STOPWORDS: &[&str] = &[
    "a",
    "about",
    "above",
    "after",
    "again",
    "against",
    "all",
    "almost",
    "also",
    "am",
    "among",
    "an",
    "and",
    "any",
    "approximately",
    "are",
    "around",
    "as",
    "at",
    "be",
    "because",
    "been",
    "before",
    "being",
    "below",
    "between",
    "both",
    "but",
    "by",
    "can",
    "could",
    "did",
    "do",
    "does",
    "doing",
    "down",
    "during",
    "each",
    "estimated",
    "few",
    "for",
    "from",
    "further",
    "had",
    "has",
    "have",
    "having",
    "he",
    "her",
    "here",
    "hers",
    "him",
    "his",
    "how",
    "however",
    "i",
    "if",
    "in",
    "into",
    "is",
    "it",
    "its",
    "just",
    "many",
    "me",
    "more",
    "most",
    "much",
    "my",
    "nearly",
    "no",
    "nor",
    "not",
    "of",
    "off",
    "on",
    "once",
    "only",
    "or",
    "other",
    "our",
    "ours",
    "out",
    "over",
    "own",
    "roughly",
    "same",
    "several",
    "she",
    "should",
    "so",
    "some",
    "such",
    "than",
    "that",
    "the",
    "their",
    "theirs",
    "them",
    "then",
    "there",
    "these",
    "they",
    "this",
    "those",
    "through",
    "to",
    "too",
    "under",
    "until",
    "up",
    "very",
    "was",
    "we",
    "were",
    "what",
    "when",
    "where",
    "which",
    "while",
    "who",
    "whom",
    "whose",
    "why",
    "will",
    "with",
    "would",
    "you",
    "your",
    "yours",
];

pub fn is_stopword(word: &str) -> bool {
    STOPWORDS.binary_search(&word).is_ok()
}

/// Light suffix stemmer: plural and -ing/-ed endings.
pub fn stem(word: &str) -> String {
    let mut w = word.to_lowercase();
    for suffix in ["'s", "\u{2019}s"] {
        if let Some(stripped) = w.strip_suffix(suffix) {
            w = stripped.to_string();
        }
    }
    let len = w.chars().count();
    if len > 4 && w.ends_with("ies") {
        w.truncate(w.len() - 3);
        w.push('y');
    } else if w.ends_with("sses") {
        w.truncate(w.len() - 2);
    } else if len > 3 && w.ends_with('s') && !w.ends_with("ss") && !w.ends_with("us") && !w.ends_with("is") {
        w.truncate(w.len() - 1);
    }
    let len = w.chars().count();
    if len > 5 && w.ends_with("ing") {
        w.truncate(w.len() - 3);
    } else if len > 4 && w.ends_with("ed") {
        w.truncate(w.len() - 2);
    }
    w
}

/// Lowercased, stopword-filtered, stemmed token set.
pub fn content_terms(text: &str) -> BTreeSet<String> {
    tokenize(text)
        .into_iter()
        .map(|t| t.text.to_lowercase())
        .filter(|w| !is_stopword(w))
        .map(|w| stem(&w))
        .filter(|w| !w.is_empty())
        .collect()
}

/// Collapses whitespace runs to single spaces and trims.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}
