//! Count extraction from answer spans.
//!
//! Three stages run in order, each only when the previous one found nothing:
//!
//! 1. a numeric literal opening the span ("17", "17.0", "1,000", "1.5 million");
//! 2. a worded number opening the span ("seventeen", "seven hundred", "a dozen");
//! 3. a quantity anywhere in the span, optionally behind an approximator
//!    ("approximately 180", "more than 150", "an estimated 700").
//!
//! Values in (0, 1), zero, and quantities carrying a unit or currency are
//! discarded. Within a stage the leftmost usable quantity wins.

use serde::{Deserialize, Serialize};

use crate::model::is_valid_count;
use crate::providers::text::{normalize_whitespace, tokenize, Token};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtractionMethod {
    NumericLiteral,
    WordedNumber,
    QuantifierFallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedQuantity {
    pub value: f64,
    /// The token run that produced `value`; a substring of the input span.
    pub matched_text: String,
    /// Byte offset of `matched_text` in the input span.
    pub start: usize,
    pub method: ExtractionMethod,
    /// Approximator or comparator in front of the number, if any.
    pub modifier: Option<String>,
}

const UNITS: &[(&str, u64)] = &[
    ("zero", 0),
    ("one", 1),
    ("two", 2),
    ("three", 3),
    ("four", 4),
    ("five", 5),
    ("six", 6),
    ("seven", 7),
    ("eight", 8),
    ("nine", 9),
];

const TEENS: &[(&str, u64)] = &[
    ("ten", 10),
    ("eleven", 11),
    ("twelve", 12),
    ("thirteen", 13),
    ("fourteen", 14),
    ("fifteen", 15),
    ("sixteen", 16),
    ("seventeen", 17),
    ("eighteen", 18),
    ("nineteen", 19),
];

const TENS: &[(&str, u64)] = &[
    ("twenty", 20),
    ("thirty", 30),
    ("forty", 40),
    ("fifty", 50),
    ("sixty", 60),
    ("seventy", 70),
    ("eighty", 80),
    ("ninety", 90),
];

const SCALES: &[(&str, u64)] = &[("thousand", 1_000), ("million", 1_000_000), ("billion", 1_000_000_000)];

// Tokens that turn a number into a measurement rather than a count.
const UNIT_BLOCKLIST: &[&str] = &[
    "%",
    "acre",
    "acres",
    "cent",
    "cents",
    "cm",
    "degree",
    "degrees",
    "dollar",
    "dollars",
    "eur",
    "euro",
    "euros",
    "feet",
    "foot",
    "ft",
    "g",
    "gallon",
    "gallons",
    "gram",
    "grams",
    "ha",
    "hectare",
    "hectares",
    "hour",
    "hours",
    "inch",
    "inches",
    "kg",
    "kilogram",
    "kilograms",
    "kilometer",
    "kilometers",
    "kilometre",
    "kilometres",
    "km",
    "kmh",
    "lb",
    "lbs",
    "liter",
    "liters",
    "litre",
    "litres",
    "m",
    "meter",
    "meters",
    "metre",
    "metres",
    "mi",
    "mile",
    "miles",
    "minute",
    "minutes",
    "ml",
    "mm",
    "mph",
    "percent",
    "percentage",
    "pound",
    "pounds",
    "second",
    "seconds",
    "sq",
    "square",
    "ton",
    "tonne",
    "tonnes",
    "tons",
    "usd",
    "yard",
    "yards",
];

const CURRENCY_SIGNS: &[char] = &['$', '€', '£', '¥', '₹'];

// Longest phrases first so "more than" wins over "more".
const APPROXIMATORS: &[&str] = &[
    "an estimated",
    "approximately",
    "estimated",
    "around",
    "about",
    "roughly",
    "nearly",
    "almost",
    "close to",
    "more than",
    "less than",
    "fewer than",
    "over",
    "under",
    "at least",
    "at most",
    "up to",
    "upwards of",
    "some",
];

fn lookup(table: &[(&str, u64)], word: &str) -> Option<u64> {
    table.iter().find(|(w, _)| *w == word).map(|&(_, v)| v)
}

/// True for words the worded-number grammar accepts.
pub fn is_number_word(word: &str) -> bool {
    let w = word.to_lowercase();
    w.split('-').all(|part| {
        lookup(UNITS, part).is_some()
            || lookup(TEENS, part).is_some()
            || lookup(TENS, part).is_some()
            || lookup(SCALES, part).is_some()
            || part == "hundred"
            || part == "dozen"
    })
}

/// Extracts the count of an answer span, or `None` when it has no usable
/// count.
pub fn extract_count(span_text: &str) -> Option<ParsedQuantity> {
    let tokens = tokenize(span_text);
    if tokens.is_empty() {
        return None;
    }
    if let Some(q) = quantity_at(span_text, &tokens, 0, Kind::Literal, ExtractionMethod::NumericLiteral) {
        return Some(q);
    }
    if let Some(q) = quantity_at(span_text, &tokens, 0, Kind::Worded, ExtractionMethod::WordedNumber) {
        return Some(q);
    }
    (0..tokens.len()).find_map(|i| {
        quantity_at(
            span_text,
            &tokens,
            i,
            Kind::Literal,
            ExtractionMethod::QuantifierFallback,
        )
        .or_else(|| {
            quantity_at(
                span_text,
                &tokens,
                i,
                Kind::Worded,
                ExtractionMethod::QuantifierFallback,
            )
        })
    })
}

/// Separates the count from its qualifier: the qualifier is the span with
/// the matched number removed and whitespace collapsed.
pub fn split_count_and_qualifier(span_text: &str, parsed: &ParsedQuantity) -> (f64, String) {
    let start = if span_text
        .get(parsed.start..)
        .is_some_and(|rest| rest.starts_with(&parsed.matched_text))
    {
        Some(parsed.start)
    } else {
        span_text.find(&parsed.matched_text)
    };
    let qualifier = match start {
        Some(s) => {
            let end = s + parsed.matched_text.len();
            normalize_whitespace(&format!("{} {}", &span_text[..s], &span_text[end..]))
        }
        None => normalize_whitespace(span_text),
    };
    (parsed.value, qualifier)
}

#[derive(Clone, Copy)]
enum Kind {
    Literal,
    Worded,
}

fn quantity_at(
    text: &str,
    tokens: &[Token<'_>],
    i: usize,
    kind: Kind,
    method: ExtractionMethod,
) -> Option<ParsedQuantity> {
    let (value, end) = match kind {
        Kind::Literal => parse_literal_at(text, tokens, i)?,
        Kind::Worded => parse_worded_at(tokens, i)?,
    };
    if !is_valid_count(value) || has_unit(text, tokens, tokens[i].start, end) {
        return None;
    }
    let start = tokens[i].start;
    let stop = tokens[end - 1].end;
    Some(ParsedQuantity {
        value,
        matched_text: text[start..stop].to_string(),
        start,
        method,
        modifier: modifier_before(tokens, i),
    })
}

fn has_unit(text: &str, tokens: &[Token<'_>], start: usize, end_token: usize) -> bool {
    let stop = tokens[end_token - 1].end;
    let after = text[stop..].trim_start();
    if after.starts_with('%') {
        return true;
    }
    if text[..start].trim_end().ends_with(CURRENCY_SIGNS) {
        return true;
    }
    tokens
        .get(end_token)
        .is_some_and(|t| UNIT_BLOCKLIST.contains(&t.text.to_lowercase().as_str()))
}

fn modifier_before(tokens: &[Token<'_>], i: usize) -> Option<String> {
    let preceding: Vec<String> = tokens[..i].iter().map(|t| t.text.to_lowercase()).collect();
    APPROXIMATORS
        .iter()
        .find(|phrase| {
            let words: Vec<&str> = phrase.split(' ').collect();
            preceding.len() >= words.len()
                && preceding[preceding.len() - words.len()..]
                    .iter()
                    .zip(&words)
                    .all(|(a, b)| a == b)
        })
        .map(|p| p.to_string())
}

fn is_plain_digits(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

/// "17", "17.5", "1,000,000", "1,000.5"; also thin-space grouped "1 000".
fn literal_value(token: &str) -> Option<f64> {
    let (int_part, frac) = match token.split_once('.') {
        Some((a, b)) if is_plain_digits(b) => (a, Some(b)),
        Some(_) => return None,
        None => (token, None),
    };
    let digits = if int_part.contains(',') {
        let groups: Vec<&str> = int_part.split(',').collect();
        let ok = (1..=3).contains(&groups[0].len())
            && groups.iter().all(|g| is_plain_digits(g))
            && groups[1..].iter().all(|g| g.len() == 3);
        if !ok {
            return None;
        }
        groups.concat()
    } else if is_plain_digits(int_part) {
        int_part.to_string()
    } else {
        return None;
    };
    let repr = match frac {
        Some(f) => format!("{digits}.{f}"),
        None => digits,
    };
    repr.parse().ok()
}

fn parse_literal_at(text: &str, tokens: &[Token<'_>], i: usize) -> Option<(f64, usize)> {
    let first = tokens[i].text;
    let mut value = literal_value(first)?;
    let mut end = i + 1;

    // Thin-space digit grouping, e.g. "1\u{2009}000".
    if (1..=3).contains(&first.len()) && is_plain_digits(first) {
        let mut digits = first.to_string();
        while let Some(next) = tokens.get(end) {
            let gap = &text[tokens[end - 1].end..next.start];
            let thin = matches!(gap, "\u{2009}" | "\u{202F}");
            if thin && next.text.len() == 3 && is_plain_digits(next.text) {
                digits.push_str(next.text);
                end += 1;
            } else {
                break;
            }
        }
        if end > i + 1 {
            value = digits.parse().ok()?;
        }
    }

    // Trailing multipliers: "1.5 million", "2 dozen", "700 hundred".
    while let Some(next) = tokens.get(end) {
        let w = next.text.to_lowercase();
        let factor = match w.as_str() {
            "hundred" => 100.0,
            "dozen" => 12.0,
            _ => match lookup(SCALES, &w) {
                Some(s) => s as f64,
                None => break,
            },
        };
        value *= factor;
        end += 1;
    }
    Some((value, end))
}

#[derive(Debug, Clone, Default)]
struct WordedState {
    total: u64,
    segment: u64,
    has_hundred: bool,
    has_ten: bool,
    has_unit: bool,
    has_teen: bool,
    closed: bool,
    last_scale: Option<u64>,
    accepted: usize,
}

impl WordedState {
    fn push(&mut self, word: &str) -> bool {
        if self.closed {
            return false;
        }
        let fresh = !self.has_unit && !self.has_teen;
        if let Some(v) = lookup(UNITS, word) {
            if v == 0 {
                if self.accepted > 0 {
                    return false;
                }
                self.closed = true;
            } else if !fresh {
                return false;
            }
            self.segment += v;
            self.has_unit = true;
        } else if let Some(v) = lookup(TEENS, word) {
            if self.has_ten || !fresh {
                return false;
            }
            self.segment += v;
            self.has_teen = true;
        } else if let Some(v) = lookup(TENS, word) {
            if self.has_ten || !fresh {
                return false;
            }
            self.segment += v;
            self.has_ten = true;
        } else if word == "hundred" {
            if self.has_hundred || !(1..=99).contains(&self.segment) {
                return false;
            }
            self.segment *= 100;
            self.has_hundred = true;
            self.has_ten = false;
            self.has_unit = false;
            self.has_teen = false;
        } else if word == "dozen" {
            if self.has_hundred || !(1..=99).contains(&self.segment) {
                return false;
            }
            self.segment *= 12;
            self.has_hundred = true;
            self.has_ten = true;
            self.has_unit = true;
        } else if let Some(scale) = lookup(SCALES, word) {
            if self.segment == 0 || self.last_scale.is_some_and(|s| scale >= s) {
                return false;
            }
            self.total += self.segment * scale;
            self.segment = 0;
            self.has_hundred = false;
            self.has_ten = false;
            self.has_unit = false;
            self.has_teen = false;
            self.last_scale = Some(scale);
        } else {
            return false;
        }
        self.accepted += 1;
        true
    }

    fn push_token(&mut self, token: &str) -> bool {
        let lower = token.to_lowercase();
        let mut trial = self.clone();
        if lower.split('-').all(|part| trial.push(part)) {
            *self = trial;
            true
        } else {
            false
        }
    }

    fn value(&self) -> u64 {
        self.total + self.segment
    }
}

fn parse_worded_at(tokens: &[Token<'_>], i: usize) -> Option<(f64, usize)> {
    let mut state = WordedState::default();
    let mut j = i;

    // "a hundred", "an estimated"... only the former is a number.
    let article = tokens[j].text.to_lowercase();
    if article == "a" || article == "an" {
        let next = tokens.get(j + 1)?.text.to_lowercase();
        if next != "hundred" && next != "dozen" && lookup(SCALES, &next).is_none() {
            return None;
        }
        state.segment = 1;
        state.has_unit = true;
        j += 1;
    }

    let mut end = None;
    while j < tokens.len() {
        if state.push_token(tokens[j].text) {
            j += 1;
            end = Some(j);
            continue;
        }
        // "one hundred and five"
        let can_join = state.has_hundred || state.last_scale.is_some();
        if can_join && tokens[j].text.eq_ignore_ascii_case("and") {
            if let Some(next) = tokens.get(j + 1) {
                let mut trial = state.clone();
                if trial.push_token(next.text) {
                    state = trial;
                    j += 2;
                    end = Some(j);
                    continue;
                }
            }
        }
        break;
    }
    let end = end?;
    Some((state.value() as f64, end))
}
