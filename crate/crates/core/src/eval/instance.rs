//! Ranked instance metrics: MAP@k, AR@k, Hit@k and MRR.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::GoldInstance;

/// A candidate is relevant to a gold instance when its normalized edit
/// distance to some name of that instance is below this bound.
pub const RELEVANCE_DISTANCE: f64 = 0.1;

pub const DEFAULT_KS: [usize; 3] = [1, 5, 10];

fn normalize_name(name: &str) -> String {
    name.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Levenshtein distance divided by the longer length, in characters.
pub fn normalized_distance(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 0.0;
    }
    strsim::levenshtein(a, b) as f64 / longest as f64
}

/// Case-folded, whitespace-normalized fuzzy match against the canonical
/// name and every alias.
pub fn instance_relevant(candidate: &str, gold: &GoldInstance) -> bool {
    let candidate = normalize_name(candidate);
    if candidate.is_empty() {
        return false;
    }
    gold.names()
        .any(|name| normalized_distance(&candidate, &normalize_name(name)) < RELEVANCE_DISTANCE)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRow {
    pub query_id: String,
    pub retrieved: usize,
    pub gold_instances: usize,
    /// 1-based rank of the first relevant candidate.
    pub first_relevant: Option<usize>,
}

/// Keys of the per-k maps are the cut-offs. `map_at_k` is the mean
/// precision among the top k retrieved, per query, averaged over queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceEvalReport {
    pub ks: Vec<usize>,
    /// Queries with at least one gold instance; the others are skipped.
    pub queries: usize,
    pub map_at_k: BTreeMap<usize, f64>,
    pub ar_at_k: BTreeMap<usize, f64>,
    /// Percentage of queries with a relevant candidate in the top k.
    pub hit_at_k: BTreeMap<usize, f64>,
    pub mrr: f64,
    pub rows: Vec<InstanceRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceItem<'a> {
    pub query_id: String,
    pub ranked: Vec<String>,
    pub gold: &'a [GoldInstance],
}

/// Parses a cut-off list such as "1,5,10".
pub fn parse_ks(text: &str) -> Result<Vec<usize>> {
    let ks = text
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidInput(format!("bad cut-off {p:?} in {text:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    normalize_ks(&ks)
}

fn normalize_ks(ks: &[usize]) -> Result<Vec<usize>> {
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::InvalidInput(
            "cut-offs must be a non-empty list of positive integers".into(),
        ));
    }
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    Ok(ks)
}

pub fn instance_metrics(items: &[InstanceItem<'_>], ks: &[usize]) -> Result<InstanceEvalReport> {
    let ks = normalize_ks(ks)?;
    let mut map_at_k: BTreeMap<usize, f64> = ks.iter().map(|&k| (k, 0.0)).collect();
    let mut ar_at_k = map_at_k.clone();
    let mut hit_at_k = map_at_k.clone();
    let mut mrr = 0.0;
    let mut rows = Vec::new();

    for item in items.iter().filter(|i| !i.gold.is_empty()) {
        // For each retrieved candidate, the gold instances it matches.
        let matches: Vec<Vec<usize>> = item
            .ranked
            .iter()
            .map(|c| {
                item.gold
                    .iter()
                    .enumerate()
                    .filter(|(_, g)| instance_relevant(c, g))
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();
        let first_relevant = matches.iter().position(|m| !m.is_empty()).map(|p| p + 1);
        if let Some(r) = first_relevant {
            mrr += 1.0 / r as f64;
        }
        for &k in &ks {
            let top = &matches[..k.min(matches.len())];
            let relevant = top.iter().filter(|m| !m.is_empty()).count();
            if !top.is_empty() {
                *map_at_k.get_mut(&k).expect("k present") += relevant as f64 / top.len() as f64;
            }
            let mut found = vec![false; item.gold.len()];
            for &g in top.iter().flatten() {
                found[g] = true;
            }
            let recalled = found.iter().filter(|f| **f).count();
            *ar_at_k.get_mut(&k).expect("k present") += recalled as f64 / item.gold.len() as f64;
            if relevant > 0 {
                *hit_at_k.get_mut(&k).expect("k present") += 1.0;
            }
        }
        rows.push(InstanceRow {
            query_id: item.query_id.clone(),
            retrieved: item.ranked.len(),
            gold_instances: item.gold.len(),
            first_relevant,
        });
    }

    let n = rows.len();
    if n > 0 {
        let n = n as f64;
        map_at_k.values_mut().for_each(|v| *v /= n);
        ar_at_k.values_mut().for_each(|v| *v /= n);
        hit_at_k.values_mut().for_each(|v| *v = 100.0 * *v / n);
        mrr /= n;
    }
    Ok(InstanceEvalReport {
        ks,
        queries: rows.len(),
        map_at_k,
        ar_at_k,
        hit_at_k,
        mrr,
        rows,
    })
}
