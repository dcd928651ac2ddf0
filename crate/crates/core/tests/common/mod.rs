//! Test-side oracles, written independently of the library code.
#![allow(dead_code)]

const ONES: [&str; 20] = [
    "zero",
    "one",
    "two",
    "three",
    "four",
    "five",
    "six",
    "seven",
    "eight",
    "nine",
    "ten",
    "eleven",
    "twelve",
    "thirteen",
    "fourteen",
    "fifteen",
    "sixteen",
    "seventeen",
    "eighteen",
    "nineteen",
];
const TENS: [&str; 10] = [
    "", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety",
];

fn below_thousand(n: u64, with_and: bool) -> String {
    let mut parts = Vec::new();
    let hundreds = n / 100;
    let rest = n % 100;
    if hundreds > 0 {
        parts.push(format!("{} hundred", ONES[hundreds as usize]));
    }
    if rest > 0 {
        if hundreds > 0 && with_and {
            parts.push("and".to_string());
        }
        if rest < 20 {
            parts.push(ONES[rest as usize].to_string());
        } else if rest.is_multiple_of(10) {
            parts.push(TENS[(rest / 10) as usize].to_string());
        } else {
            parts.push(format!("{}-{}", TENS[(rest / 10) as usize], ONES[(rest % 10) as usize]));
        }
    }
    parts.join(" ")
}

/// English words for `n` in [1, 10^12), e.g. 1203 -> "one thousand two
/// hundred three" (or "... two hundred and three" with `with_and`).
pub fn words(n: u64, with_and: bool) -> String {
    assert!(n > 0 && n < 1_000_000_000_000);
    let scales = [(1_000_000_000, "billion"), (1_000_000, "million"), (1_000, "thousand")];
    let mut rest = n;
    let mut parts = Vec::new();
    for (size, name) in scales {
        if rest >= size {
            parts.push(format!("{} {}", below_thousand(rest / size, with_and), name));
            rest %= size;
        }
    }
    if rest > 0 {
        parts.push(below_thousand(rest, with_and));
    }
    parts.join(" ")
}

/// Weighted median over integer weights (thousandths), by direct scan:
/// the smallest value whose cumulative weight reaches half the total.
pub fn brute_weighted_median(pairs: &[(u32, u32)]) -> u32 {
    let total: u64 = pairs.iter().map(|&(_, w)| w as u64).sum();
    let mut values: Vec<u32> = pairs.iter().map(|&(v, _)| v).collect();
    values.sort_unstable();
    values.dedup();
    for v in values {
        let below: u64 = pairs.iter().filter(|&&(x, _)| x <= v).map(|&(_, w)| w as u64).sum();
        if 2 * below >= total {
            return v;
        }
    }
    unreachable!("the largest value always reaches the total")
}

/// Classic dynamic-programming edit distance over chars.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for i in 1..=a.len() {
        let mut cur = vec![i; b.len() + 1];
        for j in 1..=b.len() {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

fn norm(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Is `candidate` within normalized distance 0.1 of any of `names`?
pub fn relevant(candidate: &str, names: &[String]) -> bool {
    let c = norm(candidate);
    names.iter().any(|n| {
        let n = norm(n);
        let longest = c.chars().count().max(n.chars().count());
        longest > 0 && (levenshtein(&c, &n) as f64) / (longest as f64) < 0.1
    })
}

pub struct OracleMetrics {
    pub map: Vec<f64>,
    pub ar: Vec<f64>,
    pub hit: Vec<f64>,
    pub mrr: f64,
}

/// MAP@k, AR@k, Hit@k and MRR re-evaluated from their definitions. Each
/// query is (ranked names, gold instances as name lists); queries without
/// gold instances are skipped.
pub fn oracle_metrics(queries: &[(Vec<String>, Vec<Vec<String>>)], ks: &[usize]) -> OracleMetrics {
    let eligible: Vec<_> = queries.iter().filter(|(_, g)| !g.is_empty()).collect();
    let n = eligible.len() as f64;
    let mut map = vec![0.0; ks.len()];
    let mut ar = vec![0.0; ks.len()];
    let mut hits = vec![0usize; ks.len()];
    let mut mrr = 0.0;
    for (ranked, gold) in &eligible {
        for (rank, cand) in ranked.iter().enumerate() {
            if gold.iter().any(|g| relevant(cand, g)) {
                mrr += 1.0 / (rank + 1) as f64;
                break;
            }
        }
        for (ki, &k) in ks.iter().enumerate() {
            let top: Vec<&String> = ranked.iter().take(k).collect();
            let rel = top.iter().filter(|c| gold.iter().any(|g| relevant(c, g))).count();
            if !top.is_empty() {
                map[ki] += rel as f64 / top.len() as f64;
            }
            let found = gold.iter().filter(|g| top.iter().any(|c| relevant(c, g))).count();
            ar[ki] += found as f64 / gold.len() as f64;
            hits[ki] += usize::from(rel > 0);
        }
    }
    if eligible.is_empty() {
        return OracleMetrics {
            map,
            ar,
            hit: vec![0.0; ks.len()],
            mrr: 0.0,
        };
    }
    OracleMetrics {
        map: map.iter().map(|v| v / n).collect(),
        ar: ar.iter().map(|v| v / n).collect(),
        hit: hits.iter().map(|&h| 100.0 * h as f64 / n).collect(),
        mrr: mrr / n,
    }
}
