//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on
//! any failure.

mod common;

use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use countqa_core::context::{classify, contextualize, select_representative};
use countqa_core::dataset::{load_dataset, load_predictions, write_predictions_to, LoadMode, PredictionRecord};
use countqa_core::eval::{evaluate, instance_metrics, pc_tradeoff, relaxed_match, InstanceItem, DEFAULT_KS};
use countqa_core::inference::{consolidate, WeightedCount};
use countqa_core::model::{AnswerSpan, CountCandidate, CountStrategy, GoldInstance};
use countqa_core::pipeline::{answer_all, ProviderSet, RunConfig};
use countqa_core::providers::{ProviderResult, Similarity};
use countqa_core::quantity::extract_count;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    check(elapsed <= limit, || format!("took {elapsed:?}, limit {limit:?}"))
}

fn wc(value: f64, confidence: f64) -> WeightedCount {
    WeightedCount::new(value, confidence)
}

fn worked_example() -> Outcome {
    let start = Instant::now();
    let input = [
        wc(150.0, 0.9),
        wc(160.0, 0.8),
        wc(180.0, 0.4),
        wc(180.0, 0.4),
        wc(210.0, 0.3),
    ];
    let expected = [
        (CountStrategy::MostConfident, 150.0),
        (CountStrategy::MostFrequent, 180.0),
        (CountStrategy::Median, 180.0),
        (CountStrategy::WeightedMedian, 160.0),
    ];
    for (strategy, want) in expected {
        let got = consolidate(&input, strategy).map_err(|e| e.to_string())?;
        check(got == want, || format!("{strategy}: got {got}, want {want}"))?;
    }
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok("MostConfident 150, MostFrequent 180, Median 180, WeightedMedian 160".into())
}

fn float_weighted_median(pairs: &[(f64, f64)]) -> f64 {
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let mut values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    for v in &values {
        let below: f64 = pairs.iter().filter(|p| p.0 <= *v).map(|p| p.1).sum();
        if below >= total / 2.0 {
            return *v;
        }
    }
    *values.last().unwrap()
}

fn weighted_median_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x5eed_0002);
    let cases = 1000;
    for case in 0..cases {
        let n = rng.random_range(1..=20);
        // thousandths: the oracle works in exact integer arithmetic
        let pairs: Vec<(u32, u32)> = (0..n)
            .map(|_| (rng.random_range(1..=30), rng.random_range(1..=1000)))
            .collect();
        let input: Vec<_> = pairs.iter().map(|&(v, w)| wc(v as f64, w as f64 / 1000.0)).collect();
        let got = consolidate(&input, CountStrategy::WeightedMedian).map_err(|e| e.to_string())?;
        let want = common::brute_weighted_median(&pairs) as f64;
        check(got == want, || format!("case {case} {pairs:?}: got {got}, want {want}"))?;
    }
    for case in 0..cases {
        let n = rng.random_range(1..=20);
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.random_range(1..=1000) as f64, 1.0 - rng.random::<f64>()))
            .collect();
        let input: Vec<_> = pairs.iter().map(|&(v, w)| wc(v, w)).collect();
        let got = consolidate(&input, CountStrategy::WeightedMedian).map_err(|e| e.to_string())?;
        let want = float_weighted_median(&pairs);
        check(got == want, || {
            format!("float case {case} {pairs:?}: got {got}, want {want}")
        })?;
    }
    within(start.elapsed(), Duration::from_secs(5))?;
    Ok(format!("{} random multisets, sizes 1-20, exact match", 2 * cases))
}

/// Similarity read from a table keyed by the candidate text.
struct StubSimilarity(HashMap<String, f64>);

impl Similarity for StubSimilarity {
    fn name(&self) -> &str {
        "stub"
    }
    fn similarity(&self, a: &str, _b: &str) -> ProviderResult<f64> {
        Ok(*self.0.get(a).unwrap_or(&0.5))
    }
}

fn candidate(text: &str, confidence: f64) -> Result<CountCandidate, String> {
    let value = extract_count(text)
        .ok_or_else(|| format!("no count in {text:?}"))?
        .value;
    let span = AnswerSpan::new("s", text, confidence).map_err(|e| e.to_string())?;
    CountCandidate::new(span, value).map_err(|e| e.to_string())
}

fn names(list: &[CountCandidate]) -> BTreeSet<&str> {
    list.iter().map(|c| c.cnp_text.as_str()).collect()
}

fn languages_example() -> Outcome {
    let rows = [
        ("estimated 700 languages", 0.8),
        ("700 languages", 0.7),
        ("about 750 dialects", 0.7),
        ("27 major regional languages", 0.6),
        ("5 official languages", 0.8),
        ("2000 ethnic groups", 0.4),
        ("85 million native speakers", 0.5),
    ];
    let cands = rows
        .iter()
        .map(|&(t, c)| candidate(t, c))
        .collect::<Result<Vec<_>, _>>()?;
    let sim = StubSimilarity(rows.iter().map(|&(t, _)| (t.to_string(), 0.5)).collect());
    let out = contextualize(&cands, 700.0, 0.3, &sim).map_err(|e| e.to_string())?;
    check(out.cnp_rep.cnp_text == "estimated 700 languages", || {
        format!("rep {}", out.cnp_rep.cnp_text)
    })?;
    let expect = |got: BTreeSet<&str>, want: &[&str], what: &str| {
        let want: BTreeSet<&str> = want.iter().copied().collect();
        check(got == want, || format!("{what}: got {got:?}, want {want:?}"))
    };
    expect(
        names(&out.synonyms),
        &["700 languages", "about 750 dialects"],
        "synonyms",
    )?;
    expect(
        names(&out.subgroups),
        &["27 major regional languages", "5 official languages"],
        "subgroups",
    )?;
    expect(
        names(&out.incomparables),
        &["2000 ethnic groups", "85 million native speakers"],
        "incomparables",
    )?;
    Ok("rep, synonyms, subgroups and incomparables match the expected sets".into())
}

fn partition_property() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed_0004);
    let sets = 1000;
    for case in 0..sets {
        let n = rng.random_range(1..=15);
        let mut cands = Vec::with_capacity(n);
        let mut sims = HashMap::new();
        for i in 0..n {
            let text = format!("cnp {i}");
            let value = rng.random_range(1..=200) as f64;
            let span = AnswerSpan::new(format!("s{i}"), &text, 1.0 - rng.random::<f64>()).map_err(|e| e.to_string())?;
            cands.push(CountCandidate::new(span, value).map_err(|e| e.to_string())?);
            sims.insert(text, rng.random_range(-1.0..=1.0));
        }
        let c_pred = cands[rng.random_range(0..n)].value;
        let sim = StubSimilarity(sims);
        let rep = select_representative(&cands, c_pred).map_err(|e| e.to_string())?;
        let mut previous: Option<BTreeSet<String>> = None;
        for step in 0..=10 {
            let alpha = step as f64 / 10.0;
            let out = classify(&cands, rep, c_pred, alpha, &sim).map_err(|e| e.to_string())?;
            let parts = [names(&out.synonyms), names(&out.subgroups), names(&out.incomparables)];
            let total: usize = parts.iter().map(BTreeSet::len).sum();
            check(total + 1 == n, || {
                format!("case {case} alpha {alpha}: {total} + 1 != {n}")
            })?;
            let mut union: BTreeSet<&str> = parts.iter().flatten().copied().collect();
            union.insert(out.cnp_rep.cnp_text.as_str());
            check(union.len() == n, || {
                format!("case {case} alpha {alpha}: parts overlap or miss")
            })?;
            let syn: BTreeSet<String> = parts[0].iter().map(|s| s.to_string()).collect();
            if let Some(prev) = &previous {
                check(prev.is_subset(&syn), || {
                    format!("case {case}: synonyms shrank at alpha {alpha}")
                })?;
            }
            previous = Some(syn);
        }
    }
    Ok(format!("{sets} random sets, alpha 0.0..1.0 step 0.1"))
}

fn pc_pairs() -> Outcome {
    let pairs = [(37.7, 84.7, 52.2), (45.0, 96.1, 61.3), (93.2, 18.3, 30.6)];
    let mut shown = Vec::new();
    for (rp, cov, want) in pairs {
        let got = pc_tradeoff(rp, cov);
        check((got - want).abs() <= 0.05, || {
            format!("({rp}, {cov}) -> {got:.3}, want {want} +/- 0.05")
        })?;
        shown.push(format!("{got:.2}"));
    }
    Ok(format!("P/C {} within 0.05", shown.join(", ")))
}

const POOL: [&str; 10] = [
    "Maui", "maui", "Mauii", "Oahu", "O ahu", "Kauai", "Kaui", "Lanai", "Molokai", "Niihau",
];

fn metric_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed_0006);
    let cases = 500;
    let ks: Vec<usize> = (1..=12).collect();
    for case in 0..cases {
        let nq = rng.random_range(1..=4);
        let mut queries = Vec::new();
        for _ in 0..nq {
            let ranked: Vec<String> = (0..rng.random_range(0..=12))
                .map(|_| POOL[rng.random_range(0..POOL.len())].to_string())
                .collect();
            let gold: Vec<Vec<String>> = (0..rng.random_range(0..=4))
                .map(|_| {
                    let mut names = vec![POOL[rng.random_range(0..POOL.len())].to_string()];
                    if rng.random_bool(0.3) {
                        names.push(POOL[rng.random_range(0..POOL.len())].to_string());
                    }
                    names
                })
                .collect();
            queries.push((ranked, gold));
        }
        let golds: Vec<Vec<GoldInstance>> = queries
            .iter()
            .map(|(_, g)| {
                g.iter()
                    .map(|names| GoldInstance {
                        canonical: names[0].clone(),
                        aliases: names[1..].to_vec(),
                    })
                    .collect()
            })
            .collect();
        let items: Vec<InstanceItem> = queries
            .iter()
            .zip(&golds)
            .enumerate()
            .map(|(i, ((ranked, _), gold))| InstanceItem {
                query_id: format!("q{i}"),
                ranked: ranked.clone(),
                gold,
            })
            .collect();
        let got = instance_metrics(&items, &ks).map_err(|e| e.to_string())?;
        let want = common::oracle_metrics(&queries, &ks);
        for (i, k) in ks.iter().enumerate() {
            check(got.map_at_k[k] == want.map[i], || {
                format!("case {case} MAP@{k}: {} vs {}", got.map_at_k[k], want.map[i])
            })?;
            check(got.ar_at_k[k] == want.ar[i], || {
                format!("case {case} AR@{k}: {} vs {}", got.ar_at_k[k], want.ar[i])
            })?;
            check(got.hit_at_k[k] == want.hit[i], || {
                format!("case {case} Hit@{k}: {} vs {}", got.hit_at_k[k], want.hit[i])
            })?;
        }
        check(got.mrr == want.mrr, || {
            format!("case {case} MRR: {} vs {}", got.mrr, want.mrr)
        })?;
        for w in ks.windows(2) {
            check(got.hit_at_k[&w[0]] <= got.hit_at_k[&w[1]], || {
                format!("case {case}: Hit@k not monotone")
            })?;
            check(got.ar_at_k[&w[0]] <= got.ar_at_k[&w[1]], || {
                format!("case {case}: AR@k not monotone")
            })?;
        }
    }
    Ok(format!("{cases} random cases, k = 1..12, exact match and monotone"))
}

fn parser_round_trip() -> Outcome {
    for n in 1..=10_000u64 {
        let words = common::words(n, false);
        let got = extract_count(&words).map(|p| p.value);
        check(got == Some(n as f64), || format!("{words:?} -> {got:?}"))?;
    }
    let mut rng = StdRng::seed_from_u64(0x5eed_0007);
    for _ in 0..100 {
        let f: f64 = rng.random_range(0.001..1.0);
        let text = format!("{f:.3}");
        check(extract_count(&text).is_none(), || format!("{text} was not rejected"))?;
    }
    Ok("1..=10000 round-trip through words; 100 fractions rejected".into())
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn end_to_end() -> Outcome {
    let dataset = load_dataset(fixture("fixture.jsonl"), LoadMode::Strict).map_err(|e| e.to_string())?;
    check(dataset.records.len() == 12, || {
        format!("{} records", dataset.records.len())
    })?;
    let mut runs = Vec::new();
    for jobs in [1, 3] {
        let outputs = answer_all(&dataset.records, &ProviderSet::lexical(), &RunConfig::default(), jobs)
            .map_err(|e| e.to_string())?;
        let records: Vec<PredictionRecord> = outputs.into_iter().map(|o| o.record).collect();
        let mut bytes = Vec::new();
        write_predictions_to(&mut bytes, &records).map_err(|e| e.to_string())?;
        runs.push(bytes);
    }
    check(runs[0] == runs[1], || "two runs differ".into())?;
    let golden = std::fs::read(fixture("golden/predictions.jsonl")).map_err(|e| e.to_string())?;
    check(runs[0] == golden, || "predictions differ from the golden file".into())?;

    let predictions = load_predictions(fixture("golden/predictions.jsonl")).map_err(|e| e.to_string())?;
    let report = evaluate(&predictions, &dataset.records, &DEFAULT_KS).map_err(|e| e.to_string())?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())? + "\n";
    let frozen = std::fs::read_to_string(fixture("golden/report.json")).map_err(|e| e.to_string())?;
    check(json == frozen, || "report differs from the frozen report".into())?;

    // the frozen numbers also agree with the test-side oracles
    let by_id: HashMap<&str, &PredictionRecord> = predictions.iter().map(|p| (p.query_id.as_str(), p)).collect();
    let queries: Vec<(Vec<String>, Vec<Vec<String>>)> = dataset
        .records
        .iter()
        .map(|r| {
            let ranked = by_id[r.id.as_str()]
                .instances
                .iter()
                .map(|i| i.instance.clone())
                .collect();
            let gold = r
                .gold_instances
                .iter()
                .map(|g| g.names().map(str::to_string).collect())
                .collect();
            (ranked, gold)
        })
        .collect();
    let oracle = common::oracle_metrics(&queries, &DEFAULT_KS);
    check(report.instances.mrr == oracle.mrr, || {
        "MRR disagrees with oracle".into()
    })?;
    let (mut answered, mut hits, mut eligible) = (0, 0, 0);
    for r in &dataset.records {
        if let Some(p) = by_id[r.id.as_str()].c_pred {
            answered += 1;
            if let Some(g) = r.gold_count {
                eligible += 1;
                hits += usize::from((0.9 * g..=1.1 * g).contains(&p));
            }
        }
    }
    let rp = 100.0 * hits as f64 / eligible as f64;
    check((report.count.relaxed_precision - rp).abs() < 1e-9, || {
        "RP disagrees with oracle".into()
    })?;
    check(report.count.answered == answered, || {
        "coverage disagrees with oracle".into()
    })?;
    Ok(format!(
        "byte-identical reruns ({} bytes), frozen report reproduced",
        runs[0].len()
    ))
}

fn relaxed_anchors() -> Outcome {
    check(relaxed_match(507.0, 503.0), || "(507, 503) should match".into())?;
    check(!relaxed_match(234.0, 503.0), || "(234, 503) should not match".into())?;
    Ok("(507, 503) match, (234, 503) no match".into())
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("consolidation worked example", worked_example),
        ("weighted median vs brute-force oracle", weighted_median_oracle),
        ("CNP categories of the languages example", languages_example),
        ("partition and alpha monotonicity", partition_property),
        ("P/C harmonic mean on published pairs", pc_pairs),
        ("instance metrics vs direct-definition oracle", metric_oracle),
        ("quantity parser round-trip", parser_round_trip),
        ("end-to-end determinism on the fixture", end_to_end),
        ("relaxed-match anchors", relaxed_anchors),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let ms = start.elapsed().as_secs_f64() * 1000.0;
        match outcome {
            Ok(detail) => println!("PASS {}. {name}: {detail} ({ms:.1} ms)", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {}. {name}: {why} ({ms:.1} ms)", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
