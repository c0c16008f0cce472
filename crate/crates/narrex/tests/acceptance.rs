//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any check fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{fixtures, mock_http, MockServer};
use narrex::artifacts::read_jsonl;
use narrex::assets;
use narrex::gateway::CacheMode;
use narrex::stages::{AtomsRecord, NormalizedRecord};
use narrex::{ConfigOverrides, Pipeline, RunConfig, Stage};
use narrex_core::aggregate::per_document_stats;
use narrex_core::cluster::{cosine_similarity, Assignment, ClusterIndex, Via};
use narrex_core::cot::{parse_cot_response, ParseMode};
use narrex_core::eval::deviation::{DeviationKind, DeviationRecord};
use narrex_core::eval::matching::{greedy_match, MatchPair};
use narrex_core::eval::report::evaluate_document;
use narrex_core::eval::tokens::jaccard;
use narrex_core::gateway::HashEmbedder;
use narrex_core::gold::{parse_gold_file, parse_gold_line, render_gold_line};
use narrex_core::label::ValenceTopic;
use narrex_core::narrative::{Connector, EventPair, RawNarrative};
use narrex_core::valence::{normalize_valence, Arrow};
use narrex_core::Source;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLD_BUDGET: Duration = Duration::from_secs(1);
const GOLDEN_REPORT_BUDGET: Duration = Duration::from_secs(1);
const ORACLE_BUDGET: Duration = Duration::from_secs(10);
const REPLAY_BUDGET: Duration = Duration::from_secs(5);
const ORACLE_TOLERANCE: f64 = 1e-9;
const COSINE_TOLERANCE: f64 = 1e-12;
const ORACLE_CASES: usize = 1000;
const SCALINGS: usize = 1000;
const FUZZ_CASES: usize = 10_000;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, budget: Duration) -> Result<String, String> {
    let took = start.elapsed();
    ensure(took < budget, || format!("took {took:?}, budget {budget:?}"))?;
    Ok(format!("{:.0} ms", took.as_secs_f64() * 1000.0))
}

// Gold format -----------------------------------------------------------

fn gold_round_trip() -> Check {
    let start = Instant::now();
    let text = std::fs::read_to_string(fixtures().join("appendix_gold.txt")).map_err(|e| e.to_string())?;
    let docs = parse_gold_file(&text, Source::Gold).map_err(|e| e.to_string())?;
    ensure(docs.len() == 3, || format!("{} documents", docs.len()))?;
    let lines: Vec<&str> = text
        .split("\n\n")
        .flat_map(|block| block.lines().skip(1))
        .filter(|l| !l.trim().is_empty())
        .collect();
    ensure(lines.len() == 15, || format!("{} narrative lines", lines.len()))?;
    ensure(lines.iter().any(|l| l.ends_with("(x)")), || "no scope marker in fixture".into())?;
    ensure(lines.iter().any(|l| l.contains('|') && l.contains('{')), || "no coreference in fixture".into())?;
    for line in &lines {
        let n = parse_gold_line(line).map_err(|e| format!("{line:?}: {e}"))?;
        let back = render_gold_line(&n).map_err(|e| format!("{line:?}: {e}"))?;
        ensure(back == *line, || format!("{line:?} rendered as {back:?}"))?;
    }
    let parsed: usize = docs.iter().map(|d| d.narratives.len()).sum();
    ensure(parsed == 15, || format!("{parsed} narratives in the parsed file"))?;
    Ok(format!("15/15 lines round-trip, {}", within(start, GOLD_BUDGET)?))
}

// Golden report for the first appendix document --------------------------

fn first_document(name: &str, source: Source) -> Result<Vec<RawNarrative>, String> {
    let text = std::fs::read_to_string(fixtures().join(name)).map_err(|e| e.to_string())?;
    let docs = parse_gold_file(&text, source).map_err(|e| e.to_string())?;
    Ok(docs.into_iter().next().ok_or("empty file")?.narratives)
}

fn deviation(kind: DeviationKind, reason: &str, predicted: Option<&str>, gold: Option<&str>, score: Option<f64>) -> DeviationRecord {
    DeviationRecord {
        kind,
        reason: reason.into(),
        predicted: predicted.map(String::from),
        gold: gold.map(String::from),
        score,
        manual: false,
    }
}

fn golden_report() -> Check {
    let start = Instant::now();
    let gold = first_document("appendix_gold.txt", Source::Gold)?;
    let model = first_document("appendix_model.txt", Source::Model)?;
    let eval = evaluate_document("doc-1", &model, &gold, 0.4, true, None).map_err(|e| e.to_string())?;

    // Hand-derived: model 1 and 2 equal gold 1 and 2 as token sets; model 5
    // shares 10 of gold 4's 15 tokens; models 3 and 4 find no free gold
    // narrative at or above the threshold.
    let pairs = vec![
        MatchPair { predicted: 0, gold: 0, score: 1.0 },
        MatchPair { predicted: 1, gold: 1, score: 1.0 },
        MatchPair { predicted: 4, gold: 3, score: 10.0 / 15.0 },
    ];
    ensure(eval.matching.pairs.len() == 3, || format!("pairs {:?}", eval.matching.pairs))?;
    for (got, want) in eval.matching.pairs.iter().zip(&pairs) {
        ensure(
            got.predicted == want.predicted && got.gold == want.gold && (got.score - want.score).abs() < 1e-12,
            || format!("pair {got:?}, expected {want:?}"),
        )?;
    }
    ensure(eval.matching.unmatched_predicted == [2, 3], || format!("{:?}", eval.matching.unmatched_predicted))?;
    ensure(eval.matching.unmatched_gold == [2, 4], || format!("{:?}", eval.matching.unmatched_gold))?;

    // The money-supply chain shifts meaning: the model makes money-supply
    // growth the cause of inflation, the text names the currency influx. It
    // surfaces as a missed gold narrative plus a hallucinated prediction.
    let mut want = vec![
        deviation(DeviationKind::Minor, "wording differs", Some("model-1.5"), Some("gold-1.4"), Some(10.0 / 15.0)),
        deviation(DeviationKind::Major, "missed narrative", None, Some("gold-1.3"), None),
        deviation(DeviationKind::Major, "missed narrative", None, Some("gold-1.5"), None),
        deviation(DeviationKind::Major, "hallucinated narrative", Some("model-1.3"), None, None),
        deviation(DeviationKind::Major, "hallucinated narrative", Some("model-1.4"), None, None),
    ];
    let mut got = eval.deviations.clone();
    for d in got.iter_mut().chain(want.iter_mut()) {
        d.score = d.score.map(|s| (s * 1e9).round() / 1e9);
    }
    ensure(got == want, || format!("deviations {got:?}"))?;
    ensure(gold[2].pair.event_a.contains("hard currency"), || "gold 3 is not the money-supply chain".into())?;
    ensure(model[2].pair.event_a.contains("money-supply"), || "model 3 is not the money-supply chain".into())?;

    ensure((eval.gold, eval.predicted) == (5, 5), || format!("{} gold, {} predicted", eval.gold, eval.predicted))?;
    ensure((eval.correct, eval.majors, eval.minors) == (3, 4, 1), || {
        format!("correct {}, majors {}, minors {}", eval.correct, eval.majors, eval.minors)
    })?;
    ensure((eval.jaccard - 8.0 / 21.0).abs() < 1e-12, || format!("jaccard {}", eval.jaccard))?;
    let accuracy = eval.correct as f64 / eval.gold as f64;
    ensure((accuracy - 0.6).abs() < 1e-12, || format!("accuracy {accuracy}"))?;
    Ok(format!("accuracy 0.6, 4 major, 1 minor, Jaccard 8/21, {}", within(start, GOLDEN_REPORT_BUDGET)?))
}

// Metric oracles ----------------------------------------------------------

fn below(rng: &mut ChaCha8Rng, n: u32) -> u32 {
    rng.next_u32() % n
}

fn jaccard_oracle(a: &[u32], b: &[u32]) -> f64 {
    let universe: BTreeSet<u32> = a.iter().chain(b).copied().collect();
    if universe.is_empty() {
        return 1.0;
    }
    let both = universe.iter().filter(|x| a.contains(x) && b.contains(x)).count();
    both as f64 / universe.len() as f64
}

fn stats_oracle(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Among all one-to-one matchings over pairs at or above the threshold, the
/// one whose pairs, sorted best first (score, then lower gold, then lower
/// prediction), form the largest sequence; a longer sequence wins a tie.
fn matching_oracle(scores: &[Vec<f64>], n_gold: usize, threshold: f64) -> Vec<(usize, usize)> {
    fn rank(x: &(usize, usize, f64), y: &(usize, usize, f64)) -> std::cmp::Ordering {
        y.2.total_cmp(&x.2).then(x.1.cmp(&y.1)).then(x.0.cmp(&y.0))
    }
    fn walk(
        p: usize,
        scores: &[Vec<f64>],
        threshold: f64,
        used: &mut Vec<bool>,
        cur: &mut Vec<(usize, usize, f64)>,
        best: &mut Vec<(usize, usize, f64)>,
    ) {
        if p == scores.len() {
            let mut seq = cur.clone();
            seq.sort_by(rank);
            let better = seq
                .iter()
                .zip(best.iter())
                .map(|(a, b)| rank(a, b))
                .find(|o| o.is_ne())
                .map(|o| o.is_lt())
                .unwrap_or(seq.len() > best.len());
            if better {
                *best = seq;
            }
            return;
        }
        walk(p + 1, scores, threshold, used, cur, best);
        for g in 0..used.len() {
            if !used[g] && scores[p][g] >= threshold {
                used[g] = true;
                cur.push((p, g, scores[p][g]));
                walk(p + 1, scores, threshold, used, cur, best);
                cur.pop();
                used[g] = false;
            }
        }
    }
    let mut best = Vec::new();
    walk(0, scores, threshold, &mut vec![false; n_gold], &mut Vec::new(), &mut best);
    let mut out: Vec<(usize, usize)> = best.iter().map(|&(p, g, _)| (p, g)).collect();
    out.sort_by_key(|&(_, g)| g);
    out
}

fn metric_oracles() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_611);
    for case in 0..ORACLE_CASES {
        let a: Vec<u32> = (0..below(&mut rng, 12)).map(|_| below(&mut rng, 16)).collect();
        let b: Vec<u32> = (0..below(&mut rng, 12)).map(|_| below(&mut rng, 16)).collect();
        let got = jaccard(&a.iter().copied().collect(), &b.iter().copied().collect());
        let want = jaccard_oracle(&a, &b);
        ensure((got - want).abs() <= ORACLE_TOLERANCE, || format!("jaccard case {case}: {got} vs {want}"))?;
    }
    for case in 0..ORACLE_CASES {
        let docs = 1 + below(&mut rng, 80) as usize;
        let counts: BTreeMap<String, u64> = (0..docs).map(|d| (format!("d{d}"), below(&mut rng, 15) as u64)).collect();
        let (mean, std) = per_document_stats(&counts).map_err(|e| e.to_string())?;
        let xs: Vec<f64> = counts.values().map(|&c| c as f64).collect();
        let (m, s) = stats_oracle(&xs);
        ensure((mean - m).abs() <= ORACLE_TOLERANCE && (std - s).abs() <= ORACLE_TOLERANCE, || {
            format!("stats case {case}: ({mean}, {std}) vs ({m}, {s})")
        })?;
    }
    for case in 0..ORACLE_CASES {
        let np = below(&mut rng, 5) as usize;
        let ng = below(&mut rng, 5) as usize;
        // coarse grid so ties are common
        let scores: Vec<Vec<f64>> = (0..np)
            .map(|_| (0..ng).map(|_| below(&mut rng, 11) as f64 / 10.0).collect())
            .collect();
        let threshold = below(&mut rng, 11) as f64 / 10.0;
        let m = greedy_match(&scores, ng, threshold);
        let got: Vec<(usize, usize)> = m.pairs.iter().map(|p| (p.predicted, p.gold)).collect();
        let want = matching_oracle(&scores, ng, threshold);
        ensure(got == want, || format!("matching case {case}: {got:?} vs {want:?} for {scores:?}"))?;
        for p in &m.pairs {
            ensure((p.score - scores[p.predicted][p.gold]).abs() <= ORACLE_TOLERANCE, || format!("matching case {case}: score"))?;
        }
    }
    Ok(format!("3 x {ORACLE_CASES} cases agree, {}", within(start, ORACLE_BUDGET)?))
}

// Replay end to end --------------------------------------------------------

fn outputs(run: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    for stage in Stage::PIPELINE {
        let dir = run.join(stage.name());
        for entry in std::fs::read_dir(&dir).map_err(|e| format!("{}: {e}", dir.display()))? {
            let path = entry.map_err(|e| e.to_string())?.path();
            let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
            out.insert(path.strip_prefix(run).unwrap().display().to_string(), bytes);
        }
    }
    Ok(out)
}

fn replay_end_to_end() -> Check {
    let start = Instant::now();
    // Any request would reach this server and be counted.
    let server = MockServer::start();
    let run = tempfile::tempdir().map_err(|e| e.to_string())?;
    let overrides = ConfigOverrides {
        run_dir: Some(run.path().to_path_buf()),
        cache_mode: Some(CacheMode::Replay),
        ..ConfigOverrides::default()
    };
    let config = RunConfig::load(&fixtures().join("figures.toml"), &overrides).map_err(|e| e.to_string())?;
    let pipeline = Pipeline::new(config).map_err(|e| e.to_string())?.with_http(mock_http(&server));
    pipeline.run_all(&Stage::PIPELINE).map_err(|e| e.to_string())?;
    let first = outputs(run.path())?;
    pipeline.run_all(&Stage::PIPELINE).map_err(|e| e.to_string())?;
    let second = outputs(run.path())?;
    ensure(first == second, || "second run differs".into())?;

    let dir = pipeline.run_dir();
    let normalized: Vec<NormalizedRecord> = read_jsonl(&dir.path("normalize", "normalized.jsonl")).map_err(|e| e.to_string())?;
    let transit = normalized
        .iter()
        .find(|n| n.doc_id == "fig-transit")
        .ok_or("no normalized narrative for the transit excerpt")?;
    ensure(transit.key == "UP monetary_policy -> UP inflation", || format!("transit gave {:?}", transit.key))?;
    ensure(transit.human == "↑ monetary policy → ↑ inflation", || format!("transit reads {:?}", transit.human))?;

    let atoms: Vec<AtomsRecord> = read_jsonl(&dir.path("decompose", "atoms.jsonl")).map_err(|e| e.to_string())?;
    let fork = atoms
        .iter()
        .find(|a| a.narrative.starts_with("fig-fork") && a.atoms.len() > 1)
        .ok_or("no fork in the fork excerpt")?;
    ensure(fork.atoms.len() == 3, || format!("fork has {} branches", fork.atoms.len()))?;
    let decomposed: Vec<RawNarrative> = read_jsonl(&dir.path("decompose", "narratives.jsonl")).map_err(|e| e.to_string())?;
    let branches = decomposed.iter().filter(|n| n.doc_id == "fig-fork").count();
    ensure(branches == 3, || format!("{branches} narratives after fork expansion"))?;
    ensure(server.request_count() == 0, || format!("{} network requests", server.request_count()))?;
    Ok(format!("transit narrative, 3-way fork, identical reruns, 0 requests, {}", within(start, REPLAY_BUDGET)?))
}

// Valence ------------------------------------------------------------------

fn valence_table() -> Check {
    let dict = assets::parse_valence(assets::VALENCE).map_err(|e| e.to_string())?;
    let rows = [
        ("Inflation", "rising", Arrow::Up),
        ("Economy", "positive", Arrow::Up),
        ("Interest rates", "rising", Arrow::Up),
        ("Monetary policy", "loose", Arrow::Up),
        ("Monetary policy", "tight", Arrow::Down),
        ("Economy", "falling", Arrow::Down),
        ("Inflation", "falling", Arrow::Down),
        ("Energy prices", "rising", Arrow::Up),
        ("Stock Market", "rising", Arrow::Up),
        // the polarity-reversal pair
        ("economic stability", "rising", Arrow::Up),
        ("economic vulnerability", "rising", Arrow::Down),
    ];
    for (topic, valence, arrow) in rows {
        let vt = ValenceTopic::new(topic, valence).map_err(|e| e.to_string())?;
        let got = normalize_valence(&vt, &dict).map_err(|e| format!("{valence} {topic}: {e}"))?;
        ensure(got == arrow, || format!("{valence} {topic} gave {got:?}"))?;
    }
    Ok(format!("{} rows", rows.len()))
}

// Clustering ---------------------------------------------------------------

fn same_assignment(a: &Assignment, b: &Assignment) -> bool {
    match (a, b) {
        (Assignment::Clustered { slug: x, anchor: ax, .. }, Assignment::Clustered { slug: y, anchor: ay, .. }) => {
            x == y && ax == ay
        }
        (
            Assignment::Unclustered { reason: r, nearest: n, .. },
            Assignment::Unclustered { reason: s, nearest: m, .. },
        ) => r == s && n == m,
        _ => false,
    }
}

fn clustering() -> Check {
    let embedder = HashEmbedder { dim: 16 };
    let clusters = assets::parse_clusters(assets::CLUSTERS).map_err(|e| e.to_string())?;
    let index = ClusterIndex::build(clusters.clone(), 0.3, &embedder).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let unit = |rng: &mut ChaCha8Rng| (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    let mut clustered = 0;
    for case in 0..SCALINGS {
        let v: Vec<f64> = (0..16).map(|_| unit(&mut rng) * 2.0 - 1.0).collect();
        let scale = 10f64.powf(unit(&mut rng) * 8.0 - 4.0);
        let scaled: Vec<f64> = v.iter().map(|x| x * scale).collect();
        let (a, b) = (index.assign_vector(&v), index.assign_vector(&scaled));
        ensure(same_assignment(&a, &b), || format!("scaling case {case} by {scale}: {a:?} vs {b:?}"))?;
        clustered += usize::from(matches!(a, Assignment::Clustered { .. }));
    }
    ensure(clustered > 0 && clustered < SCALINGS, || format!("{clustered} of {SCALINGS} clustered; vary the threshold"))?;

    let strict = ClusterIndex::build(clusters.clone(), 1.0, &embedder).map_err(|e| e.to_string())?;
    for c in &clusters {
        for anchor in &c.anchors {
            let a = strict.assign(anchor, &embedder);
            ensure(
                matches!(&a, Assignment::Clustered { via: Via::Anchor, label, .. } if *label == c.label),
                || format!("anchor {anchor:?} gave {a:?}"),
            )?;
        }
    }
    let anchors: BTreeSet<String> = clusters.iter().flat_map(|c| c.anchors.iter().map(|a| a.to_lowercase())).collect();
    let mut probes: Vec<String> = anchors.iter().map(|a| format!("{a} outlook")).collect();
    probes.extend((0..200).map(|i| format!("topic {i}")));
    for probe in &probes {
        let a = strict.assign(probe, &embedder);
        let ok = match &a {
            Assignment::Clustered { via: Via::Synonym, .. } => true,
            Assignment::Clustered { .. } => false,
            Assignment::Unclustered { .. } => true,
        };
        ensure(ok, || format!("threshold 1.0 clustered non-anchor {probe:?}: {a:?}"))?;
    }
    let cos = cosine_similarity(&[1.0, 2.0, 2.0], &[2.0, 1.0, 2.0]).map_err(|e| e.to_string())?;
    ensure((cos - 8.0 / 9.0).abs() <= COSINE_TOLERANCE, || format!("cosine {cos}"))?;
    Ok(format!("{SCALINGS} scalings stable, {} probes rejected at 1.0, cosine 8/9", probes.len()))
}

// Connector fuzzing ----------------------------------------------------------

fn record(connector: &str) -> String {
    serde_json::json!({"narratives": [{
        "Causal Restatement": {"Event A": "rates rose", "causal connector": connector, "Event B": "prices fell"}
    }]})
    .to_string()
}

fn fuzz_connector(rng: &mut ChaCha8Rng) -> String {
    const ALPHABET: &[char] = &['a', 'b', 'c', 'd', 'e', 'i', 's', 'u', 'y', ' ', '-', 'C', 'S', '\t', 'é', '0'];
    let base = ["causes", "is caused by", "caused by", ""][below(rng, 4) as usize];
    let mut chars: Vec<char> = base.chars().collect();
    match below(rng, 5) {
        0 => {
            chars = (0..below(rng, 16)).map(|_| ALPHABET[below(rng, ALPHABET.len() as u32) as usize]).collect();
        }
        1 if !chars.is_empty() => {
            let i = below(rng, chars.len() as u32) as usize;
            chars.remove(i);
        }
        2 => {
            let i = below(rng, chars.len() as u32 + 1) as usize;
            chars.insert(i, ALPHABET[below(rng, ALPHABET.len() as u32) as usize]);
        }
        3 if !chars.is_empty() => {
            let i = below(rng, chars.len() as u32) as usize;
            chars[i] = chars[i].to_ascii_uppercase();
        }
        _ => {
            chars.insert(0, ' ');
        }
    }
    chars.into_iter().collect()
}

fn connector_fuzz() -> Check {
    let accepted = ["causes", "is caused by", "caused by"];
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let mut tested = 0;
    while tested < FUZZ_CASES {
        let c = fuzz_connector(&mut rng);
        if accepted.contains(&c.as_str()) {
            continue;
        }
        tested += 1;
        ensure(parse_cot_response(&record(&c), ParseMode::Strict).is_err(), || format!("accepted connector {c:?}"))?;
        let lenient = parse_cot_response(&record(&c), ParseMode::Lenient).map_err(|e| e.to_string())?;
        ensure(lenient.traces.is_empty() && lenient.rejected() == 1, || format!("lenient kept {c:?}"))?;
    }
    for (c, want) in [("causes", Connector::Causes), ("is caused by", Connector::CausedBy)] {
        let parsed = parse_cot_response(&record(c), ParseMode::Strict).map_err(|e| format!("{c:?}: {e}"))?;
        let got = parsed.traces.first().map(|t| t.causal_restatement.connector);
        ensure(got == Some(want), || format!("{c:?} parsed as {got:?}"))?;
    }
    Ok(format!("{FUZZ_CASES} fuzzed connectors rejected, both canonical forms accepted"))
}

// Optional live smoke run ------------------------------------------------------

fn live_smoke() -> Option<Check> {
    std::env::var("NARRATIVE_API_KEY").ok().filter(|k| !k.trim().is_empty())?;
    Some((|| {
        let run = tempfile::tempdir().map_err(|e| e.to_string())?;
        let overrides = ConfigOverrides {
            run_dir: Some(run.path().to_path_buf()),
            cache_mode: Some(CacheMode::Live),
            parallelism: Some(1),
            ..ConfigOverrides::default()
        };
        let config = RunConfig::load(&fixtures().join("figures.toml"), &overrides).map_err(|e| e.to_string())?;
        let pipeline = Pipeline::new(config).map_err(|e| e.to_string())?;
        pipeline.run_all(&[Stage::Ingest, Stage::Extract]).map_err(|e| e.to_string())?;
        let narratives: Vec<RawNarrative> =
            read_jsonl(&pipeline.run_dir().path("extract", "narratives.jsonl")).map_err(|e| e.to_string())?;
        for n in &narratives {
            EventPair::new(n.pair.event_a.clone(), n.pair.connector, n.pair.event_b.clone())
                .map_err(|e| format!("{}: {e}", n.id))?;
            ensure(n.source == Source::Model && !n.id.is_empty(), || format!("{}: bad provenance", n.id))?;
        }
        Ok(format!("{} narratives, all valid", narratives.len()))
    })())
}

fn main() -> ExitCode {
    let checks: [(&str, fn() -> Check); 7] = [
        ("gold format round-trip over the annotated lists", gold_round_trip),
        ("golden report for the first annotated document", golden_report),
        ("metric oracles (jaccard, per-document stats, greedy matching)", metric_oracles),
        ("replay end to end over the figure excerpts", replay_end_to_end),
        ("valence dictionary covers the valence table", valence_table),
        ("clustering properties", clustering),
        ("connector fuzzing", connector_fuzz),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    match live_smoke() {
        None => println!("SKIP  live smoke run: NARRATIVE_API_KEY is not set"),
        Some(Ok(detail)) => println!("PASS  live smoke run: {detail}"),
        Some(Err(why)) => {
            failed += 1;
            println!("FAIL  live smoke run: {why}");
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

