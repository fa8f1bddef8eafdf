//! Acceptance suite. Runs every acceptance criterion and prints one line per
//! criterion; exits non-zero if any fails.
//!
//! Oracles here are written independently of the library code they check:
//! span merging, span intersection, candidate-rule enumeration, in-place rule
//! sweeps and binomial quantiles are all recomputed from first principles.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nerkit_core::augment::{
    augment_corpus, build_label_token_distribution, lwtr, read_lexicon, shuffle_within_segments,
    synonym_replace, AugmentConfig, LabelTokenDistribution, Technique,
};
use nerkit_core::brill::{
    apply_rules, apply_rules_corpus, learn_rules, learn_rules_traced, read_rules, write_rules,
    BrillConfig, BrillRule, LearningSet, Slot,
};
use nerkit_core::eval::{f_measure, implied_gold_count, score};
use nerkit_core::pipeline::{run_pipeline, PipelineConfig, Stage};
use nerkit_core::rng::RandomStream;
use nerkit_core::schemes::{convert, convert_corpus, decode_spans, encode_tags, repair};
use nerkit_core::semisup::{build_silver_corpus, consensus_spans, ConsensusConfig};
use nerkit_core::synth::{generate, SynthConfig};
use nerkit_core::taggers::{
    surfaces_of, tag_corpus, train_perceptron, train_unigram, Model, Tagger,
};
use nerkit_core::{read_conll, Corpus, EntitySpan, RepairPolicy, Scheme, Sentence};

const LABELS: [&str; 6] = [
    "problem",
    "test",
    "treatment",
    "occurrence",
    "evidential",
    "dept",
];

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(limit: Duration, started: Instant) -> (bool, String) {
    let took = started.elapsed();
    (
        took < limit,
        format!("{:.2}s of {}s", took.as_secs_f64(), limit.as_secs()),
    )
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn bundled_train() -> Corpus {
    let file = std::fs::File::open(data_dir().join("train.conll")).expect("bundled train.conll");
    read_conll(std::io::BufReader::new(file), None).expect("bundled corpus parses")
}

// ---------------------------------------------------------------- generators

/// Disjoint spans over `len` tokens; adjacent spans are allowed.
fn random_spans(rng: &mut ChaCha8Rng, len: usize, labels: usize) -> Vec<EntitySpan> {
    let mut spans = Vec::new();
    let mut i = 0;
    while i < len {
        if rng.random_bool(0.35) {
            let end = (i + rng.random_range(1..=4)).min(len);
            spans.push(EntitySpan::new(i, end, LABELS[rng.random_range(0..labels)]));
            i = end;
        } else {
            i += 1;
        }
    }
    spans
}

fn random_tags(rng: &mut ChaCha8Rng, scheme: Scheme, len: usize) -> Vec<String> {
    let prefixes: &[&str] = match scheme {
        Scheme::Io => &["I"],
        Scheme::Bio => &["B", "I"],
        Scheme::Bioes => &["B", "I", "E", "S"],
    };
    (0..len)
        .map(|_| {
            if rng.random_bool(0.3) {
                "O".to_owned()
            } else {
                let p = prefixes[rng.random_range(0..prefixes.len())];
                format!("{p}-{}", LABELS[rng.random_range(0..3)])
            }
        })
        .collect()
}

fn words(len: usize) -> Vec<String> {
    (0..len).map(|i| format!("w{i}")).collect()
}

// ------------------------------------------------------------------- oracles

/// Merges adjacent same-label spans by repeated pairwise fusion.
fn merge_adjacent(spans: &[EntitySpan]) -> Vec<EntitySpan> {
    let mut out = spans.to_vec();
    loop {
        let hit = out
            .windows(2)
            .position(|w| w[0].end == w[1].start && w[0].label == w[1].label);
        match hit {
            Some(k) => {
                let next = out.remove(k + 1);
                out[k].end = next.end;
            }
            None => return out,
        }
    }
}

/// Every possible (start, end, label) triple kept iff it is in all sets.
fn brute_intersection(sets: &[Vec<EntitySpan>], len: usize) -> BTreeSet<EntitySpan> {
    let mut out = BTreeSet::new();
    for start in 0..len {
        for end in start + 1..=len {
            for label in LABELS {
                let cand = EntitySpan::new(start, end, label);
                if sets.iter().all(|s| s.contains(&cand)) {
                    out.insert(cand);
                }
            }
        }
    }
    out
}

/// Central 99.9% interval of Binomial(n, p): the 0.0005 and 0.9995 quantiles.
fn binomial_interval(n: u64, p: f64) -> (u64, u64) {
    let mut log_pmf = n as f64 * (1.0 - p).ln();
    let ratio = (p / (1.0 - p)).ln();
    let mut cdf = 0.0;
    let (mut lo, mut hi) = (None, None);
    for k in 0..=n {
        if k > 0 {
            log_pmf += ((n - k + 1) as f64).ln() - (k as f64).ln() + ratio;
        }
        cdf += log_pmf.exp();
        if lo.is_none() && cdf >= 0.0005 {
            lo = Some(k);
        }
        if hi.is_none() && cdf >= 0.9995 {
            hi = Some(k);
            break;
        }
    }
    (lo.unwrap_or(0), hi.unwrap_or(n))
}

/// The twelve templates, written out independently of the library.
fn oracle_templates() -> Vec<Vec<Slot>> {
    use Slot::{Tag, Word};
    vec![
        vec![Tag(-1)],
        vec![Tag(1)],
        vec![Tag(-2), Tag(-1)],
        vec![Tag(1), Tag(2)],
        vec![Word(0)],
        vec![Word(-1)],
        vec![Word(1)],
        vec![Word(0), Tag(-1)],
        vec![Word(0), Tag(1)],
        vec![Tag(-1), Tag(1)],
        vec![Word(-1), Word(0)],
        vec![Word(0), Word(1)],
    ]
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct OracleRule {
    conds: Vec<(Slot, String)>,
    from: String,
    to: String,
}

fn slot_value(slot: Slot, words: &[&str], tags: &[String], i: usize) -> Option<String> {
    let (off, from_tags) = match slot {
        Slot::Tag(o) => (o, true),
        Slot::Word(o) => (o, false),
    };
    let j = i as i64 + off as i64;
    if j < 0 || j >= tags.len() as i64 {
        return None;
    }
    let j = j as usize;
    Some(if from_tags {
        tags[j].clone()
    } else {
        words[j].to_owned()
    })
}

/// One left-to-right in-place sweep.
fn oracle_sweep(rule: &OracleRule, words: &[&str], tags: &mut [String]) {
    for i in 0..tags.len() {
        if tags[i] != rule.from {
            continue;
        }
        let fires = rule
            .conds
            .iter()
            .all(|(slot, v)| slot_value(*slot, words, tags, i).as_deref() == Some(v.as_str()));
        if fires {
            tags[i] = rule.to.clone();
        }
    }
}

/// Best candidate by (score, accuracy, serialization) over every template
/// instantiation at every error position. Also reports whether the maximum
/// score is attained by a single candidate.
fn oracle_best_rule(
    initial: &Corpus,
    gold: &Corpus,
    min_acc: f64,
) -> Option<(String, i64, f64, bool)> {
    let mut candidates = BTreeSet::new();
    for (s, g) in initial.sentences.iter().zip(&gold.sentences) {
        let words = s.surfaces();
        let tags: Vec<String> = s.tags().iter().map(|t| t.to_string()).collect();
        for i in 0..tags.len() {
            let gold_tag = &g.tokens[i].tag;
            if &tags[i] == gold_tag {
                continue;
            }
            for template in oracle_templates() {
                let conds: Option<Vec<(Slot, String)>> = template
                    .iter()
                    .map(|&slot| slot_value(slot, &words, &tags, i).map(|v| (slot, v)))
                    .collect();
                if let Some(conds) = conds {
                    candidates.insert(OracleRule {
                        conds,
                        from: tags[i].clone(),
                        to: gold_tag.clone(),
                    });
                }
            }
        }
    }
    let mut scored = Vec::new();
    for cand in candidates {
        let (mut good, mut bad) = (0i64, 0i64);
        for (s, g) in initial.sentences.iter().zip(&gold.sentences) {
            let words = s.surfaces();
            let before: Vec<String> = s.tags().iter().map(|t| t.to_string()).collect();
            let mut after = before.clone();
            oracle_sweep(&cand, &words, &mut after);
            for i in 0..after.len() {
                let truth = &g.tokens[i].tag;
                if before[i] != after[i] {
                    if &after[i] == truth {
                        good += 1;
                    } else if &before[i] == truth {
                        bad += 1;
                    }
                }
            }
        }
        if good + bad == 0 {
            continue;
        }
        let acc = good as f64 / (good + bad) as f64;
        if acc < min_acc {
            continue;
        }
        let text = {
            let conds: Vec<String> = cand.conds.iter().map(|(s, v)| format!("{s}={v}")).collect();
            format!(
                "FROM {} TO {} IF {}",
                cand.from,
                cand.to,
                conds.join(" AND ")
            )
        };
        scored.push((good - bad, acc, text));
    }
    let top = scored.iter().map(|c| c.0).max()?;
    let at_top = scored.iter().filter(|c| c.0 == top).count();
    let best = scored
        .into_iter()
        .max_by(|a, b| {
            a.0.cmp(&b.0)
                .then(a.1.partial_cmp(&b.1).unwrap())
                .then(b.2.cmp(&a.2))
        })
        .unwrap();
    Some((best.2, best.0, best.1, at_top == 1))
}

// ----------------------------------------------------------------- criteria

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut failures = Vec::new();
    for case in 0..1000 {
        let len = rng.random_range(1..=40);
        let labels = rng.random_range(1..=6);
        let spans = random_spans(&mut rng, len, labels);
        for scheme in [Scheme::Bio, Scheme::Bioes] {
            let tags = encode_tags(&spans, len, scheme).unwrap();
            if decode_spans(&tags, scheme, RepairPolicy::Strict).unwrap() != spans {
                failures.push(format!("encode/decode {scheme} case {case}"));
            }
            let io = convert(&tags, scheme, Scheme::Io, RepairPolicy::Strict).unwrap();
            let back = convert(&io, Scheme::Io, scheme, RepairPolicy::Strict).unwrap();
            if back != encode_tags(&merge_adjacent(&spans), len, scheme).unwrap() {
                failures.push(format!("{scheme}->IO->{scheme} case {case}"));
            }
        }
        let bio = encode_tags(&spans, len, Scheme::Bio).unwrap();
        let bioes = convert(&bio, Scheme::Bio, Scheme::Bioes, RepairPolicy::Strict).unwrap();
        if convert(&bioes, Scheme::Bioes, Scheme::Bio, RepairPolicy::Strict).unwrap() != bio {
            failures.push(format!("BIO->BIOES->BIO case {case}"));
        }
    }
    let (fast, time) = within(Duration::from_secs(5), started);
    check(
        failures.is_empty() && fast,
        format!(
            "{} round-trip failures{}; {time}",
            failures.len(),
            first_issue(&failures)
        ),
    )
}

/// Empty, or the first problem found, for a detail line.
fn first_issue(found: &[String]) -> String {
    found
        .first()
        .map(|f| format!(" (first: {f})"))
        .unwrap_or_default()
}

fn criterion_2() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut failures = 0;
    for scheme in Scheme::ALL {
        for _ in 0..1000 {
            let len = rng.random_range(0..=30);
            let tags = random_tags(&mut rng, scheme, len);
            for policy in [RepairPolicy::Conll, RepairPolicy::Discard] {
                let fixed = repair(&tags, scheme, policy).unwrap();
                let strict_ok = decode_spans(&fixed, scheme, RepairPolicy::Strict).is_ok();
                let idempotent = repair(&fixed, scheme, policy).unwrap() == fixed;
                if !strict_ok || !idempotent {
                    failures += 1;
                }
            }
        }
    }
    let (fast, time) = within(Duration::from_secs(5), started);
    check(
        failures == 0 && fast,
        format!("{failures} failures over 3x1000 sequences; {time}"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = 0;
    for _ in 0..500 {
        let n = rng.random_range(1..=8);
        let mut gold_sents = Vec::new();
        let mut pred_sents = Vec::new();
        // label -> (gold, predicted, correct) from the generated spans directly
        let mut oracle: BTreeMap<&str, (usize, usize, usize)> = BTreeMap::new();
        let pred_scheme = if rng.random_bool(0.5) {
            Scheme::Bio
        } else {
            Scheme::Bioes
        };
        for _ in 0..n {
            let len = rng.random_range(1..=20);
            let gold = random_spans(&mut rng, len, 3);
            let pred = if rng.random_bool(0.5) {
                // perturb gold so matches are common
                gold.iter()
                    .filter(|_| rng.random_bool(0.7))
                    .cloned()
                    .collect()
            } else {
                random_spans(&mut rng, len, 3)
            };
            for s in &gold {
                oracle
                    .entry(LABELS.iter().find(|l| **l == s.label).unwrap())
                    .or_default()
                    .0 += 1;
            }
            for s in &pred {
                let e = oracle
                    .entry(LABELS.iter().find(|l| **l == s.label).unwrap())
                    .or_default();
                e.1 += 1;
                if gold.contains(s) {
                    e.2 += 1;
                }
            }
            let w = words(len);
            gold_sents.push(Sentence::from_parts(
                &w,
                &encode_tags(&gold, len, Scheme::Bio).unwrap(),
            ));
            pred_sents.push(Sentence::from_parts(
                &w,
                &encode_tags(&pred, len, pred_scheme).unwrap(),
            ));
        }
        let report = score(
            &Corpus::new(gold_sents, Scheme::Bio),
            &Corpus::new(pred_sents, pred_scheme),
            RepairPolicy::Strict,
        )
        .unwrap();
        let mut total = (0, 0, 0);
        for (label, &(g, p, c)) in &oracle {
            total = (total.0 + g, total.1 + p, total.2 + c);
            let row = report.label(label);
            let got = row.map_or((0, 0, 0), |r| {
                (r.gold_count, r.predicted_count, r.correct_count)
            });
            if got != (g, p, c) {
                mismatches += 1;
            }
        }
        let o = &report.overall;
        if (o.gold_count, o.predicted_count, o.correct_count) != total {
            mismatches += 1;
        }
    }
    let f1a = f_measure(82.09, 73.43);
    let f1b = f_measure(76.75, 76.45);
    let gold_a = implied_gold_count(13_423, 9_961, 73.74);
    let gold_b = implied_gold_count(13_283, 10_007, 74.47);
    let arithmetic = (f1a - 77.52).abs() <= 0.005
        && (f1b - 76.60).abs() <= 0.005
        && (gold_a - gold_b).abs() <= 1.0;
    // The published F1 values are rounded to two decimals; show how far that
    // rounding alone moves each implied count.
    let range = |pred, correct, f1: f64| {
        (
            implied_gold_count(pred, correct, f1 + 0.005),
            implied_gold_count(pred, correct, f1 - 0.005),
        )
    };
    let (a_lo, a_hi) = range(13_423, 9_961, 73.74);
    let (b_lo, b_hi) = range(13_283, 10_007, 74.47);
    check(
        mismatches == 0 && arithmetic,
        format!(
            "{mismatches} count mismatches over 500 pairs; F1 {f1a:.4} / {f1b:.4}; \
             implied gold {gold_a:.2} vs {gold_b:.2} (gap {:.2}, limit 1; \
             F1 rounding spans [{a_lo:.1}, {a_hi:.1}] and [{b_lo:.1}, {b_hi:.1}])",
            (gold_a - gold_b).abs()
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut problems = Vec::new();
    let corpus = convert_corpus(&bundled_train(), Scheme::Bioes, RepairPolicy::Conll).unwrap();
    let dist = build_label_token_distribution(&corpus);
    let lexicon = {
        let file = std::fs::File::open(data_dir().join("synonyms.tsv")).unwrap();
        read_lexicon(std::io::BufReader::new(file)).unwrap()
    };
    let spans_of =
        |s: &Sentence| decode_spans(&s.tags(), Scheme::Bioes, RepairPolicy::Strict).unwrap();
    let mut sr_changed = 0;
    for (i, s) in corpus.sentences.iter().take(1000).enumerate() {
        let mut rng = RandomStream::for_sentence(4, i, Technique::Lwtr.id(), 0);
        if lwtr(s, &dist, 0.5, &mut rng).unwrap().tags() != s.tags() {
            problems.push(format!("LWTR changed tags in sentence {i}"));
        }
        let mut rng = RandomStream::for_sentence(4, i, Technique::Sis.id(), 0);
        if shuffle_within_segments(s, Scheme::Bioes, 0.5, &mut rng)
            .unwrap()
            .tags()
            != s.tags()
        {
            problems.push(format!("SIS changed tags in sentence {i}"));
        }
        let mut rng = RandomStream::for_sentence(4, i, Technique::Sr.id(), 0);
        let sr = synonym_replace(s, &lexicon, 0.5, &mut rng);
        sr_changed += usize::from(sr != *s);
        let labels = |v: Vec<EntitySpan>| v.into_iter().map(|x| x.label).collect::<Vec<_>>();
        if labels(spans_of(&sr)) != labels(spans_of(s)) {
            problems.push(format!("SR changed spans in sentence {i}"));
        }
        let mut rng = RandomStream::for_sentence(4, i, 9, 0);
        let same = lwtr(s, &dist, 0.0, &mut rng).unwrap() == *s
            && synonym_replace(s, &lexicon, 0.0, &mut rng) == *s
            && shuffle_within_segments(s, Scheme::Bioes, 0.0, &mut rng).unwrap() == *s;
        if !same {
            problems.push(format!("p=0 not identity in sentence {i}"));
        }
    }
    if sr_changed == 0 {
        problems.push("SR never fired".into());
    }

    // LWTR replacement counts: 10,000 O tokens, replacement surfaces disjoint
    // from the originals so every success is visible.
    let original = Sentence::from_parts(&vec!["orig"; 10_000], &vec!["O"; 10_000]);
    let pool: BTreeMap<String, BTreeMap<String, u64>> = [(
        "O".to_owned(),
        (0..50).map(|k| (format!("r{k}"), 1 + k as u64)).collect(),
    )]
    .into();
    let pool = LabelTokenDistribution::from_counts(pool);
    let mut counts = Vec::new();
    for (k, p) in [0.1, 0.3, 0.7].into_iter().enumerate() {
        let mut rng = RandomStream::derive(44, &[k as u64]);
        let out = lwtr(&original, &pool, p, &mut rng).unwrap();
        let replaced = out.tokens.iter().filter(|t| t.surface != "orig").count() as u64;
        let (lo, hi) = binomial_interval(10_000, p);
        counts.push(format!("p={p}: {replaced} in [{lo},{hi}]"));
        if !(lo..=hi).contains(&replaced) {
            problems.push(format!(
                "LWTR count {replaced} outside [{lo},{hi}] at p={p}"
            ));
        }
    }

    // SIS over one fixed 3-token entity segment.
    let segment = Sentence::from_parts(&["a", "b", "c"], &["B-x", "I-x", "E-x"]);
    let mut freq: BTreeMap<String, usize> = BTreeMap::new();
    for trial in 0..10_000u64 {
        let mut rng = RandomStream::derive(45, &[trial]);
        let out = shuffle_within_segments(&segment, Scheme::Bioes, 1.0, &mut rng).unwrap();
        *freq.entry(out.surfaces().concat()).or_default() += 1;
    }
    let worst = freq
        .values()
        .map(|&c| (c as f64 / 10_000.0 - 1.0 / 6.0).abs())
        .fold(0.0, f64::max);
    if freq.len() != 6 || worst > 0.02 {
        problems.push(format!("SIS permutations {freq:?}"));
    }
    check(
        problems.is_empty(),
        format!(
            "{} problems{}; {}; SIS max deviation {worst:.4}",
            problems.len(),
            first_issue(&problems),
            counts.join(", ")
        ),
    )
}

fn criterion_5() -> Outcome {
    let train = bundled_train();
    let file = std::fs::File::open(data_dir().join("synonyms.tsv")).unwrap();
    let lexicon = read_lexicon(std::io::BufReader::new(file)).unwrap();
    let dist = build_label_token_distribution(&train);
    let cfg = AugmentConfig::default();
    let out = augment_corpus(&train, &cfg, &lexicon, &dist).unwrap();
    let ratio = out.token_count() as f64 / train.token_count() as f64;
    check(
        out.len() == 4 * train.len() && (3.8..=4.3).contains(&ratio),
        format!(
            "sentences {} -> {}; tokens {} -> {} (ratio {ratio:.3})",
            train.len(),
            out.len(),
            train.token_count(),
            out.token_count()
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut problems = Vec::new();
    let mut preds = [Vec::new(), Vec::new()];
    let mut raw = Vec::new();
    let mut oracle_nonempty = 0;
    for case in 0..500 {
        let len = rng.random_range(1..=15);
        let a = random_spans(&mut rng, len, 2);
        // Overlap with `a` often enough that the intersection is non-trivial.
        let b: Vec<EntitySpan> = if rng.random_bool(0.6) {
            a.iter().filter(|_| rng.random_bool(0.7)).cloned().collect()
        } else {
            random_spans(&mut rng, len, 2)
        };
        let c = random_spans(&mut rng, len, 2);
        let ab: BTreeSet<_> = consensus_spans(&[a.clone(), b.clone()])
            .unwrap()
            .into_iter()
            .collect();
        let ba: BTreeSet<_> = consensus_spans(&[b.clone(), a.clone()])
            .unwrap()
            .into_iter()
            .collect();
        let abc: BTreeSet<_> = consensus_spans(&[a.clone(), b.clone(), c])
            .unwrap()
            .into_iter()
            .collect();
        let oracle = brute_intersection(&[a.clone(), b.clone()], len);
        let subset = ab.iter().all(|s| a.contains(s) && b.contains(s));
        if ab != oracle || ab != ba || !subset || !abc.is_subset(&ab) {
            problems.push(format!("case {case}"));
        }
        oracle_nonempty += usize::from(!oracle.is_empty());
        let w = words(len);
        preds[0].push(Sentence::from_parts(
            &w,
            &encode_tags(&a, len, Scheme::Bio).unwrap(),
        ));
        preds[1].push(Sentence::from_parts(
            &w,
            &encode_tags(&b, len, Scheme::Bioes).unwrap(),
        ));
        raw.push(w);
    }
    let [pa, pb] = preds;
    let sources = [Corpus::new(pa, Scheme::Bio), Corpus::new(pb, Scheme::Bioes)];
    let silver = build_silver_corpus(&raw, &sources, &ConsensusConfig::default()).unwrap();
    let empty = silver
        .sentences
        .iter()
        .filter(|s| {
            decode_spans(&s.tags(), Scheme::Bioes, RepairPolicy::Strict)
                .unwrap()
                .is_empty()
        })
        .count();
    if empty > 0 || silver.len() != oracle_nonempty {
        problems.push(format!(
            "silver corpus has {} sentences ({empty} without spans), oracle expects {oracle_nonempty}",
            silver.len()
        ));
    }
    check(
        problems.is_empty(),
        format!(
            "{} problems{}; silver keeps {} of 500 sentences",
            problems.len(),
            first_issue(&problems),
            silver.len()
        ),
    )
}

/// Gold and initial tags with "pain" wrongly tagged O at 50 positions, plus
/// scattered unrelated errors.
fn injected_pain_corpus() -> (Corpus, Corpus) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let before = [
        ("reports", "O"),
        ("denies", "O"),
        ("CT", "S-test"),
        ("severe", "O"),
        ("aspirin", "S-treatment"),
    ];
    let after = [
        (".", "O"),
        ("today", "O"),
        ("aspirin", "S-treatment"),
        ("and", "O"),
        ("MRI", "S-test"),
    ];
    let mut gold = Vec::new();
    let mut initial = Vec::new();
    for k in 0..50 {
        let (b, bt) = before[k % before.len()];
        let (a, at) = after[(k / before.len()) % after.len()];
        let w = ["patient", b, "pain", a, "noted"];
        gold.push(Sentence::from_parts(&w, &["O", bt, "S-problem", at, "O"]));
        initial.push(Sentence::from_parts(&w, &["O", bt, "O", at, "O"]));
    }
    let synth = generate(&SynthConfig {
        noise: 0.0,
        train_sentences: 400,
        ..SynthConfig::default()
    });
    let other = convert_corpus(&synth.train, Scheme::Bioes, RepairPolicy::Strict).unwrap();
    let tagset: Vec<String> = other
        .sentences
        .iter()
        .flat_map(|s| s.tokens.iter().map(|t| t.tag.clone()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    for s in other
        .sentences
        .iter()
        .filter(|s| !s.surfaces().contains(&"pain"))
    {
        gold.push(s.clone());
        let mut noisy = s.clone();
        if rng.random_bool(0.1) {
            let i = rng.random_range(0..noisy.len());
            noisy.tokens[i].tag = tagset[rng.random_range(0..tagset.len())].clone();
        }
        initial.push(noisy);
    }
    (
        Corpus::new(initial, Scheme::Bioes),
        Corpus::new(gold, Scheme::Bioes),
    )
}

/// Initial tags from a unigram model trained on half the synthetic corpus.
fn unigram_learning_set() -> (Corpus, Corpus) {
    let data = generate(&SynthConfig::default());
    let gold = convert_corpus(&data.train, Scheme::Bioes, RepairPolicy::Conll).unwrap();
    let half = Corpus::new(gold.sentences[..1000].to_vec(), Scheme::Bioes);
    let model = train_unigram(&half).unwrap();
    let probe = Corpus::new(gold.sentences[1000..].to_vec(), Scheme::Bioes);
    let initial = tag_corpus(&model, &surfaces_of(&probe));
    (initial, probe)
}

fn criterion_7() -> Outcome {
    let started = Instant::now();
    let mut problems = Vec::new();

    let (initial, gold) = injected_pain_corpus();
    let data = LearningSet::new(&initial, &gold).unwrap();
    let cfg = BrillConfig {
        min_score: 1,
        ..BrillConfig::default()
    };
    let rules = learn_rules(&data, &cfg).unwrap();
    let first = rules.first().map(|r| (r.pattern(), r.score, r.accuracy));
    let expected = ("FROM O TO S-problem IF word[0]=pain".to_owned(), 50, 1.0);
    if first.as_ref() != Some(&expected) {
        problems.push(format!("first rule {first:?}"));
    }
    match oracle_best_rule(&initial, &gold, cfg.min_acc) {
        Some((pattern, score, acc, unique)) => {
            if (pattern.as_str(), score, acc) != (expected.0.as_str(), expected.1, expected.2)
                || !unique
            {
                problems.push(format!(
                    "oracle best {pattern} score {score} acc {acc} unique {unique}"
                ));
            }
        }
        None => problems.push("oracle found no candidate".into()),
    }

    let (initial, gold) = unigram_learning_set();
    let data = LearningSet::new(&initial, &gold).unwrap();
    let trace = learn_rules_traced(&data, &cfg).unwrap();
    if trace.rules.iter().any(|r| r.accuracy < 0.99) {
        problems.push("rule below min_acc".into());
    }
    for (k, r) in trace.rules.iter().enumerate() {
        if trace.errors[k] as i64 - trace.errors[k + 1] as i64 != r.score {
            problems.push(format!(
                "rule {k} reduced errors by {} not {}",
                trace.errors[k] - trace.errors[k + 1],
                r.score
            ));
        }
    }
    // Confirm the traced error counts against an independent recount.
    let mut tags: Vec<Vec<String>> = initial
        .sentences
        .iter()
        .map(|s| s.tags().iter().map(|t| t.to_string()).collect())
        .collect();
    for (k, r) in trace.rules.iter().enumerate() {
        for (s, t) in initial.sentences.iter().zip(tags.iter_mut()) {
            *t = apply_rules(&s.surfaces(), t, std::slice::from_ref(r));
        }
        let errors: usize = tags
            .iter()
            .zip(&gold.sentences)
            .map(|(t, g)| {
                t.iter()
                    .zip(&g.tokens)
                    .filter(|(a, b)| **a != b.tag)
                    .count()
            })
            .sum();
        if errors != trace.errors[k + 1] {
            problems.push(format!(
                "recount after rule {k}: {errors} vs {}",
                trace.errors[k + 1]
            ));
            break;
        }
    }
    for s in 2..=5 {
        let at_s = learn_rules(
            &data,
            &BrillConfig {
                min_score: s,
                ..cfg.clone()
            },
        )
        .unwrap();
        let cut = trace
            .rules
            .iter()
            .position(|r| r.score < s)
            .unwrap_or(trace.rules.len());
        if at_s != trace.rules[..cut] {
            problems.push(format!(
                "min_score {s} list is not the truncated min_score 1 list"
            ));
        }
    }
    let (fast, time) = within(Duration::from_secs(30), started);
    check(
        problems.is_empty() && fast,
        format!(
            "{} problems{}; {} rules on the unigram set, errors {} -> {}; {time}",
            problems.len(),
            first_issue(&problems),
            trace.rules.len(),
            trace.errors[0],
            trace.errors.last().unwrap()
        ),
    )
}

fn criterion_8() -> Outcome {
    let rule: BrillRule = "FROM O TO I-problem IF tag[-1]=B-problem".parse().unwrap();
    let got = apply_rules(&["a", "b", "c"], &["B-problem", "O", "O"], &[rule]);
    let literal = got == ["B-problem", "I-problem", "I-problem"];

    let (initial, gold) = unigram_learning_set();
    let rules = learn_rules(
        &LearningSet::new(&initial, &gold).unwrap(),
        &BrillConfig {
            min_score: 1,
            ..BrillConfig::default()
        },
    )
    .unwrap();
    let mut text = Vec::new();
    write_rules(&rules, &mut text).unwrap();
    let parsed = read_rules(text.as_slice()).unwrap();
    let probe = Corpus::new(initial.sentences[..1000].to_vec(), Scheme::Bioes);
    let round_trip = !rules.is_empty()
        && apply_rules_corpus(&probe, &rules) == apply_rules_corpus(&probe, &parsed);
    check(
        literal && round_trip,
        format!(
            "cascade example gives {got:?} (expected [B-problem, I-problem, I-problem]); \
             rule-file round trip over {} rules on 1000 sentences: {}",
            rules.len(),
            if round_trip { "identical" } else { "DIFFERENT" }
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut problems = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let tag_of = |w: usize| ["O", "O", "B-problem", "B-test", "B-treatment"][w % 5];
    let sentences: Vec<Sentence> = (0..300)
        .map(|_| {
            let len = rng.random_range(3..=12);
            let ids: Vec<usize> = (0..len).map(|_| rng.random_range(0..150)).collect();
            let w: Vec<String> = ids.iter().map(|i| format!("tok{i}")).collect();
            let t: Vec<&str> = ids.iter().map(|&i| tag_of(i)).collect();
            Sentence::from_parts(&w, &t)
        })
        .collect();
    let corpus = Corpus::new(sentences, Scheme::Bio);
    let model = train_perceptron(&corpus, 10, 9).unwrap();
    let (mut right, mut total) = (0, 0);
    for s in &corpus.sentences {
        let pred = model.tag(&s.surfaces());
        right += pred
            .iter()
            .zip(s.tags())
            .filter(|(p, g)| p.as_str() == *g)
            .count();
        total += s.len();
    }
    if right != total {
        problems.push(format!("perceptron training accuracy {right}/{total}"));
    }

    let tie = Corpus::new(
        vec![
            Sentence::from_parts(&["cold"], &["O"]),
            Sentence::from_parts(&["cold"], &["B-problem"]),
        ],
        Scheme::Bio,
    );
    let unigram = train_unigram(&tie).unwrap();
    if unigram.tag(&["cold", "unseen"]) != ["B-problem", "O"] {
        problems.push("unigram tie-break or OOV fallback".into());
    }

    let data = generate(&SynthConfig {
        train_sentences: 300,
        ..SynthConfig::default()
    });
    let probe = surfaces_of(&data.test);
    for model in [
        Model::Unigram(train_unigram(&data.train).unwrap()),
        Model::Perceptron(train_perceptron(&data.train, 3, 1).unwrap()),
    ] {
        let loaded = Model::load(model.to_text().as_bytes()).unwrap();
        if tag_corpus(&model, &probe) != tag_corpus(&loaded, &probe) {
            problems.push(format!("{} save/load changes predictions", model.kind()));
        }
    }
    check(
        problems.is_empty(),
        format!(
            "{} problems{}; perceptron {right}/{total} after 10 epochs",
            problems.len(),
            first_issue(&problems)
        ),
    )
}

fn criterion_10() -> Outcome {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = PipelineConfig::load(&data_dir().join("pipeline.conf")).unwrap();
    let mut runs = Vec::new();
    for k in 0..2 {
        cfg.out = dir.path().join(format!("run{k}"));
        runs.push(run_pipeline(&cfg).unwrap());
    }
    let (fast, time) = within(Duration::from_secs(300), started);
    let summaries: Vec<Vec<u8>> = (0..2)
        .map(|k| std::fs::read(dir.path().join(format!("run{k}/summary.txt"))).unwrap())
        .collect();
    let mut identical = summaries[0] == summaries[1];
    for stage in Stage::ALL {
        for name in ["test.pred.conll", "score.kv"] {
            let read = |k: usize| {
                std::fs::read(
                    dir.path()
                        .join(format!("run{k}/{}/{name}", stage.name().to_lowercase())),
                )
            };
            identical &= read(0).unwrap() == read(1).unwrap();
        }
    }
    let report = &runs[0];
    let text = String::from_utf8_lossy(&summaries[0]).into_owned();
    let shaped = Stage::ALL
        .iter()
        .all(|s| text.lines().any(|l| l.starts_with(s.name())))
        && text.starts_with("stage")
        && ["scheme", "F1", "size"]
            .iter()
            .all(|c| text.lines().next().unwrap().contains(c));
    let (m3, m4) = report.heldout_f1();
    let f1s: Vec<String> = report
        .stages
        .iter()
        .map(|s| format!("{} {:.2}", s.stage.name(), s.report.overall.f1))
        .collect();
    check(
        fast && identical && shaped && m4 >= m3,
        format!(
            "{}; held-out M3 {m3:.2} M4 {m4:.2}; deterministic {identical}; {time}",
            f1s.join(", ")
        ),
    )
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("scheme round-trips", criterion_1),
        ("repair", criterion_2),
        ("scorer vs oracle", criterion_3),
        ("augmentation invariants", criterion_4),
        ("corpus growth", criterion_5),
        ("consensus", criterion_6),
        ("brill learning", criterion_7),
        ("brill application semantics", criterion_8),
        ("baseline taggers", criterion_9),
        ("end-to-end pipeline", criterion_10),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let outcome = run();
        failed += usize::from(!outcome.pass);
        println!(
            "criterion {:>2} {:<28} {}  {}",
            k + 1,
            name,
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
