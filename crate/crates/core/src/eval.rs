//! Entity-level scoring.
//!
//! Both sides are converted to BIO (repairing with the given policy) and
//! decoded into spans; a prediction is correct only if its sentence, start,
//! end and label all match a gold span. Rates are percentages.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use crate::corpus::{Corpus, EntitySpan, Scheme};
use crate::error::{Error, Result};
use crate::schemes::{convert, decode_spans, RepairPolicy};

pub const OVERALL: &str = "ALL";

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f_measure(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn rate(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelScore {
    pub label: String,
    pub gold_count: usize,
    pub predicted_count: usize,
    pub correct_count: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl LabelScore {
    pub fn from_counts(label: &str, gold: usize, predicted: usize, correct: usize) -> Self {
        let precision = rate(correct, predicted);
        let recall = rate(correct, gold);
        LabelScore {
            label: label.to_owned(),
            gold_count: gold,
            predicted_count: predicted,
            correct_count: correct,
            precision,
            recall,
            f1: f_measure(precision, recall),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub overall: LabelScore,
    /// One entry per label, sorted by label.
    pub labels: Vec<LabelScore>,
    /// Scheme both sides were converted to before matching.
    pub scored_in: Scheme,
}

/// Two-decimal rendering with half-up rounding.
pub fn fmt_pct(x: f64) -> String {
    format!("{:.2}", (x * 100.0).round() / 100.0)
}

impl ScoreReport {
    pub fn rows(&self) -> impl Iterator<Item = &LabelScore> {
        std::iter::once(&self.overall).chain(&self.labels)
    }

    pub fn label(&self, label: &str) -> Option<&LabelScore> {
        self.labels.iter().find(|l| l.label == label)
    }

    /// Aligned table for humans.
    pub fn to_table(&self) -> String {
        let width = self.rows().map(|r| r.label.len()).max().unwrap_or(5).max(5);
        let mut out = format!(
            "{:<width$}  {:>9}  {:>9}  {:>9}  {:>7}  {:>9}  {:>7}\n",
            "label", "precision", "recall", "f1", "gold", "predicted", "correct"
        );
        for r in self.rows() {
            let _ = writeln!(
                out,
                "{:<width$}  {:>9}  {:>9}  {:>9}  {:>7}  {:>9}  {:>7}",
                r.label,
                fmt_pct(r.precision),
                fmt_pct(r.recall),
                fmt_pct(r.f1),
                r.gold_count,
                r.predicted_count,
                r.correct_count
            );
        }
        let _ = writeln!(out, "(scored in {})", self.scored_in);
        out
    }

    /// One `label precision recall f1 gold predicted correct` line per row.
    pub fn to_key_value(&self) -> String {
        self.rows()
            .map(|r| {
                format!(
                    "{} {} {} {} {} {} {}\n",
                    r.label,
                    fmt_pct(r.precision),
                    fmt_pct(r.recall),
                    fmt_pct(r.f1),
                    r.gold_count,
                    r.predicted_count,
                    r.correct_count
                )
            })
            .collect()
    }
}

/// Spans of every sentence after conversion to BIO.
pub fn bio_spans(corpus: &Corpus, policy: RepairPolicy) -> Result<Vec<Vec<EntitySpan>>> {
    corpus
        .sentences
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let tags = s.tags();
            convert(&tags, corpus.scheme, Scheme::Bio, policy)
                .and_then(|bio| decode_spans(&bio, Scheme::Bio, RepairPolicy::Strict))
                .map_err(|e| Error::InvalidArgument(format!("sentence {i}: {e}")))
        })
        .collect()
}

/// Checks sentence count and per-sentence lengths.
pub fn check_aligned(gold: &Corpus, other: &Corpus) -> Result<()> {
    for (i, (g, p)) in gold.sentences.iter().zip(&other.sentences).enumerate() {
        if g.len() != p.len() {
            return Err(Error::Alignment(format!(
                "sentence {i} has {} gold tokens but {} predicted tokens",
                g.len(),
                p.len()
            )));
        }
    }
    if gold.len() != other.len() {
        return Err(Error::Alignment(format!(
            "sentence {}: gold has {} sentences, prediction has {}",
            gold.len().min(other.len()),
            gold.len(),
            other.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct Counts {
    pub gold: usize,
    pub predicted: usize,
    pub correct: usize,
}

/// Per-label span counts of `predicted` against `gold`.
pub fn count_matches(
    gold: &[Vec<EntitySpan>],
    predicted: &[Vec<EntitySpan>],
) -> BTreeMap<String, Counts> {
    let mut counts: BTreeMap<String, Counts> = BTreeMap::new();
    for (g, p) in gold.iter().zip(predicted) {
        for span in g {
            counts.entry(span.label.clone()).or_default().gold += 1;
        }
        let gold_set: HashSet<&EntitySpan> = g.iter().collect();
        for span in p {
            let c = counts.entry(span.label.clone()).or_default();
            c.predicted += 1;
            if gold_set.contains(span) {
                c.correct += 1;
            }
        }
    }
    counts
}

fn report_from_counts(
    counts: BTreeMap<String, Counts>,
    extra_labels: &BTreeSet<String>,
) -> ScoreReport {
    let mut counts = counts;
    for label in extra_labels {
        counts.entry(label.clone()).or_default();
    }
    let total = counts.values().fold(Counts::default(), |acc, c| Counts {
        gold: acc.gold + c.gold,
        predicted: acc.predicted + c.predicted,
        correct: acc.correct + c.correct,
    });
    ScoreReport {
        overall: LabelScore::from_counts(OVERALL, total.gold, total.predicted, total.correct),
        labels: counts
            .iter()
            .map(|(l, c)| LabelScore::from_counts(l, c.gold, c.predicted, c.correct))
            .collect(),
        scored_in: Scheme::Bio,
    }
}

pub fn score(gold: &Corpus, predicted: &Corpus, policy: RepairPolicy) -> Result<ScoreReport> {
    check_aligned(gold, predicted)?;
    let g = bio_spans(gold, policy)?;
    let p = bio_spans(predicted, policy)?;
    let labels: BTreeSet<String> = gold
        .label_set
        .union(&predicted.label_set)
        .cloned()
        .collect();
    Ok(report_from_counts(count_matches(&g, &p), &labels))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffRow {
    pub label: String,
    pub correct_a: usize,
    pub correct_b: usize,
    /// `correct_b - correct_a`.
    pub delta: i64,
    pub predicted_a: usize,
    pub predicted_b: usize,
    pub gold: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffReport {
    pub overall: DiffRow,
    pub labels: Vec<DiffRow>,
}

impl DiffReport {
    pub fn rows(&self) -> impl Iterator<Item = &DiffRow> {
        std::iter::once(&self.overall).chain(&self.labels)
    }

    pub fn to_table(&self) -> String {
        let width = self.rows().map(|r| r.label.len()).max().unwrap_or(5).max(5);
        let mut out = format!(
            "{:<width$}  {:>9}  {:>9}  {:>6}  {:>11}  {:>11}  {:>7}\n",
            "label", "correct_a", "correct_b", "delta", "predicted_a", "predicted_b", "gold"
        );
        for r in self.rows() {
            let _ = writeln!(
                out,
                "{:<width$}  {:>9}  {:>9}  {:>+6}  {:>11}  {:>11}  {:>7}",
                r.label, r.correct_a, r.correct_b, r.delta, r.predicted_a, r.predicted_b, r.gold
            );
        }
        out
    }
}

/// Correct-span counts of two systems against the same gold.
pub fn diff_report(
    gold: &Corpus,
    a: &Corpus,
    b: &Corpus,
    policy: RepairPolicy,
) -> Result<DiffReport> {
    let ra = score(gold, a, policy)?;
    let rb = score(gold, b, policy)?;
    let row = |label: &str| {
        let find = |r: &ScoreReport| {
            if label == OVERALL {
                Some(r.overall.clone())
            } else {
                r.label(label).cloned()
            }
        };
        let sa = find(&ra).unwrap_or_else(|| LabelScore::from_counts(label, 0, 0, 0));
        let sb = find(&rb).unwrap_or_else(|| LabelScore::from_counts(label, 0, 0, 0));
        DiffRow {
            label: label.to_owned(),
            correct_a: sa.correct_count,
            correct_b: sb.correct_count,
            delta: sb.correct_count as i64 - sa.correct_count as i64,
            predicted_a: sa.predicted_count,
            predicted_b: sb.predicted_count,
            gold: sa.gold_count.max(sb.gold_count),
        }
    };
    let labels: BTreeSet<&str> = ra
        .labels
        .iter()
        .chain(&rb.labels)
        .map(|l| l.label.as_str())
        .collect();
    Ok(DiffReport {
        overall: row(OVERALL),
        labels: labels.into_iter().map(row).collect(),
    })
}

/// Gold count implied by a predicted count, a correct count and an F1.
///
/// With `P = 100·correct/predicted`, recall follows from the harmonic mean as
/// `R = F1·P / (2P − F1)` and the gold count as `100·correct / R`.
pub fn implied_gold_count(predicted: usize, correct: usize, f1: f64) -> f64 {
    let p = rate(correct, predicted);
    let r = f1 * p / (2.0 * p - f1);
    100.0 * correct as f64 / r
}
