//! Transformation-based error correction over scheme tags.
//!
//! A rule rewrites `from` to `to` wherever its conditions hold. Conditions
//! test the tag or the surface at a fixed offset from the current token.
//! Rules are applied in order, each with one left-to-right sweep that reads
//! the tags as already modified earlier in the same sweep, so a rule like
//! `FROM O TO I-x IF tag[-1]=B-x` cascades along a run of `O`s.
//!
//! Learning is greedy: at each step every rule instantiable at an error
//! position is scored by simulating its sweep over the learning set
//! (`good` = tokens fixed, `bad` = correct tokens broken), rules below
//! `min_acc` are discarded, and the best one is kept if its net score
//! reaches `min_score`.
//!
//! Rule files hold one rule per line:
//!
//! ```text
//! FROM O TO S-problem IF word[0]=pain ; score=50 acc=1.0000
//! FROM O TO I-test IF tag[-1]=B-test AND word[0]=level ; score=7 acc=1.0000
//! ```
//!
//! Values containing whitespace, quotes, backslashes or `;` are written in
//! double quotes with backslash escapes. Blank lines and `#` comments are
//! ignored.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use crate::corpus::{Corpus, Sentence};
use crate::error::{Error, Result};
use crate::eval::{check_aligned, score};
use crate::schemes::{repair, RepairPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    Tag(i8),
    Word(i8),
}

impl Slot {
    pub fn offset(self) -> i8 {
        match self {
            Slot::Tag(o) | Slot::Word(o) => o,
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (name, offset) = match *self {
            Slot::Tag(o) => ("tag", o),
            Slot::Word(o) => ("word", o),
        };
        if offset > 0 {
            write!(f, "{name}[+{offset}]")
        } else {
            write!(f, "{name}[{offset}]")
        }
    }
}

impl FromStr for Slot {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown slot `{s}`"));
        let (name, rest) = s.split_once('[').ok_or_else(bad)?;
        let offset: i8 = rest
            .strip_suffix(']')
            .ok_or_else(bad)?
            .trim_start_matches('+')
            .parse()
            .map_err(|_| bad())?;
        match name {
            "tag" if matches!(offset, -2 | -1 | 1 | 2) => Ok(Slot::Tag(offset)),
            "word" if (-2..=2).contains(&offset) => Ok(Slot::Word(offset)),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Template {
    pub name: &'static str,
    pub slots: &'static [Slot],
}

impl Template {
    /// True if a change made earlier in a sweep can alter the match.
    fn reads_left_tags(&self) -> bool {
        self.slots
            .iter()
            .any(|s| matches!(s, Slot::Tag(o) if *o < 0))
    }
}

/// The default template inventory.
pub const TEMPLATES: [Template; 12] = [
    Template {
        name: "prev-tag",
        slots: &[Slot::Tag(-1)],
    },
    Template {
        name: "next-tag",
        slots: &[Slot::Tag(1)],
    },
    Template {
        name: "prev-two-tags",
        slots: &[Slot::Tag(-2), Slot::Tag(-1)],
    },
    Template {
        name: "next-two-tags",
        slots: &[Slot::Tag(1), Slot::Tag(2)],
    },
    Template {
        name: "word",
        slots: &[Slot::Word(0)],
    },
    Template {
        name: "prev-word",
        slots: &[Slot::Word(-1)],
    },
    Template {
        name: "next-word",
        slots: &[Slot::Word(1)],
    },
    Template {
        name: "word+prev-tag",
        slots: &[Slot::Word(0), Slot::Tag(-1)],
    },
    Template {
        name: "word+next-tag",
        slots: &[Slot::Word(0), Slot::Tag(1)],
    },
    Template {
        name: "prev-tag+next-tag",
        slots: &[Slot::Tag(-1), Slot::Tag(1)],
    },
    Template {
        name: "prev-word+word",
        slots: &[Slot::Word(-1), Slot::Word(0)],
    },
    Template {
        name: "word+next-word",
        slots: &[Slot::Word(0), Slot::Word(1)],
    },
];

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Condition {
    pub slot: Slot,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrillRule {
    pub conditions: Vec<Condition>,
    pub from: String,
    pub to: String,
    /// `good - bad` on the learning set when the rule was chosen.
    pub score: i64,
    /// `good / (good + bad)` at the same moment.
    pub accuracy: f64,
}

fn position(i: usize, offset: i8, len: usize) -> Option<usize> {
    let j = i as isize + offset as isize;
    (0..len as isize).contains(&j).then_some(j as usize)
}

impl BrillRule {
    /// Whether the rule fires at `i` given the current tag state.
    pub fn matches<W: AsRef<str>, T: AsRef<str>>(&self, words: &[W], tags: &[T], i: usize) -> bool {
        tags[i].as_ref() == self.from
            && self.conditions.iter().all(|c| {
                position(i, c.slot.offset(), tags.len()).is_some_and(|j| match c.slot {
                    Slot::Tag(_) => tags[j].as_ref() == c.value,
                    Slot::Word(_) => words[j].as_ref() == c.value,
                })
            })
    }

    /// The rule without its score and accuracy.
    pub fn pattern(&self) -> String {
        let mut out = format!("FROM {} TO {} IF", quote(&self.from), quote(&self.to));
        for (k, c) in self.conditions.iter().enumerate() {
            if k > 0 {
                out.push_str(" AND");
            }
            out.push_str(&format!(" {}={}", c.slot, quote(&c.value)));
        }
        out
    }
}

impl fmt::Display for BrillRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ; score={} acc={:.4}",
            self.pattern(),
            self.score,
            self.accuracy
        )
    }
}

fn needs_quotes(value: &str) -> bool {
    value.is_empty()
        || value
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '"' | '\\' | ';'))
}

fn quote(value: &str) -> String {
    if !needs_quotes(value) {
        return value.to_owned();
    }
    let mut out = String::from('"');
    for c in value.chars() {
        if matches!(c, '"' | '\\') {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

/// Splits a rule line into whitespace-separated words, honoring quotes.
fn lex(line: &str) -> Result<Vec<String>> {
    let mut words = Vec::new();
    let mut chars = line.chars().peekable();
    loop {
        while chars.next_if(|c| c.is_whitespace()).is_some() {}
        if chars.peek().is_none() {
            break;
        }
        let mut word = String::new();
        let mut quoted = false;
        while let Some(c) = chars.next() {
            match c {
                '"' => {
                    quoted = true;
                    loop {
                        match chars.next() {
                            Some('"') => break,
                            Some('\\') => {
                                word.push(chars.next().ok_or_else(|| {
                                    Error::InvalidArgument("dangling escape".into())
                                })?)
                            }
                            Some(c) => word.push(c),
                            None => {
                                return Err(Error::InvalidArgument("unterminated quote".into()))
                            }
                        }
                    }
                }
                c if c.is_whitespace() => break,
                c => word.push(c),
            }
        }
        // Keep empty quoted values distinguishable from nothing.
        if quoted || !word.is_empty() {
            words.push(word);
        }
    }
    Ok(words)
}

impl FromStr for BrillRule {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidArgument(format!("{msg} in rule `{line}`"));
        let words = lex(line)?;
        let head: Vec<&str> = words.iter().take(5).map(String::as_str).collect();
        let (from, to) = match head.as_slice() {
            ["FROM", from, "TO", to, "IF"] => (from.to_string(), to.to_string()),
            _ => return Err(bad("expected `FROM <tag> TO <tag> IF`")),
        };
        let mut conditions = Vec::new();
        let mut score = 0;
        let mut accuracy = 1.0;
        let mut in_stats = false;
        for word in words.iter().skip(5).map(String::as_str) {
            if word == ";" {
                in_stats = true;
            } else if in_stats {
                if let Some(v) = word.strip_prefix("score=") {
                    score = v.parse().map_err(|_| bad("bad score"))?;
                } else if let Some(v) = word.strip_prefix("acc=") {
                    accuracy = v.parse().map_err(|_| bad("bad accuracy"))?;
                } else {
                    return Err(bad(&format!("unexpected `{word}`")));
                }
            } else if word == "AND" {
                continue;
            } else {
                let (slot, value) = word
                    .split_once('=')
                    .ok_or_else(|| bad("expected slot=value"))?;
                conditions.push(Condition {
                    slot: slot.parse()?,
                    value: value.to_owned(),
                });
            }
        }
        if conditions.is_empty() {
            return Err(bad("no conditions"));
        }
        if from == to {
            return Err(bad("from-tag equals to-tag"));
        }
        Ok(BrillRule {
            conditions,
            from,
            to,
            score,
            accuracy,
        })
    }
}

pub fn read_rules<R: BufRead>(reader: R) -> Result<Vec<BrillRule>> {
    let mut rules = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        rules.push(trimmed.parse().map_err(|e: Error| Error::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?);
    }
    Ok(rules)
}

pub fn write_rules<W: std::io::Write>(rules: &[BrillRule], mut out: W) -> std::io::Result<()> {
    for rule in rules {
        writeln!(out, "{rule}")?;
    }
    Ok(())
}

/// Applies `rules` in order to one sentence.
pub fn apply_rules<W: AsRef<str>, T: AsRef<str>>(
    words: &[W],
    tags: &[T],
    rules: &[BrillRule],
) -> Vec<String> {
    let mut tags: Vec<String> = tags.iter().map(|t| t.as_ref().to_owned()).collect();
    for rule in rules {
        for i in 0..tags.len() {
            if rule.matches(words, &tags, i) {
                tags[i] = rule.to.clone();
            }
        }
    }
    tags
}

pub fn apply_rules_corpus(corpus: &Corpus, rules: &[BrillRule]) -> Corpus {
    let sentences = corpus
        .sentences
        .iter()
        .map(|s| s.with_tags(&apply_rules(&s.surfaces(), &s.tags(), rules)))
        .collect();
    let mut out = Corpus::new(sentences, corpus.scheme);
    out.label_set.extend(corpus.label_set.iter().cloned());
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrillConfig {
    pub min_acc: f64,
    pub min_score: i64,
    pub max_rules: usize,
}

impl Default for BrillConfig {
    fn default() -> Self {
        BrillConfig {
            min_acc: 0.99,
            min_score: 5,
            max_rules: 250,
        }
    }
}

impl BrillConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.min_acc) {
            return Err(Error::InvalidArgument(format!(
                "min_acc must be in [0, 1], got {}",
                self.min_acc
            )));
        }
        if self.min_score < 1 {
            return Err(Error::InvalidArgument(format!(
                "min_score must be at least 1, got {}",
                self.min_score
            )));
        }
        Ok(())
    }
}

#[derive(Default)]
struct Interner {
    ids: HashMap<String, u32>,
    names: Vec<String>,
}

impl Interner {
    fn id(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(s.to_owned());
        self.ids.insert(s.to_owned(), id);
        id
    }
}

/// Template plus bound values plus from-tag: everything but the target tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Trigger {
    template: u8,
    values: [u32; 2],
    from: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Candidate {
    trigger: Trigger,
    to: u32,
}

struct Learner {
    words: Vec<Vec<u32>>,
    current: Vec<Vec<u32>>,
    gold: Vec<Vec<u32>>,
    word_names: Interner,
    tag_names: Interner,
}

impl Learner {
    /// Values the template binds at `(s, i)` under `tag_at`, or `None` if a
    /// slot falls outside the sentence.
    fn bind(
        &self,
        template: &Template,
        s: usize,
        i: usize,
        tag_at: impl Fn(usize) -> u32,
    ) -> Option<[u32; 2]> {
        let len = self.words[s].len();
        let mut values = [0; 2];
        for (k, slot) in template.slots.iter().enumerate() {
            let j = position(i, slot.offset(), len)?;
            values[k] = match slot {
                Slot::Tag(_) => tag_at(j),
                Slot::Word(_) => self.words[s][j],
            };
        }
        Some(values)
    }

    fn trigger_at(&self, t: usize, s: usize, i: usize) -> Option<Trigger> {
        let cur = &self.current[s];
        self.bind(&TEMPLATES[t], s, i, |j| cur[j])
            .map(|values| Trigger {
                template: t as u8,
                values,
                from: cur[i],
            })
    }

    /// `(good, bad)` of one in-place sweep over sentence `s`.
    fn sweep_counts(&self, cand: &Candidate, s: usize, changed: &mut Vec<bool>) -> (i64, i64) {
        let template = &TEMPLATES[cand.trigger.template as usize];
        let cur = &self.current[s];
        let gold = &self.gold[s];
        changed.clear();
        changed.resize(cur.len(), false);
        let (mut good, mut bad) = (0, 0);
        for i in 0..cur.len() {
            if cur[i] != cand.trigger.from {
                continue;
            }
            let values = self.bind(
                template,
                s,
                i,
                |j| if changed[j] { cand.to } else { cur[j] },
            );
            if values == Some(cand.trigger.values) {
                changed[i] = true;
                if gold[i] == cand.to {
                    good += 1;
                } else if gold[i] == cur[i] {
                    bad += 1;
                }
            }
        }
        (good, bad)
    }

    fn apply(&mut self, cand: &Candidate, sentences: &[usize]) {
        let mut changed = Vec::new();
        for &s in sentences {
            let template = &TEMPLATES[cand.trigger.template as usize];
            changed.clear();
            changed.resize(self.current[s].len(), false);
            for i in 0..self.current[s].len() {
                if self.current[s][i] != cand.trigger.from {
                    continue;
                }
                let cur = &self.current[s];
                let values = self.bind(
                    template,
                    s,
                    i,
                    |j| if changed[j] { cand.to } else { cur[j] },
                );
                if values == Some(cand.trigger.values) {
                    changed[i] = true;
                }
            }
            for (i, &c) in changed.iter().enumerate() {
                if c {
                    self.current[s][i] = cand.to;
                }
            }
        }
    }

    fn to_rule(&self, cand: &Candidate, good: i64, bad: i64) -> BrillRule {
        let template = &TEMPLATES[cand.trigger.template as usize];
        let conditions = template
            .slots
            .iter()
            .zip(cand.trigger.values)
            .map(|(&slot, v)| Condition {
                slot,
                value: match slot {
                    Slot::Tag(_) => self.tag_names.names[v as usize].clone(),
                    Slot::Word(_) => self.word_names.names[v as usize].clone(),
                },
            })
            .collect();
        BrillRule {
            conditions,
            from: self.tag_names.names[cand.trigger.from as usize].clone(),
            to: self.tag_names.names[cand.to as usize].clone(),
            score: good - bad,
            accuracy: good as f64 / (good + bad) as f64,
        }
    }

    fn error_count(&self) -> usize {
        self.current
            .iter()
            .zip(&self.gold)
            .map(|(c, g)| c.iter().zip(g).filter(|(a, b)| a != b).count())
            .sum()
    }
}

struct Scored {
    cand: Candidate,
    good: i64,
    bad: i64,
    sentences: Vec<usize>,
}

impl Scored {
    fn score(&self) -> i64 {
        self.good - self.bad
    }

    /// Compares by score, then accuracy (exactly, by cross-multiplication).
    fn rank(&self, other: &Scored) -> Ordering {
        self.score().cmp(&other.score()).then_with(|| {
            let lhs = self.good as i128 * (other.good + other.bad) as i128;
            let rhs = other.good as i128 * (self.good + self.bad) as i128;
            lhs.cmp(&rhs)
        })
    }
}

/// Learning data: initial tagger output aligned with gold tags.
pub struct LearningSet<'a> {
    pub initial: &'a Corpus,
    pub gold: &'a Corpus,
}

impl<'a> LearningSet<'a> {
    pub fn new(initial: &'a Corpus, gold: &'a Corpus) -> Result<Self> {
        check_aligned(gold, initial)?;
        for (i, (a, b)) in initial.sentences.iter().zip(&gold.sentences).enumerate() {
            if a.surfaces() != b.surfaces() {
                return Err(Error::Alignment(format!(
                    "sentence {i}: initial and gold tokens differ"
                )));
            }
        }
        Ok(LearningSet { initial, gold })
    }

    fn learner(&self) -> Learner {
        let mut word_names = Interner::default();
        let mut tag_names = Interner::default();
        let mut words = Vec::with_capacity(self.initial.len());
        let mut current = Vec::with_capacity(self.initial.len());
        let mut gold = Vec::with_capacity(self.initial.len());
        for (a, g) in self.initial.sentences.iter().zip(&self.gold.sentences) {
            words.push(a.tokens.iter().map(|t| word_names.id(&t.surface)).collect());
            current.push(a.tokens.iter().map(|t| tag_names.id(&t.tag)).collect());
            gold.push(g.tokens.iter().map(|t| tag_names.id(&t.tag)).collect());
        }
        Learner {
            words,
            current,
            gold,
            word_names,
            tag_names,
        }
    }
}

/// Progress of one learning run, for inspection and tests.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnTrace {
    pub rules: Vec<BrillRule>,
    /// Token errors on the learning set before the first rule and after each
    /// rule.
    pub errors: Vec<usize>,
}

pub fn learn_rules(data: &LearningSet<'_>, cfg: &BrillConfig) -> Result<Vec<BrillRule>> {
    learn_rules_traced(data, cfg).map(|t| t.rules)
}

pub fn learn_rules_traced(data: &LearningSet<'_>, cfg: &BrillConfig) -> Result<LearnTrace> {
    cfg.validate()?;
    let mut learner = data.learner();
    let mut trace = LearnTrace {
        rules: Vec::new(),
        errors: vec![learner.error_count()],
    };
    while trace.rules.len() < cfg.max_rules {
        let Some((best, rule)) = best_candidate(&learner, cfg.min_acc) else {
            break;
        };
        if rule.score < cfg.min_score {
            break;
        }
        learner.apply(&best.cand, &best.sentences);
        trace.rules.push(rule);
        trace.errors.push(learner.error_count());
    }
    Ok(trace)
}

fn best_candidate(learner: &Learner, min_acc: f64) -> Option<(Scored, BrillRule)> {
    let mut candidates: HashSet<Candidate> = HashSet::new();
    for (s, (cur, gold)) in learner.current.iter().zip(&learner.gold).enumerate() {
        for i in 0..cur.len() {
            if cur[i] == gold[i] {
                continue;
            }
            for t in 0..TEMPLATES.len() {
                if let Some(trigger) = learner.trigger_at(t, s, i) {
                    candidates.insert(Candidate {
                        trigger,
                        to: gold[i],
                    });
                }
            }
        }
    }
    if candidates.is_empty() {
        return None;
    }
    let triggers: HashSet<Trigger> = candidates.iter().map(|c| c.trigger).collect();
    let mut sites: HashMap<Trigger, Vec<(usize, usize)>> = HashMap::new();
    for (s, cur) in learner.current.iter().enumerate() {
        for i in 0..cur.len() {
            for t in 0..TEMPLATES.len() {
                if let Some(trigger) = learner.trigger_at(t, s, i) {
                    if triggers.contains(&trigger) {
                        sites.entry(trigger).or_default().push((s, i));
                    }
                }
            }
        }
    }

    let mut changed = Vec::new();
    let mut best: Vec<Scored> = Vec::new();
    for cand in candidates {
        let positions = &sites[&cand.trigger];
        let mut sentences: Vec<usize> = positions.iter().map(|&(s, _)| s).collect();
        sentences.dedup();
        let (good, bad) = if TEMPLATES[cand.trigger.template as usize].reads_left_tags() {
            sentences.iter().fold((0, 0), |(g, b), &s| {
                let (g2, b2) = learner.sweep_counts(&cand, s, &mut changed);
                (g + g2, b + b2)
            })
        } else {
            positions.iter().fold((0, 0), |(g, b), &(s, i)| {
                let gold = learner.gold[s][i];
                if gold == cand.to {
                    (g + 1, b)
                } else if gold == learner.current[s][i] {
                    (g, b + 1)
                } else {
                    (g, b)
                }
            })
        };
        if good + bad == 0 || (good as f64) / ((good + bad) as f64) < min_acc {
            continue;
        }
        let scored = Scored {
            cand,
            good,
            bad,
            sentences,
        };
        match best.first().map(|b| scored.rank(b)) {
            None | Some(Ordering::Equal) => best.push(scored),
            Some(Ordering::Greater) => best = vec![scored],
            Some(Ordering::Less) => {}
        }
    }
    best.into_iter()
        .map(|s| {
            let rule = learner.to_rule(&s.cand, s.good, s.bad);
            (s, rule)
        })
        .min_by(|a, b| a.1.pattern().cmp(&b.1.pattern()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneOutcome {
    pub min_score: i64,
    pub rules: Vec<BrillRule>,
    /// Evaluation-half F1 for each candidate min score, in input order.
    pub f1_by_min_score: Vec<(i64, f64)>,
    /// Evaluation-half F1 of the initial tags with no rules.
    pub baseline_f1: f64,
    /// False when every candidate scored below the baseline, in which case
    /// `rules` is empty.
    pub adopted: bool,
}

/// Tags after rules and repair, for scoring.
pub fn correct_corpus(
    initial: &Corpus,
    rules: &[BrillRule],
    policy: RepairPolicy,
) -> Result<Corpus> {
    let sentences = initial
        .sentences
        .iter()
        .map(|s| {
            let tags = apply_rules(&s.surfaces(), &s.tags(), rules);
            repair(&tags, initial.scheme, policy).map(|t| s.with_tags(&t))
        })
        .collect::<Result<Vec<Sentence>>>()?;
    let mut out = Corpus::new(sentences, initial.scheme);
    out.label_set.extend(initial.label_set.iter().cloned());
    Ok(out)
}

/// Picks the min score whose rules, learned on `learn`, give the best F1 on
/// `evaluate`. Ties go to the larger min score.
///
/// The greedy rule sequence does not depend on the min score, only where it
/// stops, so rules are learned once at the smallest candidate and truncated.
pub fn tune_min_score(
    learn: &LearningSet<'_>,
    evaluate: &LearningSet<'_>,
    candidates: &[i64],
    cfg: &BrillConfig,
    policy: RepairPolicy,
) -> Result<TuneOutcome> {
    let lowest = *candidates
        .iter()
        .min()
        .ok_or_else(|| Error::InvalidArgument("no candidate min scores".into()))?;
    let all = learn_rules(
        learn,
        &BrillConfig {
            min_score: lowest,
            ..cfg.clone()
        },
    )?;
    let f1_of = |rules: &[BrillRule]| -> Result<f64> {
        let corrected = correct_corpus(evaluate.initial, rules, policy)?;
        Ok(score(evaluate.gold, &corrected, policy)?.overall.f1)
    };
    let baseline_f1 = f1_of(&[])?;
    let mut f1_by_min_score = Vec::with_capacity(candidates.len());
    let mut best: Option<(i64, f64, Vec<BrillRule>)> = None;
    for &min_score in candidates {
        let cut = all
            .iter()
            .position(|r| r.score < min_score)
            .unwrap_or(all.len());
        let rules = all[..cut].to_vec();
        let f1 = f1_of(&rules)?;
        f1_by_min_score.push((min_score, f1));
        let better = match &best {
            None => true,
            Some((s, f, _)) => f1 > *f || (f1 == *f && min_score > *s),
        };
        if better {
            best = Some((min_score, f1, rules));
        }
    }
    let (min_score, f1, rules) = best.expect("candidates is non-empty");
    let adopted = f1 >= baseline_f1;
    Ok(TuneOutcome {
        min_score,
        rules: if adopted { rules } else { Vec::new() },
        f1_by_min_score,
        baseline_f1,
        adopted,
    })
}

/// Splits a corpus into its first `ceil(n/2)` and remaining sentences.
pub fn halves(corpus: &Corpus) -> (Corpus, Corpus) {
    let mid = corpus.len().div_ceil(2);
    let part = |s: &[Sentence]| {
        let mut c = Corpus::new(s.to_vec(), corpus.scheme);
        c.label_set.extend(corpus.label_set.iter().cloned());
        c
    };
    (
        part(&corpus.sentences[..mid]),
        part(&corpus.sentences[mid..]),
    )
}
