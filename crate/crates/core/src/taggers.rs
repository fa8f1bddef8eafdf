//! Baseline sequence taggers.
//!
//! [`UnigramModel`] maps each surface to its most frequent training tag.
//! [`PerceptronModel`] is a greedy left-to-right averaged perceptron over a
//! fixed feature set. Both emit only tags seen in training, so their output
//! prefixes are legal for the training scheme, though the sequence itself may
//! be ill-formed; pass it through [`crate::schemes::repair`] before decoding.
//!
//! Models serialize to a line-oriented text format:
//!
//! ```text
//! nerkit-model 1
//! kind unigram
//! scheme BIOES
//! fallback O
//! entries <n>
//! <surface>\t<tag>            (n lines, sorted by surface)
//! end
//! ```
//!
//! ```text
//! nerkit-model 1
//! kind perceptron
//! scheme BIOES
//! epochs <n>
//! seed <n>
//! features <space-separated feature template ids>
//! classes <k>
//! <tag>                       (k lines, sorted)
//! weights <m>
//! <feature>\t<class index>\t<weight>   (m lines, sorted)
//! end
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;

use crate::corpus::{Corpus, Scheme, Sentence, OUTSIDE};
use crate::error::{Error, Result};
use crate::rng::RandomStream;

const MAGIC: &str = "nerkit-model";
const FORMAT_VERSION: u32 = 1;

/// Feature template ids, in extraction order.
pub const FEATURE_TEMPLATES: [&str; 11] = [
    "bias", "w", "lw", "suf3", "shape", "w-1", "w-2", "w+1", "w+2", "t-1", "t-2t-1",
];

pub trait Tagger {
    fn tag(&self, surfaces: &[&str]) -> Vec<String>;
    fn scheme(&self) -> Scheme;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Unigram,
    Perceptron,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Unigram => "unigram",
            ModelKind::Perceptron => "perceptron",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "unigram" => Ok(ModelKind::Unigram),
            "perceptron" => Ok(ModelKind::Perceptron),
            _ => Err(Error::InvalidArgument(format!("unknown model kind `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Unigram(UnigramModel),
    Perceptron(PerceptronModel),
}

impl Model {
    pub fn train(kind: ModelKind, corpus: &Corpus, epochs: usize, seed: u64) -> Result<Model> {
        match kind {
            ModelKind::Unigram => train_unigram(corpus).map(Model::Unigram),
            ModelKind::Perceptron => train_perceptron(corpus, epochs, seed).map(Model::Perceptron),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Unigram(_) => ModelKind::Unigram,
            Model::Perceptron(_) => ModelKind::Perceptron,
        }
    }

    pub fn save<W: Write>(&self, out: W) -> std::io::Result<()> {
        match self {
            Model::Unigram(m) => m.save(out),
            Model::Perceptron(m) => m.save(out),
        }
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.save(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("model text is UTF-8")
    }

    /// Loads a model. Nothing is returned unless the whole stream parses.
    pub fn load<R: BufRead>(reader: R) -> Result<Model> {
        let mut lines = Lines::new(reader);
        let header = lines.next_line()?;
        let version = header
            .strip_prefix(MAGIC)
            .map(str::trim)
            .ok_or_else(|| format_error("missing model header"))?;
        if version != FORMAT_VERSION.to_string() {
            return Err(format_error(&format!(
                "unsupported model format version `{version}` (expected {FORMAT_VERSION})"
            )));
        }
        let kind: ModelKind = lines.field("kind")?.parse()?;
        let model = match kind {
            ModelKind::Unigram => Model::Unigram(UnigramModel::load_body(&mut lines)?),
            ModelKind::Perceptron => Model::Perceptron(PerceptronModel::load_body(&mut lines)?),
        };
        if lines.next_line()? != "end" {
            return Err(format_error("missing `end` trailer"));
        }
        Ok(model)
    }
}

impl Tagger for Model {
    fn tag(&self, surfaces: &[&str]) -> Vec<String> {
        match self {
            Model::Unigram(m) => m.tag(surfaces),
            Model::Perceptron(m) => m.tag(surfaces),
        }
    }

    fn scheme(&self) -> Scheme {
        match self {
            Model::Unigram(m) => m.scheme,
            Model::Perceptron(m) => m.scheme,
        }
    }
}

/// Tags every sentence, keeping surfaces.
pub fn tag_corpus<T: Tagger + ?Sized>(tagger: &T, sentences: &[Vec<String>]) -> Corpus {
    let tagged = sentences
        .iter()
        .map(|surfaces| {
            let refs: Vec<&str> = surfaces.iter().map(String::as_str).collect();
            Sentence::from_parts(&refs, &tagger.tag(&refs))
        })
        .collect();
    Corpus::new(tagged, tagger.scheme())
}

pub fn surfaces_of(corpus: &Corpus) -> Vec<Vec<String>> {
    corpus
        .sentences
        .iter()
        .map(|s| s.tokens.iter().map(|t| t.surface.clone()).collect())
        .collect()
}

fn format_error(msg: &str) -> Error {
    Error::ModelFormat(msg.to_owned())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
}

impl<R: BufRead> Lines<R> {
    fn new(reader: R) -> Self {
        Lines {
            inner: reader.lines(),
        }
    }

    fn next_line(&mut self) -> Result<String> {
        match self.inner.next() {
            Some(line) => Ok(line?),
            None => Err(format_error("unexpected end of stream")),
        }
    }

    fn field(&mut self, key: &str) -> Result<String> {
        let line = self.next_line()?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => Ok(v.to_owned()),
            _ => Err(format_error(&format!(
                "expected `{key} <value>`, found `{line}`"
            ))),
        }
    }

    fn number<T: FromStr>(&mut self, key: &str) -> Result<T> {
        let value = self.field(key)?;
        value
            .parse()
            .map_err(|_| format_error(&format!("bad value `{value}` for `{key}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnigramModel {
    pub scheme: Scheme,
    pub table: BTreeMap<String, String>,
    pub fallback: String,
}

impl UnigramModel {
    pub fn predict(&self, surface: &str) -> &str {
        self.table.get(surface).unwrap_or(&self.fallback)
    }

    fn save<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{MAGIC} {FORMAT_VERSION}")?;
        writeln!(out, "kind unigram")?;
        writeln!(out, "scheme {}", self.scheme)?;
        writeln!(out, "fallback {}", self.fallback)?;
        writeln!(out, "entries {}", self.table.len())?;
        for (surface, tag) in &self.table {
            writeln!(out, "{surface}\t{tag}")?;
        }
        writeln!(out, "end")
    }

    fn load_body<R: BufRead>(lines: &mut Lines<R>) -> Result<Self> {
        let scheme: Scheme = lines.field("scheme")?.parse()?;
        let fallback = lines.field("fallback")?;
        let n: usize = lines.number("entries")?;
        let mut table = BTreeMap::new();
        for _ in 0..n {
            let line = lines.next_line()?;
            let (surface, tag) = line
                .split_once('\t')
                .ok_or_else(|| format_error(&format!("bad entry `{line}`")))?;
            table.insert(surface.to_owned(), tag.to_owned());
        }
        Ok(UnigramModel {
            scheme,
            table,
            fallback,
        })
    }
}

impl Tagger for UnigramModel {
    fn tag(&self, surfaces: &[&str]) -> Vec<String> {
        surfaces
            .iter()
            .map(|s| self.predict(s).to_owned())
            .collect()
    }

    fn scheme(&self) -> Scheme {
        self.scheme
    }
}

fn require_nonempty(corpus: &Corpus) -> Result<()> {
    if corpus.token_count() == 0 {
        Err(Error::InvalidArgument(
            "cannot train on an empty corpus".into(),
        ))
    } else {
        Ok(())
    }
}

/// Most frequent tag per surface; ties go to the lexicographically smallest
/// tag.
pub fn train_unigram(corpus: &Corpus) -> Result<UnigramModel> {
    require_nonempty(corpus)?;
    let mut counts: BTreeMap<&str, BTreeMap<&str, u64>> = BTreeMap::new();
    for token in corpus.sentences.iter().flat_map(|s| &s.tokens) {
        *counts
            .entry(&token.surface)
            .or_default()
            .entry(&token.tag)
            .or_default() += 1;
    }
    let table = counts
        .into_iter()
        .map(|(surface, tags)| {
            // BTreeMap iterates tags in ascending order, so keeping the first
            // maximum implements the tie-break.
            let (tag, _) = tags
                .into_iter()
                .fold(None, |best: Option<(&str, u64)>, (tag, n)| match best {
                    Some((_, m)) if m >= n => best,
                    _ => Some((tag, n)),
                })
                .expect("surface was observed");
            (surface.to_owned(), tag.to_owned())
        })
        .collect();
    Ok(UnigramModel {
        scheme: corpus.scheme,
        table,
        fallback: OUTSIDE.to_owned(),
    })
}

const START: [&str; 2] = ["-START-", "-START2-"];
const END: [&str; 2] = ["-END-", "-END2-"];

fn shape(word: &str) -> String {
    let mut out = String::new();
    for c in word.chars() {
        let class = if c.is_uppercase() {
            'X'
        } else if c.is_lowercase() {
            'x'
        } else if c.is_ascii_digit() {
            'd'
        } else {
            c
        };
        if !out.ends_with(class) {
            out.push(class);
        }
    }
    out
}

fn suffix(word: &str, n: usize) -> &str {
    let start = word
        .char_indices()
        .rev()
        .nth(n.saturating_sub(1))
        .map_or(0, |(i, _)| i);
    &word[start..]
}

/// The two most recent tags before the next position, padded at the start.
fn history<'a>(done: &[&'a str]) -> (&'a str, &'a str) {
    match done {
        [] => (START[0], START[1]),
        [p] => (p, START[0]),
        [.., p2, p] => (p, p2),
    }
}

/// Feature strings for position `i`, one per entry of [`FEATURE_TEMPLATES`].
fn features(words: &[&str], i: usize, prev: &str, prev2: &str) -> Vec<String> {
    let at = |offset: isize| -> &str {
        let j = i as isize + offset;
        if j < 0 {
            START[(-j - 1) as usize]
        } else if j as usize >= words.len() {
            END[j as usize - words.len()]
        } else {
            words[j as usize]
        }
    };
    let word = words[i];
    let lower = word.to_lowercase();
    vec![
        "bias".to_owned(),
        format!("w={word}"),
        format!("lw={lower}"),
        format!("suf3={}", suffix(&lower, 3)),
        format!("shape={}", shape(word)),
        format!("w-1={}", at(-1)),
        format!("w-2={}", at(-2)),
        format!("w+1={}", at(1)),
        format!("w+2={}", at(2)),
        format!("t-1={prev}"),
        format!("t-2t-1={prev2}|{prev}"),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerceptronModel {
    pub scheme: Scheme,
    pub epochs: usize,
    pub seed: u64,
    pub classes: Vec<String>,
    /// Averaged weights, dense over `classes`.
    pub weights: HashMap<String, Vec<f64>>,
}

impl PerceptronModel {
    fn scores(&self, feats: &[String]) -> Vec<f64> {
        let mut scores = vec![0.0; self.classes.len()];
        for feat in feats {
            if let Some(row) = self.weights.get(feat) {
                for (s, w) in scores.iter_mut().zip(row) {
                    *s += w;
                }
            }
        }
        scores
    }

    fn save<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{MAGIC} {FORMAT_VERSION}")?;
        writeln!(out, "kind perceptron")?;
        writeln!(out, "scheme {}", self.scheme)?;
        writeln!(out, "epochs {}", self.epochs)?;
        writeln!(out, "seed {}", self.seed)?;
        writeln!(out, "features {}", FEATURE_TEMPLATES.join(" "))?;
        writeln!(out, "classes {}", self.classes.len())?;
        for class in &self.classes {
            writeln!(out, "{class}")?;
        }
        let mut entries: Vec<(&str, usize, f64)> = self
            .weights
            .iter()
            .flat_map(|(f, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(_, w)| **w != 0.0)
                    .map(move |(c, &w)| (f.as_str(), c, w))
            })
            .collect();
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        writeln!(out, "weights {}", entries.len())?;
        for (feat, class, w) in entries {
            writeln!(out, "{feat}\t{class}\t{w}")?;
        }
        writeln!(out, "end")
    }

    fn load_body<R: BufRead>(lines: &mut Lines<R>) -> Result<Self> {
        let scheme: Scheme = lines.field("scheme")?.parse()?;
        let epochs = lines.number("epochs")?;
        let seed = lines.number("seed")?;
        let templates = lines.field("features")?;
        if templates != FEATURE_TEMPLATES.join(" ") {
            return Err(format_error(&format!(
                "unsupported feature templates `{templates}`"
            )));
        }
        let k: usize = lines.number("classes")?;
        let classes = (0..k)
            .map(|_| lines.next_line())
            .collect::<Result<Vec<_>>>()?;
        let m: usize = lines.number("weights")?;
        let mut weights: HashMap<String, Vec<f64>> = HashMap::new();
        for _ in 0..m {
            let line = lines.next_line()?;
            let bad = || format_error(&format!("bad weight line `{line}`"));
            let mut parts = line.rsplitn(3, '\t');
            let w: f64 = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let c: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let feat = parts.next().ok_or_else(bad)?;
            if c >= k || !w.is_finite() {
                return Err(bad());
            }
            weights
                .entry(feat.to_owned())
                .or_insert_with(|| vec![0.0; k])[c] = w;
        }
        Ok(PerceptronModel {
            scheme,
            epochs,
            seed,
            classes,
            weights,
        })
    }
}

fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

impl Tagger for PerceptronModel {
    fn tag(&self, surfaces: &[&str]) -> Vec<String> {
        let mut out: Vec<&str> = Vec::with_capacity(surfaces.len());
        for i in 0..surfaces.len() {
            let (prev, prev2) = history(&out);
            let feats = features(surfaces, i, prev, prev2);
            out.push(&self.classes[argmax(&self.scores(&feats))]);
        }
        out.into_iter().map(str::to_owned).collect()
    }

    fn scheme(&self) -> Scheme {
        self.scheme
    }
}

#[derive(Default)]
struct Row {
    weights: Vec<f64>,
    totals: Vec<f64>,
    stamps: Vec<u64>,
}

struct Trainer {
    k: usize,
    rows: HashMap<String, Row>,
    instances: u64,
}

impl Trainer {
    fn scores(&self, feats: &[String]) -> Vec<f64> {
        let mut scores = vec![0.0; self.k];
        for feat in feats {
            if let Some(row) = self.rows.get(feat) {
                for (s, w) in scores.iter_mut().zip(&row.weights) {
                    *s += w;
                }
            }
        }
        scores
    }

    fn update(&mut self, truth: usize, guess: usize, feats: Vec<String>) {
        self.instances += 1;
        if truth == guess {
            return;
        }
        let now = self.instances;
        let k = self.k;
        for feat in feats {
            let row = self.rows.entry(feat).or_insert_with(|| Row {
                weights: vec![0.0; k],
                totals: vec![0.0; k],
                stamps: vec![0; k],
            });
            for (class, delta) in [(truth, 1.0), (guess, -1.0)] {
                row.totals[class] += (now - row.stamps[class]) as f64 * row.weights[class];
                row.stamps[class] = now;
                row.weights[class] += delta;
            }
        }
    }

    fn average(self) -> HashMap<String, Vec<f64>> {
        let now = self.instances;
        self.rows
            .into_iter()
            .filter_map(|(feat, row)| {
                let avg: Vec<f64> = (0..row.weights.len())
                    .map(|c| {
                        let total = row.totals[c] + (now - row.stamps[c]) as f64 * row.weights[c];
                        total / now as f64
                    })
                    .collect();
                avg.iter().any(|&w| w != 0.0).then_some((feat, avg))
            })
            .collect()
    }
}

/// Trains a greedy averaged perceptron. Sentence order is reshuffled every
/// epoch from a stream keyed by `(seed, epoch)`.
pub fn train_perceptron(corpus: &Corpus, epochs: usize, seed: u64) -> Result<PerceptronModel> {
    if epochs == 0 {
        return Err(Error::InvalidArgument("epochs must be at least 1".into()));
    }
    require_nonempty(corpus)?;
    let classes: Vec<String> = corpus
        .sentences
        .iter()
        .flat_map(|s| &s.tokens)
        .map(|t| t.tag.clone())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: HashMap<&str, usize> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let mut trainer = Trainer {
        k: classes.len(),
        rows: HashMap::new(),
        instances: 0,
    };
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    for epoch in 0..epochs {
        order.shuffle(&mut RandomStream::derive(seed, &[epoch as u64]));
        for &si in &order {
            let sentence = &corpus.sentences[si];
            let words = sentence.surfaces();
            let mut guesses: Vec<&str> = Vec::with_capacity(words.len());
            for (i, token) in sentence.tokens.iter().enumerate() {
                let (prev, prev2) = history(&guesses);
                let feats = features(&words, i, prev, prev2);
                let guess = argmax(&trainer.scores(&feats));
                trainer.update(index[token.tag.as_str()], guess, feats);
                guesses.push(&classes[guess]);
            }
        }
    }
    Ok(PerceptronModel {
        scheme: corpus.scheme,
        epochs,
        seed,
        classes,
        weights: trainer.average(),
    })
}
