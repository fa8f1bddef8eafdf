//! Training-data augmentation for sequence labeling.
//!
//! Three label-preserving transformations, each gated per unit by a
//! Bernoulli(p) draw:
//!
//! * label-wise token replacement ([`lwtr`]): a token's surface is resampled
//!   from the surfaces observed under the same full tag;
//! * synonym replacement ([`synonym_replace`]): a token is swapped for a
//!   lexicon phrase, expanding the tag when the phrase has several tokens;
//! * shuffle within segments ([`shuffle_within_segments`]): surfaces are
//!   permuted inside each entity span and each maximal run of `O` tokens.
//!
//! [`augment_corpus`] appends one transformed copy of every sentence per
//! technique and copy index. Each copy draws from its own [`RandomStream`]
//! keyed by `(seed, sentence, technique, copy)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use rand::seq::SliceRandom;

use crate::corpus::{make_tag, Corpus, ParsedTag, Prefix, Scheme, Sentence, Token, OUTSIDE};
use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::schemes::{decode_spans, RepairPolicy};

pub const DEFAULT_P: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Technique {
    Lwtr,
    Sr,
    Sis,
}

impl Technique {
    pub const ALL: [Technique; 3] = [Technique::Lwtr, Technique::Sr, Technique::Sis];

    pub fn id(self) -> u64 {
        match self {
            Technique::Lwtr => 0,
            Technique::Sr => 1,
            Technique::Sis => 2,
        }
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Technique::Lwtr => "lwtr",
            Technique::Sr => "sr",
            Technique::Sis => "sis",
        })
    }
}

impl FromStr for Technique {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lwtr" => Ok(Technique::Lwtr),
            "sr" => Ok(Technique::Sr),
            "sis" => Ok(Technique::Sis),
            other => Err(Error::InvalidArgument(format!(
                "unknown technique `{other}`"
            ))),
        }
    }
}

/// Parses a comma-separated technique list such as `lwtr,sr,sis`.
pub fn parse_techniques(list: &str) -> Result<BTreeSet<Technique>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(Technique::from_str)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentConfig {
    pub p: f64,
    pub techniques: BTreeSet<Technique>,
    pub copies_per_technique: usize,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            p: DEFAULT_P,
            techniques: Technique::ALL.into_iter().collect(),
            copies_per_technique: 1,
            seed: 0,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::InvalidArgument(format!(
                "p must be in [0, 1], got {}",
                self.p
            )));
        }
        if self.techniques.is_empty() {
            return Err(Error::InvalidArgument(
                "no augmentation technique selected".into(),
            ));
        }
        if self.copies_per_technique == 0 {
            return Err(Error::InvalidArgument(
                "copies per technique must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Bucket {
    surfaces: Vec<String>,
    cumulative: Vec<u64>,
}

impl Bucket {
    fn total(&self) -> u64 {
        self.cumulative.last().copied().unwrap_or(0)
    }
}

/// Per full tag, a multinomial over surfaces weighted by observed counts.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelTokenDistribution {
    buckets: BTreeMap<String, Bucket>,
}

impl LabelTokenDistribution {
    pub fn from_counts(counts: BTreeMap<String, BTreeMap<String, u64>>) -> Self {
        let buckets = counts
            .into_iter()
            .filter_map(|(tag, surfaces)| {
                let mut running = 0;
                let (surfaces, cumulative) = surfaces
                    .into_iter()
                    .filter(|&(_, c)| c > 0)
                    .map(|(s, c)| {
                        running += c;
                        (s, running)
                    })
                    .unzip::<_, _, Vec<_>, Vec<_>>();
                (!surfaces.is_empty()).then_some((
                    tag,
                    Bucket {
                        surfaces,
                        cumulative,
                    },
                ))
            })
            .collect();
        LabelTokenDistribution { buckets }
    }

    pub fn tags(&self) -> impl Iterator<Item = &str> {
        self.buckets.keys().map(String::as_str)
    }

    pub fn count(&self, tag: &str, surface: &str) -> u64 {
        let Some(bucket) = self.buckets.get(tag) else {
            return 0;
        };
        match bucket
            .surfaces
            .binary_search_by(|s| s.as_str().cmp(surface))
        {
            Ok(i) => bucket.cumulative[i] - if i == 0 { 0 } else { bucket.cumulative[i - 1] },
            Err(_) => 0,
        }
    }

    pub fn total(&self, tag: &str) -> u64 {
        self.buckets.get(tag).map_or(0, Bucket::total)
    }

    /// Draws a surface for `tag` with probability count/total.
    pub fn sample(&self, tag: &str, rng: &mut RandomStream) -> Option<&str> {
        let bucket = self.buckets.get(tag)?;
        let target = rng.below(bucket.total());
        let i = bucket.cumulative.partition_point(|&c| c <= target);
        Some(&bucket.surfaces[i])
    }
}

pub fn build_label_token_distribution(corpus: &Corpus) -> LabelTokenDistribution {
    let mut counts: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    for token in corpus.sentences.iter().flat_map(|s| &s.tokens) {
        *counts
            .entry(token.tag.clone())
            .or_default()
            .entry(token.surface.clone())
            .or_default() += 1;
    }
    LabelTokenDistribution::from_counts(counts)
}

/// Lowercased headword to synonym phrases, in first-seen order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SynonymLexicon {
    entries: BTreeMap<String, Vec<Vec<String>>>,
}

impl SynonymLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `phrase` under `headword`. Duplicate pairs are ignored.
    pub fn insert(&mut self, headword: &str, phrase: &str) -> Result<()> {
        let tokens: Vec<String> = phrase.split_whitespace().map(str::to_owned).collect();
        let headword = headword.trim().to_lowercase();
        if headword.is_empty() || headword.contains(char::is_whitespace) {
            return Err(Error::InvalidArgument(format!("bad headword `{headword}`")));
        }
        if tokens.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "empty synonym for `{headword}`"
            )));
        }
        let phrases = self.entries.entry(headword).or_default();
        if !phrases.contains(&tokens) {
            phrases.push(tokens);
        }
        Ok(())
    }

    pub fn lookup(&self, surface: &str) -> Option<&[Vec<String>]> {
        self.entries.get(&surface.to_lowercase()).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[Vec<String>])> {
        self.entries.iter().map(|(h, p)| (h.as_str(), p.as_slice()))
    }
}

/// Reads `headword<TAB>synonym phrase` lines. Blank lines are skipped.
pub fn read_lexicon<R: BufRead>(reader: R) -> Result<SynonymLexicon> {
    let mut lexicon = SynonymLexicon::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        let (head, phrase) = line.split_once('\t').ok_or_else(|| Error::Parse {
            line: idx + 1,
            message: "expected `headword<TAB>synonym phrase`".into(),
        })?;
        lexicon.insert(head, phrase).map_err(|e| Error::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
    }
    Ok(lexicon)
}

pub fn write_lexicon<W: std::io::Write>(
    lexicon: &SynonymLexicon,
    mut out: W,
) -> std::io::Result<()> {
    for (head, phrases) in lexicon.iter() {
        for phrase in phrases {
            writeln!(out, "{head}\t{}", phrase.join(" "))?;
        }
    }
    Ok(())
}

/// Label-wise token replacement.
pub fn lwtr(
    sentence: &Sentence,
    dist: &LabelTokenDistribution,
    p: f64,
    rng: &mut RandomStream,
) -> Result<Sentence> {
    let mut out = sentence.clone();
    for token in &mut out.tokens {
        if dist.total(&token.tag) == 0 {
            return Err(Error::MissingTag(token.tag.clone()));
        }
        if rng.bernoulli(p) {
            let surface = dist.sample(&token.tag, rng).expect("bucket is non-empty");
            token.surface = surface.to_owned();
        }
    }
    Ok(out)
}

/// Tags for a `len`-token phrase replacing one token tagged `tag`.
fn expand_tag(tag: &str, len: usize) -> Vec<String> {
    if len == 1 {
        return vec![tag.to_owned()];
    }
    let (prefix, label) = match ParsedTag::parse(tag) {
        Some(ParsedTag::Entity { prefix, label }) => (prefix, label),
        _ => return vec![OUTSIDE.to_owned(); len],
    };
    let (first, middle, last) = match prefix {
        Prefix::B => (Prefix::B, Prefix::I, Prefix::I),
        Prefix::I => (Prefix::I, Prefix::I, Prefix::I),
        Prefix::E => (Prefix::I, Prefix::I, Prefix::E),
        Prefix::S => (Prefix::B, Prefix::I, Prefix::E),
    };
    (0..len)
        .map(|i| {
            let prefix = if i == 0 {
                first
            } else if i + 1 == len {
                last
            } else {
                middle
            };
            make_tag(prefix, label)
        })
        .collect()
}

/// Synonym replacement. Tokens without a lexicon entry never change.
pub fn synonym_replace(
    sentence: &Sentence,
    lexicon: &SynonymLexicon,
    p: f64,
    rng: &mut RandomStream,
) -> Sentence {
    let mut tokens = Vec::with_capacity(sentence.len());
    for token in &sentence.tokens {
        let hit = rng.bernoulli(p);
        match lexicon.lookup(&token.surface) {
            Some(phrases) if hit => {
                let phrase = &phrases[rng.below(phrases.len() as u64) as usize];
                let tags = expand_tag(&token.tag, phrase.len());
                tokens.extend(
                    phrase
                        .iter()
                        .zip(tags)
                        .map(|(s, t)| Token::new(s.as_str(), t)),
                );
            }
            _ => tokens.push(token.clone()),
        }
    }
    Sentence::new(tokens)
}

/// Entity spans and maximal `O` runs, as `(start, end)` pairs covering the
/// sentence in order.
pub fn segments(sentence: &Sentence, scheme: Scheme) -> Result<Vec<(usize, usize)>> {
    let spans = decode_spans(&sentence.tags(), scheme, RepairPolicy::Strict)?;
    let mut out = Vec::new();
    let mut cursor = 0;
    for span in &spans {
        if cursor < span.start {
            out.push((cursor, span.start));
        }
        out.push((span.start, span.end));
        cursor = span.end;
    }
    if cursor < sentence.len() {
        out.push((cursor, sentence.len()));
    }
    Ok(out)
}

/// Shuffle within segments. The tag sequence is left untouched.
pub fn shuffle_within_segments(
    sentence: &Sentence,
    scheme: Scheme,
    p: f64,
    rng: &mut RandomStream,
) -> Result<Sentence> {
    let mut surfaces: Vec<&str> = sentence.surfaces();
    for (start, end) in segments(sentence, scheme)? {
        if rng.bernoulli(p) {
            surfaces[start..end].shuffle(rng);
        }
    }
    Ok(Sentence::from_parts(&surfaces, &sentence.tags()))
}

fn apply_technique(
    technique: Technique,
    sentence: &Sentence,
    scheme: Scheme,
    cfg: &AugmentConfig,
    lexicon: &SynonymLexicon,
    dist: &LabelTokenDistribution,
    rng: &mut RandomStream,
) -> Result<Sentence> {
    match technique {
        Technique::Lwtr => lwtr(sentence, dist, cfg.p, rng),
        Technique::Sr => Ok(synonym_replace(sentence, lexicon, cfg.p, rng)),
        Technique::Sis => shuffle_within_segments(sentence, scheme, cfg.p, rng),
    }
}

/// The original sentences followed by the augmented copies, ordered by
/// technique, then copy index, then sentence.
pub fn augment_corpus(
    corpus: &Corpus,
    cfg: &AugmentConfig,
    lexicon: &SynonymLexicon,
    dist: &LabelTokenDistribution,
) -> Result<Corpus> {
    cfg.validate()?;
    let mut sentences = corpus.sentences.clone();
    for &technique in &cfg.techniques {
        for copy in 0..cfg.copies_per_technique {
            for (i, sentence) in corpus.sentences.iter().enumerate() {
                let mut rng = RandomStream::for_sentence(cfg.seed, i, technique.id(), copy);
                let augmented = apply_technique(
                    technique,
                    sentence,
                    corpus.scheme,
                    cfg,
                    lexicon,
                    dist,
                    &mut rng,
                )
                .map_err(|e| Error::InvalidArgument(format!("{technique} on sentence {i}: {e}")))?;
                sentences.push(augmented);
            }
        }
    }
    let mut out = Corpus::new(sentences, corpus.scheme);
    out.label_set.extend(corpus.label_set.iter().cloned());
    out.documents = corpus.documents.clone();
    Ok(out)
}
