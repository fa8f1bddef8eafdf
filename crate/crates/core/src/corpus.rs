//! Tagged corpora and the tab-separated CoNLL-style file format.
//!
//! One token per line, `surface<TAB>tag`; a blank line ends a sentence.
//! On read, fields may be separated by any run of spaces or tabs, the first
//! field is the surface and the last the tag, consecutive blank lines
//! collapse, trailing `\r` is ignored and `-DOCSTART-` lines mark document
//! boundaries. On write, the single canonical form is emitted.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{Error, Result, Violation, ViolationKind};

pub const OUTSIDE: &str = "O";
const DOCSTART: &str = "-DOCSTART-";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    Io,
    Bio,
    Bioes,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Io, Scheme::Bio, Scheme::Bioes];

    pub fn allows(self, prefix: Prefix) -> bool {
        match self {
            Scheme::Io => prefix == Prefix::I,
            Scheme::Bio => matches!(prefix, Prefix::B | Prefix::I),
            Scheme::Bioes => true,
        }
    }

    /// Smallest scheme whose prefix set covers every prefix in `prefixes`.
    pub fn infer<I: IntoIterator<Item = Prefix>>(prefixes: I) -> Scheme {
        prefixes
            .into_iter()
            .map(|p| match p {
                Prefix::I => Scheme::Io,
                Prefix::B => Scheme::Bio,
                Prefix::E | Prefix::S => Scheme::Bioes,
            })
            .max()
            .unwrap_or(Scheme::Io)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Io => "IO",
            Scheme::Bio => "BIO",
            Scheme::Bioes => "BIOES",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "IO" => Ok(Scheme::Io),
            "BIO" | "IOB2" => Ok(Scheme::Bio),
            "BIOES" | "IOBES" => Ok(Scheme::Bioes),
            _ => Err(Error::InvalidArgument(format!("unknown scheme `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Prefix {
    B,
    I,
    E,
    S,
}

impl Prefix {
    pub fn as_char(self) -> char {
        match self {
            Prefix::B => 'B',
            Prefix::I => 'I',
            Prefix::E => 'E',
            Prefix::S => 'S',
        }
    }
}

/// A tag split into its parts. Borrowed from the tag string.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParsedTag<'a> {
    Outside,
    Entity { prefix: Prefix, label: &'a str },
}

impl<'a> ParsedTag<'a> {
    /// Parses `O` or `<B|I|E|S>-<label>`. Case-sensitive.
    pub fn parse(tag: &'a str) -> Option<Self> {
        if tag == OUTSIDE {
            return Some(ParsedTag::Outside);
        }
        let (head, label) = tag.split_at_checked(2)?;
        let prefix = match head {
            "B-" => Prefix::B,
            "I-" => Prefix::I,
            "E-" => Prefix::E,
            "S-" => Prefix::S,
            _ => return None,
        };
        if label.is_empty() || label.chars().any(char::is_whitespace) {
            return None;
        }
        Some(ParsedTag::Entity { prefix, label })
    }

    pub fn label(&self) -> Option<&'a str> {
        match *self {
            ParsedTag::Outside => None,
            ParsedTag::Entity { label, .. } => Some(label),
        }
    }
}

pub fn make_tag(prefix: Prefix, label: &str) -> String {
    let mut tag = String::with_capacity(label.len() + 2);
    tag.push(prefix.as_char());
    tag.push('-');
    tag.push_str(label);
    tag
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub surface: String,
    pub tag: String,
}

impl Token {
    pub fn new(surface: impl Into<String>, tag: impl Into<String>) -> Self {
        Token {
            surface: surface.into(),
            tag: tag.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Sentence {
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>) -> Self {
        Sentence { tokens }
    }

    /// Zips surfaces with tags. Panics if the lengths differ.
    pub fn from_parts<S: AsRef<str>, T: AsRef<str>>(surfaces: &[S], tags: &[T]) -> Self {
        assert_eq!(surfaces.len(), tags.len(), "surface/tag length mismatch");
        Sentence {
            tokens: surfaces
                .iter()
                .zip(tags)
                .map(|(s, t)| Token::new(s.as_ref(), t.as_ref()))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    pub fn tags(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.tag.as_str()).collect()
    }

    pub fn with_tags<T: AsRef<str>>(&self, tags: &[T]) -> Sentence {
        Sentence::from_parts(&self.surfaces(), tags)
    }
}

/// An entity mention: tokens `start..end` carrying `label`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub label: String,
}

impl EntitySpan {
    pub fn new(start: usize, end: usize, label: impl Into<String>) -> Self {
        EntitySpan {
            start,
            end,
            label: label.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub sentences: Vec<Sentence>,
    pub scheme: Scheme,
    pub label_set: BTreeSet<String>,
    /// Sentence ordinals at which a `-DOCSTART-` marker was seen. A value
    /// equal to `sentences.len()` is a trailing marker.
    pub documents: Vec<usize>,
}

impl Corpus {
    /// Builds a corpus with the label set taken from the observed tags.
    pub fn new(sentences: Vec<Sentence>, scheme: Scheme) -> Self {
        let label_set = observed_labels(&sentences);
        Corpus {
            sentences,
            scheme,
            label_set,
            documents: Vec::new(),
        }
    }

    pub fn empty(scheme: Scheme) -> Self {
        Corpus::new(Vec::new(), scheme)
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }

    /// Every invariant violation, in corpus order.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (s, sentence) in self.sentences.iter().enumerate() {
            for (p, token) in sentence.tokens.iter().enumerate() {
                let mut report = |kind| {
                    out.push(Violation {
                        sentence: s,
                        position: p,
                        tag: if kind == ViolationKind::MalformedSurface {
                            token.surface.clone()
                        } else {
                            token.tag.clone()
                        },
                        kind,
                    })
                };
                if !is_valid_surface(&token.surface) {
                    report(ViolationKind::MalformedSurface);
                }
                match ParsedTag::parse(&token.tag) {
                    None => report(ViolationKind::MalformedTag),
                    Some(ParsedTag::Outside) => {}
                    Some(ParsedTag::Entity { prefix, label }) => {
                        if !self.scheme.allows(prefix) {
                            report(ViolationKind::IllegalPrefix);
                        }
                        if !self.label_set.contains(label) {
                            report(ViolationKind::UnknownLabel);
                        }
                    }
                }
            }
        }
        out
    }

    pub fn into_validated(self) -> Result<Self> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(Error::Validation(violations))
        }
    }

    /// Concatenates `other` after `self`, keeping `self`'s scheme.
    pub fn concat(mut self, other: Corpus) -> Corpus {
        self.label_set.extend(other.label_set);
        self.sentences.extend(other.sentences);
        self
    }
}

pub fn observed_labels(sentences: &[Sentence]) -> BTreeSet<String> {
    sentences
        .iter()
        .flat_map(|s| &s.tokens)
        .filter_map(|t| ParsedTag::parse(&t.tag).and_then(|p| p.label()))
        .map(str::to_owned)
        .collect()
}

fn is_valid_surface(surface: &str) -> bool {
    !surface.is_empty() && !surface.chars().any(char::is_whitespace)
}

fn fields(line: &str) -> impl Iterator<Item = &str> {
    line.split([' ', '\t']).filter(|f| !f.is_empty())
}

/// Reads lines, handing each non-blank, non-marker line's fields to `token`
/// and grouping the results into sentences.
fn read_blocks<R, T, F>(reader: R, mut token: F) -> Result<(Vec<Vec<T>>, Vec<usize>)>
where
    R: BufRead,
    F: FnMut(usize, &[&str]) -> Result<T>,
{
    let mut sentences = Vec::new();
    let mut documents = Vec::new();
    let mut current = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        let parts: Vec<&str> = fields(line).collect();
        if parts.is_empty() || parts[0] == DOCSTART {
            if !current.is_empty() {
                sentences.push(std::mem::take(&mut current));
            }
            if !parts.is_empty() {
                documents.push(sentences.len());
            }
            continue;
        }
        current.push(token(idx + 1, &parts)?);
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    Ok((sentences, documents))
}

/// Parses a corpus. With `scheme == None` the smallest scheme covering the
/// observed prefixes is used.
pub fn read_conll<R: BufRead>(reader: R, scheme: Option<Scheme>) -> Result<Corpus> {
    let (blocks, documents) = read_blocks(reader, |line, parts| {
        if parts.len() < 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected `surface<TAB>tag`, found {} field", parts.len()),
            });
        }
        Ok(Token::new(parts[0], parts[parts.len() - 1]))
    })?;
    let sentences: Vec<Sentence> = blocks.into_iter().map(Sentence::new).collect();
    let scheme = scheme.unwrap_or_else(|| {
        Scheme::infer(sentences.iter().flat_map(|s| &s.tokens).filter_map(
            |t| match ParsedTag::parse(&t.tag) {
                Some(ParsedTag::Entity { prefix, .. }) => Some(prefix),
                _ => None,
            },
        ))
    });
    let mut corpus = Corpus::new(sentences, scheme);
    corpus.documents = documents;
    corpus.into_validated()
}

pub fn read_conll_str(text: &str, scheme: Option<Scheme>) -> Result<Corpus> {
    read_conll(text.as_bytes(), scheme)
}

/// Reads untagged text in the same layout: one token per line, blank lines
/// between sentences. Only the first field of each line is used.
pub fn read_raw<R: BufRead>(reader: R) -> Result<Vec<Vec<String>>> {
    read_blocks(reader, |_, parts| Ok(parts[0].to_owned())).map(|(s, _)| s)
}

pub fn write_conll<W: Write>(corpus: &Corpus, mut out: W) -> std::io::Result<()> {
    let mut markers = corpus.documents.iter().peekable();
    for (i, sentence) in corpus.sentences.iter().enumerate() {
        while markers.next_if(|&&d| d <= i).is_some() {
            writeln!(out, "{DOCSTART}\t{OUTSIDE}\n")?;
        }
        for token in &sentence.tokens {
            writeln!(out, "{}\t{}", token.surface, token.tag)?;
        }
        writeln!(out)?;
    }
    for _ in markers {
        writeln!(out, "{DOCSTART}\t{OUTSIDE}\n")?;
    }
    Ok(())
}

pub fn write_conll_string(corpus: &Corpus) -> String {
    let mut buf = Vec::new();
    write_conll(corpus, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("corpus text is UTF-8")
}

pub fn write_raw<W: Write>(sentences: &[Vec<String>], mut out: W) -> std::io::Result<()> {
    for sentence in sentences {
        for surface in sentence {
            writeln!(out, "{surface}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}
