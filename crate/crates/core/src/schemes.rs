//! Conversion among BIO, IO and BIOES through entity spans.
//!
//! Every conversion decodes a tag sequence into [`EntitySpan`]s and encodes
//! the spans again. Decoding is where ill-formed sequences are detected, and
//! [`RepairPolicy`] decides what happens to them.

use std::fmt;
use std::str::FromStr;

use crate::corpus::{make_tag, Corpus, EntitySpan, ParsedTag, Prefix, Scheme, Sentence, OUTSIDE};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum RepairPolicy {
    /// Ill-formed input is an error.
    Strict,
    /// A stray continuation opens a new entity; unclosed entities are closed.
    #[default]
    Conll,
    /// Ill-formed runs produce no entity.
    Discard,
}

impl fmt::Display for RepairPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RepairPolicy::Strict => "strict",
            RepairPolicy::Conll => "conll",
            RepairPolicy::Discard => "discard",
        })
    }
}

impl FromStr for RepairPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "strict" => Ok(RepairPolicy::Strict),
            "conll" => Ok(RepairPolicy::Conll),
            "discard" => Ok(RepairPolicy::Discard),
            _ => Err(Error::InvalidArgument(format!(
                "unknown repair policy `{s}`"
            ))),
        }
    }
}

enum State<'a> {
    Idle,
    Open {
        start: usize,
        label: &'a str,
    },
    /// Inside an ill-formed run being dropped (DISCARD only).
    Dropping {
        label: &'a str,
    },
}

struct Decoder<'a> {
    policy: RepairPolicy,
    state: State<'a>,
    spans: Vec<EntitySpan>,
}

impl<'a> Decoder<'a> {
    fn ill_formed(&self, index: usize, tag: &str) -> Result<()> {
        if self.policy == RepairPolicy::Strict {
            Err(Error::IllFormed {
                index,
                tag: tag.to_owned(),
            })
        } else {
            Ok(())
        }
    }

    fn emit(&mut self, start: usize, end: usize, label: &str) {
        self.spans.push(EntitySpan::new(start, end, label));
    }

    /// Ends the open entity at `end`, keeping it.
    fn close(&mut self, end: usize) {
        if let State::Open { start, label } = std::mem::replace(&mut self.state, State::Idle) {
            self.emit(start, end, label);
        }
    }

    /// An unclosed BIOES entity met something other than its continuation.
    /// CONLL keeps it, DISCARD drops it.
    fn abandon_unclosed(&mut self, index: usize, tag: &str) -> Result<()> {
        if let State::Open { .. } = self.state {
            self.ill_formed(index, tag)?;
            if self.policy == RepairPolicy::Conll {
                self.close(index);
            }
        }
        self.state = State::Idle;
        Ok(())
    }

    /// A continuation tag (`I-`, or BIO `I-` after a mismatch) that cannot
    /// extend the current entity.
    fn stray(&mut self, index: usize, tag: &str, label: &'a str) -> Result<()> {
        self.ill_formed(index, tag)?;
        self.state = match self.policy {
            RepairPolicy::Discard => State::Dropping { label },
            _ => State::Open {
                start: index,
                label,
            },
        };
        Ok(())
    }

    fn bio(&mut self, index: usize, tag: &str, parsed: ParsedTag<'a>) -> Result<()> {
        match parsed {
            ParsedTag::Outside => {
                self.close(index);
                self.state = State::Idle;
            }
            ParsedTag::Entity {
                prefix: Prefix::B,
                label,
            } => {
                self.close(index);
                self.state = State::Open {
                    start: index,
                    label,
                };
            }
            ParsedTag::Entity { label, .. } => match self.state {
                State::Open { label: open, .. } if open == label => {}
                State::Dropping { label: open } if open == label => {}
                _ => {
                    self.close(index);
                    self.stray(index, tag, label)?;
                }
            },
        }
        Ok(())
    }

    fn io(&mut self, index: usize, parsed: ParsedTag<'a>) {
        match parsed.label() {
            None => {
                self.close(index);
            }
            Some(label) => match self.state {
                State::Open { label: open, .. } if open == label => {}
                _ => {
                    self.close(index);
                    self.state = State::Open {
                        start: index,
                        label,
                    };
                }
            },
        }
    }

    fn bioes(&mut self, index: usize, tag: &str, parsed: ParsedTag<'a>) -> Result<()> {
        let (prefix, label) = match parsed {
            ParsedTag::Outside => return self.abandon_unclosed(index, tag),
            ParsedTag::Entity { prefix, label } => (prefix, label),
        };
        let continues = matches!(self.state, State::Open { label: open, .. } if open == label);
        match prefix {
            Prefix::S => {
                self.abandon_unclosed(index, tag)?;
                self.emit(index, index + 1, label);
            }
            Prefix::B => {
                self.abandon_unclosed(index, tag)?;
                self.state = State::Open {
                    start: index,
                    label,
                };
            }
            Prefix::I if continues => {}
            Prefix::I => {
                if let State::Dropping { .. } = self.state {
                    self.state = State::Dropping { label };
                    return Ok(());
                }
                self.abandon_unclosed(index, tag)?;
                self.stray(index, tag, label)?;
            }
            Prefix::E if continues => self.close(index + 1),
            Prefix::E => {
                if let State::Dropping { .. } = self.state {
                    self.state = State::Idle;
                    return Ok(());
                }
                self.abandon_unclosed(index, tag)?;
                self.ill_formed(index, tag)?;
                if self.policy == RepairPolicy::Conll {
                    self.emit(index, index + 1, label);
                }
            }
        }
        Ok(())
    }
}

/// Decodes tags into sorted, non-overlapping spans.
pub fn decode_spans<T: AsRef<str>>(
    tags: &[T],
    scheme: Scheme,
    policy: RepairPolicy,
) -> Result<Vec<EntitySpan>> {
    let mut decoder = Decoder {
        policy,
        state: State::Idle,
        spans: Vec::new(),
    };
    for (index, tag) in tags.iter().enumerate() {
        let tag = tag.as_ref();
        let parsed = parse_for(tag, index, scheme)?;
        match scheme {
            Scheme::Bio => decoder.bio(index, tag, parsed)?,
            Scheme::Io => decoder.io(index, parsed),
            Scheme::Bioes => decoder.bioes(index, tag, parsed)?,
        }
    }
    let len = tags.len();
    if scheme == Scheme::Bioes {
        if let State::Open { .. } = decoder.state {
            let last = tags[len - 1].as_ref();
            decoder.ill_formed(len - 1, last)?;
            if policy == RepairPolicy::Discard {
                decoder.state = State::Idle;
            }
        }
    }
    decoder.close(len);
    Ok(decoder.spans)
}

fn parse_for(tag: &str, index: usize, scheme: Scheme) -> Result<ParsedTag<'_>> {
    let illegal = || Error::IllegalTag {
        index,
        tag: tag.to_owned(),
        scheme,
    };
    match ParsedTag::parse(tag).ok_or_else(illegal)? {
        ParsedTag::Entity { prefix, .. } if !scheme.allows(prefix) => Err(illegal()),
        parsed => Ok(parsed),
    }
}

/// Checks the span preconditions of [`encode_tags`].
pub fn check_spans(spans: &[EntitySpan], length: usize) -> Result<()> {
    let mut prev_end = 0;
    for (i, span) in spans.iter().enumerate() {
        if span.start >= span.end || span.end > length {
            return Err(Error::InvalidSpans(format!(
                "span {i} ({}, {}) out of range for length {length}",
                span.start, span.end
            )));
        }
        if span.start < prev_end {
            return Err(Error::InvalidSpans(format!(
                "span {i} ({}, {}) overlaps or is out of order",
                span.start, span.end
            )));
        }
        if ParsedTag::parse(&make_tag(Prefix::B, &span.label)).is_none() {
            return Err(Error::InvalidSpans(format!(
                "span {i} has invalid label `{}`",
                span.label
            )));
        }
        prev_end = span.end;
    }
    Ok(())
}

pub fn encode_tags(spans: &[EntitySpan], length: usize, scheme: Scheme) -> Result<Vec<String>> {
    check_spans(spans, length)?;
    let mut tags = vec![OUTSIDE.to_owned(); length];
    for span in spans {
        let label = span.label.as_str();
        for (offset, slot) in tags[span.start..span.end].iter_mut().enumerate() {
            let first = offset == 0;
            let last = offset + 1 == span.len();
            let prefix = match scheme {
                Scheme::Io => Prefix::I,
                Scheme::Bio if first => Prefix::B,
                Scheme::Bio => Prefix::I,
                Scheme::Bioes if first && last => Prefix::S,
                Scheme::Bioes if first => Prefix::B,
                Scheme::Bioes if last => Prefix::E,
                Scheme::Bioes => Prefix::I,
            };
            *slot = make_tag(prefix, label);
        }
    }
    Ok(tags)
}

pub fn convert<T: AsRef<str>>(
    tags: &[T],
    from: Scheme,
    to: Scheme,
    policy: RepairPolicy,
) -> Result<Vec<String>> {
    let spans = decode_spans(tags, from, policy)?;
    encode_tags(&spans, tags.len(), to)
}

/// Re-encodes `tags` in their own scheme so they decode cleanly under
/// [`RepairPolicy::Strict`].
pub fn repair<T: AsRef<str>>(
    tags: &[T],
    scheme: Scheme,
    policy: RepairPolicy,
) -> Result<Vec<String>> {
    convert(tags, scheme, scheme, policy)
}

pub fn convert_sentence(
    sentence: &Sentence,
    from: Scheme,
    to: Scheme,
    policy: RepairPolicy,
) -> Result<Sentence> {
    Ok(sentence.with_tags(&convert(&sentence.tags(), from, to, policy)?))
}

/// Converts every sentence. Errors carry the sentence ordinal.
pub fn convert_corpus(corpus: &Corpus, to: Scheme, policy: RepairPolicy) -> Result<Corpus> {
    let sentences = corpus
        .sentences
        .iter()
        .enumerate()
        .map(|(i, s)| {
            convert_sentence(s, corpus.scheme, to, policy)
                .map_err(|e| Error::InvalidArgument(format!("sentence {i}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Corpus::new(sentences, to);
    out.label_set.extend(corpus.label_set.iter().cloned());
    out.documents = corpus.documents.clone();
    Ok(out)
}
