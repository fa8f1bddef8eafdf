//! Consensus silver corpora.
//!
//! Several taggers annotate the same unlabeled sentences. An entity survives
//! only if every tagger produced exactly the same `(start, end, label)`
//! span; sentences left without entities can be dropped.

use std::collections::BTreeSet;

use crate::corpus::{Corpus, EntitySpan, Scheme, Sentence};
use crate::error::{Error, Result};
use crate::schemes::{decode_spans, encode_tags, RepairPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConsensusConfig {
    /// Scheme of the produced corpus.
    pub scheme: Scheme,
    pub policy: RepairPolicy,
    pub drop_all_o: bool,
}

impl Default for ConsensusConfig {
    fn default() -> Self {
        ConsensusConfig {
            scheme: Scheme::Bioes,
            policy: RepairPolicy::Conll,
            drop_all_o: true,
        }
    }
}

/// Spans present in every set. Fewer than two sets is an error.
pub fn consensus_spans(span_sets: &[Vec<EntitySpan>]) -> Result<Vec<EntitySpan>> {
    let (first, rest) = match span_sets {
        [first, rest @ ..] if !rest.is_empty() => (first, rest),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "consensus needs at least two prediction sources, got {}",
                span_sets.len()
            )))
        }
    };
    let others: Vec<BTreeSet<&EntitySpan>> = rest.iter().map(|s| s.iter().collect()).collect();
    Ok(first
        .iter()
        .filter(|span| others.iter().all(|set| set.contains(span)))
        .cloned()
        .collect())
}

/// A prediction: tags plus the scheme they are written in.
#[derive(Debug, Clone, Copy)]
pub struct Prediction<'a, T> {
    pub tags: &'a [T],
    pub scheme: Scheme,
}

/// Consensus tags for one sentence of `length` tokens.
pub fn consensus_tags<T: AsRef<str>>(
    length: usize,
    predictions: &[Prediction<'_, T>],
    cfg: &ConsensusConfig,
) -> Result<Vec<String>> {
    let spans = predictions
        .iter()
        .enumerate()
        .map(|(m, p)| {
            if p.tags.len() != length {
                return Err(Error::Alignment(format!(
                    "model {m} has {} tags for {length} tokens",
                    p.tags.len()
                )));
            }
            decode_spans(p.tags, p.scheme, cfg.policy)
        })
        .collect::<Result<Vec<_>>>()?;
    encode_tags(&consensus_spans(&spans)?, length, cfg.scheme)
}

/// Builds the silver corpus from token-aligned predictions over `raw`.
pub fn build_silver_corpus(
    raw: &[Vec<String>],
    predictions: &[Corpus],
    cfg: &ConsensusConfig,
) -> Result<Corpus> {
    if predictions.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "consensus needs at least two prediction sources, got {}",
            predictions.len()
        )));
    }
    for (m, p) in predictions.iter().enumerate() {
        if p.len() != raw.len() {
            return Err(Error::Alignment(format!(
                "prediction {m} has {} sentences, raw text has {}",
                p.len(),
                raw.len()
            )));
        }
    }
    let mut sentences = Vec::new();
    for (i, surfaces) in raw.iter().enumerate() {
        let tags: Vec<Vec<&str>> = predictions.iter().map(|p| p.sentences[i].tags()).collect();
        for (m, p) in predictions.iter().enumerate() {
            if p.sentences[i].surfaces() != *surfaces {
                return Err(Error::Alignment(format!(
                    "sentence {i}: prediction {m} is not over the same tokens as the raw text"
                )));
            }
        }
        let preds: Vec<Prediction<'_, &str>> = tags
            .iter()
            .zip(predictions)
            .map(|(t, p)| Prediction {
                tags: t,
                scheme: p.scheme,
            })
            .collect();
        let consensus = consensus_tags(surfaces.len(), &preds, cfg)
            .map_err(|e| Error::InvalidArgument(format!("sentence {i}: {e}")))?;
        if cfg.drop_all_o && consensus.iter().all(|t| t == crate::corpus::OUTSIDE) {
            continue;
        }
        sentences.push(Sentence::from_parts(surfaces, &consensus));
    }
    Ok(Corpus::new(sentences, cfg.scheme))
}
