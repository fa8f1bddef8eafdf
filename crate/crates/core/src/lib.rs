//! Corpus engineering for named-entity sequence labeling.
//!
//! The crate covers the full path from a tagged CoNLL-style corpus to an
//! entity-level score: tag-scheme conversion ([`schemes`]), training-data
//! augmentation ([`augment`]), baseline taggers ([`taggers`]), consensus
//! silver-corpus construction ([`semisup`]), transformation-based error
//! correction ([`brill`]), scoring ([`eval`]) and a staged experiment runner
//! ([`pipeline`]).

pub mod augment;
pub mod brill;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod pipeline;
pub mod rng;
pub mod schemes;
pub mod semisup;
pub mod synth;
pub mod taggers;

pub use corpus::{
    read_conll, read_conll_str, read_raw, write_conll, write_conll_string, Corpus, EntitySpan,
    ParsedTag, Prefix, Scheme, Sentence, Token,
};
pub use error::{Error, Result, Violation, ViolationKind};
pub use schemes::{convert, decode_spans, encode_tags, repair, RepairPolicy};
