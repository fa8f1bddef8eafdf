use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A location inside a corpus: sentence ordinal and token position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub sentence: usize,
    pub position: usize,
    pub tag: String,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// Tag is neither `O` nor `<prefix>-<label>`.
    MalformedTag,
    /// Prefix exists but is not part of the declared scheme.
    IllegalPrefix,
    /// Label missing from the corpus label set.
    UnknownLabel,
    /// Surface is empty or contains whitespace.
    MalformedSurface,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            ViolationKind::MalformedTag => "malformed tag",
            ViolationKind::IllegalPrefix => "illegal prefix for scheme",
            ViolationKind::UnknownLabel => "unknown label",
            ViolationKind::MalformedSurface => "malformed surface",
        };
        write!(
            f,
            "sentence {} position {}: {} `{}`",
            self.sentence, self.position, what, self.tag
        )
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid corpus: {}", format_violations(.0))]
    Validation(Vec<Violation>),

    #[error("ill-formed tag sequence at index {index}: `{tag}`")]
    IllFormed { index: usize, tag: String },

    #[error("tag `{tag}` at index {index} is not legal for scheme {scheme}")]
    IllegalTag {
        index: usize,
        tag: String,
        scheme: crate::Scheme,
    },

    #[error("invalid spans: {0}")]
    InvalidSpans(String),

    #[error("alignment mismatch: {0}")]
    Alignment(String),

    #[error("tag `{0}` has no entry in the label-token distribution")]
    MissingTag(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("model format: {0}")]
    ModelFormat(String),

    #[error("pipeline stage {stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

fn format_violations(violations: &[Violation]) -> String {
    const SHOWN: usize = 5;
    let mut out = violations
        .iter()
        .take(SHOWN)
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ");
    if violations.len() > SHOWN {
        out.push_str(&format!(" (and {} more)", violations.len() - SHOWN));
    }
    out
}
