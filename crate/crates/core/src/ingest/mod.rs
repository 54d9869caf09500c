//! File ingestion: market corpora (`markets.jsonl`), price series
//! (`prices.csv`), inclusion filtering and the venue friction schedule.

mod corpus;
mod friction;
mod policy;
mod prices;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub use corpus::{parse_corpus, write_corpus, Corpus, CorpusError, ParsedCorpus};
pub use friction::{FrictionError, FrictionModel, FrictionRow, FEE_OVERRIDE_KEY};
pub use policy::{apply_inclusion_policy, ExclusionReason, ExclusionReport, InclusionPolicy};
pub use prices::{load_price_series, write_price_series, LoadedPrices};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    Malformed,
    /// Record lacks an open or close time.
    MissingTemporal,
    MissingField,
    InvalidField,
    /// Record violates a cross-field invariant (e.g. opens after it closes).
    Inconsistent,
    DuplicateId,
    UnknownMarket,
    OutOfRange,
    OutsideLifetime,
    DuplicateTimestamp,
    /// Rows arrived out of time order and were re-sorted.
    Reordered,
}

impl DiagnosticKind {
    pub fn is_warning(self) -> bool {
        matches!(self, DiagnosticKind::Reordered)
    }
}

/// One per-line problem found while reading an input file. Line numbers are
/// 1-based and count the header line for CSV inputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub line: usize,
    pub kind: DiagnosticKind,
    pub message: String,
}

impl Diagnostic {
    pub(crate) fn new(line: usize, kind: DiagnosticKind, message: impl Into<String>) -> Self {
        Diagnostic {
            line,
            kind,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {:?}: {}", self.line, self.kind, self.message)
    }
}
