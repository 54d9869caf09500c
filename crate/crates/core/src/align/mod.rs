//! Cross-platform market alignment: structural filtering, embedding
//! retrieval and relation verification, folded into a relation graph.

mod classify;
mod embed;
mod graph;
mod protocol;
mod recall;
mod relation;
mod retrieve;
mod verify;

use thiserror::Error;

use crate::model::MarketId;

pub use classify::{classify_category, CategoryClassifier, KeywordClassifier, CATEGORY_LABELS};
pub use embed::{
    canonical_text, content_hash, embed_corpus, EmbeddedCorpus, EmbeddingCache, EmbeddingProvider, EmbeddingVector,
    HashEmbedder, RetryPolicy,
};
pub use graph::{build_relation_graph, GraphDiagnostic, GraphIssue, GraphStats, GroupSpace, RelationGraph};
pub use protocol::{
    market_document, parse_binary_verdict, parse_category, parse_plausibility, PlausibleClass, PromptSet,
    ProtocolError, ProviderError,
};
pub use recall::{recall_report, retrieval_rank, write_recall_csv, RECALL_SWEEP};
pub(crate) use relation::RelationRecord;
pub use relation::{read_relations, write_relations, CandidatePair, RelationKind, SemanticRelation, SubsetDirection};
pub use retrieve::{all_neighbors, structural_candidates, top_k_neighbors, NeighborList, StructuralIndex};
pub use verify::{
    verify_pairs, verify_relation, PromptVerifier, RegionRecord, RelationVerifier, RuleVerifier, TextModel,
    Verification, VerifyError,
};

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("k must be at least 1")]
    InvalidK,
    #[error("market {0} has an empty description")]
    EmptyDescription(MarketId),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
}
