use std::collections::{BTreeMap, BTreeSet};

use crate::align::{
    all_neighbors, build_relation_graph, classify_category, embed_corpus, structural_candidates, verify_pairs,
    AlignError, CategoryClassifier, EmbeddingCache, EmbeddingProvider, NeighborList, RelationGraph, RelationKind,
    RelationVerifier, RetryPolicy, SemanticRelation, StructuralIndex, Verification,
};
use crate::ingest::Corpus;
use crate::model::MarketId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchParams {
    /// Neighbors per market sent to verification.
    pub k: usize,
    /// Neighbors retained for the recall sweep; at least `k`.
    pub retrieve_k: usize,
}

impl Default for MatchParams {
    fn default() -> Self {
        MatchParams { k: 20, retrieve_k: 32 }
    }
}

#[derive(Debug, Clone)]
pub struct MatchOutput {
    /// Input corpus with missing categories filled in.
    pub corpus: Corpus,
    pub classified: usize,
    /// Markets left without a category.
    pub unclassified: Vec<(MarketId, String)>,
    pub index: StructuralIndex,
    pub neighbors: BTreeMap<MarketId, NeighborList>,
    pub embed_errors: BTreeMap<MarketId, String>,
    pub cache_hits: usize,
    pub provider_calls: usize,
    /// Unordered pairs within rank `k` from either side, `a < b`.
    pub candidates: Vec<(MarketId, MarketId)>,
    /// Verified equivalent and subset relations.
    pub relations: Vec<SemanticRelation>,
    pub independent: usize,
    pub unverified: Vec<(MarketId, MarketId, String)>,
    pub graph: RelationGraph,
}

/// Classify, filter, embed, retrieve and verify.
pub fn run_match(
    corpus: Corpus,
    classifier: &dyn CategoryClassifier,
    provider: &dyn EmbeddingProvider,
    cache: Option<&EmbeddingCache>,
    verifier: &dyn RelationVerifier,
    params: MatchParams,
) -> Result<MatchOutput, AlignError> {
    if params.k == 0 || params.retrieve_k == 0 {
        return Err(AlignError::InvalidK);
    }
    let mut classified = 0;
    let mut unclassified = Vec::new();
    let mut markets = corpus.into_markets();
    for m in markets.iter_mut().filter(|m| m.category.is_none()) {
        match classify_category(m, classifier) {
            Ok(c) => {
                m.category = Some(c);
                classified += 1;
            }
            Err(e) => unclassified.push((m.id.clone(), e.to_string())),
        }
    }
    let corpus = Corpus::new(markets).expect("ids unchanged");

    let index = structural_candidates(&corpus);
    let embedded = embed_corpus(&corpus, provider, cache, RetryPolicy::default());
    let neighbors = all_neighbors(&index, &embedded.vectors, params.k.max(params.retrieve_k))?;

    let mut pairs: BTreeSet<(MarketId, MarketId)> = BTreeSet::new();
    for list in neighbors.values() {
        for p in list.pairs.iter().filter(|p| p.rank <= params.k) {
            let pair = if p.anchor < p.neighbor {
                (p.anchor.clone(), p.neighbor.clone())
            } else {
                (p.neighbor.clone(), p.anchor.clone())
            };
            pairs.insert(pair);
        }
    }
    let candidates: Vec<(MarketId, MarketId)> = pairs.into_iter().collect();

    let mut relations = Vec::new();
    let mut independent = 0;
    let mut unverified = Vec::new();
    for v in verify_pairs(&corpus, &candidates, verifier) {
        match v {
            Verification::Verified(r) if r.kind == RelationKind::Independent => independent += 1,
            Verification::Verified(r) => relations.push(r),
            Verification::Unverified { a, b, reason } => unverified.push((a, b, reason)),
        }
    }
    let graph = build_relation_graph(&relations);
    Ok(MatchOutput {
        corpus,
        classified,
        unclassified,
        index,
        neighbors,
        embed_errors: embedded.errors,
        cache_hits: embedded.cache_hits,
        provider_calls: embedded.provider_calls,
        candidates,
        relations,
        independent,
        unverified,
        graph,
    })
}
