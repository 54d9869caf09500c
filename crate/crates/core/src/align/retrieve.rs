use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;

use super::embed::EmbeddingVector;
use super::relation::CandidatePair;
use super::AlignError;
use crate::ingest::Corpus;
use crate::model::{BinaryMarket, CategoryId, MarketId};

/// Pairs surviving the platform, category and time-window filters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StructuralIndex {
    /// Compatible markets per market, sorted.
    pub compatible: BTreeMap<MarketId, Vec<MarketId>>,
    /// Unordered pair count.
    pub pair_count: usize,
    /// Markets without a category; they match nothing.
    pub uncategorized: Vec<MarketId>,
}

impl StructuralIndex {
    pub fn candidates(&self, id: &MarketId) -> &[MarketId] {
        self.compatible.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn contains(&self, a: &MarketId, b: &MarketId) -> bool {
        self.candidates(a).binary_search(b).is_ok()
    }
}

/// Every unordered pair on different platforms, in the same category, whose
/// `[open, close)` windows intersect. Sweeps each category in open-time order.
pub fn structural_candidates(corpus: &Corpus) -> StructuralIndex {
    let mut by_category: BTreeMap<CategoryId, Vec<&BinaryMarket>> = BTreeMap::new();
    let mut index = StructuralIndex::default();
    for m in corpus.iter() {
        match m.category {
            Some(c) => by_category.entry(c).or_default().push(m),
            None => index.uncategorized.push(m.id.clone()),
        }
        index.compatible.insert(m.id.clone(), Vec::new());
    }
    for markets in by_category.values_mut() {
        markets.sort_by(|a, b| a.open_time.cmp(&b.open_time).then_with(|| a.id.cmp(&b.id)));
        for (i, a) in markets.iter().enumerate() {
            for b in &markets[i + 1..] {
                if b.open_time >= a.close_time {
                    break;
                }
                if a.platform() != b.platform() {
                    index.pair_count += 1;
                    index.compatible.get_mut(&a.id).expect("inserted").push(b.id.clone());
                    index.compatible.get_mut(&b.id).expect("inserted").push(a.id.clone());
                }
            }
        }
    }
    for list in index.compatible.values_mut() {
        list.sort();
    }
    index
}

fn cosine_distance(a: &EmbeddingVector, b: &EmbeddingVector, norm_a: f64, norm_b: f64) -> f64 {
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| *x as f64 * *y as f64).sum();
    1.0 - dot / (norm_a * norm_b)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NeighborList {
    pub pairs: Vec<CandidatePair>,
    /// Candidates skipped for missing or zero-norm vectors.
    pub diagnostics: Vec<String>,
}

/// The `k` structurally compatible markets nearest to `anchor` by cosine
/// distance, ascending, ties by market id. Exact scan.
pub fn top_k_neighbors(
    anchor: &MarketId,
    index: &StructuralIndex,
    vectors: &BTreeMap<MarketId, EmbeddingVector>,
    k: usize,
) -> Result<NeighborList, AlignError> {
    if k == 0 {
        return Err(AlignError::InvalidK);
    }
    let mut out = NeighborList::default();
    let Some(av) = vectors.get(anchor) else {
        out.diagnostics.push(format!("{anchor}: no embedding"));
        return Ok(out);
    };
    let an = av.norm();
    if an == 0.0 {
        out.diagnostics.push(format!("{anchor}: zero-norm embedding excluded"));
        return Ok(out);
    }
    let mut scored: Vec<(f64, &MarketId)> = Vec::new();
    for cand in index.candidates(anchor) {
        match vectors.get(cand) {
            None => out.diagnostics.push(format!("{cand}: no embedding")),
            Some(v) if v.dimension() != av.dimension() => {
                out.diagnostics.push(format!("{cand}: dimension {} differs from anchor", v.dimension()))
            }
            Some(v) => {
                let n = v.norm();
                if n == 0.0 {
                    out.diagnostics.push(format!("{cand}: zero-norm embedding excluded"));
                } else {
                    scored.push((cosine_distance(av, v, an, n), cand));
                }
            }
        }
    }
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then_with(|| a.1.cmp(b.1)));
    out.pairs = scored
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, (d, id))| CandidatePair {
            anchor: anchor.clone(),
            neighbor: id.clone(),
            cosine_distance: d,
            rank: i + 1,
        })
        .collect();
    Ok(out)
}

/// Neighbor lists for every market, computed in parallel.
pub fn all_neighbors(
    index: &StructuralIndex,
    vectors: &BTreeMap<MarketId, EmbeddingVector>,
    k: usize,
) -> Result<BTreeMap<MarketId, NeighborList>, AlignError> {
    if k == 0 {
        return Err(AlignError::InvalidK);
    }
    let ids: Vec<&MarketId> = index.compatible.keys().collect();
    let lists: Result<Vec<(MarketId, NeighborList)>, AlignError> = ids
        .par_iter()
        .map(|id| Ok(((*id).clone(), top_k_neighbors(id, index, vectors, k)?)))
        .collect();
    Ok(lists?.into_iter().collect())
}
