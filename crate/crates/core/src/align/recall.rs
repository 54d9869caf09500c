use std::collections::BTreeMap;
use std::io::Write;

use super::relation::{RelationKind, SemanticRelation};
use super::retrieve::NeighborList;
use super::AlignError;
use crate::model::MarketId;

pub const RECALL_SWEEP: [usize; 7] = [1, 2, 4, 8, 16, 20, 32];

/// Rank at which the counterpart of a true relation first shows up, looking
/// from either side.
pub fn retrieval_rank(a: &MarketId, b: &MarketId, neighbors: &BTreeMap<MarketId, NeighborList>) -> Option<usize> {
    let rank_in = |anchor: &MarketId, target: &MarketId| {
        neighbors
            .get(anchor)
            .and_then(|l| l.pairs.iter().find(|p| &p.neighbor == target))
            .map(|p| p.rank)
    };
    match (rank_in(a, b), rank_in(b, a)) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, y) => x.or(y),
    }
}

/// Fraction of true equivalent and subset relations retrieved within each k.
/// Independent relations are ignored; an empty truth set has recall 1.
pub fn recall_report(
    truth: &[SemanticRelation],
    neighbors: &BTreeMap<MarketId, NeighborList>,
    ks: &[usize],
) -> Result<Vec<(usize, f64)>, AlignError> {
    if ks.contains(&0) {
        return Err(AlignError::InvalidK);
    }
    let ranks: Vec<Option<usize>> = truth
        .iter()
        .filter(|r| r.kind != RelationKind::Independent)
        .map(|r| retrieval_rank(&r.a, &r.b, neighbors))
        .collect();
    Ok(ks
        .iter()
        .map(|&k| {
            let hit = ranks.iter().filter(|r| r.is_some_and(|r| r <= k)).count();
            let recall = if ranks.is_empty() { 1.0 } else { hit as f64 / ranks.len() as f64 };
            (k, recall)
        })
        .collect())
}

pub fn write_recall_csv<W: Write>(writer: W, rows: &[(usize, f64)]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["k", "recall"])?;
    for (k, r) in rows {
        w.write_record([k.to_string(), format!("{r:.6}")])?;
    }
    w.flush()?;
    Ok(())
}
