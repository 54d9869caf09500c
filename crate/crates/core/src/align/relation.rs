use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::model::MarketId;

/// Retrieval candidate: `neighbor` is the `rank`-th nearest market to `anchor`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePair {
    pub anchor: MarketId,
    pub neighbor: MarketId,
    pub cosine_distance: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsetDirection {
    /// YES-region of `a` is strictly inside that of `b`.
    AInB,
    BInA,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RelationKind {
    Equivalent,
    Subset(SubsetDirection),
    Independent,
}

/// A verified relation between two markets.
///
/// Stored with `a < b`; subset orientation lives in the direction.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticRelation {
    pub a: MarketId,
    pub b: MarketId,
    pub kind: RelationKind,
    pub confidence: f64,
    pub verifier_tag: String,
}

impl SemanticRelation {
    pub fn new(x: MarketId, y: MarketId, kind: RelationKind, confidence: f64, verifier_tag: impl Into<String>) -> Self {
        let (a, b, kind) = if x <= y {
            (x, y, kind)
        } else {
            let flipped = match kind {
                RelationKind::Subset(SubsetDirection::AInB) => RelationKind::Subset(SubsetDirection::BInA),
                RelationKind::Subset(SubsetDirection::BInA) => RelationKind::Subset(SubsetDirection::AInB),
                other => other,
            };
            (y, x, flipped)
        };
        SemanticRelation {
            a,
            b,
            kind,
            confidence,
            verifier_tag: verifier_tag.into(),
        }
    }

    pub fn equivalent(x: MarketId, y: MarketId, tag: &str) -> Self {
        SemanticRelation::new(x, y, RelationKind::Equivalent, 1.0, tag)
    }

    /// `subset ⊂ superset`.
    pub fn subset(subset: MarketId, superset: MarketId, tag: &str) -> Self {
        SemanticRelation::new(subset, superset, RelationKind::Subset(SubsetDirection::AInB), 1.0, tag)
    }

    pub fn involves(&self, x: &MarketId, y: &MarketId) -> bool {
        (&self.a == x && &self.b == y) || (&self.a == y && &self.b == x)
    }

    /// `(subset, superset)` for subset relations.
    pub fn subset_pair(&self) -> Option<(&MarketId, &MarketId)> {
        match self.kind {
            RelationKind::Subset(SubsetDirection::AInB) => Some((&self.a, &self.b)),
            RelationKind::Subset(SubsetDirection::BInA) => Some((&self.b, &self.a)),
            _ => None,
        }
    }
}

#[derive(Serialize, Deserialize)]
pub(crate) struct RelationRecord {
    a: MarketId,
    b: MarketId,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    direction: Option<SubsetDirection>,
    confidence: f64,
    verifier_tag: String,
}

impl From<&SemanticRelation> for RelationRecord {
    fn from(r: &SemanticRelation) -> Self {
        let (kind, direction) = match r.kind {
            RelationKind::Equivalent => ("equivalent", None),
            RelationKind::Subset(d) => ("subset", Some(d)),
            RelationKind::Independent => ("independent", None),
        };
        RelationRecord {
            a: r.a.clone(),
            b: r.b.clone(),
            kind: kind.into(),
            direction,
            confidence: r.confidence,
            verifier_tag: r.verifier_tag.clone(),
        }
    }
}

impl TryFrom<RelationRecord> for SemanticRelation {
    type Error = String;
    fn try_from(r: RelationRecord) -> Result<Self, String> {
        let kind = match (r.kind.as_str(), r.direction) {
            ("equivalent", None) => RelationKind::Equivalent,
            ("independent", None) => RelationKind::Independent,
            ("subset", Some(d)) => RelationKind::Subset(d),
            ("subset", None) => return Err("subset relation without direction".into()),
            (other, _) => return Err(format!("unknown relation kind `{other}`")),
        };
        if !(0.0..=1.0).contains(&r.confidence) {
            return Err(format!("confidence {} outside [0, 1]", r.confidence));
        }
        Ok(SemanticRelation::new(r.a, r.b, kind, r.confidence, r.verifier_tag))
    }
}

pub fn write_relations<W: Write>(mut writer: W, relations: &[SemanticRelation]) -> std::io::Result<()> {
    for relation in relations {
        serde_json::to_writer(&mut writer, &RelationRecord::from(relation))?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_relations<R: BufRead>(reader: R) -> Result<Vec<SemanticRelation>, String> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        if line.trim().is_empty() {
            continue;
        }
        let record: RelationRecord =
            serde_json::from_str(&line).map_err(|e| format!("line {}: {e}", i + 1))?;
        out.push(SemanticRelation::try_from(record).map_err(|e| format!("line {}: {e}", i + 1))?);
    }
    Ok(out)
}
