use std::collections::BTreeMap;

use rayon::prelude::*;

use super::protocol::{parse_binary_verdict, parse_plausibility, PromptSet, ProtocolError, ProviderError};
use super::relation::{RelationKind, SemanticRelation, SubsetDirection};
use crate::ingest::Corpus;
use crate::model::{BinaryMarket, MarketId, Region};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerifyError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("no structured record for {0}")]
    Unknown(MarketId),
}

/// Two-pass relation judge: a cheap plausibility screen, then explicit
/// equivalence and subset probes.
pub trait RelationVerifier: Sync {
    fn tag(&self) -> &str;
    /// Which candidates could be equivalent to or contain/be contained in `target`.
    fn plausible(&self, target: &BinaryMarket, candidates: &[&BinaryMarket]) -> Result<Vec<bool>, VerifyError>;
    fn equivalent(&self, reference: &BinaryMarket, candidate: &BinaryMarket) -> Result<bool, VerifyError>;
    /// Whether YES on `subset` forces YES on `superset`.
    fn subset(&self, superset: &BinaryMarket, subset: &BinaryMarket) -> Result<bool, VerifyError>;
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verification {
    Verified(SemanticRelation),
    /// Excluded from arbitrage detection.
    Unverified { a: MarketId, b: MarketId, reason: String },
}

pub fn verify_relation(a: &BinaryMarket, b: &BinaryMarket, verifier: &dyn RelationVerifier) -> Verification {
    let tag = verifier.tag().to_string();
    let run = || -> Result<RelationKind, VerifyError> {
        if !verifier.plausible(a, &[b])?.first().copied().unwrap_or(false) {
            return Ok(RelationKind::Independent);
        }
        if verifier.equivalent(a, b)? {
            return Ok(RelationKind::Equivalent);
        }
        let a_in_b = verifier.subset(b, a)?;
        let b_in_a = verifier.subset(a, b)?;
        Ok(match (a_in_b, b_in_a) {
            (true, false) => RelationKind::Subset(SubsetDirection::AInB),
            (false, true) => RelationKind::Subset(SubsetDirection::BInA),
            (false, false) => RelationKind::Independent,
            (true, true) => {
                return Err(VerifyError::Protocol(ProtocolError::new(
                    "mutual subset without equivalence",
                    "",
                )))
            }
        })
    };
    match run() {
        Ok(kind) => Verification::Verified(SemanticRelation::new(a.id.clone(), b.id.clone(), kind, 1.0, tag)),
        Err(e) => {
            let (x, y) = if a.id <= b.id { (&a.id, &b.id) } else { (&b.id, &a.id) };
            Verification::Unverified {
                a: x.clone(),
                b: y.clone(),
                reason: e.to_string(),
            }
        }
    }
}

/// Verifies every pair in parallel; output order follows `pairs`.
pub fn verify_pairs(corpus: &Corpus, pairs: &[(MarketId, MarketId)], verifier: &dyn RelationVerifier) -> Vec<Verification> {
    pairs
        .par_iter()
        .map(|(a, b)| match (corpus.get(a), corpus.get(b)) {
            (Some(ma), Some(mb)) => verify_relation(ma, mb, verifier),
            _ => Verification::Unverified {
                a: a.clone(),
                b: b.clone(),
                reason: "market not in corpus".into(),
            },
        })
        .collect()
}

/// Known YES-region of a structured market within a named outcome space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegionRecord<'a> {
    pub space: &'a str,
    pub region: Region,
}

/// Reference verifier for markets with known YES-regions: answers by set
/// algebra. Regions in different spaces are unrelated.
#[derive(Debug, Clone, Default)]
pub struct RuleVerifier {
    regions: BTreeMap<MarketId, (String, Region)>,
}

impl RuleVerifier {
    pub fn new(regions: BTreeMap<MarketId, (String, Region)>) -> Self {
        RuleVerifier { regions }
    }

    fn lookup(&self, m: &BinaryMarket) -> Result<RegionRecord<'_>, VerifyError> {
        self.regions
            .get(&m.id)
            .map(|(space, region)| RegionRecord { space, region: *region })
            .ok_or_else(|| VerifyError::Unknown(m.id.clone()))
    }
}

impl RelationVerifier for RuleVerifier {
    fn tag(&self) -> &str {
        "rule"
    }

    fn plausible(&self, target: &BinaryMarket, candidates: &[&BinaryMarket]) -> Result<Vec<bool>, VerifyError> {
        let t = self.lookup(target)?;
        candidates
            .iter()
            .map(|c| {
                let c = self.lookup(c)?;
                Ok(c.space == t.space && (c.region.is_subset_of(t.region) || t.region.is_subset_of(c.region)))
            })
            .collect()
    }

    fn equivalent(&self, reference: &BinaryMarket, candidate: &BinaryMarket) -> Result<bool, VerifyError> {
        let (r, c) = (self.lookup(reference)?, self.lookup(candidate)?);
        Ok(r.space == c.space && r.region == c.region)
    }

    fn subset(&self, superset: &BinaryMarket, subset: &BinaryMarket) -> Result<bool, VerifyError> {
        let (sup, sub) = (self.lookup(superset)?, self.lookup(subset)?);
        Ok(sup.space == sub.space && sub.region.is_strict_subset_of(sup.region))
    }
}

/// Free-text completion endpoint.
pub trait TextModel: Sync {
    fn tag(&self) -> &str;
    fn complete(&self, prompt: &str) -> Result<String, ProviderError>;
}

/// Drives a [`TextModel`] through the prompt templates and parses its answers.
pub struct PromptVerifier<M> {
    pub model: M,
    pub prompts: PromptSet,
}

impl<M: TextModel> RelationVerifier for PromptVerifier<M> {
    fn tag(&self) -> &str {
        self.model.tag()
    }

    fn plausible(&self, target: &BinaryMarket, candidates: &[&BinaryMarket]) -> Result<Vec<bool>, VerifyError> {
        let raw = self.model.complete(&self.prompts.plausibility_prompt(target, candidates))?;
        let mut keep = vec![false; candidates.len()];
        for (rank, _) in parse_plausibility(&raw, candidates.len())? {
            keep[rank - 1] = true;
        }
        Ok(keep)
    }

    fn equivalent(&self, reference: &BinaryMarket, candidate: &BinaryMarket) -> Result<bool, VerifyError> {
        let raw = self.model.complete(&self.prompts.equivalence_prompt(reference, candidate))?;
        Ok(parse_binary_verdict(&raw)?.0)
    }

    fn subset(&self, superset: &BinaryMarket, subset: &BinaryMarket) -> Result<bool, VerifyError> {
        let raw = self.model.complete(&self.prompts.subset_prompt(superset, subset))?;
        Ok(parse_binary_verdict(&raw)?.0)
    }
}
