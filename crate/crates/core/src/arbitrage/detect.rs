use std::collections::BTreeSet;

use super::partition::{validate_partition, PartitionCandidate};
use super::{ArbError, ArbitrageOpportunity, LegQuote, OpportunityKind};
use crate::align::{RelationKind, SemanticRelation};
use crate::fixed::Fixed;
use crate::model::{OutcomeSpace, Side, Timestamp};

/// Buy YES and NO of the same market.
pub fn detect_parity(quote: &LegQuote, t: Timestamp) -> Option<ArbitrageOpportunity> {
    ArbitrageOpportunity::price_bundle(
        OpportunityKind::Parity,
        vec![quote.leg(Side::Yes), quote.leg(Side::No)],
        Fixed::ONE,
        t,
    )
}

/// YES on one venue plus NO on the other, whichever orientation is cheaper
/// after frictions. Ties go to YES on the smaller market id.
pub fn detect_cross_conditional(
    a: &LegQuote,
    b: &LegQuote,
    relation: &SemanticRelation,
    t: Timestamp,
) -> Result<Option<ArbitrageOpportunity>, ArbError> {
    if relation.kind != RelationKind::Equivalent || !relation.involves(&a.market, &b.market) {
        return Err(ArbError::Contract(format!(
            "{} and {} are not verified equivalent",
            a.market, b.market
        )));
    }
    let (first, second) = if a.market <= b.market { (a, b) } else { (b, a) };
    let forward = [first.leg(Side::Yes), second.leg(Side::No)];
    let reverse = [second.leg(Side::Yes), first.leg(Side::No)];
    let all_in = |legs: &[super::Leg; 2]| legs[0].all_in() + legs[1].all_in();
    let legs = if all_in(&reverse) < all_in(&forward) { reverse } else { forward };
    Ok(ArbitrageOpportunity::price_bundle(
        OpportunityKind::CrossConditional,
        legs.to_vec(),
        Fixed::ONE,
        t,
    ))
}

/// YES on the superset market plus NO on the subset market.
pub fn detect_subset_superset(
    sub: &LegQuote,
    sup: &LegQuote,
    relation: &SemanticRelation,
    t: Timestamp,
) -> Result<Option<ArbitrageOpportunity>, ArbError> {
    match relation.subset_pair() {
        Some((s, p)) if s == &sub.market && p == &sup.market => {}
        _ => {
            return Err(ArbError::Contract(format!(
                "no verified relation {} ⊂ {}",
                sub.market, sup.market
            )))
        }
    }
    Ok(ArbitrageOpportunity::price_bundle(
        OpportunityKind::SubsetSuperset,
        vec![sup.leg(Side::Yes), sub.leg(Side::No)],
        Fixed::ONE,
        t,
    ))
}

/// YES and NO bundles over a partition whose members all list on one platform.
pub fn detect_negrisk_single(
    candidate: &PartitionCandidate,
    space: &OutcomeSpace,
    quotes: &[LegQuote],
    t: Timestamp,
) -> Result<Vec<ArbitrageOpportunity>, ArbError> {
    let platforms = checked_platforms(candidate, space, quotes)?;
    if platforms != 1 {
        return Err(ArbError::Contract(format!(
            "partition of {} spans {platforms} platforms",
            candidate.baseline_event
        )));
    }
    Ok(negrisk_bundles(OpportunityKind::NegRiskSingle, quotes, t))
}

/// As [`detect_negrisk_single`] for partitions assembled across venues.
pub fn detect_negrisk_cross(
    candidate: &PartitionCandidate,
    space: &OutcomeSpace,
    quotes: &[LegQuote],
    t: Timestamp,
) -> Result<Vec<ArbitrageOpportunity>, ArbError> {
    let platforms = checked_platforms(candidate, space, quotes)?;
    if platforms < 2 {
        return Err(ArbError::Contract(format!(
            "partition of {} lists on a single platform",
            candidate.baseline_event
        )));
    }
    Ok(negrisk_bundles(OpportunityKind::NegRiskCross, quotes, t))
}

fn checked_platforms(candidate: &PartitionCandidate, space: &OutcomeSpace, quotes: &[LegQuote]) -> Result<usize, ArbError> {
    let verdict = validate_partition(candidate, space);
    if !verdict.valid {
        return Err(ArbError::Contract(format!(
            "invalid partition of {}: {:?}",
            candidate.baseline_event, verdict.failures
        )));
    }
    let aligned = quotes.len() == candidate.members.len()
        && quotes.iter().zip(&candidate.members).all(|(q, m)| q.market == m.market);
    if !aligned {
        return Err(ArbError::Contract("quotes do not match partition members".into()));
    }
    let platforms: BTreeSet<_> = candidate.members.iter().map(|m| m.market.platform()).collect();
    Ok(platforms.len())
}

fn negrisk_bundles(kind: OpportunityKind, quotes: &[LegQuote], t: Timestamp) -> Vec<ArbitrageOpportunity> {
    let mut quotes: Vec<&LegQuote> = quotes.iter().collect();
    quotes.sort_by(|a, b| a.market.cmp(&b.market));
    let n = quotes.len() as i64;
    let yes = ArbitrageOpportunity::price_bundle(kind, quotes.iter().map(|q| q.leg(Side::Yes)).collect(), Fixed::ONE, t);
    let no = ArbitrageOpportunity::price_bundle(
        kind,
        quotes.iter().map(|q| q.leg(Side::No)).collect(),
        Fixed::from_int(n - 1),
        t,
    );
    yes.into_iter().chain(no).collect()
}
