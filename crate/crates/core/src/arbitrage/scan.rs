use std::collections::BTreeSet;

use super::detect::{
    detect_cross_conditional, detect_negrisk_cross, detect_negrisk_single, detect_parity, detect_subset_superset,
};
use super::partition::PartitionCandidate;
use super::{sort_opportunities, ArbError, ArbitrageOpportunity, LegQuote};
use crate::align::SemanticRelation;
use crate::fixed::Fixed;
use crate::model::{OutcomeSpace, Region, Timestamp, YesRegion};

/// A quoted market together with its YES-region in a shared outcome space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpaceMember {
    pub region: Region,
    pub quote: LegQuote,
}

/// Markets beyond this count are not searched for partitions.
const MAX_PARTITION_SEARCH: usize = 20;

/// Runs every detector whose precondition holds, reading relations off the
/// regions: equal regions are equivalent, strict containment is a subset,
/// disjoint covers are partitions.
pub fn scan_space(space: &OutcomeSpace, members: &[SpaceMember], t: Timestamp) -> Result<Vec<ArbitrageOpportunity>, ArbError> {
    for m in members {
        if m.region.len() != space.len() {
            return Err(ArbError::Contract(format!("region of {} not over the shared space", m.quote.market)));
        }
    }
    let mut out = Vec::new();
    for m in members {
        out.extend(detect_parity(&m.quote, t));
    }

    for (i, a) in members.iter().enumerate() {
        for b in &members[i + 1..] {
            let (qa, qb) = (&a.quote, &b.quote);
            if a.region == b.region {
                let rel = SemanticRelation::equivalent(qa.market.clone(), qb.market.clone(), "region");
                out.extend(detect_cross_conditional(qa, qb, &rel, t)?);
            } else if a.region.is_strict_subset_of(b.region) {
                let rel = SemanticRelation::subset(qa.market.clone(), qb.market.clone(), "region");
                out.extend(detect_subset_superset(qa, qb, &rel, t)?);
            } else if b.region.is_strict_subset_of(a.region) {
                let rel = SemanticRelation::subset(qb.market.clone(), qa.market.clone(), "region");
                out.extend(detect_subset_superset(qb, qa, &rel, t)?);
            }
        }
    }

    let searchable: Vec<&SpaceMember> = members
        .iter()
        .filter(|m| !m.region.is_empty())
        .take(MAX_PARTITION_SEARCH)
        .collect();
    let full = Region::full(space.len());
    for mask in 1u32..(1u32 << searchable.len()) {
        if mask.count_ones() < 2 {
            continue;
        }
        let chosen: Vec<&SpaceMember> = (0..searchable.len())
            .filter(|bit| mask & (1 << bit) != 0)
            .map(|bit| searchable[bit])
            .collect();
        let mut union = Region::empty(space.len());
        let mut disjoint = true;
        for m in &chosen {
            disjoint &= union.is_disjoint(m.region);
            union = union.union(m.region);
        }
        if !disjoint || union != full {
            continue;
        }
        let candidate = PartitionCandidate {
            baseline_event: space.event.clone(),
            members: chosen
                .iter()
                .map(|m| YesRegion {
                    market: m.quote.market.clone(),
                    region: m.region,
                })
                .collect(),
            total_volume: Fixed::ZERO,
        };
        let quotes: Vec<LegQuote> = chosen.iter().map(|m| m.quote.clone()).collect();
        let platforms: BTreeSet<_> = quotes.iter().map(|q| q.market.platform()).collect();
        if platforms.len() == 1 {
            out.extend(detect_negrisk_single(&candidate, space, &quotes, t)?);
        } else {
            out.extend(detect_negrisk_cross(&candidate, space, &quotes, t)?);
        }
    }
    sort_opportunities(&mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arbitrage::{brute_force_opportunities, payoff_by_atom, reduce_cross_orientations, OpportunityKind};
    use crate::model::{EventId, Friction, MarketId, Side};
    use chrono::DateTime;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn t0() -> Timestamp {
        DateTime::from_timestamp(1_700_000_000, 0).unwrap()
    }

    fn instance() -> impl Strategy<Value = (OutcomeSpace, Vec<SpaceMember>)> {
        (2usize..=6).prop_flat_map(|k| {
            let full = (1u64 << k) - 1;
            let market = (1..full, 0usize..3, 0i64..=1000, -60i64..=60, 0i64..=30);
            (Just(k), prop::collection::vec(market, 1..=5))
        })
        .prop_map(|(k, specs)| {
            let space = OutcomeSpace::new(EventId("e".into()), (0..k).map(|i| format!("w{i}")).collect()).unwrap();
            let members = specs
                .into_iter()
                .enumerate()
                .map(|(i, (bits, platform, y, noise, d))| {
                    let id: MarketId = format!("p{platform}:m{i}").parse().unwrap();
                    let p_yes = Fixed::from_micros(y * 1000);
                    let p_no = (Fixed::ONE - p_yes + Fixed::from_micros(noise * 1000)).clamp(Fixed::ZERO, Fixed::ONE);
                    let delta = Friction::new(Fixed::from_micros(d * 1000)).unwrap();
                    SpaceMember {
                        region: Region::from_bits(bits, k).unwrap(),
                        quote: LegQuote::uniform(id, p_yes, p_no, delta).unwrap(),
                    }
                })
                .collect();
            (space, members)
        })
    }

    fn regions(members: &[SpaceMember]) -> BTreeMap<MarketId, Region> {
        members.iter().map(|m| (m.quote.market.clone(), m.region)).collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn detectors_match_oracle_within_classes((space, members) in instance()) {
            let found = scan_space(&space, &members, t0()).unwrap();
            let oracle = reduce_cross_orientations(brute_force_opportunities(&space, &members).unwrap());
            let expected: BTreeMap<_, _> = oracle
                .iter()
                .filter_map(|b| b.class.kind().map(|k| ((k, b.key()), b.profit)))
                .collect();
            let got: BTreeMap<_, _> = found.iter().map(|o| ((o.kind, o.bundle_key()), o.profit)).collect();
            prop_assert_eq!(got, expected);
        }

        #[test]
        fn every_opportunity_is_sound((space, members) in instance()) {
            let by_id = regions(&members);
            for opp in scan_space(&space, &members, t0()).unwrap() {
                let legs: Vec<(Region, Side)> = opp.legs.iter().map(|l| (by_id[&l.market], l.side)).collect();
                let pay = payoff_by_atom(&legs, space.len());
                let min = *pay.iter().min().unwrap();
                prop_assert_eq!(Fixed::from_int(min), opp.guaranteed_payoff);
                if opp.kind != OpportunityKind::SubsetSuperset {
                    prop_assert!(pay.iter().all(|&p| p == min));
                }
                prop_assert!(opp.profit.is_positive());
                prop_assert_eq!(opp.profit, opp.guaranteed_payoff - opp.gross_cost - opp.total_friction);
            }
        }

        #[test]
        fn more_friction_never_helps((space, members) in instance(), bump in 0i64..=20_000) {
            let before = scan_space(&space, &members, t0()).unwrap();
            let bumped: Vec<SpaceMember> = members
                .iter()
                .map(|m| {
                    let mut m = m.clone();
                    m.quote.delta_yes = Friction::new(m.quote.delta_yes.value() + Fixed::from_micros(bump)).unwrap();
                    m
                })
                .collect();
            let after = scan_space(&space, &bumped, t0()).unwrap();
            let best_before: BTreeMap<_, Fixed> = before
                .iter()
                .map(|o| {
                    let markets: Vec<MarketId> = o.bundle_key().into_iter().map(|(m, _)| m).collect();
                    ((o.kind, markets), o.profit)
                })
                .fold(BTreeMap::new(), |mut acc, (key, profit)| {
                    let e = acc.entry(key).or_insert(profit);
                    *e = (*e).max(profit);
                    acc
                });
            for o in &after {
                let markets: Vec<MarketId> = o.bundle_key().into_iter().map(|(m, _)| m).collect();
                let previous = best_before.get(&(o.kind, markets.clone()));
                prop_assert!(previous.is_some(), "new opportunity {:?}", o);
                prop_assert!(o.profit <= *previous.unwrap());
            }
        }
    }
}
