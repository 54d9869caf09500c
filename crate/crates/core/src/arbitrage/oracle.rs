use std::collections::{BTreeMap, BTreeSet};

use super::{bundle_key, payoff_by_atom, ArbError, Leg, OpportunityKind, SpaceMember};
use crate::fixed::Fixed;
use crate::model::{MarketId, OutcomeSpace, Region, Side};

pub const ORACLE_MAX_MARKETS: usize = 6;
pub const ORACLE_MAX_ATOMS: usize = 8;
pub const ORACLE_MAX_LEGS: usize = 6;

/// Structural class of a bundle, derived from set algebra on its regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BundleClass {
    Parity,
    CrossConditional,
    SubsetSuperset,
    NegRiskSingle,
    NegRiskCross,
    Other,
}

impl BundleClass {
    pub fn kind(self) -> Option<OpportunityKind> {
        match self {
            BundleClass::Parity => Some(OpportunityKind::Parity),
            BundleClass::CrossConditional => Some(OpportunityKind::CrossConditional),
            BundleClass::SubsetSuperset => Some(OpportunityKind::SubsetSuperset),
            BundleClass::NegRiskSingle => Some(OpportunityKind::NegRiskSingle),
            BundleClass::NegRiskCross => Some(OpportunityKind::NegRiskCross),
            BundleClass::Other => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleBundle {
    pub legs: Vec<Leg>,
    pub class: BundleClass,
    /// Minimum payoff over all atoms.
    pub payoff: Fixed,
    pub cost: Fixed,
    pub friction: Fixed,
    pub profit: Fixed,
}

impl OracleBundle {
    pub fn key(&self) -> Vec<(MarketId, Side)> {
        bundle_key(&self.legs)
    }
}

/// Every leg combination of up to six legs whose worst-case payoff exceeds
/// its cost plus friction, restricted to irreducible bundles: dropping any
/// leg lowers the worst-case payoff.
pub fn brute_force_opportunities(space: &OutcomeSpace, members: &[SpaceMember]) -> Result<Vec<OracleBundle>, ArbError> {
    let k = space.len();
    if k > ORACLE_MAX_ATOMS {
        return Err(ArbError::Refused(format!("{k} atoms exceeds {ORACLE_MAX_ATOMS}")));
    }
    if members.len() > ORACLE_MAX_MARKETS {
        return Err(ArbError::Refused(format!(
            "{} markets exceeds {ORACLE_MAX_MARKETS}",
            members.len()
        )));
    }
    for m in members {
        if m.region.len() != k {
            return Err(ArbError::Contract(format!("region of {} not over the shared space", m.quote.market)));
        }
    }

    let legs: Vec<(usize, Side)> = (0..members.len())
        .flat_map(|i| [(i, Side::Yes), (i, Side::No)])
        .collect();
    let min_payoff = |mask: u32| -> i64 {
        let chosen: Vec<(Region, Side)> = legs
            .iter()
            .enumerate()
            .filter(|(bit, _)| mask & (1 << bit) != 0)
            .map(|(_, &(i, side))| (members[i].region, side))
            .collect();
        payoff_by_atom(&chosen, k).into_iter().min().unwrap_or(0)
    };

    let mut out = Vec::new();
    for mask in 1u32..(1 << legs.len()) {
        if mask.count_ones() as usize > ORACLE_MAX_LEGS {
            continue;
        }
        let payoff = min_payoff(mask);
        if payoff < 1 {
            continue;
        }
        let irreducible = (0..legs.len())
            .filter(|bit| mask & (1 << bit) != 0)
            .all(|bit| min_payoff(mask & !(1 << bit)) < payoff);
        if !irreducible {
            continue;
        }
        let chosen: Vec<(usize, Side)> = legs
            .iter()
            .enumerate()
            .filter(|(bit, _)| mask & (1 << bit) != 0)
            .map(|(_, &l)| l)
            .collect();
        let bundle: Vec<Leg> = chosen.iter().map(|&(i, side)| members[i].quote.leg(side)).collect();
        let cost: Fixed = bundle.iter().map(|l| l.price).sum();
        let friction: Fixed = bundle.iter().map(|l| l.friction.value()).sum();
        let payoff = Fixed::from_int(payoff);
        let profit = payoff - cost - friction;
        if !profit.is_positive() {
            continue;
        }
        out.push(OracleBundle {
            class: classify(&chosen, members),
            legs: bundle,
            payoff,
            cost,
            friction,
            profit,
        });
    }
    out.sort_by_key(|b| b.key());
    Ok(out)
}

fn classify(chosen: &[(usize, Side)], members: &[SpaceMember]) -> BundleClass {
    let region = |i: usize| members[i].region;
    if let [(a, sa), (b, sb)] = *chosen {
        let (y, n) = match (sa, sb) {
            (Side::Yes, Side::No) => (Some(a), Some(b)),
            (Side::No, Side::Yes) => (Some(b), Some(a)),
            _ => (None, None),
        };
        if let (Some(y), Some(n)) = (y, n) {
            if y == n {
                return BundleClass::Parity;
            }
            if region(y) == region(n) {
                return BundleClass::CrossConditional;
            }
            if region(n).is_strict_subset_of(region(y)) {
                return BundleClass::SubsetSuperset;
            }
            return BundleClass::Other;
        }
    }
    let sides: BTreeSet<Side> = chosen.iter().map(|&(_, s)| s).collect();
    let markets: BTreeSet<usize> = chosen.iter().map(|&(i, _)| i).collect();
    if chosen.len() >= 2 && sides.len() == 1 && markets.len() == chosen.len() {
        let k = region(chosen[0].0).len();
        let mut union = Region::empty(k);
        let mut disjoint = true;
        for &(i, _) in chosen {
            disjoint &= union.is_disjoint(region(i));
            union = union.union(region(i));
        }
        if disjoint && union.is_full() {
            let platforms: BTreeSet<_> = chosen.iter().map(|&(i, _)| members[i].quote.market.platform()).collect();
            return if platforms.len() == 1 {
                BundleClass::NegRiskSingle
            } else {
                BundleClass::NegRiskCross
            };
        }
    }
    BundleClass::Other
}

/// Keeps, per pair of equivalent markets, the orientation with the lowest
/// all-in cost, breaking ties towards YES on the smaller market id. This is
/// the single-report rule of the cross-conditional detector.
pub fn reduce_cross_orientations(bundles: Vec<OracleBundle>) -> Vec<OracleBundle> {
    let mut best: BTreeMap<(MarketId, MarketId), OracleBundle> = BTreeMap::new();
    let mut rest = Vec::new();
    for b in bundles {
        if b.class != BundleClass::CrossConditional {
            rest.push(b);
            continue;
        }
        let mut pair = [b.legs[0].market.clone(), b.legs[1].market.clone()];
        pair.sort();
        let [lo, hi] = pair;
        let yes_on_lo = |x: &OracleBundle| x.legs.iter().any(|l| l.side == Side::Yes && l.market == lo);
        match best.get(&(lo.clone(), hi.clone())) {
            Some(current) => {
                let (c, n) = (current.cost + current.friction, b.cost + b.friction);
                if n < c || (n == c && yes_on_lo(&b) && !yes_on_lo(current)) {
                    best.insert((lo, hi), b);
                }
            }
            None => {
                best.insert((lo, hi), b);
            }
        }
    }
    rest.extend(best.into_values());
    rest.sort_by_key(|b| b.key());
    rest
}
