//! Arbitrage detection over bundles of long YES/NO claims.

mod detect;
mod oracle;
mod partition;
mod scan;

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fixed::Fixed;
use crate::model::{Friction, MarketId, ModelError, Region, Side, Timestamp};

pub use detect::{
    detect_cross_conditional, detect_negrisk_cross, detect_negrisk_single, detect_parity, detect_subset_superset,
};
pub use oracle::{brute_force_opportunities, reduce_cross_orientations, BundleClass, OracleBundle, ORACLE_MAX_ATOMS, ORACLE_MAX_LEGS, ORACLE_MAX_MARKETS};
pub use partition::{
    enumerate_partitions, validate_partition, BaselineEvent, BaselineOutcome, PartitionCandidate, PartitionFailure,
    PartitionLimits, PartitionVerdict,
};
pub use scan::{scan_space, SpaceMember};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArbError {
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("oracle refused: {0}")]
    Refused(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpportunityKind {
    Parity,
    CrossConditional,
    #[serde(rename = "negrisk_single")]
    NegRiskSingle,
    #[serde(rename = "negrisk_cross")]
    NegRiskCross,
    SubsetSuperset,
}

/// One purchased claim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Leg {
    pub market: MarketId,
    pub side: Side,
    pub price: Fixed,
    #[serde(rename = "delta")]
    pub friction: Friction,
}

impl Leg {
    pub fn all_in(&self) -> Fixed {
        self.price + self.friction.value()
    }
}

/// Two-sided quote of one market with the per-side friction of buying it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LegQuote {
    pub market: MarketId,
    pub p_yes: Fixed,
    pub p_no: Fixed,
    pub delta_yes: Friction,
    pub delta_no: Friction,
}

impl LegQuote {
    pub fn new(market: MarketId, p_yes: Fixed, p_no: Fixed, delta_yes: Friction, delta_no: Friction) -> Result<Self, ModelError> {
        for p in [p_yes, p_no] {
            if p < Fixed::ZERO || p > Fixed::ONE {
                return Err(ModelError::PriceOutOfRange(p));
            }
        }
        Ok(LegQuote {
            market,
            p_yes,
            p_no,
            delta_yes,
            delta_no,
        })
    }

    pub fn uniform(market: MarketId, p_yes: Fixed, p_no: Fixed, delta: Friction) -> Result<Self, ModelError> {
        LegQuote::new(market, p_yes, p_no, delta, delta)
    }

    pub fn leg(&self, side: Side) -> Leg {
        let (price, friction) = match side {
            Side::Yes => (self.p_yes, self.delta_yes),
            Side::No => (self.p_no, self.delta_no),
        };
        Leg {
            market: self.market.clone(),
            side,
            price,
            friction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArbitrageOpportunity {
    pub kind: OpportunityKind,
    pub legs: Vec<Leg>,
    pub t: Timestamp,
    #[serde(rename = "cost")]
    pub gross_cost: Fixed,
    #[serde(rename = "friction")]
    pub total_friction: Fixed,
    #[serde(rename = "payoff")]
    pub guaranteed_payoff: Fixed,
    pub profit: Fixed,
}

impl ArbitrageOpportunity {
    /// Prices the bundle; `None` unless profit is strictly positive.
    pub fn price_bundle(kind: OpportunityKind, legs: Vec<Leg>, guaranteed_payoff: Fixed, t: Timestamp) -> Option<Self> {
        let gross_cost: Fixed = legs.iter().map(|l| l.price).sum();
        let total_friction: Fixed = legs.iter().map(|l| l.friction.value()).sum();
        let profit = guaranteed_payoff - gross_cost - total_friction;
        profit.is_positive().then_some(ArbitrageOpportunity {
            kind,
            legs,
            t,
            gross_cost,
            total_friction,
            guaranteed_payoff,
            profit,
        })
    }

    /// Sorted `(market, side)` pairs; identifies the bundle regardless of leg order.
    pub fn bundle_key(&self) -> Vec<(MarketId, Side)> {
        bundle_key(&self.legs)
    }

    fn sort_key(&self) -> (Timestamp, OpportunityKind, Vec<(MarketId, Side)>) {
        (self.t, self.kind, self.bundle_key())
    }
}

pub(crate) fn bundle_key(legs: &[Leg]) -> Vec<(MarketId, Side)> {
    let mut key: Vec<(MarketId, Side)> = legs.iter().map(|l| (l.market.clone(), l.side)).collect();
    key.sort();
    key
}

/// Number of paying legs in every atom of a `k`-atom space.
pub fn payoff_by_atom(legs: &[(Region, Side)], k: usize) -> Vec<i64> {
    (0..k)
        .map(|atom| {
            legs.iter()
                .filter(|(region, side)| region.contains(atom) == (*side == Side::Yes))
                .count() as i64
        })
        .collect()
}

/// Orders by time, kind and legs so output does not depend on evaluation order.
pub fn sort_opportunities(opps: &mut [ArbitrageOpportunity]) {
    opps.sort_by_cached_key(|o| o.sort_key());
}

pub fn write_opportunities<W: Write>(mut writer: W, opps: &[ArbitrageOpportunity]) -> std::io::Result<()> {
    for opp in opps {
        serde_json::to_writer(&mut writer, opp)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_opportunities<R: BufRead>(reader: R) -> Result<Vec<ArbitrageOpportunity>, String> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line).map_err(|e| format!("line {}: {e}", i + 1))?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::DateTime;

    #[test]
    fn jsonl_fields_and_roundtrip() {
        let q = LegQuote::uniform(
            "kalshi:a".parse().unwrap(),
            "0.45".parse().unwrap(),
            "0.45".parse().unwrap(),
            Friction::new("0.01".parse().unwrap()).unwrap(),
        )
        .unwrap();
        let t = DateTime::from_timestamp(1_700_000_000, 0).unwrap();
        let opp = ArbitrageOpportunity::price_bundle(
            OpportunityKind::Parity,
            vec![q.leg(Side::Yes), q.leg(Side::No)],
            Fixed::ONE,
            t,
        )
        .unwrap();
        let mut out = Vec::new();
        write_opportunities(&mut out, std::slice::from_ref(&opp)).unwrap();
        let line = String::from_utf8(out.clone()).unwrap();
        let value: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
        for key in ["kind", "legs", "t", "cost", "friction", "payoff", "profit"] {
            assert!(value.get(key).is_some(), "missing {key}");
        }
        assert_eq!(value["legs"][0]["delta"], "0.01");
        assert_eq!(value["kind"], "parity");
        assert_eq!(read_opportunities(out.as_slice()).unwrap(), vec![opp]);
    }
}
