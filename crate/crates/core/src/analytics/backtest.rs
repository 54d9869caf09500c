use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use super::{annualized_return, days_between, AnalyticsError};
use crate::arbitrage::{ArbitrageOpportunity, Leg, OpportunityKind};
use crate::fixed::Fixed;
use crate::model::{MarketId, Timestamp};

/// What a trade's return is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CapitalBasis {
    /// Per unit of guaranteed settlement payoff.
    #[default]
    Notional,
    /// Per unit of cash spent, prices plus frictions.
    AllIn,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trade {
    pub entry_t: Timestamp,
    pub legs: Vec<Leg>,
    /// Prices plus frictions.
    pub cost: Fixed,
    pub payoff: Fixed,
    pub exit_t: Timestamp,
    #[serde(rename = "return")]
    pub trade_return: f64,
    pub apy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BacktestResult {
    pub trades: Vec<Trade>,
    /// `Π(1 + r_i) − 1`.
    pub cumulative_return: f64,
}

/// Sequential single-position strategy over equivalent-pair opportunities.
/// Whenever idle, enters the live opportunity with the highest worst-case APY
/// (ties by bundle key) and holds until the latest leg resolves. Opportunities
/// whose legs resolve at or before entry are skipped.
pub fn backtest_naive(
    opportunities: &[ArbitrageOpportunity],
    resolution: &BTreeMap<MarketId, Timestamp>,
    basis: CapitalBasis,
) -> Result<BacktestResult, AnalyticsError> {
    let mut by_time: BTreeMap<Timestamp, Vec<(f64, Timestamp, f64, &ArbitrageOpportunity)>> = BTreeMap::new();
    for o in opportunities.iter().filter(|o| o.kind == OpportunityKind::CrossConditional) {
        let Some(exit) = o.legs.iter().map(|l| resolution.get(&l.market).copied()).collect::<Option<Vec<_>>>() else {
            continue;
        };
        let Some(exit) = exit.into_iter().max() else { continue };
        let days = days_between(o.t, exit);
        if days <= 0.0 {
            continue;
        }
        let capital = match basis {
            CapitalBasis::Notional => o.guaranteed_payoff,
            CapitalBasis::AllIn => o.gross_cost + o.total_friction,
        };
        let r = o.profit.to_f64() / capital.to_f64();
        let apy = annualized_return(o.profit.to_f64(), capital.to_f64(), days)?.compounded;
        by_time.entry(o.t).or_default().push((apy, exit, r, o));
    }

    let mut trades = Vec::new();
    let mut idle_from: Option<Timestamp> = None;
    for (t, live) in &by_time {
        if idle_from.is_some_and(|free| *t < free) {
            continue;
        }
        let best = live
            .iter()
            .max_by(|a, b| a.0.total_cmp(&b.0).then_with(|| b.3.bundle_key().cmp(&a.3.bundle_key())))
            .expect("non-empty bucket");
        let (apy, exit, r, o) = *best;
        trades.push(Trade {
            entry_t: *t,
            legs: o.legs.clone(),
            cost: o.gross_cost + o.total_friction,
            payoff: o.guaranteed_payoff,
            exit_t: exit,
            trade_return: r,
            apy,
        });
        idle_from = Some(exit);
    }
    let cumulative_return = trades.iter().map(|t| 1.0 + t.trade_return).product::<f64>() - 1.0;
    Ok(BacktestResult {
        trades,
        cumulative_return,
    })
}

pub fn write_trades<W: Write>(mut writer: W, trades: &[Trade]) -> std::io::Result<()> {
    for t in trades {
        serde_json::to_writer(&mut writer, t)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Friction, Side};
    use chrono::{DateTime, Duration};

    fn fx(s: &str) -> Fixed {
        s.parse().unwrap()
    }

    fn t0() -> Timestamp {
        DateTime::from_timestamp(1_700_000_000, 0).unwrap()
    }

    fn opp(a: &str, b: &str, day: i64, yes: &str, no: &str) -> ArbitrageOpportunity {
        let leg = |m: &str, side, p: &str| Leg {
            market: m.parse().unwrap(),
            side,
            price: fx(p),
            friction: Friction::ZERO,
        };
        ArbitrageOpportunity::price_bundle(
            OpportunityKind::CrossConditional,
            vec![leg(a, Side::Yes, yes), leg(b, Side::No, no)],
            Fixed::ONE,
            t0() + Duration::days(day),
        )
        .unwrap()
    }

    fn resolutions(entries: &[(&str, i64)]) -> BTreeMap<MarketId, Timestamp> {
        entries
            .iter()
            .map(|(m, d)| (m.parse().unwrap(), t0() + Duration::days(*d)))
            .collect()
    }

    #[test]
    fn single_trade_five_percent() {
        let res = resolutions(&[("k:a", 73), ("p:b", 73)]);
        let out = backtest_naive(&[opp("k:a", "p:b", 0, "0.45", "0.5")], &res, CapitalBasis::Notional).unwrap();
        assert_eq!(out.trades.len(), 1);
        assert!((out.cumulative_return - 0.05).abs() < 1e-12);
        assert!((out.trades[0].apy - (1.05f64.powi(5) - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn sequential_trades_compound() {
        let res = resolutions(&[("k:a", 10), ("p:b", 10), ("k:c", 30), ("p:d", 30)]);
        let opps = [
            opp("k:a", "p:b", 0, "0.45", "0.5"),
            // Overlaps the first holding period.
            opp("k:c", "p:d", 5, "0.3", "0.3"),
            opp("k:c", "p:d", 12, "0.45", "0.5"),
        ];
        let out = backtest_naive(&opps, &res, CapitalBasis::Notional).unwrap();
        assert_eq!(out.trades.len(), 2);
        assert!((out.cumulative_return - 0.1025).abs() < 1e-12);
        assert_eq!(out.trades[1].entry_t, t0() + Duration::days(12));
    }

    #[test]
    fn picks_highest_apy_and_all_in_basis() {
        let res = resolutions(&[("k:a", 100), ("p:b", 100), ("k:c", 10), ("p:d", 10)]);
        let opps = [opp("k:a", "p:b", 0, "0.4", "0.5"), opp("k:c", "p:d", 0, "0.45", "0.5")];
        let out = backtest_naive(&opps, &res, CapitalBasis::AllIn).unwrap();
        assert_eq!(out.trades[0].legs[0].market.to_string(), "k:c");
        assert!((out.trades[0].trade_return - 0.05 / 0.95).abs() < 1e-12);
        let mut buf = Vec::new();
        write_trades(&mut buf, &out.trades).unwrap();
        let line = String::from_utf8(buf).unwrap();
        assert!(line.contains("\"entry_t\"") && line.contains("\"exit_t\"") && line.contains("\"apy\""));
    }

    #[test]
    fn empty_stream() {
        let out = backtest_naive(&[], &BTreeMap::new(), CapitalBasis::Notional).unwrap();
        assert!(out.trades.is_empty());
        assert_eq!(out.cumulative_return, 0.0);
    }
}
