//! Divergence metrics over step-interpolated deviation series, and the naive backtest.

mod backtest;
mod case_study;

use std::collections::VecDeque;
use std::io::{Read, Write};

use chrono::Duration;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arbitrage::{Leg, LegQuote, OpportunityKind};
use crate::fixed::Fixed;
use crate::model::{BinaryMarket, Side, Timestamp};

pub use backtest::{backtest_naive, write_trades, BacktestResult, CapitalBasis, Trade};
pub use case_study::{rolling_spread, write_rolling_spread, SpreadPoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("empty deviation series")]
    Empty,
    #[error("series timestamps must be strictly increasing and end after the last point")]
    Unordered,
    #[error("market {0} has a non-positive lifetime")]
    ZeroLifetime(String),
    #[error("capital must be positive, got {0}")]
    Capital(f64),
    #[error("holding period must be positive, got {0} days")]
    Horizon(f64),
    #[error("return {0} implies losing more than the capital")]
    Return(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DeviationPoint {
    pub t: Timestamp,
    /// `max(0, payoff − cost − Δ)`.
    pub deviation: Fixed,
    /// `payoff − cost`, before frictions; may be negative.
    pub raw_gap: Fixed,
}

/// Step function: each point holds until the next one, the last until `end`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviationSeries {
    pub relation_id: String,
    pub kind: OpportunityKind,
    points: Vec<DeviationPoint>,
    end: Timestamp,
}

impl DeviationSeries {
    pub fn new(
        relation_id: impl Into<String>,
        kind: OpportunityKind,
        points: Vec<DeviationPoint>,
        end: Timestamp,
    ) -> Result<Self, AnalyticsError> {
        let last = points.last().ok_or(AnalyticsError::Empty)?;
        if points.windows(2).any(|w| w[0].t >= w[1].t) || end <= last.t {
            return Err(AnalyticsError::Unordered);
        }
        Ok(DeviationSeries {
            relation_id: relation_id.into(),
            kind,
            points,
            end,
        })
    }

    pub fn points(&self) -> &[DeviationPoint] {
        &self.points
    }

    pub fn start(&self) -> Timestamp {
        self.points[0].t
    }

    pub fn end(&self) -> Timestamp {
        self.end
    }

    fn segment_end(&self, i: usize) -> Timestamp {
        self.points.get(i + 1).map_or(self.end, |p| p.t)
    }

    /// `(value, duration in ms)` per step.
    fn segments(&self, value: impl Fn(&DeviationPoint) -> Fixed) -> Vec<(Fixed, i64)> {
        (0..self.points.len())
            .map(|i| {
                let p = &self.points[i];
                (value(p), (self.segment_end(i) - p.t).num_milliseconds())
            })
            .collect()
    }
}

/// Deviation of a bundle paying `payoff` in the worst state.
pub fn bundle_deviation(t: Timestamp, legs: &[Leg], payoff: Fixed) -> DeviationPoint {
    let cost: Fixed = legs.iter().map(|l| l.price).sum();
    let friction: Fixed = legs.iter().map(|l| l.friction.value()).sum();
    let raw_gap = payoff - cost;
    DeviationPoint {
        t,
        deviation: (raw_gap - friction).max(Fixed::ZERO),
        raw_gap,
    }
}

/// Cheaper orientation, by all-in cost, of the YES/NO bundle on two equivalent markets.
pub fn equivalent_pair_deviation(t: Timestamp, a: &LegQuote, b: &LegQuote) -> DeviationPoint {
    let forward = [a.leg(Side::Yes), b.leg(Side::No)];
    let reverse = [b.leg(Side::Yes), a.leg(Side::No)];
    let all_in = |legs: &[Leg; 2]| legs[0].all_in() + legs[1].all_in();
    let legs = if all_in(&reverse) < all_in(&forward) { reverse } else { forward };
    bundle_deviation(t, &legs, Fixed::ONE)
}

/// YES on the superset plus NO on the subset.
pub fn subset_pair_deviation(t: Timestamp, sub: &LegQuote, sup: &LegQuote) -> DeviationPoint {
    bundle_deviation(t, &[sup.leg(Side::Yes), sub.leg(Side::No)], Fixed::ONE)
}

/// Geometric mean over legs of lifetime volume per active day.
pub fn effective_liquidity(legs: &[&BinaryMarket]) -> Result<f64, AnalyticsError> {
    if legs.is_empty() {
        return Ok(0.0);
    }
    let mut log_sum = 0.0;
    let mut zero = false;
    for m in legs {
        let days = m.lifetime_days();
        if days <= 0.0 {
            return Err(AnalyticsError::ZeroLifetime(m.id.to_string()));
        }
        let daily = m.volume_usd.to_f64() / days;
        if daily <= 0.0 {
            zero = true;
        } else {
            log_sum += daily.ln();
        }
    }
    Ok(if zero { 0.0 } else { (log_sum / legs.len() as f64).exp() })
}

/// Largest deviation held throughout some window `[t, t + window)` that fits
/// inside the series. A zero window gives the largest value.
pub fn max_persistent_deviation(series: &DeviationSeries, window: Duration) -> Fixed {
    let pts = &series.points;
    if window <= Duration::zero() {
        return pts.iter().map(|p| p.deviation).max().unwrap_or(Fixed::ZERO);
    }
    // Optimal windows start at a breakpoint; slide over starts keeping a
    // monotone deque of covered segment minima.
    let mut best = Fixed::ZERO;
    let mut deque: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    for i in 0..pts.len() {
        let stop = pts[i].t + window;
        if stop > series.end {
            break;
        }
        while next < pts.len() && pts[next].t < stop {
            while deque.back().is_some_and(|&j| pts[j].deviation >= pts[next].deviation) {
                deque.pop_back();
            }
            deque.push_back(next);
            next += 1;
        }
        while deque.front().is_some_and(|&j| j < i) {
            deque.pop_front();
        }
        if let Some(&j) = deque.front() {
            best = best.max(pts[j].deviation);
        }
    }
    best
}

fn weighted_median(mut segments: Vec<(Fixed, i64)>) -> Fixed {
    segments.retain(|(_, w)| *w > 0);
    segments.sort();
    let total: i64 = segments.iter().map(|(_, w)| w).sum();
    if total == 0 {
        return Fixed::ZERO;
    }
    let mut acc = 0i64;
    for (i, (v, w)) in segments.iter().enumerate() {
        acc += w;
        if 2 * acc > total {
            return *v;
        }
        if 2 * acc == total {
            let above = segments[i + 1].0;
            return Fixed::from_micros((v.micros() + above.micros()) / 2);
        }
    }
    segments.last().expect("non-empty").0
}

/// Time-weighted median of the friction-adjusted deviation; an even split
/// between two values takes their midpoint.
pub fn median_deviation(series: &DeviationSeries) -> Fixed {
    weighted_median(series.segments(|p| p.deviation))
}

/// As [`median_deviation`] over the raw gap.
pub fn median_raw_gap(series: &DeviationSeries) -> Fixed {
    weighted_median(series.segments(|p| p.raw_gap))
}

/// Share of the series' span with a strictly positive deviation.
pub fn time_in_arb_fraction(series: &DeviationSeries) -> f64 {
    let segments = series.segments(|p| p.deviation);
    let total: i64 = segments.iter().map(|(_, w)| w).sum();
    let live: i64 = segments.iter().filter(|(v, _)| v.is_positive()).map(|(_, w)| w).sum();
    live as f64 / total as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Apy {
    /// `(1 + r)^(365 / days) − 1`.
    pub compounded: f64,
    /// `r · 365 / days`.
    pub linear: f64,
}

/// Annualised return of `profit` on `capital` held for `hold_days`.
/// Computed in log form; overflow saturates to infinity.
pub fn annualized_return(profit: f64, capital: f64, hold_days: f64) -> Result<Apy, AnalyticsError> {
    if !(capital > 0.0) {
        return Err(AnalyticsError::Capital(capital));
    }
    if !(hold_days > 0.0) {
        return Err(AnalyticsError::Horizon(hold_days));
    }
    let r = profit / capital;
    if r <= -1.0 {
        return Err(AnalyticsError::Return(r));
    }
    let periods = 365.0 / hold_days;
    Ok(Apy {
        compounded: (periods * r.ln_1p()).exp_m1(),
        linear: r * periods,
    })
}

pub fn days_between(from: Timestamp, to: Timestamp) -> f64 {
    (to - from).num_milliseconds() as f64 / 86_400_000.0
}

/// Per-relation summary row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YieldStats {
    pub relation_id: String,
    pub kind: OpportunityKind,
    pub eff_liquidity: f64,
    pub max_dev_1h: Fixed,
    pub median_dev: Fixed,
    pub median_raw_gap: Fixed,
    pub max_apy_worst: f64,
    pub max_apy_worst_linear: f64,
    pub time_in_arb: f64,
}

/// `settle` is the latest resolution among the legs: capital stays locked
/// until then. APY is per unit of settlement notional.
pub fn yield_stats(series: &DeviationSeries, legs: &[&BinaryMarket], settle: Timestamp) -> Result<YieldStats, AnalyticsError> {
    let mut max_apy = 0.0f64;
    let mut max_linear = 0.0f64;
    for p in series.points.iter().filter(|p| p.deviation.is_positive()) {
        let days = days_between(p.t, settle);
        if days > 0.0 {
            let apy = annualized_return(p.deviation.to_f64(), 1.0, days)?;
            max_apy = max_apy.max(apy.compounded);
            max_linear = max_linear.max(apy.linear);
        }
    }
    Ok(YieldStats {
        relation_id: series.relation_id.clone(),
        kind: series.kind,
        eff_liquidity: effective_liquidity(legs)?,
        max_dev_1h: max_persistent_deviation(series, Duration::hours(1)),
        median_dev: median_deviation(series),
        median_raw_gap: median_raw_gap(series),
        max_apy_worst: max_apy,
        max_apy_worst_linear: max_linear,
        time_in_arb: time_in_arb_fraction(series),
    })
}

pub fn write_metrics<W: Write>(writer: W, rows: &[YieldStats]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "relation_id",
        "kind",
        "eff_liquidity",
        "max_dev_1h",
        "median_dev",
        "median_raw_gap",
        "max_apy_worst",
        "max_apy_worst_linear",
        "time_in_arb",
    ])?;
    for r in rows {
        let kind = serde_json::to_value(r.kind).expect("kind serializes");
        w.write_record([
            r.relation_id.clone(),
            kind.as_str().unwrap_or_default().to_string(),
            format!("{:.6}", r.eff_liquidity),
            r.max_dev_1h.to_string(),
            r.median_dev.to_string(),
            r.median_raw_gap.to_string(),
            format!("{:.6}", r.max_apy_worst),
            format!("{:.6}", r.max_apy_worst_linear),
            format!("{:.6}", r.time_in_arb),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Floats come back at the six decimals `write_metrics` keeps.
pub fn read_metrics<R: Read>(reader: R) -> csv::Result<Vec<YieldStats>> {
    csv::Reader::from_reader(reader).deserialize().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EventId, Friction, Mechanism};
    use chrono::DateTime;
    use proptest::prelude::*;

    fn fx(s: &str) -> Fixed {
        s.parse().unwrap()
    }

    fn t0() -> Timestamp {
        DateTime::from_timestamp(1_700_000_000, 0).unwrap()
    }

    fn series(steps: &[(i64, &str)], end_min: i64) -> DeviationSeries {
        let points = steps
            .iter()
            .map(|&(m, d)| DeviationPoint {
                t: t0() + Duration::minutes(m),
                deviation: fx(d),
                raw_gap: fx(d),
            })
            .collect();
        DeviationSeries::new("r", OpportunityKind::CrossConditional, points, t0() + Duration::minutes(end_min)).unwrap()
    }

    fn market(volume: i64, days: i64) -> BinaryMarket {
        BinaryMarket {
            id: "kalshi:m".parse().unwrap(),
            event: EventId("e".into()),
            title: "t".into(),
            description: "d".into(),
            category: None,
            mechanism: Mechanism::Clob,
            open_time: t0(),
            close_time: t0() + Duration::days(days),
            resolution_time: t0() + Duration::days(days),
            volume_usd: Fixed::from_int(volume),
            outcome_labels: ("Yes".into(), "No".into()),
            resolution_meta: Default::default(),
            extra: Default::default(),
        }
    }

    #[test]
    fn liquidity_examples() {
        let (a, b) = (market(1000, 10), market(1000, 10));
        assert!((effective_liquidity(&[&a, &b]).unwrap() - 100.0).abs() < 1e-9);
        let c = market(4000, 10);
        assert!((effective_liquidity(&[&a, &c]).unwrap() - 200.0).abs() < 1e-9);
        let z = market(0, 10);
        assert_eq!(effective_liquidity(&[&a, &z]).unwrap(), 0.0);
        let mut bad = market(10, 1);
        bad.close_time = bad.open_time;
        assert!(effective_liquidity(&[&bad]).is_err());
    }

    #[test]
    fn persistence_examples() {
        assert_eq!(max_persistent_deviation(&series(&[(0, "0.04")], 120), Duration::hours(1)), fx("0.04"));
        let spike = series(&[(0, "0"), (60, "0.1"), (70, "0")], 240);
        assert_eq!(max_persistent_deviation(&spike, Duration::hours(1)), Fixed::ZERO);
        assert_eq!(max_persistent_deviation(&spike, Duration::zero()), fx("0.1"));
        let piecewise = series(&[(0, "0.05"), (90, "0.02")], 240);
        assert_eq!(max_persistent_deviation(&piecewise, Duration::hours(1)), fx("0.05"));
        assert_eq!(max_persistent_deviation(&piecewise, Duration::hours(2)), fx("0.02"));
        // A window must fit inside the series.
        assert_eq!(max_persistent_deviation(&series(&[(0, "0.04")], 30), Duration::hours(1)), Fixed::ZERO);
    }

    #[test]
    fn median_examples() {
        assert_eq!(median_deviation(&series(&[(0, "0.03")], 60)), fx("0.03"));
        assert_eq!(median_deviation(&series(&[(0, "0.02"), (60, "0.04")], 120)), fx("0.03"));
        assert_eq!(median_deviation(&series(&[(0, "0"), (60, "0")], 120)), Fixed::ZERO);
        assert_eq!(median_deviation(&series(&[(0, "0.02"), (60, "0.04")], 150)), fx("0.04"));
    }

    #[test]
    fn time_in_arb_examples() {
        assert_eq!(time_in_arb_fraction(&series(&[(0, "0.01")], 60)), 1.0);
        assert_eq!(time_in_arb_fraction(&series(&[(0, "0")], 60)), 0.0);
        assert_eq!(time_in_arb_fraction(&series(&[(0, "0.01"), (30, "0")], 60)), 0.5);
    }

    #[test]
    fn apy_examples() {
        let one = annualized_return(0.10, 1.0, 365.0).unwrap();
        assert!((one.compounded - 0.10).abs() < 1e-12);
        assert!((one.linear - 0.10).abs() < 1e-12);
        let election = annualized_return(0.03, 1.0, 76.0).unwrap();
        assert!((election.compounded - (1.03f64.powf(365.0 / 76.0) - 1.0)).abs() < 1e-12);
        assert!((election.compounded - 0.1526).abs() < 5e-4);
        let daily = annualized_return(0.05, 1.0, 1.0).unwrap();
        assert!((daily.compounded / (1.05f64.powi(365) - 1.0) - 1.0).abs() < 1e-9);
        assert!(annualized_return(0.01, 1.0, 0.0).is_err());
        assert!(annualized_return(0.01, 0.0, 1.0).is_err());
        assert!(annualized_return(1e6, 1.0, 1e-6).unwrap().compounded.is_infinite());
    }

    #[test]
    fn pair_deviation_uses_cheaper_orientation() {
        let d = Friction::new(fx("0.015")).unwrap();
        let a = LegQuote::uniform("k:i".parse().unwrap(), fx("0.52"), fx("0.5"), d).unwrap();
        let b = LegQuote::uniform("p:j".parse().unwrap(), fx("0.58"), fx("0.4"), d).unwrap();
        let p = equivalent_pair_deviation(t0(), &a, &b);
        assert_eq!(p.deviation, fx("0.05"));
        assert_eq!(p.raw_gap, fx("0.08"));
        assert_eq!(equivalent_pair_deviation(t0(), &b, &a), p);
    }

    #[test]
    fn metrics_csv_header() {
        let s = series(&[(0, "0.04")], 120);
        let m = market(1000, 10);
        let stats = yield_stats(&s, &[&m, &m], t0() + Duration::days(365)).unwrap();
        let mut out = Vec::new();
        write_metrics(&mut out, std::slice::from_ref(&stats)).unwrap();
        let text = String::from_utf8(out.clone()).unwrap();
        assert!(text.starts_with("relation_id,kind,eff_liquidity,max_dev_1h,median_dev,"));
        assert!(text.contains("r,cross_conditional,100.000000,0.04,0.04,0.04,"));
        let back = read_metrics(out.as_slice()).unwrap();
        assert_eq!((back[0].kind, back[0].median_dev), (stats.kind, stats.median_dev));
        assert!((back[0].max_apy_worst - stats.max_apy_worst).abs() < 1e-6);
    }

    fn arb_series() -> impl Strategy<Value = DeviationSeries> {
        prop::collection::vec((1i64..120, 0i64..=50_000), 1..40).prop_map(|steps| {
            let mut t = t0();
            let mut points = Vec::new();
            for (gap, d) in steps {
                points.push(DeviationPoint {
                    t,
                    deviation: Fixed::from_micros(d),
                    raw_gap: Fixed::from_micros(d),
                });
                t += Duration::minutes(gap);
            }
            DeviationSeries::new("r", OpportunityKind::Parity, points, t).unwrap()
        })
    }

    fn brute_persistent(s: &DeviationSeries, window: Duration) -> Fixed {
        // Minute grid; every breakpoint lies on it.
        let mut best = Fixed::ZERO;
        let mut t = s.start();
        while t + window <= s.end() {
            let mut lo = None::<Fixed>;
            for (i, p) in s.points().iter().enumerate() {
                let seg_end = s.segment_end(i);
                if p.t < t + window && seg_end > t {
                    lo = Some(lo.map_or(p.deviation, |l| l.min(p.deviation)));
                }
            }
            best = best.max(lo.unwrap_or(Fixed::ZERO));
            t += Duration::minutes(1);
        }
        best
    }

    proptest! {
        #[test]
        fn persistence_matches_sliding_oracle(s in arb_series(), w in 1i64..240) {
            prop_assert_eq!(max_persistent_deviation(&s, Duration::minutes(w)), brute_persistent(&s, Duration::minutes(w)));
        }

        #[test]
        fn persistence_monotone_in_window(s in arb_series(), a in 0i64..240, b in 0i64..240) {
            let (short, long) = (a.min(b), a.max(b));
            prop_assert!(max_persistent_deviation(&s, Duration::minutes(short)) >= max_persistent_deviation(&s, Duration::minutes(long)));
        }

        #[test]
        fn redundant_points_change_nothing(s in arb_series(), at in 0usize..40) {
            let pts = s.points();
            let i = at % pts.len();
            let split = pts[i].t + (s.segment_end(i) - pts[i].t) / 2;
            prop_assume!(split > pts[i].t);
            let mut more = pts.to_vec();
            more.insert(i + 1, DeviationPoint { t: split, ..pts[i] });
            let s2 = DeviationSeries::new("r", s.kind, more, s.end()).unwrap();
            prop_assert_eq!(median_deviation(&s), median_deviation(&s2));
            prop_assert_eq!(time_in_arb_fraction(&s), time_in_arb_fraction(&s2));
            prop_assert_eq!(max_persistent_deviation(&s, Duration::hours(1)), max_persistent_deviation(&s2, Duration::hours(1)));
        }

        #[test]
        fn apy_identity_at_one_year(r in -0.5f64..5.0) {
            let apy = annualized_return(r, 1.0, 365.0).unwrap();
            prop_assert!((apy.compounded - r).abs() < 1e-12 * (1.0 + r.abs()));
        }
    }
}
