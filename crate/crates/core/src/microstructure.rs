//! Comparable YES/NO prices from venue mechanism state.
//!
//! Constant-product pools price outcome `i` proportionally to `1 / r_i`, the
//! logarithmic market scoring rule prices by the softmax of `q / b`, and order
//! books are read at the mid-quote with the half-spread reported separately.

use thiserror::Error;

use crate::fixed::Fixed;
use crate::model::{ModelError, PriceQuote, Timestamp};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MicrostructureError {
    #[error("pool needs at least two outcomes, got {0}")]
    TooFewOutcomes(usize),
    #[error("reserve {index} is {value}; reserves must be positive and finite")]
    BadReserve { index: usize, value: f64 },
    #[error("liquidity parameter b must be positive and finite, got {0}")]
    BadLiquidity(f64),
    #[error("quantity {index} is not finite")]
    BadQuantity { index: usize },
    #[error("outcome {index} out of range for {len} outcomes")]
    OutcomeIndex { index: usize, len: usize },
    #[error("trade amount must be positive and finite, got {0}")]
    BadAmount(f64),
    #[error("crossed book: bid {bid} above ask {ask}")]
    CrossedBook { bid: Fixed, ask: Fixed },
    #[error("invalid book: {0}")]
    InvalidBook(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Constant-product pool reserves, one entry per outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct CpmmState {
    reserves: Vec<f64>,
}

impl CpmmState {
    pub fn new(reserves: Vec<f64>) -> Result<Self, MicrostructureError> {
        if reserves.len() < 2 {
            return Err(MicrostructureError::TooFewOutcomes(reserves.len()));
        }
        if let Some((index, &value)) = reserves
            .iter()
            .enumerate()
            .find(|(_, r)| !(r.is_finite() && **r > 0.0))
        {
            return Err(MicrostructureError::BadReserve { index, value });
        }
        Ok(CpmmState { reserves })
    }

    pub fn reserves(&self) -> &[f64] {
        &self.reserves
    }

    pub fn invariant(&self) -> f64 {
        self.reserves.iter().product()
    }

    /// Buys outcome `outcome` with `collateral`: the collateral mints one
    /// complete set per unit into the pool, then outcome shares are withdrawn
    /// until the product invariant is restored. Returns the shares received and
    /// the post-trade pool.
    pub fn buy(&self, outcome: usize, collateral: f64) -> Result<(f64, CpmmState), MicrostructureError> {
        let len = self.reserves.len();
        if outcome >= len {
            return Err(MicrostructureError::OutcomeIndex { index: outcome, len });
        }
        if !(collateral.is_finite() && collateral > 0.0) {
            return Err(MicrostructureError::BadAmount(collateral));
        }
        let k = self.invariant();
        let mut next: Vec<f64> = self.reserves.iter().map(|r| r + collateral).collect();
        let others: f64 = next
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != outcome)
            .map(|(_, r)| r)
            .product();
        let target = k / others;
        let shares = next[outcome] - target;
        next[outcome] = target;
        Ok((shares, CpmmState { reserves: next }))
    }
}

/// Per-outcome prices `p_i = Π_{j≠i} r_j / Σ_k Π_{j≠k} r_j`.
///
/// Computed through the equivalent normalised reciprocals `(1/r_i) / Σ 1/r_k`,
/// which avoids forming large products. For two outcomes this is
/// `p_yes = r_no / (r_yes + r_no)`.
pub fn cpmm_prices(state: &CpmmState) -> Vec<f64> {
    let inverse: Vec<f64> = state.reserves.iter().map(|r| 1.0 / r).collect();
    let total: f64 = inverse.iter().sum();
    inverse.iter().map(|v| v / total).collect()
}

/// Outstanding share quantities and liquidity parameter of an LMSR maker.
#[derive(Debug, Clone, PartialEq)]
pub struct LmsrState {
    quantities: Vec<f64>,
    b: f64,
}

impl LmsrState {
    pub fn new(quantities: Vec<f64>, b: f64) -> Result<Self, MicrostructureError> {
        if quantities.len() < 2 {
            return Err(MicrostructureError::TooFewOutcomes(quantities.len()));
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(MicrostructureError::BadLiquidity(b));
        }
        if let Some(index) = quantities.iter().position(|q| !q.is_finite()) {
            return Err(MicrostructureError::BadQuantity { index });
        }
        Ok(LmsrState { quantities, b })
    }

    pub fn quantities(&self) -> &[f64] {
        &self.quantities
    }

    pub fn liquidity(&self) -> f64 {
        self.b
    }

    /// Buys `shares` of `outcome`; returns the cost `C(q′) − C(q)` and the new state.
    pub fn buy(&self, outcome: usize, shares: f64) -> Result<(f64, LmsrState), MicrostructureError> {
        let len = self.quantities.len();
        if outcome >= len {
            return Err(MicrostructureError::OutcomeIndex { index: outcome, len });
        }
        if !(shares.is_finite() && shares > 0.0) {
            return Err(MicrostructureError::BadAmount(shares));
        }
        let mut quantities = self.quantities.clone();
        quantities[outcome] += shares;
        let next = LmsrState { quantities, b: self.b };
        Ok((lmsr_cost(&next) - lmsr_cost(self), next))
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Hanson cost `C(q) = b · ln Σ_i exp(q_i / b)`, evaluated with log-sum-exp.
pub fn lmsr_cost(state: &LmsrState) -> f64 {
    let b = state.b;
    b * log_sum_exp(state.quantities.iter().map(|q| q / b))
}

/// `p_i = exp(q_i / b) / Σ_j exp(q_j / b)`.
pub fn lmsr_prices(state: &LmsrState) -> Vec<f64> {
    let scaled: Vec<f64> = state.quantities.iter().map(|q| q / state.b).collect();
    let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scaled.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| w / total).collect()
}

/// Top of a binary order book, quoted on the YES side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BookSnapshot {
    pub best_bid: Fixed,
    pub best_ask: Fixed,
    pub tick: Fixed,
    pub bid_depth: Fixed,
    pub ask_depth: Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MidQuote {
    pub mid: Fixed,
    /// `(ask − bid) / 2`, the implied one-sided spread cost of a marketable order.
    pub half_spread: Fixed,
}

impl MidQuote {
    /// YES at the mid, NO at its complement.
    pub fn to_quote(self, t: Timestamp) -> Result<PriceQuote, ModelError> {
        PriceQuote::new(t, self.mid, Fixed::ONE - self.mid)
    }
}

/// Mid-quote and half-spread. Odd micro-unit spreads round the half-spread up
/// and the mid down.
pub fn clob_mid(book: &BookSnapshot) -> Result<MidQuote, MicrostructureError> {
    let BookSnapshot {
        best_bid: bid,
        best_ask: ask,
        tick,
        ..
    } = *book;
    if bid > ask {
        return Err(MicrostructureError::CrossedBook { bid, ask });
    }
    if bid < Fixed::ZERO || ask > Fixed::ONE {
        return Err(MicrostructureError::InvalidBook(format!(
            "quotes {bid}/{ask} outside [0, 1]"
        )));
    }
    if !tick.is_positive() {
        return Err(MicrostructureError::InvalidBook(format!("tick {tick} not positive")));
    }
    let half_spread = (ask - bid).half_ceil();
    Ok(MidQuote {
        mid: ask - half_spread,
        half_spread,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fx(s: &str) -> Fixed {
        s.parse().unwrap()
    }

    fn book(bid: &str, ask: &str) -> BookSnapshot {
        BookSnapshot {
            best_bid: fx(bid),
            best_ask: fx(ask),
            tick: fx("0.01"),
            bid_depth: fx("100"),
            ask_depth: fx("100"),
        }
    }

    #[test]
    fn cpmm_examples() {
        let even = cpmm_prices(&CpmmState::new(vec![100.0, 100.0]).unwrap());
        assert_eq!(even, vec![0.5, 0.5]);
        let skewed = cpmm_prices(&CpmmState::new(vec![50.0, 150.0]).unwrap());
        assert!((skewed[0] - 0.75).abs() < 1e-15);
        let three = cpmm_prices(&CpmmState::new(vec![100.0, 100.0, 100.0]).unwrap());
        for p in three {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!(matches!(
            CpmmState::new(vec![0.0, 1.0]),
            Err(MicrostructureError::BadReserve { index: 0, .. })
        ));
    }

    #[test]
    fn cpmm_price_matches_product_ratio_formula() {
        let reserves = vec![40.0, 70.0, 130.0];
        let prices = cpmm_prices(&CpmmState::new(reserves.clone()).unwrap());
        let products: Vec<f64> = (0..3)
            .map(|i| (0..3).filter(|&j| j != i).map(|j| reserves[j]).product())
            .collect();
        let total: f64 = products.iter().sum();
        for i in 0..3 {
            assert!((prices[i] - products[i] / total).abs() < 1e-14);
        }
    }

    #[test]
    fn cpmm_price_is_marginal_cost_of_constant_product() {
        // Finite difference: collateral spent per share for a vanishing buy.
        let state = CpmmState::new(vec![50.0, 150.0]).unwrap();
        let x = 1e-6;
        let (shares, _) = state.buy(0, x).unwrap();
        assert!((x / shares - 0.75).abs() < 1e-6);
    }

    #[test]
    fn lmsr_examples() {
        let even = lmsr_prices(&LmsrState::new(vec![0.0, 0.0], 100.0).unwrap());
        assert_eq!(even, vec![0.5, 0.5]);

        let b = 37.5;
        let two_to_one = lmsr_prices(&LmsrState::new(vec![b * 2f64.ln(), 0.0], b).unwrap());
        assert!((two_to_one[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((two_to_one[1] - 1.0 / 3.0).abs() < 1e-12);

        // exp(100) overflows nothing under log-sum-exp; the exact NO price is
        // 1 / (1 + e^100) ≈ 3.72e-44.
        let extreme = lmsr_prices(&LmsrState::new(vec![1000.0, 0.0], 10.0).unwrap());
        assert!(extreme.iter().all(|p| p.is_finite()));
        assert!((extreme[0] - 1.0).abs() < 1e-15);
        assert!((extreme[1] - 3.720075976020836e-44).abs() < 1e-57);
        assert!(matches!(
            LmsrState::new(vec![0.0, 0.0], 0.0),
            Err(MicrostructureError::BadLiquidity(_))
        ));
    }

    #[test]
    fn lmsr_cost_examples() {
        let base = LmsrState::new(vec![0.0, 0.0], 100.0).unwrap();
        assert!((lmsr_cost(&base) - 100.0 * 2f64.ln()).abs() < 1e-12);

        let q = LmsrState::new(vec![12.0, -3.0, 40.0], 25.0).unwrap();
        let shifted = LmsrState::new(vec![19.0, 4.0, 47.0], 25.0).unwrap();
        assert!((lmsr_cost(&shifted) - lmsr_cost(&q) - 7.0).abs() < 1e-10);

        let (cost, next) = q.buy(1, 5.0).unwrap();
        assert!((cost - (lmsr_cost(&next) - lmsr_cost(&q))).abs() < 1e-12);
    }

    #[test]
    fn lmsr_price_is_cost_gradient() {
        let q = vec![12.0, -3.0, 40.0];
        let state = LmsrState::new(q.clone(), 25.0).unwrap();
        let prices = lmsr_prices(&state);
        let h = 1e-5;
        for i in 0..q.len() {
            let mut up = q.clone();
            let mut down = q.clone();
            up[i] += h;
            down[i] -= h;
            let grad = (lmsr_cost(&LmsrState::new(up, 25.0).unwrap())
                - lmsr_cost(&LmsrState::new(down, 25.0).unwrap()))
                / (2.0 * h);
            assert!(((grad - prices[i]) / prices[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn clob_examples() {
        let quote = clob_mid(&book("0.52", "0.54")).unwrap();
        assert_eq!(quote.mid, fx("0.53"));
        assert_eq!(quote.half_spread, fx("0.01"));

        let locked = clob_mid(&book("0.5", "0.5")).unwrap();
        assert_eq!(locked.mid, fx("0.5"));
        assert_eq!(locked.half_spread, Fixed::ZERO);

        assert!(matches!(
            clob_mid(&book("0.6", "0.55")),
            Err(MicrostructureError::CrossedBook { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn amm_prices_in_open_unit_interval_and_sum_to_one(
            reserves in prop::collection::vec(0.01f64..1e6, 2..6),
            quantities in prop::collection::vec(-500.0f64..500.0, 2..6),
            b in 40.0f64..1000.0,
        ) {
            let cpmm = cpmm_prices(&CpmmState::new(reserves).unwrap());
            let lmsr = lmsr_prices(&LmsrState::new(quantities, b).unwrap());
            for prices in [cpmm, lmsr] {
                prop_assert!(prices.iter().all(|&p| p > 0.0 && p < 1.0));
                prop_assert!((prices.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn cpmm_binary_monotone_in_reserves(y in 1.0f64..1e4, n in 1.0f64..1e4, d in 0.1f64..100.0) {
            let base = cpmm_prices(&CpmmState::new(vec![y, n]).unwrap())[0];
            let more_yes = cpmm_prices(&CpmmState::new(vec![y + d, n]).unwrap())[0];
            let more_no = cpmm_prices(&CpmmState::new(vec![y, n + d]).unwrap())[0];
            prop_assert!(more_yes < base);
            prop_assert!(more_no > base);
        }

        #[test]
        fn buying_yes_raises_yes_price(y in 1.0f64..1e4, n in 1.0f64..1e4, x in 0.01f64..100.0,
                                       q0 in -100.0f64..100.0, q1 in -100.0f64..100.0, b in 40.0f64..500.0) {
            let pool = CpmmState::new(vec![y, n]).unwrap();
            let (_, after) = pool.buy(0, x).unwrap();
            prop_assert!(cpmm_prices(&after)[0] > cpmm_prices(&pool)[0]);

            let maker = LmsrState::new(vec![q0, q1], b).unwrap();
            let (cost, after) = maker.buy(0, x).unwrap();
            prop_assert!(cost > 0.0);
            prop_assert!(lmsr_prices(&after)[0] > lmsr_prices(&maker)[0]);
        }
    }
}
