//! Stage orchestration shared by the command line and the synthetic ledger:
//! matching, quote joins, detection and per-relation series.

mod analyze;
mod detect;
mod matching;

use std::collections::{BTreeMap, BTreeSet};

use chrono::Duration;
use thiserror::Error;

use crate::arbitrage::{ArbError, LegQuote};
use crate::ingest::{FrictionError, FrictionModel};
use crate::model::{BinaryMarket, MarketId, ModelError, PriceQuote, PriceSeries, Timestamp};

pub use analyze::{joined_prices, relation_series, RelationSeries};
pub use detect::{detect, plan_detection, DetectPlan, DetectReport, PlannedPartition};
pub use matching::{run_match, MatchOutput, MatchParams};

pub const DEFAULT_STALENESS: Duration = Duration::minutes(5);

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Friction(#[from] FrictionError),
    #[error(transparent)]
    Arbitrage(#[from] ArbError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{0}")]
    Data(String),
}

/// Quote with the friction of buying each side at its own price.
pub fn leg_quote(market: &BinaryMarket, quote: &PriceQuote, frictions: &FrictionModel) -> Result<LegQuote, PipelineError> {
    let delta_yes = frictions.friction_for(market, Some(quote.p_yes), None)?;
    let delta_no = frictions.friction_for(market, Some(quote.p_no), None)?;
    Ok(LegQuote::new(market.id.clone(), quote.p_yes, quote.p_no, delta_yes, delta_no)?)
}

/// Every distinct quote time, ascending.
pub fn timeline<'a>(series: impl IntoIterator<Item = &'a PriceSeries>) -> Vec<Timestamp> {
    let times: BTreeSet<Timestamp> = series.into_iter().flat_map(|s| s.quotes.iter().map(|q| q.t)).collect();
    times.into_iter().collect()
}

/// Price series by market with a staleness-bounded as-of lookup.
#[derive(Debug, Clone)]
pub struct QuoteBook<'a> {
    series: BTreeMap<&'a MarketId, &'a PriceSeries>,
    pub staleness: Duration,
}

impl<'a> QuoteBook<'a> {
    pub fn new(series: &'a [PriceSeries], staleness: Duration) -> Self {
        QuoteBook {
            series: series.iter().map(|s| (&s.market, s)).collect(),
            staleness,
        }
    }

    pub fn at(&self, market: &MarketId, t: Timestamp) -> Option<&'a PriceQuote> {
        self.series.get(market).and_then(|s| s.quote_at(t, self.staleness))
    }

    pub fn markets(&self) -> impl Iterator<Item = &'a MarketId> + '_ {
        self.series.keys().copied()
    }
}
