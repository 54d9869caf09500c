use chrono::Duration;

use super::{leg_quote, timeline, DetectPlan, PipelineError, QuoteBook};
use crate::analytics::{equivalent_pair_deviation, subset_pair_deviation, AnalyticsError, DeviationPoint, DeviationSeries};
use crate::arbitrage::OpportunityKind;
use crate::fixed::Fixed;
use crate::ingest::{Corpus, FrictionModel};
use crate::model::{MarketId, PriceSeries, Timestamp};

#[derive(Debug, Clone, PartialEq)]
pub struct RelationSeries {
    pub series: DeviationSeries,
    pub legs: Vec<MarketId>,
    /// Latest resolution among the legs.
    pub settle: Timestamp,
}

fn pair_series<'a>(prices: &'a [PriceSeries], a: &MarketId, b: &MarketId) -> impl Iterator<Item = &'a PriceSeries> {
    let (a, b) = (a.clone(), b.clone());
    prices.iter().filter(move |s| s.market == a || s.market == b)
}

/// `(t, p_yes(a), p_yes(b))` wherever both legs are quoted within the staleness window.
pub fn joined_prices(prices: &[PriceSeries], a: &MarketId, b: &MarketId, staleness: Duration) -> Vec<(Timestamp, Fixed, Fixed)> {
    let book = QuoteBook::new(prices, staleness);
    timeline(pair_series(prices, a, b))
        .into_iter()
        .filter_map(|t| Some((t, book.at(a, t)?.p_yes, book.at(b, t)?.p_yes)))
        .collect()
}

/// Friction-adjusted deviation series for every equivalent and subset pair
/// in the plan. Each series ends one staleness window after its last joined
/// quote; pairs that never join are skipped.
pub fn relation_series(
    corpus: &Corpus,
    prices: &[PriceSeries],
    plan: &DetectPlan,
    frictions: &FrictionModel,
    staleness: Duration,
) -> Result<Vec<RelationSeries>, PipelineError> {
    let book = QuoteBook::new(prices, staleness);
    let pairs = plan
        .equivalent
        .iter()
        .map(|p| (p, OpportunityKind::CrossConditional))
        .chain(plan.subsets.iter().map(|p| (p, OpportunityKind::SubsetSuperset)));
    let mut out = Vec::new();
    for ((a, b), kind) in pairs {
        let (Some(ma), Some(mb)) = (corpus.get(a), corpus.get(b)) else {
            continue;
        };
        let mut points: Vec<DeviationPoint> = Vec::new();
        for t in timeline(pair_series(prices, a, b)) {
            let (Some(qa), Some(qb)) = (book.at(a, t), book.at(b, t)) else {
                continue;
            };
            let (la, lb) = (leg_quote(ma, qa, frictions)?, leg_quote(mb, qb, frictions)?);
            points.push(match kind {
                OpportunityKind::SubsetSuperset => subset_pair_deviation(t, &la, &lb),
                _ => equivalent_pair_deviation(t, &la, &lb),
            });
        }
        let Some(last) = points.last().map(|p| p.t) else {
            continue;
        };
        let series = DeviationSeries::new(format!("{a}|{b}"), kind, points, last + staleness.max(Duration::seconds(1)))
            .map_err(|e: AnalyticsError| PipelineError::Data(e.to_string()))?;
        out.push(RelationSeries {
            series,
            legs: vec![a.clone(), b.clone()],
            settle: ma.resolution_time.max(mb.resolution_time),
        });
    }
    Ok(out)
}
