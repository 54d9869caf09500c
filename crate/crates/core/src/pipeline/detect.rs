use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use super::{leg_quote, timeline, PipelineError, QuoteBook};
use crate::align::{RelationGraph, SemanticRelation};
use crate::arbitrage::{
    detect_cross_conditional, detect_negrisk_cross, detect_negrisk_single, detect_parity, detect_subset_superset,
    enumerate_partitions, sort_opportunities, ArbitrageOpportunity, LegQuote, PartitionCandidate, PartitionLimits,
};
use crate::fixed::Fixed;
use crate::ingest::{Corpus, FrictionModel};
use crate::model::{MarketId, OutcomeSpace, PriceSeries, Region, YesRegion};

#[derive(Debug, Clone, PartialEq)]
pub struct PlannedPartition {
    pub candidate: PartitionCandidate,
    pub space: OutcomeSpace,
    /// All members on one platform.
    pub single: bool,
}

impl PlannedPartition {
    pub fn markets(&self) -> BTreeSet<&MarketId> {
        self.candidate.members.iter().map(|m| &m.market).collect()
    }
}

/// Which bundles detection evaluates at every timestamp, besides parity.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectPlan {
    pub equivalent: Vec<(MarketId, MarketId)>,
    /// `(sub, super)` under the transitive closure.
    pub subsets: Vec<(MarketId, MarketId)>,
    pub partitions: Vec<PlannedPartition>,
}

/// Pairs from the relation graph, each negative-risk event as listed, and
/// its cross-venue substitutions.
pub fn plan_detection(graph: &RelationGraph, corpus: &Corpus, limits: PartitionLimits) -> DetectPlan {
    let mut partitions = Vec::new();
    let mut seen: BTreeSet<Vec<MarketId>> = BTreeSet::new();
    for baseline in graph.baseline_events(corpus) {
        let Ok(space) = baseline.outcome_space() else { continue };
        let n = baseline.outcomes.len();
        let listed = PartitionCandidate {
            baseline_event: baseline.event.clone(),
            members: baseline
                .outcomes
                .iter()
                .enumerate()
                .map(|(i, o)| YesRegion {
                    market: o.market.clone(),
                    region: Region::from_atoms(&[i], n).expect("atom in range"),
                })
                .collect(),
            total_volume: baseline.outcomes.iter().map(|o| o.volume).sum::<Fixed>(),
        };
        for candidate in std::iter::once(listed).chain(enumerate_partitions(&baseline, limits)) {
            let mut key: Vec<MarketId> = candidate.members.iter().map(|m| m.market.clone()).collect();
            key.sort();
            if !seen.insert(key) {
                continue;
            }
            let platforms: BTreeSet<_> = candidate.members.iter().map(|m| m.market.platform()).collect();
            partitions.push(PlannedPartition {
                single: platforms.len() == 1,
                candidate,
                space: space.clone(),
            });
        }
    }
    DetectPlan {
        equivalent: graph.equivalent_pairs(),
        subsets: graph.subset_pairs(),
        partitions,
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectReport {
    pub opportunities: Vec<ArbitrageOpportunity>,
    pub timestamps: usize,
    /// Cross-venue bundles evaluated with every leg quoted.
    pub joins: usize,
    /// Cross-venue bundles skipped for a missing or stale leg.
    pub missed_joins: usize,
}

/// Evaluates parity on every quoted market and every planned bundle at each
/// quote time, joining legs within `book.staleness`.
pub fn detect(
    corpus: &Corpus,
    prices: &[PriceSeries],
    plan: &DetectPlan,
    frictions: &FrictionModel,
    staleness: chrono::Duration,
) -> Result<DetectReport, PipelineError> {
    let book = QuoteBook::new(prices, staleness);
    let times = timeline(prices);
    let per_time: Result<Vec<(Vec<ArbitrageOpportunity>, usize, usize)>, PipelineError> = times
        .par_iter()
        .map(|&t| {
            let mut quotes: BTreeMap<&MarketId, LegQuote> = BTreeMap::new();
            for id in book.markets() {
                if let (Some(q), Some(m)) = (book.at(id, t), corpus.get(id)) {
                    quotes.insert(id, leg_quote(m, q, frictions)?);
                }
            }
            let mut out = Vec::new();
            let (mut joins, mut missed) = (0, 0);
            for q in quotes.values() {
                out.extend(detect_parity(q, t));
            }
            let mut tally = |cross: bool, joined: bool| {
                if cross {
                    if joined {
                        joins += 1;
                    } else {
                        missed += 1;
                    }
                }
            };
            for (a, b) in &plan.equivalent {
                let pair = (quotes.get(a), quotes.get(b));
                tally(a.platform() != b.platform(), pair.0.is_some() && pair.1.is_some());
                let (Some(qa), Some(qb)) = pair else {
                    continue;
                };
                let rel = SemanticRelation::equivalent(a.clone(), b.clone(), "graph");
                out.extend(detect_cross_conditional(qa, qb, &rel, t)?);
            }
            for (sub, sup) in &plan.subsets {
                let pair = (quotes.get(sub), quotes.get(sup));
                tally(sub.platform() != sup.platform(), pair.0.is_some() && pair.1.is_some());
                let (Some(qs), Some(qp)) = pair else {
                    continue;
                };
                let rel = SemanticRelation::subset(sub.clone(), sup.clone(), "graph");
                out.extend(detect_subset_superset(qs, qp, &rel, t)?);
            }
            for p in &plan.partitions {
                let legs: Option<Vec<LegQuote>> =
                    p.candidate.members.iter().map(|m| quotes.get(&m.market).cloned()).collect();
                tally(!p.single, legs.is_some());
                let Some(legs) = legs else {
                    continue;
                };
                if p.single {
                    out.extend(detect_negrisk_single(&p.candidate, &p.space, &legs, t)?);
                } else {
                    out.extend(detect_negrisk_cross(&p.candidate, &p.space, &legs, t)?);
                }
            }
            Ok((out, joins, missed))
        })
        .collect();
    let mut report = DetectReport {
        timestamps: times.len(),
        ..DetectReport::default()
    };
    for (opps, joins, missed) in per_time? {
        report.opportunities.extend(opps);
        report.joins += joins;
        report.missed_joins += missed;
    }
    sort_opportunities(&mut report.opportunities);
    Ok(report)
}
