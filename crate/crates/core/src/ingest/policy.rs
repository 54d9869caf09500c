use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::Corpus;
use crate::fixed::Fixed;
use crate::model::{CategoryId, MarketId, PlatformId};

/// Thresholds that keep only venues and markets with real monetary exposure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InclusionPolicy {
    pub min_markets_per_platform: usize,
    /// Inclusive lower bound on lifetime volume.
    pub min_lifetime_volume_usd: Fixed,
    pub exclude_categories: BTreeSet<CategoryId>,
}

impl Default for InclusionPolicy {
    fn default() -> Self {
        InclusionPolicy {
            min_markets_per_platform: 50,
            min_lifetime_volume_usd: Fixed::from_int(500),
            exclude_categories: [CategoryId::SPORTS, CategoryId::GAMING].into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    ZeroVolume,
    BelowVolumeFloor,
    ExcludedCategory,
    PlatformTooSmall,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ExclusionReport {
    pub counts: BTreeMap<ExclusionReason, usize>,
    pub excluded: Vec<(MarketId, ExclusionReason)>,
}

impl ExclusionReport {
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    fn record(&mut self, id: &MarketId, reason: ExclusionReason) {
        *self.counts.entry(reason).or_default() += 1;
        self.excluded.push((id.clone(), reason));
    }
}

/// Drops zero-volume, thin and excluded-category markets, then every market of
/// a platform left with fewer than `min_markets_per_platform` qualifying markets.
pub fn apply_inclusion_policy(corpus: &Corpus, policy: &InclusionPolicy) -> (Corpus, ExclusionReport) {
    let mut report = ExclusionReport::default();
    let mut qualifying = Vec::new();
    for market in corpus.iter() {
        let reason = if market.volume_usd == Fixed::ZERO {
            Some(ExclusionReason::ZeroVolume)
        } else if market.volume_usd < policy.min_lifetime_volume_usd {
            Some(ExclusionReason::BelowVolumeFloor)
        } else if market
            .category
            .is_some_and(|c| policy.exclude_categories.contains(&c))
        {
            Some(ExclusionReason::ExcludedCategory)
        } else {
            None
        };
        match reason {
            Some(reason) => report.record(&market.id, reason),
            None => qualifying.push(market),
        }
    }

    let mut per_platform: BTreeMap<&PlatformId, usize> = BTreeMap::new();
    for market in &qualifying {
        *per_platform.entry(market.platform()).or_default() += 1;
    }
    let mut kept = Vec::new();
    for market in qualifying {
        if per_platform[market.platform()] < policy.min_markets_per_platform {
            report.record(&market.id, ExclusionReason::PlatformTooSmall);
        } else {
            kept.push(market.clone());
        }
    }
    let filtered = Corpus::new(kept).expect("subset of a valid corpus");
    (filtered, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BinaryMarket, EventId, Mechanism};
    use chrono::DateTime;
    use proptest::prelude::*;

    fn market(platform: &str, id: usize, volume: i64, category: i64) -> BinaryMarket {
        let open = DateTime::from_timestamp(1_700_000_000, 0).unwrap();
        BinaryMarket {
            id: MarketId::new(PlatformId::new(platform).unwrap(), format!("m{id}")).unwrap(),
            event: EventId(format!("e{id}")),
            title: "t".into(),
            description: "d".into(),
            category: Some(CategoryId::new(category).unwrap()),
            mechanism: Mechanism::Clob,
            open_time: open,
            close_time: open + chrono::Duration::days(10),
            resolution_time: open + chrono::Duration::days(10),
            volume_usd: Fixed::from_int(volume),
            outcome_labels: ("Yes".into(), "No".into()),
            resolution_meta: Default::default(),
            extra: Default::default(),
        }
    }

    fn platform(name: &str, n: usize) -> Vec<BinaryMarket> {
        (0..n).map(|i| market(name, i, 1000, 8)).collect()
    }

    #[test]
    fn platform_below_fifty_is_dropped_entirely() {
        let mut markets = platform("small", 49);
        markets.extend(platform("big", 50));
        let (kept, report) = apply_inclusion_policy(&Corpus::new(markets).unwrap(), &InclusionPolicy::default());
        assert_eq!(kept.len(), 50);
        assert!(kept.iter().all(|m| m.platform().as_str() == "big"));
        assert_eq!(report.counts[&ExclusionReason::PlatformTooSmall], 49);
    }

    #[test]
    fn volume_floor_is_inclusive() {
        let mut markets = platform("big", 50);
        markets.push(market("big", 100, 499, 8));
        markets.push(market("big", 101, 500, 8));
        markets.push(market("big", 102, 0, 8));
        markets.push(market("big", 103, 5000, 17));
        let (kept, report) = apply_inclusion_policy(&Corpus::new(markets).unwrap(), &InclusionPolicy::default());
        assert!(kept.get(&"big:m101".parse().unwrap()).is_some());
        assert!(kept.get(&"big:m100".parse().unwrap()).is_none());
        assert_eq!(report.counts[&ExclusionReason::BelowVolumeFloor], 1);
        assert_eq!(report.counts[&ExclusionReason::ZeroVolume], 1);
        assert_eq!(report.counts[&ExclusionReason::ExcludedCategory], 1);
    }

    #[test]
    fn empty_corpus() {
        let (kept, report) = apply_inclusion_policy(&Corpus::default(), &InclusionPolicy::default());
        assert!(kept.is_empty());
        assert_eq!(report, ExclusionReport::default());
    }

    proptest! {
        #[test]
        fn idempotent_and_counts_balance(
            specs in prop::collection::vec((0usize..4, 0i64..2000, 1i64..=20), 0..300),
            min_markets in 0usize..60,
        ) {
            let names = ["alpha", "beta", "gamma", "delta"];
            let markets: Vec<BinaryMarket> = specs
                .iter()
                .enumerate()
                .map(|(i, &(p, v, c))| market(names[p], i, v, c))
                .collect();
            let corpus = Corpus::new(markets).unwrap();
            let policy = InclusionPolicy { min_markets_per_platform: min_markets, ..Default::default() };
            let (once, report) = apply_inclusion_policy(&corpus, &policy);
            prop_assert_eq!(report.total(), corpus.len() - once.len());
            let (twice, second) = apply_inclusion_policy(&once, &policy);
            prop_assert_eq!(&twice, &once);
            prop_assert_eq!(second.total(), 0);
        }
    }
}
