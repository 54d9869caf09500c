use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};

use crate::fixed::Fixed;
use crate::model::{EventId, MarketId, ModelError, OutcomeSpace, Region, YesRegion};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionCandidate {
    pub baseline_event: EventId,
    pub members: Vec<YesRegion>,
    pub total_volume: Fixed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartitionFailure {
    TooFewMembers(usize),
    RegionLength(MarketId),
    DuplicateMember(MarketId),
    Uncovered(usize),
    Overlap { atom: usize, markets: Vec<MarketId> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionVerdict {
    pub valid: bool,
    pub failures: Vec<PartitionFailure>,
}

/// Completeness and mutual exclusivity, checked atom by atom: a partition has
/// exactly one member covering every atom.
pub fn validate_partition(candidate: &PartitionCandidate, space: &OutcomeSpace) -> PartitionVerdict {
    let mut failures = Vec::new();
    let members = &candidate.members;
    if members.len() < 2 {
        failures.push(PartitionFailure::TooFewMembers(members.len()));
    }
    let mut seen = BTreeSet::new();
    for m in members {
        if m.region.len() != space.len() {
            failures.push(PartitionFailure::RegionLength(m.market.clone()));
        }
        if !seen.insert(&m.market) {
            failures.push(PartitionFailure::DuplicateMember(m.market.clone()));
        }
    }
    if !failures.is_empty() {
        return PartitionVerdict { valid: false, failures };
    }

    for atom in 0..space.len() {
        let covering: Vec<MarketId> = members
            .iter()
            .filter(|m| m.region.contains(atom))
            .map(|m| m.market.clone())
            .collect();
        match covering.len() {
            0 => failures.push(PartitionFailure::Uncovered(atom)),
            1 => {}
            _ => failures.push(PartitionFailure::Overlap { atom, markets: covering }),
        }
    }

    let valid = failures.is_empty();
    debug_assert_eq!(valid, {
        let regions: Vec<Region> = members.iter().map(|m| m.region).collect();
        let union = regions.iter().fold(Region::empty(space.len()), |u, r| u.union(*r));
        let disjoint = regions
            .iter()
            .enumerate()
            .all(|(i, a)| regions[i + 1..].iter().all(|b| a.is_disjoint(*b)));
        union.is_full() && disjoint
    });
    PartitionVerdict { valid, failures }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PartitionLimits {
    pub min_subs: usize,
    pub max_subs: usize,
    pub max_perms: usize,
}

impl Default for PartitionLimits {
    fn default() -> Self {
        PartitionLimits {
            min_subs: 2,
            max_subs: 4,
            max_perms: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaselineOutcome {
    pub market: MarketId,
    pub volume: Fixed,
    /// Verified equivalents listed on other platforms, with their volume.
    pub equivalents: Vec<(MarketId, Fixed)>,
}

/// A same-platform partition: exactly one outcome market resolves YES.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaselineEvent {
    pub event: EventId,
    pub outcomes: Vec<BaselineOutcome>,
}

impl BaselineEvent {
    /// One atom per baseline outcome.
    pub fn outcome_space(&self) -> Result<OutcomeSpace, ModelError> {
        OutcomeSpace::new(
            self.event.clone(),
            self.outcomes.iter().map(|o| o.market.to_string()).collect(),
        )
    }
}

#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct Ranked {
    volume: Reverse<Fixed>,
    members: Vec<MarketId>,
}

/// Substitutes `min_subs..=max_subs` baseline outcomes with foreign
/// equivalents and keeps the `max_perms` candidates of highest total volume.
/// Ties rank by member ids.
pub fn enumerate_partitions(baseline: &BaselineEvent, limits: PartitionLimits) -> Vec<PartitionCandidate> {
    let Ok(space) = baseline.outcome_space() else {
        return Vec::new();
    };
    let n = baseline.outcomes.len();
    if limits.max_perms == 0 || limits.min_subs > limits.max_subs.min(n) {
        return Vec::new();
    }

    // Max-heap on rank order: the worst kept candidate sits on top.
    let mut heap: BinaryHeap<Ranked> = BinaryHeap::new();
    let mut choice: Vec<Option<usize>> = vec![None; n];
    search(baseline, limits, 0, 0, &mut choice, &mut heap);

    let mut ranked = heap.into_sorted_vec();
    ranked.truncate(limits.max_perms);
    ranked
        .into_iter()
        .filter_map(|r| {
            let members: Vec<YesRegion> = r
                .members
                .into_iter()
                .enumerate()
                .map(|(i, market)| YesRegion {
                    market,
                    region: Region::from_atoms(&[i], n).expect("atom in range"),
                })
                .collect();
            let candidate = PartitionCandidate {
                baseline_event: baseline.event.clone(),
                members,
                total_volume: r.volume.0,
            };
            validate_partition(&candidate, &space).valid.then_some(candidate)
        })
        .collect()
}

fn search(
    baseline: &BaselineEvent,
    limits: PartitionLimits,
    index: usize,
    subs: usize,
    choice: &mut Vec<Option<usize>>,
    heap: &mut BinaryHeap<Ranked>,
) {
    let n = baseline.outcomes.len();
    if subs + (n - index) < limits.min_subs {
        return;
    }
    if index == n {
        let mut volume = Fixed::ZERO;
        let mut members = Vec::with_capacity(n);
        for (outcome, pick) in baseline.outcomes.iter().zip(choice.iter()) {
            let (market, v) = match pick {
                Some(e) => (&outcome.equivalents[*e].0, outcome.equivalents[*e].1),
                None => (&outcome.market, outcome.volume),
            };
            volume += v;
            members.push(market.clone());
        }
        let ranked = Ranked {
            volume: Reverse(volume),
            members,
        };
        if heap.len() < limits.max_perms {
            heap.push(ranked);
        } else if heap.peek().is_some_and(|worst| ranked < *worst) {
            heap.pop();
            heap.push(ranked);
        }
        return;
    }
    choice[index] = None;
    search(baseline, limits, index + 1, subs, choice, heap);
    if subs < limits.max_subs {
        for e in 0..baseline.outcomes[index].equivalents.len() {
            choice[index] = Some(e);
            search(baseline, limits, index + 1, subs + 1, choice, heap);
        }
        choice[index] = None;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(s: &str) -> MarketId {
        s.parse().unwrap()
    }

    fn space(n: usize) -> OutcomeSpace {
        OutcomeSpace::new(EventId("e".into()), (0..n).map(|i| format!("w{i}")).collect()).unwrap()
    }

    fn cand(regions: &[&[usize]], n: usize) -> PartitionCandidate {
        PartitionCandidate {
            baseline_event: EventId("e".into()),
            members: regions
                .iter()
                .enumerate()
                .map(|(i, atoms)| YesRegion {
                    market: id(&format!("k:m{i}")),
                    region: Region::from_atoms(atoms, n).unwrap(),
                })
                .collect(),
            total_volume: Fixed::ZERO,
        }
    }

    #[test]
    fn validation_examples() {
        assert!(validate_partition(&cand(&[&[0], &[1], &[2]], 3), &space(3)).valid);

        let v = validate_partition(&cand(&[&[0, 1], &[1, 2]], 3), &space(3));
        assert!(!v.valid);
        assert!(matches!(&v.failures[..], [PartitionFailure::Overlap { atom: 1, .. }]));

        let v = validate_partition(&cand(&[&[0], &[2]], 3), &space(3));
        assert_eq!(v.failures, vec![PartitionFailure::Uncovered(1)]);

        let v = validate_partition(&cand(&[&[0, 1, 2]], 3), &space(3));
        assert_eq!(v.failures, vec![PartitionFailure::TooFewMembers(1)]);

        let v = validate_partition(&cand(&[&[0], &[1]], 2), &space(3));
        assert!(!v.valid);
    }

    fn baseline(n: usize, equivalents: usize) -> BaselineEvent {
        BaselineEvent {
            event: EventId("e".into()),
            outcomes: (0..n)
                .map(|i| BaselineOutcome {
                    market: id(&format!("kalshi:o{i}")),
                    volume: Fixed::from_int(100 + i as i64),
                    equivalents: (0..equivalents)
                        .map(|e| {
                            (
                                id(&format!("poly{e}:o{i}")),
                                Fixed::from_int(((i * 7 + e * 13) % 17) as i64 * 10),
                            )
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    #[test]
    fn three_outcomes_one_equivalent_each() {
        let out = enumerate_partitions(&baseline(3, 1), PartitionLimits::default());
        assert_eq!(out.len(), 4);
        let sp = baseline(3, 1).outcome_space().unwrap();
        for c in &out {
            assert!(validate_partition(c, &sp).valid);
            let foreign = c.members.iter().filter(|m| m.market.platform().as_str() != "kalshi").count();
            assert!((2..=3).contains(&foreign));
        }
        assert!(out.windows(2).all(|w| w[0].total_volume >= w[1].total_volume));
    }

    #[test]
    fn no_equivalents_is_empty() {
        assert!(enumerate_partitions(&baseline(4, 0), PartitionLimits::default()).is_empty());
        assert!(enumerate_partitions(&baseline(1, 2), PartitionLimits::default()).is_empty());
    }

    /// Every substitution pattern, ranked by full sort.
    fn exhaustive(b: &BaselineEvent, limits: PartitionLimits) -> Vec<(Fixed, Vec<MarketId>)> {
        let n = b.outcomes.len();
        let mut all = vec![(Fixed::ZERO, Vec::new(), 0usize)];
        for o in &b.outcomes {
            let mut next = Vec::new();
            for (v, ms, subs) in &all {
                let mut base = ms.clone();
                base.push(o.market.clone());
                next.push((*v + o.volume, base, *subs));
                for (m, ev) in &o.equivalents {
                    let mut alt = ms.clone();
                    alt.push(m.clone());
                    next.push((*v + *ev, alt, subs + 1));
                }
            }
            all = next;
        }
        let mut kept: Vec<(Fixed, Vec<MarketId>)> = all
            .into_iter()
            .filter(|(_, ms, s)| ms.len() == n && (limits.min_subs..=limits.max_subs).contains(s))
            .map(|(v, ms, _)| (v, ms))
            .collect();
        kept.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        kept
    }

    #[test]
    fn ten_outcomes_three_equivalents_match_oracle_top_slice() {
        let b = baseline(10, 3);
        let limits = PartitionLimits::default();
        let out = enumerate_partitions(&b, limits);
        assert_eq!(out.len(), 1000);
        let oracle = exhaustive(&b, limits);
        assert!(oracle.len() > 1000);
        for (c, (v, ms)) in out.iter().zip(&oracle) {
            assert_eq!(c.total_volume, *v);
            let got: Vec<MarketId> = c.members.iter().map(|m| m.market.clone()).collect();
            assert_eq!(&got, ms);
        }
    }

    #[test]
    fn small_limits_match_oracle_exactly() {
        let b = baseline(5, 2);
        let limits = PartitionLimits {
            min_subs: 1,
            max_subs: 3,
            max_perms: usize::MAX,
        };
        let out = enumerate_partitions(&b, limits);
        let oracle = exhaustive(&b, limits);
        assert_eq!(out.len(), oracle.len());
    }
}
