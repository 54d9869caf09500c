use std::collections::{BTreeMap, BTreeSet};

use chrono::Duration;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Family, ScenarioSpec, SynthError, TruthSpace};
use crate::arbitrage::{scan_space, sort_opportunities, ArbitrageOpportunity, OpportunityKind, SpaceMember};
use crate::fixed::Fixed;
use crate::ingest::{Corpus, FrictionModel};
use crate::model::{EventId, MarketId, OutcomeSpace, PriceSeries, Side, Timestamp};
use crate::pipeline::{leg_quote, timeline, DetectPlan, PipelineError, QuoteBook, DEFAULT_STALENESS};

/// Lowest price a planted shift may leave on the side being bought.
const MIN_PRICE: Fixed = Fixed::from_micros(5_000);
const ATTEMPTS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantLeg {
    pub market: MarketId,
    pub side: Side,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantRecord {
    pub kind: OpportunityKind,
    pub space: String,
    pub legs: Vec<PlantLeg>,
    pub magnitude: Fixed,
    pub start: Timestamp,
    /// Exclusive.
    pub end: Timestamp,
    /// Bundle friction at the first planted quote.
    pub friction: Fixed,
}

type Bundle = Vec<(MarketId, Side)>;

fn bundles(kind: OpportunityKind, space: &TruthSpace) -> Vec<Bundle> {
    let members = &space.members;
    let mut out = Vec::new();
    match kind {
        OpportunityKind::Parity => {
            for m in members {
                out.push(vec![(m.market.clone(), Side::Yes), (m.market.clone(), Side::No)]);
            }
        }
        OpportunityKind::CrossConditional | OpportunityKind::SubsetSuperset => {
            for a in members {
                for b in members {
                    if a.market.platform() == b.market.platform() {
                        continue;
                    }
                    let (ra, rb) = (space.region(a), space.region(b));
                    let fits = match kind {
                        OpportunityKind::CrossConditional => ra == rb && a.market < b.market,
                        _ => rb.is_strict_subset_of(ra),
                    };
                    if fits {
                        out.push(vec![(a.market.clone(), Side::Yes), (b.market.clone(), Side::No)]);
                    }
                }
            }
        }
        OpportunityKind::NegRiskSingle | OpportunityKind::NegRiskCross => {
            let (Family::Winner, Some(base)) = (space.family, &space.baseline_platform) else {
                return out;
            };
            let listed: Vec<&MarketId> = members
                .iter()
                .filter(|m| m.market.platform().as_str() == base)
                .map(|m| &m.market)
                .collect();
            if kind == OpportunityKind::NegRiskSingle {
                out.push(listed.iter().map(|m| ((*m).clone(), Side::Yes)).collect());
                return out;
            }
            // Two to four outcomes swapped for a foreign listing of the same outcome.
            let foreign: Vec<Vec<&MarketId>> = (0..space.atoms.len())
                .map(|atom| {
                    members
                        .iter()
                        .filter(|m| m.region == [atom] && m.market.platform().as_str() != base)
                        .map(|m| &m.market)
                        .collect()
                })
                .collect();
            let swappable: Vec<usize> = (0..foreign.len()).filter(|&a| !foreign[a].is_empty()).collect();
            for mask in 1u32..(1 << swappable.len()) {
                let n = mask.count_ones() as usize;
                if !(2..=4).contains(&n) {
                    continue;
                }
                let mut legs: Vec<(MarketId, Side)> = listed.iter().map(|m| ((*m).clone(), Side::Yes)).collect();
                for (bit, &atom) in swappable.iter().enumerate() {
                    if mask & (1 << bit) != 0 {
                        legs[atom] = (foreign[atom][0].clone(), Side::Yes);
                    }
                }
                out.push(legs);
            }
        }
    }
    out
}

/// Per-leg shift; the first leg absorbs the remainder.
fn shares(magnitude: Fixed, legs: usize) -> Vec<Fixed> {
    let each = magnitude.micros() / legs as i64;
    let mut v = vec![Fixed::from_micros(each); legs];
    v[0] = v[0] + Fixed::from_micros(magnitude.micros() - each * legs as i64);
    v
}

fn price_of(quote: (Fixed, Fixed), side: Side) -> Fixed {
    match side {
        Side::Yes => quote.0,
        Side::No => quote.1,
    }
}

/// Per-leg shifts at quote `j` that bring the bundle's gross cost to exactly
/// `magnitude` below its unit payoff.
fn amounts_at(table: &BTreeMap<MarketId, Vec<(Fixed, Fixed)>>, legs: &Bundle, j: usize, magnitude: Fixed) -> Vec<Fixed> {
    let cost: Fixed = legs.iter().map(|(m, side)| price_of(table[m][j], *side)).sum();
    shares(cost - (Fixed::ONE - magnitude), legs.len())
}

/// Lowers each leg's bought side; the opposite side rises by the same amount
/// so the market stays parity-consistent. Parity plants lower both sides.
fn shift(quote: &mut (Fixed, Fixed), side: Side, by: Fixed, parity: bool) {
    let (bought, other) = match side {
        Side::Yes => (&mut quote.0, &mut quote.1),
        Side::No => (&mut quote.1, &mut quote.0),
    };
    *bought = *bought - by;
    if !parity {
        *other = *other + by;
    }
}

pub(super) fn apply_plants(
    spec: &ScenarioSpec,
    spaces: &[TruthSpace],
    corpus: &Corpus,
    frictions: &FrictionModel,
    table: &mut BTreeMap<MarketId, Vec<(Fixed, Fixed)>>,
    rng: &mut ChaCha8Rng,
    warnings: &mut Vec<String>,
) -> Result<(Vec<PlantRecord>, BTreeSet<usize>), SynthError> {
    let mut touched = BTreeSet::new();
    let mut records = Vec::new();
    let count = spec.quote_count;
    for (i, p) in spec.plants.iter().enumerate() {
        let steps = ((p.duration_mins * 60 + spec.quote_step_secs - 1) / spec.quote_step_secs).clamp(1, count as i64) as usize;
        let options: Vec<(usize, Bundle)> = spaces
            .iter()
            .enumerate()
            .filter(|(s, _)| !touched.contains(s))
            .flat_map(|(s, space)| bundles(p.kind, space).into_iter().map(move |b| (s, b)))
            .collect();
        let parity = p.kind == OpportunityKind::Parity;
        let mut placed = None;
        for _ in 0..ATTEMPTS.min(options.len() * 4) {
            let (s, legs) = &options[rng.gen_range(0..options.len())];
            let start = rng.gen_range(0..=count - steps);
            let amounts: Vec<Vec<Fixed>> = (start..start + steps).map(|j| amounts_at(table, legs, j, p.magnitude)).collect();
            let fits = amounts.iter().enumerate().all(|(off, row)| {
                row.iter()
                    .zip(legs)
                    .all(|(by, (m, side))| by.is_positive() && price_of(table[m][start + off], *side) - *by >= MIN_PRICE)
            });
            if fits {
                placed = Some((*s, legs.clone(), start, amounts));
                break;
            }
        }
        let Some((s, legs, start, amounts)) = placed else {
            warnings.push(format!("plant {i} ({:?}): no eligible bundle found; skipped", p.kind));
            continue;
        };
        for (off, row) in amounts.iter().enumerate() {
            for ((m, side), by) in legs.iter().zip(row) {
                shift(&mut table.get_mut(m).expect("priced")[start + off], *side, *by, parity);
            }
        }
        let mut friction = Fixed::ZERO;
        for (m, side) in &legs {
            let market = corpus.get(m).expect("generated market");
            let price = price_of(table[m][start], *side);
            friction = friction + frictions.friction_for(market, Some(price), None).map_err(PipelineError::from)?.value();
        }
        if p.magnitude <= friction {
            warnings.push(format!(
                "plant {i} ({:?}): magnitude {} does not exceed bundle friction {friction}; undetectable by design",
                p.kind, p.magnitude
            ));
        }
        let step = Duration::seconds(spec.quote_step_secs);
        touched.insert(s);
        records.push(PlantRecord {
            kind: p.kind,
            space: spaces[s].event.clone(),
            legs: legs.into_iter().map(|(market, side)| PlantLeg { market, side }).collect(),
            magnitude: p.magnitude,
            start: spec.start + step * start as i32,
            end: spec.start + step * (start + steps) as i32,
            friction,
        });
    }
    Ok((records, touched))
}

/// Everything an exhaustive scan of the planted spaces finds that detection
/// driven by `plan` can reach, at every quote time.
pub(super) fn compute_ledger(
    corpus: &Corpus,
    prices: &[PriceSeries],
    spaces: &[&TruthSpace],
    plan: &DetectPlan,
    frictions: &FrictionModel,
) -> Result<Vec<ArbitrageOpportunity>, SynthError> {
    let equivalent: BTreeSet<(&MarketId, &MarketId)> = plan.equivalent.iter().map(|(a, b)| (a, b)).collect();
    let subsets: BTreeSet<(&MarketId, &MarketId)> = plan.subsets.iter().map(|(a, b)| (a, b)).collect();
    let partitions: BTreeSet<BTreeSet<&MarketId>> = plan.partitions.iter().map(|p| p.markets()).collect();
    let reachable = |o: &ArbitrageOpportunity| -> bool {
        let markets: BTreeSet<&MarketId> = o.legs.iter().map(|l| &l.market).collect();
        match o.kind {
            OpportunityKind::Parity => true,
            OpportunityKind::CrossConditional => {
                let (a, b) = (&o.legs[0].market, &o.legs[1].market);
                equivalent.contains(&(a.min(b), a.max(b)))
            }
            OpportunityKind::SubsetSuperset => {
                let sup = o.legs.iter().find(|l| l.side == Side::Yes).map(|l| &l.market);
                let sub = o.legs.iter().find(|l| l.side == Side::No).map(|l| &l.market);
                matches!((sub, sup), (Some(s), Some(p)) if subsets.contains(&(s, p)))
            }
            OpportunityKind::NegRiskSingle | OpportunityKind::NegRiskCross => partitions.contains(&markets),
        }
    };

    let book = QuoteBook::new(prices, DEFAULT_STALENESS);
    let mut out = Vec::new();
    for space in spaces {
        let outcome = OutcomeSpace::new(EventId(space.event.clone()), space.atoms.clone()).map_err(PipelineError::from)?;
        for t in timeline(prices) {
            let mut members = Vec::new();
            for m in &space.members {
                if let Some(q) = book.at(&m.market, t) {
                    let market = corpus.get(&m.market).expect("generated market");
                    members.push(SpaceMember {
                        region: space.region(m),
                        quote: leg_quote(market, q, frictions)?,
                    });
                }
            }
            if members.is_empty() {
                continue;
            }
            let found = scan_space(&outcome, &members, t).map_err(PipelineError::from)?;
            out.extend(found.into_iter().filter(|o| reachable(o)));
        }
    }
    sort_opportunities(&mut out);
    Ok(out)
}
