//! Seeded synthetic corpora: templated markets over known outcome spaces,
//! fair price paths with planted mispricings, and the resulting ground truth.

mod plant;
mod templates;

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use chrono::{DateTime, Duration};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::{build_relation_graph, RelationKind, RelationRecord, RuleVerifier, SemanticRelation};
use crate::arbitrage::{ArbitrageOpportunity, OpportunityKind, PartitionLimits};
use crate::fixed::Fixed;
use crate::ingest::{Corpus, CorpusError, FrictionModel};
use crate::model::{
    BinaryMarket, CategoryId, EventId, MarketId, Mechanism, PlatformId, PriceSeries, Region, Timestamp,
    NEG_RISK_KEY,
};
use crate::pipeline::{plan_detection, PipelineError};

pub use plant::PlantRecord;
use templates::{candidate, entity, render, shuffled, Theme, MAX_EVENTS, THEMES};

/// Venues available to scenarios, in the order `platforms` takes them.
pub const VENUES: [(&str, Mechanism); 7] = [
    ("kalshi", Mechanism::Clob),
    ("polymarket", Mechanism::Clob),
    ("omen", Mechanism::Cpmm),
    ("myriad", Mechanism::Cpmm),
    ("limitless", Mechanism::Cpmm),
    ("truemarkets", Mechanism::Cpmm),
    ("futuur", Mechanism::Hybrid),
];

/// Members of one outcome space are capped so exhaustive scans stay cheap.
const MAX_SPACE_MEMBERS: usize = 12;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid scenario: {0}")]
    Spec(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

/// Event shares; whatever is left over becomes negative-risk winner events.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationMix {
    /// Single yes/no questions listed on several venues.
    pub equivalent: f64,
    /// Threshold ladders.
    pub subset: f64,
    /// Near-duplicate questions about different dates.
    pub independent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSpec {
    pub kind: OpportunityKind,
    /// Shortfall of the bundle's gross cost below its payoff.
    pub magnitude: Fixed,
    pub duration_mins: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub platforms: usize,
    pub events_per_category: usize,
    /// Chance, per phrasing choice, of departing from the canonical wording.
    pub paraphrase_intensity: f64,
    pub relation_mix: RelationMix,
    pub plants: Vec<PlantSpec>,
    /// `reference` or `zero`.
    pub friction_profile: String,
    pub start: Timestamp,
    pub quote_step_secs: i64,
    pub quote_count: usize,
    /// Offsets each venue's quote grid by a few seconds.
    pub async_quotes: bool,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        let plant = |kind| PlantSpec {
            kind,
            magnitude: Fixed::from_micros(80_000),
            duration_mins: 120,
        };
        ScenarioSpec {
            seed: 1,
            platforms: 3,
            events_per_category: 3,
            paraphrase_intensity: 0.5,
            relation_mix: RelationMix {
                equivalent: 0.4,
                subset: 0.25,
                independent: 0.15,
            },
            plants: vec![
                plant(OpportunityKind::CrossConditional),
                plant(OpportunityKind::CrossConditional),
                plant(OpportunityKind::SubsetSuperset),
                plant(OpportunityKind::NegRiskSingle),
                plant(OpportunityKind::NegRiskCross),
                plant(OpportunityKind::Parity),
            ],
            friction_profile: "reference".into(),
            start: DateTime::from_timestamp(1_767_571_200, 0).expect("valid"),
            quote_step_secs: 1800,
            quote_count: 96,
            async_quotes: false,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let fail = |m: String| Err(SynthError::Spec(m));
        if !(2..=VENUES.len()).contains(&self.platforms) {
            return fail(format!("platforms must be in 2..={}", VENUES.len()));
        }
        if self.events_per_category == 0 || self.events_per_category * THEMES.len() > MAX_EVENTS {
            return fail(format!("events_per_category must be in 1..={}", MAX_EVENTS / THEMES.len()));
        }
        if !(0.0..=1.0).contains(&self.paraphrase_intensity) {
            return fail("paraphrase_intensity must be in [0, 1]".into());
        }
        let RelationMix {
            equivalent,
            subset,
            independent,
        } = self.relation_mix;
        if [equivalent, subset, independent].iter().any(|p| !(0.0..=1.0).contains(p))
            || equivalent + subset + independent > 1.0 + 1e-12
        {
            return fail("relation_mix shares must be non-negative and sum to at most 1".into());
        }
        if self.quote_step_secs <= 0 || self.quote_count < 2 {
            return fail("need a positive quote step and at least two quotes".into());
        }
        for p in &self.plants {
            if !p.magnitude.is_positive() || p.magnitude > Fixed::from_micros(500_000) || p.duration_mins <= 0 {
                return fail(format!("plant {p:?}: magnitude must be in (0, 0.5] and duration positive"));
            }
        }
        self.frictions().map(|_| ())
    }

    fn venues(&self) -> &'static [(&'static str, Mechanism)] {
        &VENUES[..self.platforms]
    }

    pub fn frictions(&self) -> Result<FrictionModel, SynthError> {
        match self.friction_profile.as_str() {
            "reference" => Ok(FrictionModel::reference()),
            "zero" => FrictionModel::flat(self.venues(), Fixed::ZERO, Fixed::ZERO).map_err(|e| SynthError::Spec(e.to_string())),
            other => Err(SynthError::Spec(format!("unknown friction profile `{other}`"))),
        }
    }

    fn step(&self) -> Duration {
        Duration::seconds(self.quote_step_secs)
    }

    fn price_end(&self) -> Timestamp {
        self.start + self.step() * (self.quote_count as i32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Binary,
    Ladder,
    Winner,
    Decoy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthMember {
    pub market: MarketId,
    /// Atom indices of the YES-region.
    pub region: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthSpace {
    pub event: String,
    pub family: Family,
    pub atoms: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_platform: Option<String>,
    pub members: Vec<TruthMember>,
}

impl TruthSpace {
    pub fn region(&self, member: &TruthMember) -> Region {
        Region::from_atoms(&member.region, self.atoms.len()).expect("generated in range")
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    pub spaces: Vec<TruthSpace>,
    /// Cross-venue relations, including known independent near-duplicates.
    pub relations: Vec<SemanticRelation>,
    pub plants: Vec<PlantRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum TruthRecord {
    Space(TruthSpace),
    Relation(RelationRecord),
    Plant(PlantRecord),
}

impl GroundTruth {
    /// Equivalent and subset relations only.
    pub fn true_relations(&self) -> Vec<SemanticRelation> {
        self.relations
            .iter()
            .filter(|r| r.kind != RelationKind::Independent)
            .cloned()
            .collect()
    }

    pub fn rule_verifier(&self) -> RuleVerifier {
        let mut regions = BTreeMap::new();
        for s in &self.spaces {
            for m in &s.members {
                regions.insert(m.market.clone(), (s.event.clone(), s.region(m)));
            }
        }
        RuleVerifier::new(regions)
    }

    pub fn write<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        let records = self
            .spaces
            .iter()
            .cloned()
            .map(TruthRecord::Space)
            .chain(self.relations.iter().map(|r| TruthRecord::Relation(r.into())))
            .chain(self.plants.iter().cloned().map(TruthRecord::Plant));
        for r in records {
            serde_json::to_writer(&mut writer, &r)?;
            writer.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self, String> {
        let mut out = GroundTruth::default();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| e.to_string())?;
            if line.trim().is_empty() {
                continue;
            }
            let at = |e: String| format!("line {}: {e}", i + 1);
            match serde_json::from_str(&line).map_err(|e| at(e.to_string()))? {
                TruthRecord::Space(s) => {
                    if s.members.iter().any(|m| Region::from_atoms(&m.region, s.atoms.len()).is_err()) {
                        return Err(at(format!("space {} has an out-of-range region", s.event)));
                    }
                    out.spaces.push(s)
                }
                TruthRecord::Relation(r) => out.relations.push(SemanticRelation::try_from(r).map_err(at)?),
                TruthRecord::Plant(p) => out.plants.push(p),
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub corpus: Corpus,
    pub prices: Vec<PriceSeries>,
    pub truth: GroundTruth,
    pub frictions: FrictionModel,
    /// Every opportunity a correct matcher and detector must report.
    pub ledger: Vec<ArbitrageOpportunity>,
    pub warnings: Vec<String>,
}

struct EventDraft {
    spaces: Vec<TruthSpace>,
    markets: Vec<BinaryMarket>,
    /// Per space, atom probabilities in 0.001 ticks at each grid step.
    paths: Vec<Vec<Vec<i64>>>,
}

const TICKS: i64 = 1000;
const MIN_ATOM_TICKS: i64 = 20;

fn event_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Random walk over a `k`-atom distribution; every atom stays at or above 0.02.
fn atom_path<R: Rng>(rng: &mut R, k: usize, steps: usize) -> Vec<Vec<i64>> {
    let weights: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=100)).collect();
    let spare = TICKS - MIN_ATOM_TICKS * k as i64;
    let total: i64 = weights.iter().sum();
    let mut p: Vec<i64> = weights.iter().map(|w| MIN_ATOM_TICKS + spare * w / total).collect();
    p[0] += TICKS - p.iter().sum::<i64>();
    let mut path = Vec::with_capacity(steps);
    for _ in 0..steps {
        path.push(p.clone());
        if rng.gen_bool(0.7) {
            let (from, to) = (rng.gen_range(0..k), rng.gen_range(0..k));
            let amount = rng.gen_range(1..=8);
            if from != to && p[from] - amount >= MIN_ATOM_TICKS {
                p[from] -= amount;
                p[to] += amount;
            }
        }
    }
    path
}

struct Listing<'a> {
    spec: &'a ScenarioSpec,
    theme: &'a Theme,
    event: String,
    open: Timestamp,
    close: Timestamp,
}

impl Listing<'_> {
    fn market<R: Rng>(&self, rng: &mut R, venue: usize, suffix: &str, title: String, description: String, neg_risk: bool) -> BinaryMarket {
        let (platform, mechanism) = VENUES[venue];
        let open = self.open + Duration::days(rng.gen_range(0..=3));
        let close = self.close - Duration::days(rng.gen_range(0..=2));
        let mut resolution_meta = BTreeMap::new();
        if neg_risk {
            resolution_meta.insert(NEG_RISK_KEY.to_string(), "true".to_string());
        }
        let market = BinaryMarket {
            id: MarketId::new(PlatformId::new(platform).expect("venue id"), format!("{}{suffix}", self.event)).expect("valid id"),
            event: EventId(self.event.clone()),
            title,
            description,
            category: Some(CategoryId::new(self.theme.category as i64).expect("taxonomy id")),
            mechanism,
            open_time: open,
            close_time: close,
            resolution_time: close + Duration::days(1),
            volume_usd: Fixed::from_int(rng.gen_range(500..=250_000)),
            outcome_labels: ("Yes".into(), "No".into()),
            resolution_meta,
            extra: BTreeMap::new(),
        };
        debug_assert!(market.open_time <= self.spec.start && market.resolution_time >= self.spec.price_end());
        market
    }
}

fn draft_event(spec: &ScenarioSpec, g: usize) -> EventDraft {
    let mut rng = event_rng(spec.seed, g as u64 + 1);
    let per = spec.events_per_category;
    let theme = &THEMES[g / per];
    let name = entity(theme.entity, (g + (spec.seed % MAX_EVENTS as u64) as usize * 131) % MAX_EVENTS);
    let event = format!("c{:02}e{:03}", theme.category, g % per);
    let close = spec.price_end() + Duration::days(rng.gen_range(5..=90));
    let listing = Listing {
        spec,
        theme,
        event: event.clone(),
        open: spec.start - Duration::days(rng.gen_range(10..=60)),
        close,
    };
    let date = close.date_naive();
    let intensity = spec.paraphrase_intensity;
    let venues: Vec<usize> = shuffled(&mut rng, &(0..spec.platforms).collect::<Vec<_>>());
    let listed = rng.gen_range(2..=spec.platforms);
    let chosen = &venues[..listed];

    let mix = spec.relation_mix;
    let u: f64 = rng.gen();
    let family = if u < mix.equivalent {
        Family::Binary
    } else if u < mix.equivalent + mix.subset {
        Family::Ladder
    } else if u < mix.equivalent + mix.subset + mix.independent {
        Family::Decoy
    } else {
        Family::Winner
    };

    let mut spaces = Vec::new();
    let mut markets = Vec::new();
    let mut push = |space: &mut TruthSpace, m: BinaryMarket, region: Vec<usize>| {
        space.members.push(TruthMember {
            market: m.id.clone(),
            region,
        });
        markets.push(m);
    };
    match family {
        Family::Binary => {
            let mut space = TruthSpace {
                event: event.clone(),
                family,
                atoms: vec!["yes".into(), "no".into()],
                baseline_platform: None,
                members: Vec::new(),
            };
            for &v in chosen {
                let p = render(&mut rng, theme.binary, &[("e", &name)], date, intensity);
                let m = listing.market(&mut rng, v, "b", p.title, p.description, false);
                push(&mut space, m, vec![0]);
            }
            spaces.push(space);
        }
        Family::Ladder => {
            let offset = rng.gen_range(0..=2);
            let xs: Vec<i64> = (0..3).map(|i| theme.ladder_base + theme.ladder_step * (i + offset)).collect();
            let mut atoms = vec![format!("below {}", xs[0])];
            atoms.extend(xs.windows(2).map(|w| format!("{} to {}", w[0], w[1])));
            atoms.push(format!("above {}", xs[2]));
            let mut space = TruthSpace {
                event: event.clone(),
                family,
                atoms,
                baseline_platform: None,
                members: Vec::new(),
            };
            for &v in chosen {
                let mut picks: Vec<usize> = (0..xs.len()).filter(|_| rng.gen_bool(0.6)).collect();
                if picks.is_empty() {
                    picks.push(rng.gen_range(0..xs.len()));
                }
                for i in picks {
                    let x = xs[i].to_string();
                    let p = render(&mut rng, theme.ladder, &[("e", &name), ("x", &x)], date, intensity);
                    let m = listing.market(&mut rng, v, &format!("l{i}"), p.title, p.description, false);
                    push(&mut space, m, (i + 1..=xs.len()).collect());
                }
            }
            spaces.push(space);
        }
        Family::Winner => {
            let n = rng.gen_range(3..=5);
            let names: Vec<String> = (0..n).map(|i| candidate(g, i)).collect();
            let baseline = chosen[0];
            let mut space = TruthSpace {
                event: event.clone(),
                family,
                atoms: names.clone(),
                baseline_platform: Some(VENUES[baseline].0.to_string()),
                members: Vec::new(),
            };
            for (i, c) in names.iter().enumerate() {
                let p = render(&mut rng, theme.winner, &[("e", &name), ("c", c)], date, intensity);
                let m = listing.market(&mut rng, baseline, &format!("w{i}"), p.title, p.description, true);
                push(&mut space, m, vec![i]);
            }
            for &v in &chosen[1..] {
                let mut picks: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.6)).collect();
                picks.truncate(n - 1);
                for i in picks {
                    if space.members.len() >= MAX_SPACE_MEMBERS {
                        break;
                    }
                    let p = render(&mut rng, theme.winner, &[("e", &name), ("c", &names[i])], date, intensity);
                    let m = listing.market(&mut rng, v, &format!("w{i}"), p.title, p.description, false);
                    push(&mut space, m, vec![i]);
                }
            }
            spaces.push(space);
        }
        Family::Decoy => {
            let x = (theme.ladder_base + theme.ladder_step * rng.gen_range(0..=3)).to_string();
            for (j, &v) in chosen.iter().enumerate() {
                let day = date - Duration::days(7 * j as i64);
                let p = render(&mut rng, theme.ladder, &[("e", &name), ("x", &x)], day, intensity);
                let m = listing.market(&mut rng, v, &format!("d{j}"), p.title, p.description, false);
                let mut space = TruthSpace {
                    event: format!("{event}-d{j}"),
                    family,
                    atoms: vec!["yes".into(), "no".into()],
                    baseline_platform: None,
                    members: Vec::new(),
                };
                push(&mut space, m, vec![0]);
                spaces.push(space);
            }
        }
    }
    let paths = spaces
        .iter()
        .map(|s| atom_path(&mut rng, s.atoms.len(), spec.quote_count))
        .collect();
    EventDraft { spaces, markets, paths }
}

/// Cross-venue relations implied by the spaces; decoys sharing an event are
/// recorded as independent.
fn truth_relations(spaces: &[TruthSpace]) -> Vec<SemanticRelation> {
    let mut out = Vec::new();
    for s in spaces {
        for (i, a) in s.members.iter().enumerate() {
            for b in &s.members[i + 1..] {
                if a.market.platform() == b.market.platform() {
                    continue;
                }
                let (ra, rb) = (s.region(a), s.region(b));
                let kind = if ra == rb {
                    SemanticRelation::equivalent(a.market.clone(), b.market.clone(), "truth")
                } else if ra.is_strict_subset_of(rb) {
                    SemanticRelation::subset(a.market.clone(), b.market.clone(), "truth")
                } else if rb.is_strict_subset_of(ra) {
                    SemanticRelation::subset(b.market.clone(), a.market.clone(), "truth")
                } else {
                    SemanticRelation::new(a.market.clone(), b.market.clone(), RelationKind::Independent, 1.0, "truth")
                };
                out.push(kind);
            }
        }
    }
    let decoys: Vec<(&str, &MarketId)> = spaces
        .iter()
        .filter(|s| s.family == Family::Decoy)
        .map(|s| (s.event.rsplit_once("-d").expect("decoy event").0, &s.members[0].market))
        .collect();
    for (i, (ea, a)) in decoys.iter().enumerate() {
        for (eb, b) in &decoys[i + 1..] {
            if ea == eb && a.platform() != b.platform() {
                out.push(SemanticRelation::new((*a).clone(), (*b).clone(), RelationKind::Independent, 1.0, "truth"));
            }
        }
    }
    out.sort_by(|x, y| (&x.a, &x.b).cmp(&(&y.a, &y.b)));
    out
}

/// Builds the corpus, price paths, plants and ledger for `spec`.
/// Identical specs give identical output.
pub fn generate(spec: &ScenarioSpec) -> Result<SynthOutput, SynthError> {
    spec.validate()?;
    let frictions = spec.frictions()?;
    let drafts: Vec<EventDraft> = (0..spec.events_per_category * THEMES.len())
        .into_par_iter()
        .map(|g| draft_event(spec, g))
        .collect();

    let mut spaces = Vec::new();
    let mut markets = Vec::new();
    let mut table: BTreeMap<MarketId, Vec<(Fixed, Fixed)>> = BTreeMap::new();
    for d in drafts {
        for (space, path) in d.spaces.iter().zip(&d.paths) {
            for m in &space.members {
                let quotes = path
                    .iter()
                    .map(|p| {
                        let yes: i64 = m.region.iter().map(|&a| p[a]).sum();
                        let p_yes = Fixed::from_micros(yes * 1000);
                        (p_yes, Fixed::ONE - p_yes)
                    })
                    .collect();
                table.insert(m.market.clone(), quotes);
            }
        }
        spaces.extend(d.spaces);
        markets.extend(d.markets);
    }
    let corpus = Corpus::new(markets)?;
    let relations = truth_relations(&spaces);

    let mut warnings = Vec::new();
    let mut plant_rng = event_rng(spec.seed, 0);
    let (plants, touched) = plant::apply_plants(spec, &spaces, &corpus, &frictions, &mut table, &mut plant_rng, &mut warnings)?;

    let offsets: BTreeMap<&str, Duration> = spec
        .venues()
        .iter()
        .enumerate()
        .map(|(i, (p, _))| (*p, Duration::seconds(if spec.async_quotes { 7 * i as i64 } else { 0 })))
        .collect();
    let prices: Vec<PriceSeries> = table
        .into_iter()
        .map(|(id, quotes)| {
            let offset = offsets[id.platform().as_str()];
            let quotes = quotes
                .into_iter()
                .enumerate()
                .map(|(s, (y, n))| {
                    let t = spec.start + spec.step() * (s as i32) + offset;
                    crate::model::PriceQuote::new(t, y, n).expect("prices in range")
                })
                .collect();
            PriceSeries::new(id, quotes).expect("grid is increasing")
        })
        .collect();

    let truth_graph = build_relation_graph(
        &relations
            .iter()
            .filter(|r| r.kind != RelationKind::Independent)
            .cloned()
            .collect::<Vec<_>>(),
    );
    let plan = plan_detection(&truth_graph, &corpus, PartitionLimits::default());
    let touched_spaces: Vec<&TruthSpace> = touched.iter().map(|&i| &spaces[i]).collect();
    let ledger = plant::compute_ledger(&corpus, &prices, &touched_spaces, &plan, &frictions)?;

    Ok(SynthOutput {
        corpus,
        prices,
        truth: GroundTruth {
            spaces,
            relations,
            plants,
        },
        frictions,
        ledger,
        warnings,
    })
}
