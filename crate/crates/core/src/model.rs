//! Domain types of the cross-venue market model and the parity arithmetic every
//! detector shares.
//!
//! A market is a binary claim: YES pays one unit when its condition holds at
//! resolution, NO pays one unit otherwise. Markets of one event are indicators
//! over a finite atomic outcome space; a market's YES-region is the set of atoms
//! on which it resolves YES, stored as a bitset.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::fixed::Fixed;

pub type Timestamp = DateTime<Utc>;

/// Largest atomic outcome space a [`Region`] can index.
pub const MAX_ATOMS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("price {0} outside [0, 1]")]
    PriceOutOfRange(Fixed),
    #[error("friction {0} is negative")]
    NegativeFriction(Fixed),
    #[error("invalid platform id `{0}`: expected a non-empty lowercase token")]
    InvalidPlatform(String),
    #[error("invalid market id `{0}`: expected `platform:local-id`")]
    InvalidMarketId(String),
    #[error("category {0} outside 1..=20")]
    InvalidCategory(i64),
    #[error("outcome space needs between 2 and {MAX_ATOMS} atoms, got {0}")]
    AtomCount(usize),
    #[error("duplicate atom label `{0}`")]
    DuplicateAtom(String),
    #[error("region over {region} atoms used with a space of {space} atoms")]
    RegionLength { region: usize, space: usize },
    #[error("atom index {index} out of range for {len} atoms")]
    AtomIndex { index: usize, len: usize },
    #[error("market {market}: {reason}")]
    InvalidMarket { market: MarketId, reason: String },
    #[error("quotes for {0} are not strictly increasing in time")]
    UnorderedQuotes(MarketId),
}

/// Price-formation mechanism of a venue listing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    Clob,
    Cpmm,
    Lmsr,
    Hybrid,
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mechanism::Clob => "clob",
            Mechanism::Cpmm => "cpmm",
            Mechanism::Lmsr => "lmsr",
            Mechanism::Hybrid => "hybrid",
        })
    }
}

impl FromStr for Mechanism {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "clob" => Ok(Mechanism::Clob),
            "cpmm" => Ok(Mechanism::Cpmm),
            "lmsr" => Ok(Mechanism::Lmsr),
            "hybrid" => Ok(Mechanism::Hybrid),
            other => Err(format!("unknown mechanism `{other}`")),
        }
    }
}

/// Venue token such as `kalshi` or `polymarket`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlatformId(String);

impl PlatformId {
    pub fn new(id: impl Into<String>) -> Result<Self, ModelError> {
        let id = id.into();
        let valid = !id.is_empty()
            && id
                .bytes()
                .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_' || b == b'-');
        if valid {
            Ok(PlatformId(id))
        } else {
            Err(ModelError::InvalidPlatform(id))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PlatformId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventId(pub String);

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Corpus-wide market identifier, written `platform:local-id`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MarketId {
    platform: PlatformId,
    local: String,
}

impl MarketId {
    pub fn new(platform: PlatformId, local: impl Into<String>) -> Result<Self, ModelError> {
        let local = local.into();
        if local.is_empty() {
            return Err(ModelError::InvalidMarketId(format!("{platform}:")));
        }
        Ok(MarketId { platform, local })
    }

    pub fn platform(&self) -> &PlatformId {
        &self.platform
    }

    pub fn local(&self) -> &str {
        &self.local
    }
}

impl fmt::Display for MarketId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.platform, self.local)
    }
}

impl FromStr for MarketId {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (platform, local) = s
            .split_once(':')
            .ok_or_else(|| ModelError::InvalidMarketId(s.to_string()))?;
        MarketId::new(PlatformId::new(platform)?, local)
    }
}

impl Serialize for MarketId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MarketId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Topic category on the 20-way taxonomy used for blocking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "u8")]
pub struct CategoryId(u8);

impl CategoryId {
    pub const SPORTS: CategoryId = CategoryId(17);
    pub const GAMING: CategoryId = CategoryId(18);

    pub fn new(value: i64) -> Result<Self, ModelError> {
        if (1..=20).contains(&value) {
            Ok(CategoryId(value as u8))
        } else {
            Err(ModelError::InvalidCategory(value))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = CategoryId> {
        (1..=20).map(CategoryId)
    }
}

impl TryFrom<i64> for CategoryId {
    type Error = ModelError;
    fn try_from(value: i64) -> Result<Self, Self::Error> {
        CategoryId::new(value)
    }
}

impl From<CategoryId> for u8 {
    fn from(c: CategoryId) -> u8 {
        c.0
    }
}

impl fmt::Display for CategoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One venue-listed YES/NO claim.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMarket {
    pub id: MarketId,
    pub event: EventId,
    pub title: String,
    pub description: String,
    pub category: Option<CategoryId>,
    pub mechanism: Mechanism,
    pub open_time: Timestamp,
    pub close_time: Timestamp,
    pub resolution_time: Timestamp,
    pub volume_usd: Fixed,
    pub outcome_labels: (String, String),
    pub resolution_meta: BTreeMap<String, String>,
    /// Unrecognised record keys, carried through unchanged.
    pub extra: BTreeMap<String, serde_json::Value>,
}

/// `resolution_meta` flag marking a market as one outcome of a mutually
/// exclusive, exhaustive multi-market event.
pub const NEG_RISK_KEY: &str = "neg_risk";

impl BinaryMarket {
    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |reason: &str| ModelError::InvalidMarket {
            market: self.id.clone(),
            reason: reason.to_string(),
        };
        if self.open_time >= self.close_time {
            return Err(fail("open_time must precede close_time"));
        }
        if self.close_time > self.resolution_time {
            return Err(fail("close_time must not follow resolution_time"));
        }
        if self.volume_usd.is_negative() {
            return Err(fail("volume_usd is negative"));
        }
        Ok(())
    }

    pub fn platform(&self) -> &PlatformId {
        self.id.platform()
    }

    pub fn lifetime_days(&self) -> f64 {
        (self.close_time - self.open_time).num_milliseconds() as f64 / 86_400_000.0
    }

    pub fn is_neg_risk(&self) -> bool {
        self.resolution_meta
            .get(NEG_RISK_KEY)
            .is_some_and(|v| v.eq_ignore_ascii_case("true"))
    }

    /// Half-open validity window `[open, close)` overlap test.
    pub fn overlaps(&self, other: &BinaryMarket) -> bool {
        self.open_time < other.close_time && other.open_time < self.close_time
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriceQuote {
    pub t: Timestamp,
    pub p_yes: Fixed,
    pub p_no: Fixed,
}

impl PriceQuote {
    pub fn new(t: Timestamp, p_yes: Fixed, p_no: Fixed) -> Result<Self, ModelError> {
        check_price(p_yes)?;
        check_price(p_no)?;
        Ok(PriceQuote { t, p_yes, p_no })
    }

    pub fn price(&self, side: Side) -> Fixed {
        match side {
            Side::Yes => self.p_yes,
            Side::No => self.p_no,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub market: MarketId,
    pub quotes: Vec<PriceQuote>,
}

impl PriceSeries {
    pub fn new(market: MarketId, quotes: Vec<PriceQuote>) -> Result<Self, ModelError> {
        if quotes.windows(2).any(|w| w[0].t >= w[1].t) {
            return Err(ModelError::UnorderedQuotes(market));
        }
        Ok(PriceSeries { market, quotes })
    }

    /// Latest quote at or before `t` that is no older than `staleness`.
    pub fn quote_at(&self, t: Timestamp, staleness: chrono::Duration) -> Option<&PriceQuote> {
        let idx = self.quotes.partition_point(|q| q.t <= t);
        let quote = self.quotes.get(idx.checked_sub(1)?)?;
        (t - quote.t <= staleness).then_some(quote)
    }
}

/// One-sided, non-negative execution cost per leg, as a fraction of notional.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Friction(Fixed);

impl Friction {
    pub const ZERO: Friction = Friction(Fixed::ZERO);

    pub fn new(delta: Fixed) -> Result<Self, ModelError> {
        if delta.is_negative() {
            Err(ModelError::NegativeFriction(delta))
        } else {
            Ok(Friction(delta))
        }
    }

    pub fn value(self) -> Fixed {
        self.0
    }
}

impl fmt::Display for Friction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Side {
    Yes,
    No,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Yes => Side::No,
            Side::No => Side::Yes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Buy,
    Sell,
}

/// Mutually exclusive, collectively exhaustive outcomes of one event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeSpace {
    pub event: EventId,
    atoms: Vec<String>,
}

impl OutcomeSpace {
    pub fn new(event: EventId, atoms: Vec<String>) -> Result<Self, ModelError> {
        if atoms.len() < 2 || atoms.len() > MAX_ATOMS {
            return Err(ModelError::AtomCount(atoms.len()));
        }
        let mut seen = std::collections::HashSet::new();
        for atom in &atoms {
            if !seen.insert(atom.as_str()) {
                return Err(ModelError::DuplicateAtom(atom.clone()));
            }
        }
        Ok(OutcomeSpace { event, atoms })
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn full(&self) -> Region {
        Region::full(self.len())
    }
}

/// Subset of an outcome space, one bit per atom.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Region {
    bits: u64,
    len: u8,
}

impl Region {
    fn mask(len: usize) -> u64 {
        if len == MAX_ATOMS {
            u64::MAX
        } else {
            (1u64 << len) - 1
        }
    }

    pub fn from_bits(bits: u64, len: usize) -> Result<Self, ModelError> {
        if len == 0 || len > MAX_ATOMS {
            return Err(ModelError::AtomCount(len));
        }
        Ok(Region {
            bits: bits & Self::mask(len),
            len: len as u8,
        })
    }

    pub fn from_atoms(atoms: &[usize], len: usize) -> Result<Self, ModelError> {
        let mut bits = 0u64;
        for &index in atoms {
            if index >= len {
                return Err(ModelError::AtomIndex { index, len });
            }
            bits |= 1 << index;
        }
        Region::from_bits(bits, len)
    }

    pub fn empty(len: usize) -> Region {
        Region {
            bits: 0,
            len: len as u8,
        }
    }

    pub fn full(len: usize) -> Region {
        Region {
            bits: Self::mask(len),
            len: len as u8,
        }
    }

    pub fn bits(self) -> u64 {
        self.bits
    }

    pub fn len(self) -> usize {
        self.len as usize
    }

    pub fn count(self) -> u32 {
        self.bits.count_ones()
    }

    pub fn is_empty(self) -> bool {
        self.bits == 0
    }

    pub fn is_full(self) -> bool {
        self.bits == Self::mask(self.len())
    }

    /// Empty and full regions are only meaningful for degenerate test markets.
    pub fn is_degenerate(self) -> bool {
        self.is_empty() || self.is_full()
    }

    pub fn contains(self, atom: usize) -> bool {
        atom < self.len() && self.bits >> atom & 1 == 1
    }

    pub fn union(self, other: Region) -> Region {
        Region {
            bits: self.bits | other.bits,
            len: self.len,
        }
    }

    pub fn intersection(self, other: Region) -> Region {
        Region {
            bits: self.bits & other.bits,
            len: self.len,
        }
    }

    pub fn complement(self) -> Region {
        Region {
            bits: !self.bits & Self::mask(self.len()),
            len: self.len,
        }
    }

    pub fn is_subset_of(self, other: Region) -> bool {
        self.bits & !other.bits == 0
    }

    pub fn is_strict_subset_of(self, other: Region) -> bool {
        self.is_subset_of(other) && self.bits != other.bits
    }

    pub fn is_disjoint(self, other: Region) -> bool {
        self.bits & other.bits == 0
    }

    pub fn atoms(self) -> impl Iterator<Item = usize> {
        (0..self.len()).filter(move |&i| self.bits >> i & 1 == 1)
    }
}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text: String = (0..self.len())
            .map(|i| if self.contains(i) { '1' } else { '0' })
            .collect();
        write!(f, "Region({text})")
    }
}

/// Bit-string form, atom 0 first (e.g. `"0110"`).
impl Serialize for Region {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let text: String = (0..self.len())
            .map(|i| if self.contains(i) { '1' } else { '0' })
            .collect();
        serializer.serialize_str(&text)
    }
}

impl<'de> Deserialize<'de> for Region {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        let mut bits = 0u64;
        for (i, c) in text.chars().enumerate() {
            match c {
                '1' if i < MAX_ATOMS => bits |= 1 << i,
                '0' => {}
                _ => return Err(serde::de::Error::custom(format!("bad region `{text}`"))),
            }
        }
        Region::from_bits(bits, text.len()).map_err(serde::de::Error::custom)
    }
}

/// YES-region of one market over its event's outcome space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct YesRegion {
    pub market: MarketId,
    pub region: Region,
}

fn check_price(p: Fixed) -> Result<Fixed, ModelError> {
    if p < Fixed::ZERO || p > Fixed::ONE {
        Err(ModelError::PriceOutOfRange(p))
    } else {
        Ok(p)
    }
}

/// The YES price read as a probability. The model's reading is the identity map.
pub fn implied_probability(p_yes: Fixed) -> Result<Fixed, ModelError> {
    check_price(p_yes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdjustedPrice {
    pub raw: Fixed,
    pub clamped: Fixed,
    pub underflow: bool,
    pub overflow: bool,
}

/// `p + δ` for purchases, `p − δ` for sales; out-of-range results are clamped
/// to [0, 1] and flagged.
pub fn execution_adjusted_price(
    p: Fixed,
    delta: Friction,
    direction: Direction,
) -> Result<AdjustedPrice, ModelError> {
    check_price(p)?;
    let raw = match direction {
        Direction::Buy => p + delta.value(),
        Direction::Sell => p - delta.value(),
    };
    Ok(AdjustedPrice {
        raw,
        clamped: raw.clamp(Fixed::ZERO, Fixed::ONE),
        underflow: raw < Fixed::ZERO,
        overflow: raw > Fixed::ONE,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParityViolation {
    /// `p_yes + p_no < 1 − δ`: buying both sides locks in a profit.
    BuySide,
    /// `p_yes + p_no > 1 + δ`: selling both sides would lock in a profit.
    SellSide,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParityGap {
    /// `p_yes + p_no − 1`.
    pub gap: Fixed,
    pub violation: Option<ParityViolation>,
    /// `|gap| − δ` when violated, zero otherwise.
    pub profit: Fixed,
}

/// Checks the parity band `1 − δ ≤ p_yes + p_no ≤ 1 + δ`, where `δ` is the
/// one-sided friction of the whole two-leg position.
pub fn parity_gap(p_yes: Fixed, p_no: Fixed, delta: Friction) -> Result<ParityGap, ModelError> {
    check_price(p_yes)?;
    check_price(p_no)?;
    let gap = p_yes + p_no - Fixed::ONE;
    let band = delta.value();
    let violation = if gap < -band {
        Some(ParityViolation::BuySide)
    } else if gap > band {
        Some(ParityViolation::SellSide)
    } else {
        None
    };
    let profit = if violation.is_some() {
        gap.abs() - band
    } else {
        Fixed::ZERO
    };
    Ok(ParityGap {
        gap,
        violation,
        profit,
    })
}

/// True iff the union of `regions` is the whole space.
pub fn spans_outcome_space(regions: &[Region], space: &OutcomeSpace) -> Result<bool, ModelError> {
    let mut union = Region::empty(space.len());
    for region in regions {
        if region.len() != space.len() {
            return Err(ModelError::RegionLength {
                region: region.len(),
                space: space.len(),
            });
        }
        union = union.union(*region);
    }
    Ok(union.is_full())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fx(s: &str) -> Fixed {
        s.parse().unwrap()
    }

    fn friction(s: &str) -> Friction {
        Friction::new(fx(s)).unwrap()
    }

    fn space(k: usize) -> OutcomeSpace {
        OutcomeSpace::new(
            EventId("e".into()),
            (0..k).map(|i| format!("w{}", i + 1)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn implied_probability_is_identity() {
        for p in ["0.5", "0", "0.97"] {
            assert_eq!(implied_probability(fx(p)).unwrap(), fx(p));
        }
        assert_eq!(
            implied_probability(fx("1.2")),
            Err(ModelError::PriceOutOfRange(fx("1.2")))
        );
    }

    #[test]
    fn adjusted_price_examples() {
        let buy = execution_adjusted_price(fx("0.48"), friction("0.015"), Direction::Buy).unwrap();
        assert_eq!(buy.raw, fx("0.495"));
        assert!(!buy.underflow && !buy.overflow);

        let flat = execution_adjusted_price(fx("0.48"), Friction::ZERO, Direction::Buy).unwrap();
        assert_eq!(flat.clamped, fx("0.48"));

        let sell = execution_adjusted_price(fx("0.03"), friction("0.06"), Direction::Sell).unwrap();
        assert_eq!(sell.raw, fx("-0.03"));
        assert_eq!(sell.clamped, Fixed::ZERO);
        assert!(sell.underflow);

        let high = execution_adjusted_price(fx("0.99"), friction("0.02"), Direction::Buy).unwrap();
        assert_eq!(high.clamped, Fixed::ONE);
        assert!(high.overflow);
    }

    #[test]
    fn parity_gap_examples() {
        let fair = parity_gap(fx("0.6"), fx("0.4"), friction("0.01")).unwrap();
        assert_eq!(fair.gap, Fixed::ZERO);
        assert_eq!(fair.violation, None);

        let cheap = parity_gap(fx("0.45"), fx("0.45"), friction("0.02")).unwrap();
        assert_eq!(cheap.gap, fx("-0.10"));
        assert_eq!(cheap.violation, Some(ParityViolation::BuySide));
        assert_eq!(cheap.profit, fx("0.08"));

        let banded = parity_gap(fx("0.55"), fx("0.50"), friction("0.10")).unwrap();
        assert_eq!(banded.gap, fx("0.05"));
        assert_eq!(banded.violation, None);

        let rich = parity_gap(fx("0.60"), fx("0.50"), friction("0.02")).unwrap();
        assert_eq!(rich.violation, Some(ParityViolation::SellSide));
        assert_eq!(rich.profit, fx("0.08"));
    }

    #[test]
    fn parity_gap_at_band_edge_is_not_a_violation() {
        let edge = parity_gap(fx("0.49"), fx("0.49"), friction("0.02")).unwrap();
        assert_eq!(edge.violation, None);
    }

    #[test]
    fn span_examples() {
        let s = space(3);
        let r = |atoms: &[usize]| Region::from_atoms(atoms, 3).unwrap();
        assert!(spans_outcome_space(&[r(&[0]), r(&[1, 2])], &s).unwrap());
        assert!(!spans_outcome_space(&[r(&[0]), r(&[0, 1])], &s).unwrap());
        let wrong = Region::from_atoms(&[0], 4).unwrap();
        assert!(matches!(
            spans_outcome_space(&[wrong], &s),
            Err(ModelError::RegionLength { region: 4, space: 3 })
        ));
    }

    #[test]
    fn superset_yes_with_subset_no_spans_for_all_small_spaces() {
        // Set-algebra oracle: every (sub ⊂ super) pair over k ≤ 4 atoms.
        for k in 2..=4usize {
            let s = space(k);
            let n = 1u64 << k;
            for sub in 0..n {
                for sup in 0..n {
                    if sub & !sup != 0 || sub == sup {
                        continue;
                    }
                    let sub_r = Region::from_bits(sub, k).unwrap();
                    let sup_r = Region::from_bits(sup, k).unwrap();
                    assert!(spans_outcome_space(&[sup_r, sub_r.complement()], &s).unwrap());
                }
            }
        }
    }

    #[test]
    fn span_matches_brute_force_union_exhaustively() {
        for k in 2..=3usize {
            let s = space(k);
            let n = 1u64 << k;
            for a in 0..n {
                for b in 0..n {
                    let ra = Region::from_bits(a, k).unwrap();
                    let rb = Region::from_bits(b, k).unwrap();
                    let covered = (0..k).all(|atom| ra.contains(atom) || rb.contains(atom));
                    assert_eq!(spans_outcome_space(&[ra, rb], &s).unwrap(), covered);
                }
            }
        }
    }

    #[test]
    fn outcome_space_validation() {
        assert_eq!(
            OutcomeSpace::new(EventId("e".into()), vec!["a".into()]),
            Err(ModelError::AtomCount(1))
        );
        assert_eq!(
            OutcomeSpace::new(EventId("e".into()), vec!["a".into(), "a".into()]),
            Err(ModelError::DuplicateAtom("a".into()))
        );
        assert!(Region::from_bits(1, 65).is_err());
        let full64 = Region::full(64);
        assert!(full64.is_full());
        assert_eq!(full64.complement(), Region::empty(64));
    }

    #[test]
    fn identifiers() {
        let id: MarketId = "kalshi:PRES-24:DJT".parse().unwrap();
        assert_eq!(id.platform().as_str(), "kalshi");
        assert_eq!(id.local(), "PRES-24:DJT");
        assert!("Kalshi:x".parse::<MarketId>().is_err());
        assert!("kalshi".parse::<MarketId>().is_err());
        assert!(CategoryId::new(0).is_err());
        assert!(CategoryId::new(21).is_err());
        let region: Region = serde_json::from_str("\"0110\"").unwrap();
        assert_eq!(region, Region::from_atoms(&[1, 2], 4).unwrap());
        assert_eq!(serde_json::to_string(&region).unwrap(), "\"0110\"");
    }

    proptest! {
        #[test]
        fn parity_gap_swap_symmetric(y in 0i64..=1_000_000, n in 0i64..=1_000_000, d in 0i64..100_000) {
            let (y, n, d) = (Fixed::from_micros(y), Fixed::from_micros(n), Friction::new(Fixed::from_micros(d)).unwrap());
            prop_assert_eq!(parity_gap(y, n, d).unwrap(), parity_gap(n, y, d).unwrap());
        }

        #[test]
        fn zero_friction_adjustment_is_identity(p in 0i64..=1_000_000) {
            let p = Fixed::from_micros(p);
            for dir in [Direction::Buy, Direction::Sell] {
                let adj = execution_adjusted_price(p, Friction::ZERO, dir).unwrap();
                prop_assert_eq!(adj.raw, p);
                prop_assert_eq!(adj.clamped, p);
            }
        }

        #[test]
        fn shifting_mass_between_sides_keeps_gap(p in 100_000i64..900_000, eps in 0i64..100_000) {
            let (y, n) = (Fixed::from_micros(p), Fixed::from_micros(1_000_000 - p));
            let e = Fixed::from_micros(eps);
            let before = parity_gap(y, n, Friction::ZERO).unwrap().gap;
            let after = parity_gap(y + e, n - e, Friction::ZERO).unwrap().gap;
            prop_assert_eq!(before, after);
        }
    }

    #[test]
    fn band_containment_over_price_grid() {
        // 10³ price pairs per friction level.
        for d in [0i64, 5_000, 15_000, 60_000] {
            let delta = Friction::new(Fixed::from_micros(d)).unwrap();
            for i in 0..32 {
                for j in 0..32 {
                    let y = Fixed::from_micros(i * 1_000_000 / 31);
                    let n = Fixed::from_micros(j * 1_000_000 / 31);
                    let result = parity_gap(y, n, delta).unwrap();
                    if (y + n - Fixed::ONE).abs() <= delta.value() {
                        assert_eq!(result.violation, None);
                    } else {
                        assert!(result.violation.is_some());
                    }
                }
            }
        }
    }
}
