use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fixed::Fixed;
use crate::model::{BinaryMarket, Friction, Mechanism, PlatformId};

/// `resolution_meta` key that overrides the table fee for one market, for
/// venues whose fees vary per listing.
pub const FEE_OVERRIDE_KEY: &str = "fee_fraction";

const MAX_FEE: Fixed = Fixed::from_micros(100_000);
const MAX_SPREAD: Fixed = Fixed::from_micros(50_000);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrictionError {
    #[error("no friction row for platform `{platform}` with mechanism `{mechanism}`")]
    Unknown {
        platform: PlatformId,
        mechanism: Mechanism,
    },
    #[error("{platform}/{mechanism}: fee {fee} outside [0, 0.10]")]
    FeeRange {
        platform: String,
        mechanism: Mechanism,
        fee: Fixed,
    },
    #[error("{platform}/{mechanism}: spread {spread} outside [0, 0.05]")]
    SpreadRange {
        platform: String,
        mechanism: Mechanism,
        spread: Fixed,
    },
    #[error("{0}")]
    Invalid(String),
    #[error("friction config: {0}")]
    Parse(String),
}

/// One line of the venue cost schedule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrictionRow {
    pub platform: String,
    pub mechanism: Mechanism,
    /// Fee as a fraction of notional paid.
    pub fee: Fixed,
    /// Full quoted bid–ask spread in price units.
    pub spread: Fixed,
    #[serde(default)]
    pub note: String,
}

impl FrictionRow {
    fn validate(&self) -> Result<(), FrictionError> {
        PlatformId::new(self.platform.clone()).map_err(|e| FrictionError::Invalid(e.to_string()))?;
        if self.fee < Fixed::ZERO || self.fee > MAX_FEE {
            return Err(FrictionError::FeeRange {
                platform: self.platform.clone(),
                mechanism: self.mechanism,
                fee: self.fee,
            });
        }
        if self.spread < Fixed::ZERO || self.spread > MAX_SPREAD {
            return Err(FrictionError::SpreadRange {
                platform: self.platform.clone(),
                mechanism: self.mechanism,
                spread: self.spread,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct FrictionFile {
    row: Vec<FrictionRow>,
}

/// Per `(platform, mechanism)` fee and spread assumptions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrictionModel {
    rows: BTreeMap<(String, Mechanism), FrictionRow>,
}

impl FrictionModel {
    pub fn new(rows: Vec<FrictionRow>) -> Result<Self, FrictionError> {
        let mut map = BTreeMap::new();
        for row in rows {
            row.validate()?;
            let key = (row.platform.clone(), row.mechanism);
            if map.insert(key, row.clone()).is_some() {
                return Err(FrictionError::Invalid(format!(
                    "duplicate row for {}/{}",
                    row.platform, row.mechanism
                )));
            }
        }
        Ok(FrictionModel { rows: map })
    }

    /// The conservative standardized schedule for the venues covered by the
    /// divergence analysis.
    pub fn reference() -> Self {
        let row = |platform: &str, mechanism, fee: &str, spread: &str, note: &str| FrictionRow {
            platform: platform.into(),
            mechanism,
            fee: fee.parse().unwrap(),
            spread: spread.parse().unwrap(),
            note: note.into(),
        };
        FrictionModel::new(vec![
            row("kalshi", Mechanism::Clob, "0.015", "0.01", "Dynamic fee schedule; conservatively fixed at 1.5%"),
            row("polymarket", Mechanism::Clob, "0", "0.01", "$0.01 within 0.01-0.99; $0.001 spread assumed near bounds"),
            row("polymarket", Mechanism::Cpmm, "0.02", "0", ""),
            row("futuur", Mechanism::Hybrid, "0.06", "0.01", "CLOB + LMSR"),
            row("omen", Mechanism::Cpmm, "0.02", "0", ""),
            row("myriad", Mechanism::Cpmm, "0.02", "0", "Market-specific fees 0-2%; per-market override via fee_fraction"),
            row("truemarkets", Mechanism::Cpmm, "0.008", "0", "AMM (Uniswap v3)"),
            row("limitless", Mechanism::Cpmm, "0.015", "0", "Fees range 0.03-3%; conservatively fixed at 1.5%"),
        ])
        .expect("reference schedule is valid")
    }

    /// Uniform fee/spread for every venue; useful for synthetic scenarios.
    pub fn flat(platforms: &[(&str, Mechanism)], fee: Fixed, spread: Fixed) -> Result<Self, FrictionError> {
        FrictionModel::new(
            platforms
                .iter()
                .map(|(p, m)| FrictionRow {
                    platform: (*p).into(),
                    mechanism: *m,
                    fee,
                    spread,
                    note: String::new(),
                })
                .collect(),
        )
    }

    pub fn from_toml(text: &str) -> Result<Self, FrictionError> {
        let file: FrictionFile = toml::from_str(text).map_err(|e| FrictionError::Parse(e.to_string()))?;
        FrictionModel::new(file.row)
    }

    pub fn to_toml(&self) -> String {
        let file = FrictionFile {
            row: self.rows.values().cloned().collect(),
        };
        toml::to_string(&file).expect("friction rows serialize")
    }

    pub fn rows(&self) -> impl Iterator<Item = &FrictionRow> {
        self.rows.values()
    }

    /// Exact `(platform, mechanism)` row; a CLOB or LMSR listing on a venue
    /// that only has a hybrid row uses the hybrid row.
    pub fn row_for(&self, platform: &PlatformId, mechanism: Mechanism) -> Result<&FrictionRow, FrictionError> {
        let key = platform.as_str().to_string();
        self.rows
            .get(&(key.clone(), mechanism))
            .or_else(|| match mechanism {
                Mechanism::Clob | Mechanism::Lmsr => self.rows.get(&(key, Mechanism::Hybrid)),
                _ => None,
            })
            .ok_or_else(|| FrictionError::Unknown {
                platform: platform.clone(),
                mechanism,
            })
    }

    /// Per-leg friction `fee · price_paid + spread / 2`.
    ///
    /// `price_paid` is the mid price of the leg being bought; without a quote
    /// the fee is charged on a full unit. An observed book half-spread replaces
    /// the table spread when available. Fee products round up.
    pub fn friction_for(
        &self,
        market: &BinaryMarket,
        price_paid: Option<Fixed>,
        observed_half_spread: Option<Fixed>,
    ) -> Result<Friction, FrictionError> {
        let row = self.row_for(market.platform(), market.mechanism)?;
        let fee = match market.resolution_meta.get(FEE_OVERRIDE_KEY) {
            Some(raw) => {
                let fee: Fixed = raw
                    .parse()
                    .map_err(|e| FrictionError::Invalid(format!("{}: {FEE_OVERRIDE_KEY}: {e}", market.id)))?;
                if fee < Fixed::ZERO || fee > MAX_FEE {
                    return Err(FrictionError::FeeRange {
                        platform: market.platform().to_string(),
                        mechanism: market.mechanism,
                        fee,
                    });
                }
                fee
            }
            None => row.fee,
        };
        let price = price_paid.unwrap_or(Fixed::ONE);
        if price < Fixed::ZERO || price > Fixed::ONE {
            return Err(FrictionError::Invalid(format!("price paid {price} outside [0, 1]")));
        }
        let half_spread = match observed_half_spread {
            Some(h) if h.is_negative() => {
                return Err(FrictionError::Invalid(format!("negative half-spread {h}")))
            }
            Some(h) => h,
            None => row.spread.half_ceil(),
        };
        Friction::new(fee.mul_ceil(price) + half_spread).map_err(|e| FrictionError::Invalid(e.to_string()))
    }
}
