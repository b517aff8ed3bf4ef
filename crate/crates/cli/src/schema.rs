//! JSON input files and their conversion into engine types.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use superhedge::{ConvexFn, MarketSpec, OrderedMarket, PayoffSpec, PiecewiseLinear};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetFile {
    pub name: String,
    pub s0: f64,
    pub down: f64,
    pub up: f64,
}

/// Market file. Assets are listed in external order; `cash_s0` is the
/// initial price of the riskless asset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketFile {
    pub rate_factor: f64,
    pub num_steps: usize,
    pub assets: Vec<AssetFile>,
    pub cash_s0: f64,
}

impl MarketFile {
    pub fn to_market(&self) -> Result<OrderedMarket> {
        if self.assets.is_empty() {
            bail!("market needs at least one risky asset");
        }
        let mut initial_prices = vec![self.cash_s0];
        initial_prices.extend(self.assets.iter().map(|a| a.s0));
        let spec = MarketSpec {
            rate_factor: self.rate_factor,
            num_assets: self.assets.len(),
            num_steps: self.num_steps,
            initial_prices,
            down_factors: self.assets.iter().map(|a| a.down).collect(),
            up_factors: self.assets.iter().map(|a| a.up).collect(),
        };
        Ok(OrderedMarket::new(spec)?)
    }

    pub fn asset_names(&self) -> Vec<String> {
        std::iter::once("cash".to_string()).chain(self.assets.iter().map(|a| a.name.clone())).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ConvexFile {
    Call,
    Put,
    Identity,
    Pwl { knots: Vec<f64>, slopes: Vec<f64>, value_at_first_knot: f64 },
}

impl ConvexFile {
    fn to_convex(&self) -> Result<ConvexFn> {
        Ok(match self {
            ConvexFile::Call => ConvexFn::Call,
            ConvexFile::Put => ConvexFn::Put,
            ConvexFile::Identity => ConvexFn::Identity,
            ConvexFile::Pwl { knots, slopes, value_at_first_knot } => {
                ConvexFn::PiecewiseLinear(PiecewiseLinear::new(knots.clone(), slopes.clone(), *value_at_first_knot)?)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasketCall {
    pub weights: Vec<f64>,
    pub strike: f64,
}

/// Payoff file: either explicit `gamma` and `h`, or the basket-call shorthand
/// `{"basket_call": {"weights", "strike"}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PayoffFile {
    Explicit { gamma: Vec<f64>, h: ConvexFile },
    Basket { basket_call: BasketCall },
}

impl PayoffFile {
    pub fn to_payoff(&self, market: &OrderedMarket) -> Result<PayoffSpec> {
        let payoff = match self {
            PayoffFile::Explicit { gamma, h } => PayoffSpec::new(gamma.clone(), h.to_convex()?)?,
            PayoffFile::Basket { basket_call } => {
                PayoffSpec::basket_call(market, &basket_call.weights, basket_call.strike)?
            }
        };
        if payoff.gamma().len() != market.num_assets() + 1 {
            bail!(
                "payoff has {} coefficients, market needs {} (cash plus {} assets)",
                payoff.gamma().len(),
                market.num_assets() + 1,
                market.num_assets()
            );
        }
        Ok(payoff)
    }

    fn from_value(value: serde_json::Value) -> Result<Self> {
        // dispatch by key so serde reports the real field error instead of
        // "did not match any variant"
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Explicit {
            gamma: Vec<f64>,
            h: ConvexFile,
        }
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Basket {
            basket_call: BasketCall,
        }
        if value.get("basket_call").is_some() {
            let b: Basket = serde_json::from_value(value)?;
            Ok(PayoffFile::Basket { basket_call: b.basket_call })
        } else {
            let e: Explicit = serde_json::from_value(value)?;
            Ok(PayoffFile::Explicit { gamma: e.gamma, h: e.h })
        }
    }
}

pub fn parse_market(text: &str) -> Result<MarketFile> {
    Ok(serde_json::from_str(text)?)
}

pub fn parse_payoff(text: &str) -> Result<PayoffFile> {
    PayoffFile::from_value(serde_json::from_str(text)?)
}

pub fn read_market(path: &Path) -> Result<MarketFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_market(&text).with_context(|| format!("parsing market file {}", path.display()))
}

pub fn read_payoff(path: &Path) -> Result<PayoffFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_payoff(&text).with_context(|| format!("parsing payoff file {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use superhedge::{cmax, WorldState};

    const MARKET: &str = r#"{
        "rate_factor": 1.0,
        "num_steps": 2,
        "assets": [
            {"name": "A", "s0": 100.0, "down": 0.8, "up": 1.1},
            {"name": "B", "s0": 100.0, "down": 0.9, "up": 1.2}
        ],
        "cash_s0": 100.0
    }"#;

    #[test]
    fn basket_shorthand_matches_explicit() {
        let market = parse_market(MARKET).unwrap().to_market().unwrap();
        let explicit = parse_payoff(r#"{"gamma": [-1, 0.5, 0.5], "h": {"type": "call"}}"#).unwrap();
        let basket = parse_payoff(r#"{"basket_call": {"weights": [0.5, 0.5], "strike": 100}}"#).unwrap();
        assert_eq!(explicit.to_payoff(&market).unwrap().gamma(), basket.to_payoff(&market).unwrap().gamma());
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let file = parse_market(MARKET).unwrap();
        let payoff_text = r#"{"gamma": [-0.3, 0.1, 0.7],
            "h": {"type": "pwl", "knots": [-1.5, 0.25, 3.0], "slopes": [-0.3, 1.1], "value_at_first_knot": 0.7}}"#;
        let payoff = parse_payoff(payoff_text).unwrap();
        let file2 = parse_market(&serde_json::to_string(&file).unwrap()).unwrap();
        let payoff2 = parse_payoff(&serde_json::to_string(&payoff).unwrap()).unwrap();
        assert_eq!(file, file2);
        assert_eq!(payoff, payoff2);
        let (m1, m2) = (file.to_market().unwrap(), file2.to_market().unwrap());
        let a = cmax(&m1, &payoff.to_payoff(&m1).unwrap(), &WorldState::root()).unwrap();
        let b = cmax(&m2, &payoff2.to_payoff(&m2).unwrap(), &WorldState::root()).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn rejects_unknown_fields_and_bad_types() {
        assert!(parse_market(&MARKET.replace("cash_s0", "cash")).is_err());
        let err = parse_payoff(r#"{"gamma": [1, 0], "h": {"type": "cubic"}}"#).unwrap_err();
        assert!(format!("{err:#}").contains("cubic"));
        let market = parse_market(MARKET).unwrap().to_market().unwrap();
        let short = parse_payoff(r#"{"gamma": [1, 0], "h": {"type": "call"}}"#).unwrap();
        assert!(short.to_payoff(&market).is_err());
    }
}
