//! Stochastic order flow.
//!
//! Agents are zero-intelligence: each activation flips a fair coin for the
//! side, draws a limit price from a process anchored to the last executed
//! price, and draws a quantity. Six price processes and three quantity
//! processes combine with the two priority rules into 36 scenarios, labeled
//! like "MU U NY" (price, quantity, ranking).

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::book::{Order, PriorityRule, Side, Tick};
use crate::price::{Price, TickSize};

/// How a limit price is drawn around the last executed price `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PriceProcess {
    /// `N(p, sigma)`.
    Gaussian,
    /// `p * N(1, sigma)`.
    MultGaussian,
    /// `p * U[lo, hi]`.
    MultUniform,
    /// `p + N(0, sigma)`.
    AddGaussian,
    /// `p + U[lo, hi]`.
    AddUniform,
    /// `p * exp(delta * N(0, 1))`, always positive.
    Exponential,
}

impl PriceProcess {
    pub const ALL: [PriceProcess; 6] = [
        PriceProcess::Gaussian,
        PriceProcess::MultGaussian,
        PriceProcess::MultUniform,
        PriceProcess::AddGaussian,
        PriceProcess::AddUniform,
        PriceProcess::Exponential,
    ];

    pub fn acronym(self) -> &'static str {
        match self {
            PriceProcess::Gaussian => "G",
            PriceProcess::MultGaussian => "MG",
            PriceProcess::MultUniform => "MU",
            PriceProcess::AddGaussian => "AG",
            PriceProcess::AddUniform => "AU",
            PriceProcess::Exponential => "E",
        }
    }

    pub fn from_acronym(token: &str) -> Option<PriceProcess> {
        match token.to_ascii_uppercase().as_str() {
            "G" => Some(PriceProcess::Gaussian),
            "MG" => Some(PriceProcess::MultGaussian),
            "MU" => Some(PriceProcess::MultUniform),
            "AG" => Some(PriceProcess::AddGaussian),
            "AU" => Some(PriceProcess::AddUniform),
            "E" => Some(PriceProcess::Exponential),
            _ => None,
        }
    }
}

/// How an order's share count is drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QuantityProcess {
    /// Gaussian, redrawn until the raw value reaches 1, then rounded.
    Gaussian,
    /// Integer uniform over an inclusive range.
    Uniform,
    /// Always one share.
    Single,
}

impl QuantityProcess {
    pub const ALL: [QuantityProcess; 3] = [
        QuantityProcess::Gaussian,
        QuantityProcess::Uniform,
        QuantityProcess::Single,
    ];

    pub fn acronym(self) -> &'static str {
        match self {
            QuantityProcess::Gaussian => "G",
            QuantityProcess::Uniform => "U",
            QuantityProcess::Single => "S",
        }
    }

    pub fn from_acronym(token: &str) -> Option<QuantityProcess> {
        match token.to_ascii_uppercase().as_str() {
            "G" => Some(QuantityProcess::Gaussian),
            "U" => Some(QuantityProcess::Uniform),
            "S" => Some(QuantityProcess::Single),
            _ => None,
        }
    }
}

/// Distribution constants for the flow processes. The defaults are the
/// model's published constants; they are exposed for exploratory use only
/// and scenario labels always refer to the defaults.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    /// Standard deviation of the Gaussian price processes.
    pub price_sigma: f64,
    /// Multiplier range of the multiplicative-uniform price process.
    pub mult_uniform: (f64, f64),
    /// Offset range of the additive-uniform price process, in currency.
    pub add_uniform: (f64, f64),
    /// Log-scale deviation of the exponential price process.
    pub exp_deviation: f64,
    /// Mean of the Gaussian quantity process.
    pub quantity_mean: f64,
    /// Standard deviation of the Gaussian quantity process.
    pub quantity_sd: f64,
    /// Inclusive range of the uniform quantity process.
    pub quantity_range: (u32, u32),
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams {
            price_sigma: 0.2,
            mult_uniform: (0.5, 1.5),
            add_uniform: (-1.0, 1.0),
            exp_deviation: 0.02,
            quantity_mean: 2.0,
            quantity_sd: 50.0,
            quantity_range: (1, 100),
        }
    }
}

/// How many times a price draw is retried before the agent skips its turn.
pub const PRICE_REDRAW_ATTEMPTS: u32 = 100;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FlowError {
    #[error("last executed price must be positive, got {0} ticks")]
    NonPositiveLastPrice(i64),
}

/// Deterministic random source. A run derives independent substreams from
/// one seed, so unrelated consumers (agent decisions, activation shuffles)
/// never perturb each other's draws.
#[derive(Clone, Debug)]
pub struct SimRng(ChaCha8Rng);

impl SimRng {
    pub fn seeded(seed: u64) -> SimRng {
        SimRng(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn substream(seed: u64, stream: u64) -> SimRng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        SimRng(rng)
    }
}

impl RngCore for SimRng {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.0.try_fill_bytes(dest)
    }
}

/// Fair coin for the order side.
pub fn next_side<R: Rng + ?Sized>(rng: &mut R) -> Side {
    if rng.gen::<bool>() {
        Side::Buy
    } else {
        Side::Sell
    }
}

/// The deterministic part of a price draw: combine the last price with one
/// raw variate. For the Gaussian and exponential processes `draw` is a
/// standard normal; for the uniform processes it is the uniform variate
/// itself.
pub fn price_formula(process: PriceProcess, params: &FlowParams, p_last: f64, draw: f64) -> f64 {
    match process {
        PriceProcess::Gaussian | PriceProcess::AddGaussian => p_last + params.price_sigma * draw,
        PriceProcess::MultGaussian => p_last * (1.0 + params.price_sigma * draw),
        PriceProcess::MultUniform => p_last * draw,
        PriceProcess::AddUniform => p_last + draw,
        PriceProcess::Exponential => p_last * (params.exp_deviation * draw).exp(),
    }
}

/// Draw a limit price on the tick grid. Non-positive results are redrawn;
/// an agent that exhausts its attempts skips the turn (None).
pub fn next_price<R: Rng + ?Sized>(
    process: PriceProcess,
    params: &FlowParams,
    p_last: Price,
    tick_size: TickSize,
    rng: &mut R,
) -> Result<Option<Price>, FlowError> {
    if !p_last.is_positive() {
        return Err(FlowError::NonPositiveLastPrice(p_last.ticks()));
    }
    let p = tick_size.to_currency(p_last);
    for _ in 0..PRICE_REDRAW_ATTEMPTS {
        let draw: f64 = match process {
            PriceProcess::MultUniform => {
                let (lo, hi) = params.mult_uniform;
                Uniform::new_inclusive(lo, hi).sample(rng)
            }
            PriceProcess::AddUniform => {
                let (lo, hi) = params.add_uniform;
                Uniform::new_inclusive(lo, hi).sample(rng)
            }
            _ => StandardNormal.sample(rng),
        };
        let raw = price_formula(process, params, p, draw);
        if let Some(price) = tick_size.quantize(raw) {
            if price.is_positive() {
                return Ok(Some(price));
            }
        }
    }
    Ok(None)
}

/// Draw a share count. The Gaussian process redraws until the raw value
/// reaches 1 and then rounds to the nearest integer, so 1 is the minimum.
pub fn next_quantity<R: Rng + ?Sized>(
    process: QuantityProcess,
    params: &FlowParams,
    rng: &mut R,
) -> u32 {
    match process {
        QuantityProcess::Single => 1,
        QuantityProcess::Uniform => {
            let (lo, hi) = params.quantity_range;
            Uniform::new_inclusive(lo, hi).sample(rng)
        }
        QuantityProcess::Gaussian => loop {
            let draw: f64 = StandardNormal.sample(rng);
            let raw = params.quantity_mean + params.quantity_sd * draw;
            if raw >= 1.0 {
                break raw.round().min(u32::MAX as f64) as u32;
            }
        },
    }
}

/// One agent activation: side, price, quantity, in that draw order. Returns
/// None when the price draw fails and the agent skips the turn.
pub fn make_order<R: Rng + ?Sized>(
    scenario: Scenario,
    params: &FlowParams,
    p_last: Price,
    tick_size: TickSize,
    tick: Tick,
    rng: &mut R,
) -> Result<Option<Order>, FlowError> {
    let side = next_side(rng);
    let Some(price) = next_price(scenario.price, params, p_last, tick_size, rng)? else {
        return Ok(None);
    };
    let quantity = next_quantity(scenario.quantity, params, rng);
    let order =
        Order::limit(side, price, quantity, tick).expect("drawn orders satisfy order invariants");
    Ok(Some(order))
}

/// A (price process, quantity process, priority rule) combination.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scenario {
    pub price: PriceProcess,
    pub quantity: QuantityProcess,
    pub ranking: PriorityRule,
}

impl Scenario {
    pub fn new(price: PriceProcess, quantity: QuantityProcess, ranking: PriorityRule) -> Scenario {
        Scenario {
            price,
            quantity,
            ranking,
        }
    }

    /// Canonical label, e.g. "MU U NY".
    pub fn label(&self) -> String {
        format!(
            "{} {} {}",
            self.price.acronym(),
            self.quantity.acronym(),
            self.ranking.market_code()
        )
    }

    /// Label with underscores, safe for file names: "MU_U_NY".
    pub fn file_label(&self) -> String {
        self.label().replace(' ', "_")
    }

    /// All 36 combinations, price-major, in stable presentation order.
    pub fn all() -> Vec<Scenario> {
        let mut out = Vec::with_capacity(36);
        for price in PriceProcess::ALL {
            for quantity in QuantityProcess::ALL {
                for ranking in PriorityRule::ALL {
                    out.push(Scenario::new(price, quantity, ranking));
                }
            }
        }
        out
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScenarioParseError {
    #[error("expected 3 tokens `<price> <quantity> <ranking>`, got {got} in {input:?}")]
    TokenCount { got: usize, input: String },
    #[error("unknown price process `{0}` (expected one of G, MG, MU, AG, AU, E)")]
    UnknownPrice(String),
    #[error("unknown quantity process `{0}` (expected one of G, U, S)")]
    UnknownQuantity(String),
    #[error("unknown ranking `{0}` (expected one of MI, NY)")]
    UnknownRanking(String),
}

impl FromStr for Scenario {
    type Err = ScenarioParseError;

    fn from_str(s: &str) -> Result<Scenario, ScenarioParseError> {
        let tokens: Vec<&str> = s.split_whitespace().collect();
        let [price, quantity, ranking] = tokens.as_slice() else {
            return Err(ScenarioParseError::TokenCount {
                got: tokens.len(),
                input: s.to_string(),
            });
        };
        let price = PriceProcess::from_acronym(price)
            .ok_or_else(|| ScenarioParseError::UnknownPrice(price.to_string()))?;
        let quantity = QuantityProcess::from_acronym(quantity)
            .ok_or_else(|| ScenarioParseError::UnknownQuantity(quantity.to_string()))?;
        let ranking = PriorityRule::from_market_code(ranking)
            .ok_or_else(|| ScenarioParseError::UnknownRanking(ranking.to_string()))?;
        Ok(Scenario::new(price, quantity, ranking))
    }
}
