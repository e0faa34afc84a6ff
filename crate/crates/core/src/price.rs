//! Integer price grid.
//!
//! Every price in the simulator is a whole number of tick-size increments.
//! Keeping prices integral makes comparisons exact, lets the matching engine
//! use prices as map keys, and guarantees that output files render the same
//! bytes on every platform.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A price expressed as a signed count of tick-size increments.
///
/// Admissible order prices are strictly positive; zero and negative values
/// appear only transiently while quantizing raw draws, which are rejected
/// before they reach the book.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Price(pub i64);

impl Price {
    pub fn ticks(self) -> i64 {
        self.0
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    /// Absolute distance in ticks, for reference-price tie-breaks.
    pub fn distance(self, other: Price) -> i64 {
        (self.0 - other.0).abs()
    }
}

impl fmt::Display for Price {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}t", self.0)
    }
}

/// Bound on |ticks| accepted by quantization. Generous enough for any price
/// the simulator can reach, small enough that tick arithmetic (differences,
/// negation for sort keys) can never overflow an i64.
const MAX_ABS_TICKS: f64 = (i64::MAX / 4) as f64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PriceError {
    #[error("tick size must be a finite positive number, got {0}")]
    BadTickSize(f64),
}

/// The minimum price increment, in currency units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TickSize(f64);

impl TickSize {
    /// One hundredth of a currency unit, the default grid.
    pub const CENT: TickSize = TickSize(0.01);

    pub fn new(size: f64) -> Result<TickSize, PriceError> {
        if !size.is_finite() || size <= 0.0 {
            return Err(PriceError::BadTickSize(size));
        }
        Ok(TickSize(size))
    }

    pub fn size(self) -> f64 {
        self.0
    }

    /// Snap a raw currency amount to the grid, rounding halves away from
    /// zero. Returns None for values that are not finite or fall outside the
    /// representable range; callers treat that as a failed draw.
    pub fn quantize(self, value: f64) -> Option<Price> {
        if !value.is_finite() {
            return None;
        }
        let ticks = (value / self.0).round();
        if !ticks.is_finite() || ticks.abs() > MAX_ABS_TICKS {
            return None;
        }
        Some(Price(ticks as i64))
    }

    /// Price as a floating currency amount, for distribution draws keyed to
    /// the last executed price.
    pub fn to_currency(self, price: Price) -> f64 {
        price.0 as f64 * self.0
    }

    /// Render a price in currency units with exactly as many decimals as the
    /// grid needs. Decimal grids are formatted with integer arithmetic so the
    /// output is reproducible byte for byte.
    pub fn format(self, price: Price) -> String {
        if let Some(decimals) = self.decimal_places() {
            let scale = 10i64.pow(decimals);
            let ticks = price.0;
            let sign = if ticks < 0 { "-" } else { "" };
            let abs = ticks.unsigned_abs();
            let scale = scale as u64;
            if decimals == 0 {
                format!("{sign}{abs}")
            } else {
                format!(
                    "{sign}{}.{:0width$}",
                    abs / scale,
                    abs % scale,
                    width = decimals as usize
                )
            }
        } else {
            format!("{}", self.to_currency(price))
        }
    }

    /// Some(k) when the tick size is exactly 10^-k for k in 0..=9.
    fn decimal_places(self) -> Option<u32> {
        for k in 0..=9u32 {
            if self.0 == 10f64.powi(-(k as i32)) {
                return Some(k);
            }
        }
        None
    }
}

impl Default for TickSize {
    fn default() -> Self {
        TickSize::CENT
    }
}
