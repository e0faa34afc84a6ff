//! Deterministic agent-based stock market simulator.
//!
//! A population of zero-intelligence agents trades one stock through a
//! continuous double auction, optionally bracketed by daily call auctions.
//! Orders rank under either a price/time/quantity or a price/quantity/time
//! priority rule, and the waiting time between an order entering the market
//! and executing is recorded for every trade. The statistics layer bins
//! those waiting times and fits the decay laws they follow.
//!
//! Everything is reproducible: a run is fully determined by its
//! configuration, including the seed, and file output is byte-identical
//! across reruns and platforms.

pub mod auction;
pub mod book;
pub mod csvio;
pub mod events;
pub mod flow;
pub mod price;
pub mod sim;
pub mod stats;

pub use auction::{AuctionBatch, AuctionError, ClearOutcome};
pub use book::{Book, BookError, Order, OrderId, OrderKind, PriorityRule, Side, SubmitOutcome, Tick, Trade};
pub use events::{EventKind, EventLog, EventRecord, Phase};
pub use flow::{
    make_order, next_price, next_quantity, next_side, FlowError, FlowParams, PriceProcess,
    QuantityProcess, Scenario, ScenarioParseError, SimRng,
};
pub use price::{Price, PriceError, TickSize};
pub use sim::{run, record_pending, ConfigError, PendingSample, RunResult, SampleKind, SimConfig};
pub use stats::{
    chi_square_uniform, fit_exponential, fit_power_law, fit_run, fit_tail_exponential,
    median_duration, summarize, ChiSquare, FitModel, FitParams, FitResult, Histogram, RunFits,
    StatsError, SummaryStats,
};
