//! Simulation driver.
//!
//! A run steps a population of agents through trading days. Every agent
//! action advances the global tick by one, order submitted or not, so ticks
//! double as arrival timestamps and order ids. Days consist of continuous
//! trading turns, optionally bracketed by an opening and a closing call
//! auction. The driver records every trade, the waiting time of both resting
//! parties, and daily closing prices.

use rand::seq::SliceRandom;

use crate::auction::AuctionBatch;
use crate::book::{Book, Tick, Trade};
use crate::events::{EventLog, Phase};
use crate::flow::{make_order, FlowParams, Scenario, SimRng};
use crate::price::{Price, TickSize};

/// Which waiting time a sample measures: the resting bid's, the resting
/// ask's, or the pair minimum (time since the later-arriving party).
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    Bid,
    Ask,
    Absolute,
}

impl SampleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SampleKind::Bid => "bid",
            SampleKind::Ask => "ask",
            SampleKind::Absolute => "absolute",
        }
    }
}

/// One waiting-time observation: a trade at `execution_tick` closed out an
/// order (or pair) that had been exposed for `duration` ticks. The taker
/// side of a continuous trade yields duration 0.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize,
)]
pub struct PendingSample {
    pub kind: SampleKind,
    pub duration: u64,
    pub execution_tick: Tick,
    pub phase: Phase,
}

/// Waiting times for one trade. The absolute sample measures the earlier
/// arrival of the pair, so in continuous trading it equals the maker's
/// waiting time while the taker's side samples 0.
pub fn record_pending(
    trade: &Trade,
    maker_arrival: Tick,
    taker_arrival: Tick,
    phase: Phase,
) -> [PendingSample; 3] {
    let tick = trade.tick;
    debug_assert!(maker_arrival <= tick && taker_arrival <= tick);
    let (bid_arrival, ask_arrival) = match trade.maker_side {
        crate::book::Side::Buy => (maker_arrival, taker_arrival),
        crate::book::Side::Sell => (taker_arrival, maker_arrival),
    };
    [
        PendingSample {
            kind: SampleKind::Bid,
            duration: tick - bid_arrival,
            execution_tick: tick,
            phase,
        },
        PendingSample {
            kind: SampleKind::Ask,
            duration: tick - ask_arrival,
            execution_tick: tick,
            phase,
        },
        PendingSample {
            kind: SampleKind::Absolute,
            duration: tick - bid_arrival.min(ask_arrival),
            execution_tick: tick,
            phase,
        },
    ]
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("{0} must be at least 1")]
    ZeroCount(&'static str),
    #[error("initial price {0} does not quantize to a positive tick count")]
    BadInitialPrice(f64),
    #[error(transparent)]
    BadTickSize(#[from] crate::price::PriceError),
}

/// Full description of one run. Identical configs produce identical results,
/// bit for bit.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SimConfig {
    pub scenario: Scenario,
    pub seed: u64,
    pub n_agents: u32,
    pub n_days: u32,
    pub turns_per_day: u32,
    /// Starting reference price, in currency units.
    pub initial_price: f64,
    pub tick_size: TickSize,
    pub auctions_enabled: bool,
    pub flow: FlowParams,
    /// Record a full submission/execution log (memory-heavy at scale).
    pub record_events: bool,
}

impl SimConfig {
    /// Reference configuration: 1000 agents, 100 days of 12 turns, price
    /// 100.00 on a 0.01 grid, no auctions.
    pub fn new(scenario: Scenario, seed: u64) -> SimConfig {
        SimConfig {
            scenario,
            seed,
            n_agents: 1000,
            n_days: 100,
            turns_per_day: 12,
            initial_price: 100.0,
            tick_size: TickSize::CENT,
            auctions_enabled: false,
            flow: FlowParams::default(),
            record_events: false,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_agents < 1 {
            return Err(ConfigError::ZeroCount("n_agents"));
        }
        if self.n_days < 1 {
            return Err(ConfigError::ZeroCount("n_days"));
        }
        if self.turns_per_day < 1 {
            return Err(ConfigError::ZeroCount("turns_per_day"));
        }
        self.initial_price_ticks()?;
        Ok(())
    }

    pub fn initial_price_ticks(&self) -> Result<Price, ConfigError> {
        match self.tick_size.quantize(self.initial_price) {
            Some(p) if p.is_positive() => Ok(p),
            _ => Err(ConfigError::BadInitialPrice(self.initial_price)),
        }
    }

    /// Agent actions per day: one per agent per turn, plus two auction
    /// rounds when enabled.
    pub fn ticks_per_day(&self) -> u64 {
        let rounds = self.turns_per_day as u64 + if self.auctions_enabled { 2 } else { 0 };
        rounds * self.n_agents as u64
    }

    /// Tick bounds `(first, last)` of the opening-auction window on `day`
    /// (0-based). Meaningful only when auctions are enabled.
    pub fn open_window(&self, day: u32) -> (Tick, Tick) {
        let start = day as u64 * self.ticks_per_day() + 1;
        (start, start + self.n_agents as u64 - 1)
    }
}

/// Everything a run produces.
#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub scenario: Scenario,
    pub seed: u64,
    pub trades: Vec<Trade>,
    pub pending_samples: Vec<PendingSample>,
    pub daily_closing_prices: Vec<Price>,
    pub daily_trade_counts: Vec<u64>,
    /// Orders actually submitted (skipped turns excluded).
    pub total_orders: u64,
    pub events: Option<EventLog>,
}

struct Driver<'a> {
    config: &'a SimConfig,
    book: Book,
    decisions: SimRng,
    shuffler: SimRng,
    agent_order: Vec<u32>,
    tick: Tick,
    trades: Vec<Trade>,
    pending: Vec<PendingSample>,
    events: Option<EventLog>,
    total_orders: u64,
    day_trades: u64,
}

impl Driver<'_> {
    /// Advance the clock one action and maybe produce an order.
    fn agent_action(&mut self) -> Option<crate::book::Order> {
        self.tick += 1;
        let order = make_order(
            self.config.scenario,
            &self.config.flow,
            self.book.last_price(),
            self.config.tick_size,
            self.tick,
            &mut self.decisions,
        )
        .expect("the last executed price is always positive");
        if order.is_some() {
            self.total_orders += 1;
        }
        order
    }

    fn shuffle_agents(&mut self) {
        self.agent_order.shuffle(&mut self.shuffler);
    }

    fn record_trade(&mut self, trade: Trade, phase: Phase) {
        for sample in record_pending(&trade, trade.maker_id, trade.taker_id, phase) {
            self.pending.push(sample);
        }
        if let Some(log) = &mut self.events {
            log.push_trade(&trade, phase);
        }
        self.trades.push(trade);
        self.day_trades += 1;
    }

    /// One continuous-trading turn: every agent acts once in shuffled order.
    fn continuous_turn(&mut self) {
        self.shuffle_agents();
        for _ in 0..self.agent_order.len() {
            let Some(order) = self.agent_action() else {
                continue;
            };
            if let Some(log) = &mut self.events {
                log.push_submission(&order, Phase::Continuous);
            }
            let outcome = self
                .book
                .submit(order)
                .expect("generated orders are valid and ticks increase");
            debug_assert_eq!(outcome.discarded, 0, "flow emits limit orders only");
            for trade in outcome.trades {
                self.record_trade(trade, Phase::Continuous);
            }
        }
    }

    /// One call-auction round: the book's resting orders carry over into the
    /// batch, every agent gets one action, then the batch clears and its
    /// residue reseeds the book.
    fn auction_round(&mut self, phase: Phase) {
        let start = self.tick + 1;
        let mut batch = AuctionBatch::new(start, self.book.last_price());
        batch.absorb(self.book.drain_resting());
        self.shuffle_agents();
        for _ in 0..self.agent_order.len() {
            let Some(order) = self.agent_action() else {
                continue;
            };
            if let Some(log) = &mut self.events {
                log.push_submission(&order, phase);
            }
            batch
                .collect(order)
                .expect("orders are drawn inside the window");
        }
        batch.close(self.tick).expect("the window end is the last action");
        let outcome = batch
            .clear(self.book.rule())
            .expect("the window was just closed");
        debug_assert_eq!(outcome.discarded, 0, "flow emits limit orders only");
        if let Some(price) = outcome.auction_price {
            self.book.set_last_price(price);
        }
        for trade in outcome.trades {
            self.record_trade(trade, phase);
        }
        for order in outcome.residue {
            self.book
                .rest(order)
                .expect("auction residue cannot cross");
        }
        debug_assert!(
            self.book.spread().map_or(true, |s| s > 0),
            "reseeded book must not cross"
        );
    }
}

/// Execute a run.
pub fn run(config: &SimConfig) -> Result<RunResult, ConfigError> {
    config.validate()?;
    let p0 = config.initial_price_ticks()?;
    let mut driver = Driver {
        config,
        book: Book::new(config.scenario.ranking, p0),
        decisions: SimRng::substream(config.seed, 0),
        shuffler: SimRng::substream(config.seed, 1),
        agent_order: (0..config.n_agents).collect(),
        tick: 0,
        trades: Vec::new(),
        pending: Vec::new(),
        events: config.record_events.then(EventLog::new),
        total_orders: 0,
        day_trades: 0,
    };

    let mut daily_closing_prices = Vec::with_capacity(config.n_days as usize);
    let mut daily_trade_counts = Vec::with_capacity(config.n_days as usize);
    let mut prev_close = p0;
    for _ in 0..config.n_days {
        driver.day_trades = 0;
        if config.auctions_enabled {
            driver.auction_round(Phase::OpenAuction);
        }
        for _ in 0..config.turns_per_day {
            driver.continuous_turn();
        }
        if config.auctions_enabled {
            driver.auction_round(Phase::CloseAuction);
        }
        // A day without trades repeats the previous close.
        let close = if driver.day_trades > 0 {
            driver.book.last_price()
        } else {
            prev_close
        };
        daily_closing_prices.push(close);
        daily_trade_counts.push(driver.day_trades);
        prev_close = close;
    }

    Ok(RunResult {
        scenario: config.scenario,
        seed: config.seed,
        trades: driver.trades,
        pending_samples: driver.pending,
        daily_closing_prices,
        daily_trade_counts,
        total_orders: driver.total_orders,
        events: driver.events,
    })
}
