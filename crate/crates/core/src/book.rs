//! Limit order book with pluggable priority rules.
//!
//! The book holds resting limit orders on two sides and matches incoming
//! orders against the opposite side in priority order. Two ranking rules are
//! supported: price/time/quantity (Milan-style, `Ptq`) and
//! price/quantity/time (NYSE-style, `Pqt`). Arrival ticks are unique across
//! a run, so both rules induce a strict total order on same-side orders and
//! matching is fully deterministic.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::price::Price;

/// Global event-clock value. Ticks advance by one for every agent action,
/// including actions that produce no order, so arrival ticks of consecutive
/// orders may have gaps.
pub type Tick = u64;

/// Orders are identified by their arrival tick.
pub type OrderId = u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Buy,
    Sell,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Buy => Side::Sell,
            Side::Sell => Side::Buy,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Buy => "buy",
            Side::Sell => "sell",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderKind {
    Limit,
    Market,
}

impl OrderKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OrderKind::Limit => "limit",
            OrderKind::Market => "market",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BookError {
    #[error("order {id}: {reason}")]
    InvalidOrder { id: OrderId, reason: &'static str },
    #[error("arrival tick {tick} is not greater than the last seen tick {last}")]
    NonMonotonicTick { tick: Tick, last: Tick },
    #[error("cannot rank orders on opposite sides")]
    MismatchedSides,
    #[error("market orders cannot rest in the book")]
    MarketCannotRest,
}

/// A single order. `quantity` is the size at entry and never changes;
/// `remaining` counts down as fills occur. Priority under the
/// quantity-ranked rule always uses the original size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Order {
    pub id: OrderId,
    pub side: Side,
    pub kind: OrderKind,
    /// Present exactly when `kind` is `Limit`.
    pub limit_price: Option<Price>,
    pub quantity: u32,
    pub remaining: u32,
}

impl Order {
    pub fn limit(side: Side, price: Price, quantity: u32, tick: Tick) -> Result<Order, BookError> {
        let order = Order {
            id: tick,
            side,
            kind: OrderKind::Limit,
            limit_price: Some(price),
            quantity,
            remaining: quantity,
        };
        order.validate()?;
        Ok(order)
    }

    pub fn market(side: Side, quantity: u32, tick: Tick) -> Result<Order, BookError> {
        let order = Order {
            id: tick,
            side,
            kind: OrderKind::Market,
            limit_price: None,
            quantity,
            remaining: quantity,
        };
        order.validate()?;
        Ok(order)
    }

    pub fn arrival_tick(&self) -> Tick {
        self.id
    }

    pub fn validate(&self) -> Result<(), BookError> {
        let fail = |reason| Err(BookError::InvalidOrder { id: self.id, reason });
        if self.quantity < 1 {
            return fail("quantity must be at least 1");
        }
        if self.remaining < 1 || self.remaining > self.quantity {
            return fail("remaining must be in 1..=quantity");
        }
        match (self.kind, self.limit_price) {
            (OrderKind::Limit, Some(p)) if !p.is_positive() => {
                fail("limit price must be positive")
            }
            (OrderKind::Limit, None) => fail("limit orders must carry a price"),
            (OrderKind::Market, Some(_)) => fail("market orders must not carry a price"),
            _ => Ok(()),
        }
    }
}

/// One execution. `maker_id` is the earlier-arriving side of the pair, which
/// sets the price in continuous trading; `tick` is when the trade happened
/// (the taker's arrival in continuous trading, the window end in an auction).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trade {
    pub price: Price,
    pub quantity: u32,
    pub tick: Tick,
    pub maker_id: OrderId,
    pub taker_id: OrderId,
    pub maker_side: Side,
}

/// Ranking rule for same-side orders. Better-ranked orders execute first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PriorityRule {
    /// Price, then earlier arrival, then larger size (Milan).
    Ptq,
    /// Price, then larger size, then earlier arrival (NYSE).
    Pqt,
}

impl PriorityRule {
    /// Two-letter market code used in scenario labels.
    pub fn market_code(self) -> &'static str {
        match self {
            PriorityRule::Ptq => "MI",
            PriorityRule::Pqt => "NY",
        }
    }

    pub fn from_market_code(code: &str) -> Option<PriorityRule> {
        match code.to_ascii_uppercase().as_str() {
            "MI" => Some(PriorityRule::Ptq),
            "NY" => Some(PriorityRule::Pqt),
            _ => None,
        }
    }

    pub const ALL: [PriorityRule; 2] = [PriorityRule::Ptq, PriorityRule::Pqt];

    /// Sort key; lexicographically smaller ranks first. Market orders get
    /// the most aggressive possible price component, so in an auction batch
    /// they outrank every limit order on their side.
    pub(crate) fn key(self, order: &Order) -> (i64, i64, i64) {
        let price_rank = match (order.side, order.limit_price) {
            (_, None) => i64::MIN,
            (Side::Buy, Some(p)) => -p.ticks(),
            (Side::Sell, Some(p)) => p.ticks(),
        };
        let qty_rank = -(order.quantity as i64);
        let time_rank = order.id as i64;
        match self {
            PriorityRule::Ptq => (price_rank, time_rank, qty_rank),
            PriorityRule::Pqt => (price_rank, qty_rank, time_rank),
        }
    }

    /// Rank two same-side orders; `Less` means `a` executes first. Arrival
    /// ticks are unique, so distinct orders never compare equal.
    pub fn compare(self, a: &Order, b: &Order) -> Result<Ordering, BookError> {
        if a.side != b.side {
            return Err(BookError::MismatchedSides);
        }
        Ok(self.key(a).cmp(&self.key(b)))
    }
}

/// Outcome of submitting one order: the fills it caused, whether its
/// remainder now rests in the book, and any market-order quantity discarded
/// for lack of a counterparty.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SubmitOutcome {
    pub trades: Vec<Trade>,
    pub rested: bool,
    pub discarded: u32,
}

/// The book proper. Each side is a map from priority key to order, so the
/// first entry is always the next to execute. Keys are built from original
/// quantities and arrival ticks, which never change after entry; partial
/// fills therefore keep their standing.
#[derive(Clone, Debug)]
pub struct Book {
    rule: PriorityRule,
    bids: BTreeMap<(i64, i64, i64), Order>,
    asks: BTreeMap<(i64, i64, i64), Order>,
    last_price: Price,
    last_tick: Tick,
}

impl Book {
    pub fn new(rule: PriorityRule, initial_price: Price) -> Book {
        Book {
            rule,
            bids: BTreeMap::new(),
            asks: BTreeMap::new(),
            last_price: initial_price,
            last_tick: 0,
        }
    }

    pub fn rule(&self) -> PriorityRule {
        self.rule
    }

    /// Last executed price, or the initial price before any trade.
    pub fn last_price(&self) -> Price {
        self.last_price
    }

    /// Overwrite the reference price. Used after an auction, whose trades
    /// clear outside the book.
    pub fn set_last_price(&mut self, price: Price) {
        self.last_price = price;
    }

    pub fn best_bid(&self) -> Option<Price> {
        self.bids.values().next().map(|o| o.limit_price.unwrap())
    }

    pub fn best_ask(&self) -> Option<Price> {
        self.asks.values().next().map(|o| o.limit_price.unwrap())
    }

    /// Best ask minus best bid, in ticks. Positive whenever both exist.
    pub fn spread(&self) -> Option<i64> {
        Some(self.best_ask()?.ticks() - self.best_bid()?.ticks())
    }

    /// Resting bids in execution order.
    pub fn bids(&self) -> impl Iterator<Item = &Order> {
        self.bids.values()
    }

    /// Resting asks in execution order.
    pub fn asks(&self) -> impl Iterator<Item = &Order> {
        self.asks.values()
    }

    pub fn depth(&self) -> (usize, usize) {
        (self.bids.len(), self.asks.len())
    }

    pub fn is_empty(&self) -> bool {
        self.bids.is_empty() && self.asks.is_empty()
    }

    /// Match an incoming order against the opposite side, then rest any
    /// limit remainder. Fills execute at the resting order's price. The
    /// arrival tick must exceed every tick the book has seen.
    pub fn submit(&mut self, mut order: Order) -> Result<SubmitOutcome, BookError> {
        order.validate()?;
        if order.remaining != order.quantity {
            return Err(BookError::InvalidOrder {
                id: order.id,
                reason: "incoming orders must be unfilled",
            });
        }
        if order.id <= self.last_tick {
            return Err(BookError::NonMonotonicTick {
                tick: order.id,
                last: self.last_tick,
            });
        }
        self.last_tick = order.id;

        let mut outcome = SubmitOutcome::default();
        while order.remaining > 0 {
            let opposite = match order.side {
                Side::Buy => &mut self.asks,
                Side::Sell => &mut self.bids,
            };
            let Some(mut entry) = opposite.first_entry() else {
                break;
            };
            let maker_price = entry
                .get()
                .limit_price
                .expect("resting orders are always limit orders");
            let crosses = match order.limit_price {
                None => true,
                Some(p) => match order.side {
                    Side::Buy => p >= maker_price,
                    Side::Sell => p <= maker_price,
                },
            };
            if !crosses {
                break;
            }
            let maker = *entry.get();
            let fill = order.remaining.min(maker.remaining);
            outcome.trades.push(Trade {
                price: maker_price,
                quantity: fill,
                tick: order.id,
                maker_id: maker.id,
                taker_id: order.id,
                maker_side: maker.side,
            });
            order.remaining -= fill;
            self.last_price = maker_price;
            if maker.remaining == fill {
                entry.remove();
            } else {
                entry.get_mut().remaining -= fill;
            }
        }

        if order.remaining > 0 {
            match order.kind {
                OrderKind::Limit => {
                    self.insert(order);
                    outcome.rested = true;
                }
                OrderKind::Market => outcome.discarded = order.remaining,
            }
        }
        Ok(outcome)
    }

    /// Place a limit order directly in the book without matching. Used to
    /// seed the book with auction residue, which is guaranteed not to cross.
    pub fn rest(&mut self, order: Order) -> Result<(), BookError> {
        order.validate()?;
        if order.kind != OrderKind::Limit {
            return Err(BookError::MarketCannotRest);
        }
        self.insert(order);
        self.last_tick = self.last_tick.max(order.id);
        Ok(())
    }

    /// Remove and return every resting order, for hand-off to an auction.
    pub fn drain_resting(&mut self) -> Vec<Order> {
        let mut out: Vec<Order> = std::mem::take(&mut self.bids).into_values().collect();
        out.extend(std::mem::take(&mut self.asks).into_values());
        out
    }

    fn insert(&mut self, order: Order) {
        let key = self.rule.key(&order);
        let map = match order.side {
            Side::Buy => &mut self.bids,
            Side::Sell => &mut self.asks,
        };
        let evicted = map.insert(key, order);
        debug_assert!(evicted.is_none(), "priority keys must be unique");
    }
}
