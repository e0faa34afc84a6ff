//! Batch call auction.
//!
//! Orders accumulate in a batch during an auction window instead of matching
//! on arrival. Clearing picks the single price that maximizes executable
//! volume (ties: smallest demand/supply imbalance, then closest to the
//! reference price, then lowest) and crosses eligible orders at that price
//! in priority-rule order. Residue is handed back for seeding the book:
//! since both supported rules rank price first and the clearing price
//! maximizes volume, the residue can never cross.

use crate::book::{BookError, Order, OrderKind, PriorityRule, Side, Tick, Trade};
use crate::price::Price;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AuctionError {
    #[error("auction window is still open")]
    WindowOpen,
    #[error("auction window is already closed")]
    WindowClosed,
    #[error("order tick {tick} precedes window start {start}")]
    BeforeWindow { tick: Tick, start: Tick },
    #[error("window end {end} precedes collected tick {tick}")]
    EndBeforeCollected { end: Tick, tick: Tick },
    #[error(transparent)]
    InvalidOrder(#[from] BookError),
}

/// Everything the clearing step produced. `residue` preserves each
/// surviving order's original fields (partial fills keep their original
/// quantity and arrival tick, hence their priority). `discarded` counts
/// market-order shares dropped for lack of a counterparty, including the
/// whole market side when no price forms.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClearOutcome {
    pub auction_price: Option<Price>,
    pub trades: Vec<Trade>,
    pub residue: Vec<Order>,
    pub discarded: u64,
}

/// An auction in its collection phase.
#[derive(Clone, Debug)]
pub struct AuctionBatch {
    orders: Vec<Order>,
    window_start_tick: Tick,
    window_end_tick: Option<Tick>,
    reference_price: Price,
}

impl AuctionBatch {
    pub fn new(window_start_tick: Tick, reference_price: Price) -> AuctionBatch {
        AuctionBatch {
            orders: Vec::new(),
            window_start_tick,
            window_end_tick: None,
            reference_price,
        }
    }

    pub fn window_start_tick(&self) -> Tick {
        self.window_start_tick
    }

    pub fn window_end_tick(&self) -> Option<Tick> {
        self.window_end_tick
    }

    pub fn reference_price(&self) -> Price {
        self.reference_price
    }

    pub fn len(&self) -> usize {
        self.orders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }

    pub fn orders(&self) -> &[Order] {
        &self.orders
    }

    /// Add an order that arrived inside the window. Order ids must be
    /// unique within the batch; arrival order does not matter.
    pub fn collect(&mut self, order: Order) -> Result<(), AuctionError> {
        if self.window_end_tick.is_some() {
            return Err(AuctionError::WindowClosed);
        }
        order.validate()?;
        if order.remaining != order.quantity {
            return Err(BookError::InvalidOrder {
                id: order.id,
                reason: "collected orders must be unfilled",
            }
            .into());
        }
        if order.id < self.window_start_tick {
            return Err(AuctionError::BeforeWindow {
                tick: order.id,
                start: self.window_start_tick,
            });
        }
        self.orders.push(order);
        Ok(())
    }

    /// Add carryover orders that were already resting in the book when the
    /// window opened. They predate the window, so the window bounds do not
    /// apply; partial fills are welcome and keep their original priority.
    pub fn absorb(&mut self, orders: impl IntoIterator<Item = Order>) {
        for order in orders {
            debug_assert!(
                order.id < self.window_start_tick,
                "carryover must predate the window"
            );
            self.orders.push(order);
        }
    }

    /// Seal the window. Trades produced by `clear` execute at this tick.
    pub fn close(&mut self, end_tick: Tick) -> Result<(), AuctionError> {
        if self.window_end_tick.is_some() {
            return Err(AuctionError::WindowClosed);
        }
        let latest = self
            .orders
            .iter()
            .map(|o| o.id)
            .filter(|&id| id >= self.window_start_tick)
            .max()
            .unwrap_or(self.window_start_tick);
        if end_tick < latest {
            return Err(AuctionError::EndBeforeCollected {
                end: end_tick,
                tick: latest,
            });
        }
        self.window_end_tick = Some(end_tick);
        Ok(())
    }

    /// Clear the batch at a single price. Candidate prices are the distinct
    /// limit prices present; market orders are willing to trade at any of
    /// them. If no candidate executes positive volume, no price forms: limit
    /// orders survive as residue and market orders are discarded.
    pub fn clear(self, rule: PriorityRule) -> Result<ClearOutcome, AuctionError> {
        let end = self.window_end_tick.ok_or(AuctionError::WindowOpen)?;
        debug_assert!(
            {
                let mut ids: Vec<Tick> = self.orders.iter().map(|o| o.id).collect();
                ids.sort_unstable();
                ids.windows(2).all(|w| w[0] != w[1])
            },
            "order ids must be unique within a batch"
        );

        // Aggregate each side once: market totals plus per-price limit
        // quantities sorted by price. Candidate prices are the distinct
        // limit prices present.
        let mut market_buy = 0u64;
        let mut market_sell = 0u64;
        let mut limit_buys: Vec<(Price, u64)> = Vec::new();
        let mut limit_sells: Vec<(Price, u64)> = Vec::new();
        for order in &self.orders {
            match (order.side, order.limit_price) {
                (Side::Buy, None) => market_buy += order.remaining as u64,
                (Side::Sell, None) => market_sell += order.remaining as u64,
                (Side::Buy, Some(lp)) => limit_buys.push((lp, order.remaining as u64)),
                (Side::Sell, Some(lp)) => limit_sells.push((lp, order.remaining as u64)),
            }
        }
        limit_buys.sort_unstable_by_key(|&(p, _)| p);
        limit_sells.sort_unstable_by_key(|&(p, _)| p);
        let candidates = merged_prices(&limit_buys, &limit_sells);

        // Price every candidate in linear time: supply (sells at or below)
        // accumulates over an ascending sweep, demand (buys at or above)
        // over a descending one. A per-candidate rescan would make large
        // carryover books quadratic.
        let mut curves = vec![(0u64, 0u64); candidates.len()];
        let mut k = 0;
        let mut acc = market_sell;
        for (i, &p) in candidates.iter().enumerate() {
            while k < limit_sells.len() && limit_sells[k].0 <= p {
                acc += limit_sells[k].1;
                k += 1;
            }
            curves[i].1 = acc;
        }
        let mut k = limit_buys.len();
        let mut acc = market_buy;
        for (i, &p) in candidates.iter().enumerate().rev() {
            while k > 0 && limit_buys[k - 1].0 >= p {
                acc += limit_buys[k - 1].1;
                k -= 1;
            }
            curves[i].0 = acc;
        }
        debug_assert!(
            self.orders.len() > 64
                || candidates
                    .iter()
                    .zip(&curves)
                    .all(|(&p, &c)| c == self.demand_supply(p)),
            "swept supply/demand curves must match the definitional scan"
        );

        // price, volume, imbalance of the best candidate so far.
        let mut best: Option<(Price, u64, u64)> = None;
        for (&p, &(demand, supply)) in candidates.iter().zip(&curves) {
            let volume = demand.min(supply);
            let imbalance = demand.abs_diff(supply);
            let better = match best {
                None => true,
                Some((bp, bv, bi)) => {
                    volume > bv
                        || (volume == bv && imbalance < bi)
                        || (volume == bv
                            && imbalance == bi
                            && p.distance(self.reference_price)
                                < bp.distance(self.reference_price))
                    // Candidates ascend, so on a full tie the earlier
                    // (lower) price is kept.
                }
            };
            if better {
                best = Some((p, volume, imbalance));
            }
        }

        let Some((price, volume, _)) = best.filter(|&(_, v, _)| v > 0) else {
            // Failed auction: nothing executes, markets die, limits survive.
            let mut outcome = ClearOutcome::default();
            for order in self.orders {
                match order.kind {
                    OrderKind::Limit => outcome.residue.push(order),
                    OrderKind::Market => outcome.discarded += order.remaining as u64,
                }
            }
            return Ok(outcome);
        };

        let mut buys: Vec<Order> = Vec::new();
        let mut sells: Vec<Order> = Vec::new();
        let mut outcome = ClearOutcome {
            auction_price: Some(price),
            ..ClearOutcome::default()
        };
        for order in self.orders {
            let eligible = match (order.side, order.limit_price) {
                (_, None) => true,
                (Side::Buy, Some(lp)) => lp >= price,
                (Side::Sell, Some(lp)) => lp <= price,
            };
            if eligible {
                match order.side {
                    Side::Buy => buys.push(order),
                    Side::Sell => sells.push(order),
                }
            } else {
                outcome.residue.push(order);
            }
        }
        buys.sort_unstable_by_key(|o| rule.key(o));
        sells.sort_unstable_by_key(|o| rule.key(o));

        let (mut i, mut j) = (0usize, 0usize);
        let mut executed = 0u64;
        while i < buys.len() && j < sells.len() {
            let fill = buys[i].remaining.min(sells[j].remaining);
            let (maker, taker) = if buys[i].id < sells[j].id {
                (&buys[i], &sells[j])
            } else {
                (&sells[j], &buys[i])
            };
            outcome.trades.push(Trade {
                price,
                quantity: fill,
                tick: end,
                maker_id: maker.id,
                taker_id: taker.id,
                maker_side: maker.side,
            });
            executed += fill as u64;
            buys[i].remaining -= fill;
            sells[j].remaining -= fill;
            if buys[i].remaining == 0 {
                i += 1;
            }
            if sells[j].remaining == 0 {
                j += 1;
            }
        }
        debug_assert_eq!(executed, volume, "cleared volume must match the optimum");

        for order in buys.into_iter().chain(sells) {
            if order.remaining > 0 {
                match order.kind {
                    OrderKind::Limit => outcome.residue.push(order),
                    OrderKind::Market => outcome.discarded += order.remaining as u64,
                }
            }
        }
        Ok(outcome)
    }

    /// Shares willing to buy at `p` or above, and to sell at `p` or below.
    /// Definitional scan; the clearing sweep is cross-checked against it on
    /// small batches.
    fn demand_supply(&self, p: Price) -> (u64, u64) {
        let mut demand = 0u64;
        let mut supply = 0u64;
        for order in &self.orders {
            let willing = match order.limit_price {
                None => true,
                Some(lp) => match order.side {
                    Side::Buy => lp >= p,
                    Side::Sell => lp <= p,
                },
            };
            if willing {
                match order.side {
                    Side::Buy => demand += order.remaining as u64,
                    Side::Sell => supply += order.remaining as u64,
                }
            }
        }
        (demand, supply)
    }
}

/// Distinct prices appearing in either per-side sorted list, ascending.
fn merged_prices(buys: &[(Price, u64)], sells: &[(Price, u64)]) -> Vec<Price> {
    let mut out: Vec<Price> = Vec::with_capacity(buys.len() + sells.len());
    let (mut i, mut j) = (0, 0);
    while i < buys.len() || j < sells.len() {
        let next = match (buys.get(i), sells.get(j)) {
            (Some(&(a, _)), Some(&(b, _))) => a.min(b),
            (Some(&(a, _)), None) => a,
            (None, Some(&(b, _))) => b,
            (None, None) => unreachable!(),
        };
        while i < buys.len() && buys[i].0 == next {
            i += 1;
        }
        while j < sells.len() && sells[j].0 == next {
            j += 1;
        }
        out.push(next);
    }
    out
}
