//! Helpers shared by the integration-test crates: a naive reference
//! matcher, a brute-force auction scan, and an event-log replayer that
//! rebuilds book state from recorded submissions and executions alone.

#![allow(dead_code)]

use std::collections::BTreeMap;

use cdasim::{
    AuctionBatch, Book, EventKind, EventLog, Order, OrderKind, Phase, Price, PriorityRule, Side,
    Trade,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// True when `a` outranks `b` on the same side, written out longhand from
/// the two rule definitions rather than via the library's sort key.
pub fn outranks(rule: PriorityRule, a: &Order, b: &Order) -> bool {
    let price_cmp = match (a.limit_price, b.limit_price) {
        (None, None) => std::cmp::Ordering::Equal,
        (None, Some(_)) => std::cmp::Ordering::Less,
        (Some(_), None) => std::cmp::Ordering::Greater,
        (Some(pa), Some(pb)) => match a.side {
            Side::Buy => pb.ticks().cmp(&pa.ticks()),
            Side::Sell => pa.ticks().cmp(&pb.ticks()),
        },
    };
    let earlier = a.id.cmp(&b.id);
    let bigger = b.quantity.cmp(&a.quantity);
    let chain = match rule {
        PriorityRule::Ptq => price_cmp.then(earlier).then(bigger),
        PriorityRule::Pqt => price_cmp.then(bigger).then(earlier),
    };
    chain == std::cmp::Ordering::Less
}

/// Naive book: a flat vector, rescanned in full for every fill.
pub struct NaiveBook {
    rule: PriorityRule,
    pub resting: Vec<Order>,
}

impl NaiveBook {
    pub fn new(rule: PriorityRule) -> NaiveBook {
        NaiveBook {
            rule,
            resting: Vec::new(),
        }
    }

    fn crosses(incoming: &Order, maker_price: Price) -> bool {
        match incoming.limit_price {
            None => true,
            Some(p) => match incoming.side {
                Side::Buy => p >= maker_price,
                Side::Sell => p <= maker_price,
            },
        }
    }

    pub fn submit(&mut self, mut order: Order) -> (Vec<Trade>, u32) {
        let mut trades = Vec::new();
        loop {
            if order.remaining == 0 {
                break;
            }
            let mut best: Option<usize> = None;
            for (i, o) in self.resting.iter().enumerate() {
                if o.side == order.side {
                    continue;
                }
                if best.is_none_or(|b| outranks(self.rule, o, &self.resting[b])) {
                    best = Some(i);
                }
            }
            let Some(i) = best else { break };
            let maker_price = self.resting[i].limit_price.unwrap();
            if !Self::crosses(&order, maker_price) {
                break;
            }
            let fill = order.remaining.min(self.resting[i].remaining);
            trades.push(Trade {
                price: maker_price,
                quantity: fill,
                tick: order.id,
                maker_id: self.resting[i].id,
                taker_id: order.id,
                maker_side: self.resting[i].side,
            });
            order.remaining -= fill;
            self.resting[i].remaining -= fill;
            if self.resting[i].remaining == 0 {
                self.resting.remove(i);
            }
        }
        let mut discarded = 0;
        if order.remaining > 0 {
            match order.kind {
                OrderKind::Limit => self.resting.push(order),
                OrderKind::Market => discarded = order.remaining,
            }
        }
        (trades, discarded)
    }
}

pub fn random_order(rng: &mut ChaCha8Rng, tick: u64) -> Order {
    let side = if rng.gen_bool(0.5) { Side::Buy } else { Side::Sell };
    let quantity = rng.gen_range(1..=9);
    if rng.gen_bool(0.15) {
        Order::market(side, quantity, tick).unwrap()
    } else {
        // A 10-tick price range guarantees frequent crossing and ties.
        Order::limit(side, Price(rng.gen_range(1..=10)), quantity, tick).unwrap()
    }
}

fn snapshot(book: &Book) -> Vec<(u64, u32)> {
    let mut out: Vec<(u64, u32)> = book
        .bids()
        .chain(book.asks())
        .map(|o| (o.id, o.remaining))
        .collect();
    out.sort_unstable();
    out
}

fn naive_snapshot(naive: &NaiveBook) -> Vec<(u64, u32)> {
    let mut out: Vec<(u64, u32)> = naive.resting.iter().map(|o| (o.id, o.remaining)).collect();
    out.sort_unstable();
    out
}

/// Random books of up to 8 orders, matched order by order through both
/// engines under both rules: every trade and the final book must agree.
pub fn check_matching_equivalence(cases: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let n_orders = rng.gen_range(1..=8);
        let orders: Vec<Order> = (1..=n_orders).map(|t| random_order(&mut rng, t)).collect();
        let rule = if case % 2 == 0 {
            PriorityRule::Ptq
        } else {
            PriorityRule::Pqt
        };

        let mut book = Book::new(rule, Price(5));
        let mut naive = NaiveBook::new(rule);
        for &order in &orders {
            let outcome = book.submit(order).unwrap();
            let (naive_trades, naive_discarded) = naive.submit(order);
            assert_eq!(
                outcome.trades, naive_trades,
                "case {case}: trade mismatch under {rule:?} for {orders:?}"
            );
            assert_eq!(
                outcome.discarded, naive_discarded,
                "case {case}: discard mismatch under {rule:?}"
            );
        }
        assert_eq!(
            snapshot(&book),
            naive_snapshot(&naive),
            "case {case}: final book mismatch under {rule:?} for {orders:?}"
        );
    }
}

/// Executable volume at price `p`, by definition.
pub fn volume_at(orders: &[Order], p: i64) -> (u64, u64) {
    let mut demand = 0u64;
    let mut supply = 0u64;
    for o in orders {
        let willing = match o.limit_price {
            None => true,
            Some(lp) => match o.side {
                Side::Buy => lp.ticks() >= p,
                Side::Sell => lp.ticks() <= p,
            },
        };
        if willing {
            match o.side {
                Side::Buy => demand += o.remaining as u64,
                Side::Sell => supply += o.remaining as u64,
            }
        }
    }
    (demand, supply)
}

/// Random batches: the cleared price must achieve the maximum executable
/// volume over every price on the grid (including prices no order quotes)
/// and must equal an independent argmax over the quoted prices using the
/// full tie chain (volume, imbalance, reference distance, lowest).
pub fn check_auction_optimality(cases: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let n_orders = rng.gen_range(1..=12);
        let orders: Vec<Order> = (1..=n_orders).map(|t| random_order(&mut rng, t)).collect();
        let reference = Price(rng.gen_range(1..=10));
        let rule = if case % 2 == 0 {
            PriorityRule::Ptq
        } else {
            PriorityRule::Pqt
        };

        let mut batch = AuctionBatch::new(1, reference);
        for &o in &orders {
            batch.collect(o).unwrap();
        }
        batch.close(n_orders).unwrap();
        let out = batch.clear(rule).unwrap();

        let grid_best = (0..=11)
            .map(|p| {
                let (d, s) = volume_at(&orders, p);
                d.min(s)
            })
            .max()
            .unwrap();

        let mut quoted: Vec<i64> = orders
            .iter()
            .filter_map(|o| o.limit_price)
            .map(|p| p.ticks())
            .collect();
        quoted.sort_unstable();
        quoted.dedup();
        let expected_price = quoted
            .iter()
            .map(|&p| {
                let (d, s) = volume_at(&orders, p);
                // Lexicographic objective; quoted ascends, so min_by_key
                // keeps the lowest price on a full tie.
                (d.min(s), d.abs_diff(s), (p - reference.ticks()).abs(), p)
            })
            .filter(|&(v, ..)| v > 0)
            .min_by_key(|&(v, imb, dist, p)| (std::cmp::Reverse(v), imb, dist, p));

        let executed: u64 = out.trades.iter().map(|t| t.quantity as u64).sum();
        match expected_price {
            Some((v, _, _, p)) => {
                assert_eq!(v, grid_best, "case {case}: quoted optimum misses grid optimum");
                assert_eq!(
                    out.auction_price,
                    Some(Price(p)),
                    "case {case}: price mismatch for {orders:?} ref {reference:?}"
                );
                assert_eq!(executed, v, "case {case}: executed volume not optimal");
            }
            None => {
                // Volume can exist on the grid with no quoted price in one
                // case only: both sides are pure market orders, so there is
                // nothing to discover a price from and the auction fails.
                if grid_best > 0 {
                    assert!(quoted.is_empty(), "case {case}: grid beats every quoted price");
                }
                assert_eq!(out.auction_price, None, "case {case}: price formed with zero volume");
                assert_eq!(executed, 0);
            }
        }
    }
}

#[derive(Debug)]
struct ShadowOrder {
    side: Side,
    kind: OrderKind,
    price: Option<Price>,
    remaining: u64,
}

struct Shadow {
    orders: BTreeMap<u64, ShadowOrder>,
    submissions: u64,
    executed_shares: u64,
    execution_records: u64,
}

impl Shadow {
    fn new() -> Shadow {
        Shadow {
            orders: BTreeMap::new(),
            submissions: 0,
            executed_shares: 0,
            execution_records: 0,
        }
    }

    fn assert_never_crossed(&self, context: &str) {
        let best_bid = self
            .orders
            .values()
            .filter(|o| o.side == Side::Buy && o.remaining > 0)
            .filter_map(|o| o.price)
            .max();
        let best_ask = self
            .orders
            .values()
            .filter(|o| o.side == Side::Sell && o.remaining > 0)
            .filter_map(|o| o.price)
            .min();
        if let (Some(bid), Some(ask)) = (best_bid, best_ask) {
            assert!(bid < ask, "{context}: crossed shadow book {bid:?} >= {ask:?}");
        }
    }

    /// Market orders die when their matching opportunity ends: at the end
    /// of their arrival tick in continuous trading, or at the end of the
    /// auction that collected them.
    fn discard_market_remainders(&mut self) {
        self.orders
            .retain(|_, o| !(o.kind == OrderKind::Market && o.remaining > 0));
    }
}

/// Walk one run's event log, replaying it into a shadow book. Everything
/// asserted here comes from the log itself plus the two structural rules
/// of the market (an order's id is its arrival tick; market orders never
/// rest).
pub fn verify_event_log(log: &EventLog, result_trades: u64, result_orders: u64) {
    let mut shadow = Shadow::new();
    let records = log.records();
    let mut i = 0;
    let mut last_phase: Option<Phase> = None;

    while i < records.len() {
        let tick = records[i].tick;
        let phase = records[i].phase;
        let mut j = i;
        while j < records.len() && records[j].tick == tick {
            assert_eq!(records[j].phase, phase, "tick {tick} spans phases");
            j += 1;
        }

        // Leaving an auction window: residue rests, market leftovers die,
        // and the surviving book must not cross.
        if let Some(prev) = last_phase {
            if prev != Phase::Continuous && phase != prev {
                shadow.discard_market_remainders();
                shadow.assert_never_crossed(&format!("after {prev:?} cleared, tick {tick}"));
            }
        }

        for record in &records[i..j] {
            match record.kind {
                EventKind::Submission {
                    side,
                    kind,
                    price,
                    quantity,
                } => {
                    assert!(quantity >= 1, "tick {tick}: zero-quantity submission");
                    let clash = shadow.orders.insert(
                        tick,
                        ShadowOrder {
                            side,
                            kind,
                            price,
                            remaining: quantity as u64,
                        },
                    );
                    assert!(clash.is_none(), "tick {tick}: two submissions share an id");
                    shadow.submissions += 1;
                }
                EventKind::Execution {
                    side,
                    price,
                    quantity,
                    maker_id,
                    taker_id,
                } => {
                    assert!(maker_id < taker_id, "tick {tick}: maker does not predate taker");
                    assert!(taker_id <= tick, "tick {tick}: execution before taker arrived");
                    if phase == Phase::Continuous {
                        assert_eq!(taker_id, tick, "continuous taker must be the arrival");
                    }
                    for (id, label) in [(maker_id, "maker"), (taker_id, "taker")] {
                        let order = shadow
                            .orders
                            .get_mut(&id)
                            .unwrap_or_else(|| panic!("tick {tick}: {label} {id} never submitted"));
                        assert!(
                            order.remaining >= quantity as u64,
                            "tick {tick}: {label} {id} overfilled"
                        );
                        order.remaining -= quantity as u64;
                    }
                    let maker = &shadow.orders[&maker_id];
                    assert_eq!(maker.side, side, "tick {tick}: maker side mismatch");
                    if phase == Phase::Continuous {
                        assert_eq!(
                            maker.price,
                            Some(price),
                            "tick {tick}: continuous fill away from maker price"
                        );
                    }
                    shadow.executed_shares += quantity as u64;
                    shadow.execution_records += 1;
                }
            }
        }

        if phase == Phase::Continuous {
            // The arrival either filled, rested (limit), or is discarded
            // (market): afterwards the book must stand uncrossed.
            if let Some(order) = shadow.orders.get(&tick) {
                if order.kind == OrderKind::Market && order.remaining > 0 {
                    shadow.orders.remove(&tick);
                }
            }
            shadow.assert_never_crossed(&format!("continuous tick {tick}"));
        }

        last_phase = Some(phase);
        i = j;
    }
    if let Some(prev) = last_phase {
        if prev != Phase::Continuous {
            shadow.discard_market_remainders();
            shadow.assert_never_crossed("after final auction");
        }
    }

    assert_eq!(shadow.execution_records, result_trades, "trade count mismatch");
    assert_eq!(shadow.submissions, result_orders, "submission count mismatch");
}
