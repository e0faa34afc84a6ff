//! Flat event log of submissions and executions.
//!
//! The simulation driver appends one record per order submitted and one per
//! trade, tagged with the trading phase. The log exists for audit and
//! replay-style checks: replaying it must reconstruct the exact sequence of
//! book states, and downstream tests verify conservation and no-cross
//! properties against it.

use std::io;

use crate::book::{Order, OrderId, OrderKind, Side, Tick, Trade};
use crate::price::{Price, TickSize};

/// Which part of the trading day produced an event.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    OpenAuction,
    Continuous,
    CloseAuction,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::OpenAuction => "open_auction",
            Phase::Continuous => "continuous",
            Phase::CloseAuction => "close_auction",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    /// An order entered the market (book or auction batch).
    Submission {
        side: Side,
        kind: OrderKind,
        price: Option<Price>,
        quantity: u32,
    },
    /// An execution. `side` is the maker's side.
    Execution {
        side: Side,
        price: Price,
        quantity: u32,
        maker_id: OrderId,
        taker_id: OrderId,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EventRecord {
    pub tick: Tick,
    pub phase: Phase,
    pub kind: EventKind,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EventLog {
    records: Vec<EventRecord>,
}

impl EventLog {
    pub fn new() -> EventLog {
        EventLog::default()
    }

    pub fn push_submission(&mut self, order: &Order, phase: Phase) {
        self.records.push(EventRecord {
            tick: order.id,
            phase,
            kind: EventKind::Submission {
                side: order.side,
                kind: order.kind,
                price: order.limit_price,
                quantity: order.quantity,
            },
        });
    }

    pub fn push_trade(&mut self, trade: &Trade, phase: Phase) {
        self.records.push(EventRecord {
            tick: trade.tick,
            phase,
            kind: EventKind::Execution {
                side: trade.maker_side,
                price: trade.price,
                quantity: trade.quantity,
                maker_id: trade.maker_id,
                taker_id: trade.taker_id,
            },
        });
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[EventRecord] {
        &self.records
    }

    pub fn iter(&self) -> impl Iterator<Item = &EventRecord> {
        self.records.iter()
    }

    /// Write the log as CSV. Submission rows are
    /// `order,tick,side,kind,price,quantity` (price empty for market
    /// orders); execution rows are
    /// `trade,tick,side,price,quantity,maker_id,taker_id`. With
    /// `with_phase`, every row gains a trailing phase column.
    pub fn write_csv<W: io::Write>(
        &self,
        w: W,
        tick_size: TickSize,
        with_phase: bool,
    ) -> io::Result<()> {
        let mut wtr = csv::WriterBuilder::new().flexible(true).from_writer(w);
        for rec in &self.records {
            let mut row: Vec<String> = Vec::with_capacity(8);
            match rec.kind {
                EventKind::Submission {
                    side,
                    kind,
                    price,
                    quantity,
                } => {
                    row.push("order".into());
                    row.push(rec.tick.to_string());
                    row.push(side.as_str().into());
                    row.push(kind.as_str().into());
                    row.push(price.map(|p| tick_size.format(p)).unwrap_or_default());
                    row.push(quantity.to_string());
                }
                EventKind::Execution {
                    side,
                    price,
                    quantity,
                    maker_id,
                    taker_id,
                } => {
                    row.push("trade".into());
                    row.push(rec.tick.to_string());
                    row.push(side.as_str().into());
                    row.push(tick_size.format(price).into());
                    row.push(quantity.to_string());
                    row.push(maker_id.to_string());
                    row.push(taker_id.to_string());
                }
            }
            if with_phase {
                row.push(rec.phase.as_str().into());
            }
            wtr.write_record(&row)?;
        }
        wtr.flush()
    }
}
