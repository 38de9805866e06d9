//! Limit order book under continuous double auction with price-time priority.
//!
//! [`OrderBook`] owns the shared event semantics (validation, remainder
//! resting, best-limit-update emission, invariant checks) and delegates
//! storage and matching to a [`BookEngine`] chosen by name from an
//! [`EngineRegistry`]. Two engines ship with the crate: `price-level`, the
//! production engine keyed by price levels, and `naive`, a flat re-scanned
//! order list kept as a reference oracle.

mod naive;
mod price_level;
mod registry;

pub use naive::NaiveEngine;
pub use price_level::PriceLevelEngine;
pub use registry::{EngineFactory, EngineRegistry, DEFAULT_ENGINE};

use thiserror::Error;

use crate::types::{
    Action, BestLimitUpdate, DayId, OrderEvent, OrderId, Price, Qty, Quote, Side, SnapshotOrder, TopOfBook, Trade,
    BOOTSTRAP_ID_BASE,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BookError {
    #[error("order {0}: size must be positive")]
    ZeroSize(OrderId),
    #[error("order {0}: price must be positive, got {1}")]
    NonPositivePrice(OrderId, Price),
    #[error("order {0} is already resting")]
    DuplicateOrder(OrderId),
    #[error("order id {0} is in the reserved bootstrap range")]
    ReservedId(OrderId),
    #[error("cancel references unknown or filled order {0}")]
    UnknownOrder(OrderId),
    #[error("cancel of {requested} shares exceeds the {remaining} remaining on order {id}")]
    CancelExceedsRemaining { id: OrderId, requested: Qty, remaining: Qty },
    #[error("bootstrap order at {price} on the {side} side would cross the book")]
    CrossedSnapshot { side: Side, price: Price },
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl BookError {
    /// True for errors that signal a broken engine rather than a bad event.
    pub fn is_internal(&self) -> bool {
        matches!(self, BookError::Invariant(_))
    }
}

/// Read access to book levels.
pub trait BookView {
    fn top(&self) -> TopOfBook;

    /// Visits `(price, aggregate volume)` levels of `side` from the best
    /// price outward until `f` returns `false`.
    fn for_each_level(&self, side: Side, f: &mut dyn FnMut(Price, Qty) -> bool);

    /// Best-first `(price, volume)` pairs of one side.
    fn levels(&self, side: Side) -> Vec<(Price, Qty)> {
        let mut out = Vec::new();
        self.for_each_level(side, &mut |p, q| {
            out.push((p, q));
            true
        });
        out
    }
}

/// Storage and matching strategy behind [`OrderBook`].
///
/// Engines may assume their inputs were validated: ids are unique among
/// resting orders, quantities are positive and reductions never exceed the
/// remaining size.
pub trait BookEngine: BookView + Send {
    fn name(&self) -> &'static str;

    fn clear(&mut self);

    /// Matches an incoming order against the opposite side in price-time
    /// priority up to its limit price, consuming at most `size` shares, and
    /// returns the executed volume.
    fn match_incoming(
        &mut self,
        taker: OrderId,
        side: Side,
        limit: Price,
        size: Qty,
        timestamp_ms: u64,
        trades: &mut Vec<Trade>,
    ) -> Qty;

    /// Appends an order to the back of its price level's queue.
    fn rest(&mut self, id: OrderId, side: Side, price: Price, size: Qty);

    /// Removes `size` shares from a resting order, dropping it at zero.
    fn reduce(&mut self, id: OrderId, size: Qty);

    /// Side, price and remaining size of a resting order.
    fn resting(&self, id: OrderId) -> Option<(Side, Price, Qty)>;
}

/// Executed and resting parts of an order; the two sum to the submitted size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ExecSummary {
    pub executed: Qty,
    pub remaining: Qty,
}

/// Result of applying one event.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ApplyOutcome {
    pub trades: Vec<Trade>,
    pub exec: ExecSummary,
    pub update: Option<BestLimitUpdate>,
}

/// One instrument-day book.
pub struct OrderBook {
    engine: Box<dyn BookEngine>,
    day: DayId,
    next_seq: usize,
    next_bootstrap: OrderId,
}

impl OrderBook {
    pub fn new(engine: Box<dyn BookEngine>) -> Self {
        Self { engine, day: 0, next_seq: 0, next_bootstrap: BOOTSTRAP_ID_BASE }
    }

    pub fn engine_name(&self) -> &'static str {
        self.engine.name()
    }

    /// Empties the book and restarts the update clock for `day`.
    pub fn start_day(&mut self, day: DayId) {
        self.engine.clear();
        self.day = day;
        self.next_seq = 0;
        self.next_bootstrap = BOOTSTRAP_ID_BASE;
    }

    /// Installs bootstrap liquidity. Snapshot orders are anonymous: they can
    /// trade but cannot be referenced by cancels.
    pub fn seed(&mut self, orders: &[SnapshotOrder]) -> Result<(), BookError> {
        for o in orders {
            if o.size == 0 {
                return Err(BookError::ZeroSize(self.next_bootstrap));
            }
            if o.price <= 0 {
                return Err(BookError::NonPositivePrice(self.next_bootstrap, o.price));
            }
            let top = self.engine.top();
            let crosses = match o.side {
                Side::Buy => top.ask.is_some_and(|a| o.price >= a.price),
                Side::Sell => top.bid.is_some_and(|b| o.price <= b.price),
            };
            if crosses {
                return Err(BookError::CrossedSnapshot { side: o.side, price: o.price });
            }
            self.engine.rest(self.next_bootstrap, o.side, o.price, o.size);
            self.next_bootstrap += 1;
        }
        Ok(())
    }

    /// Updates emitted so far today.
    pub fn update_count(&self) -> usize {
        self.next_seq
    }

    pub fn resting(&self, id: OrderId) -> Option<(Side, Price, Qty)> {
        self.engine.resting(id)
    }

    /// Applies one event. Rejected events leave the book unchanged.
    pub fn apply(&mut self, ev: &OrderEvent) -> Result<ApplyOutcome, BookError> {
        let pre = self.engine.top();
        let mut outcome = ApplyOutcome::default();
        match ev.action {
            Action::Submit => {
                if ev.size == 0 {
                    return Err(BookError::ZeroSize(ev.order_id));
                }
                if ev.price <= 0 {
                    return Err(BookError::NonPositivePrice(ev.order_id, ev.price));
                }
                if ev.order_id >= BOOTSTRAP_ID_BASE {
                    return Err(BookError::ReservedId(ev.order_id));
                }
                if self.engine.resting(ev.order_id).is_some() {
                    return Err(BookError::DuplicateOrder(ev.order_id));
                }
                let executed = self.engine.match_incoming(
                    ev.order_id,
                    ev.side,
                    ev.price,
                    ev.size,
                    ev.timestamp_ms,
                    &mut outcome.trades,
                );
                let remaining = ev.size - executed;
                if remaining > 0 {
                    self.engine.rest(ev.order_id, ev.side, ev.price, remaining);
                }
                outcome.exec = ExecSummary { executed, remaining };
            }
            Action::Cancel => {
                if ev.size == 0 {
                    return Err(BookError::ZeroSize(ev.order_id));
                }
                if ev.order_id >= BOOTSTRAP_ID_BASE {
                    return Err(BookError::ReservedId(ev.order_id));
                }
                let (_, _, remaining) = self.engine.resting(ev.order_id).ok_or(BookError::UnknownOrder(ev.order_id))?;
                if ev.size > remaining {
                    return Err(BookError::CancelExceedsRemaining { id: ev.order_id, requested: ev.size, remaining });
                }
                self.engine.reduce(ev.order_id, ev.size);
            }
        }
        let post = self.engine.top();
        if let (Some(b), Some(a)) = (post.bid, post.ask) {
            if b.price >= a.price {
                return Err(BookError::Invariant(format!(
                    "crossed book after order {}: bid {} >= ask {}",
                    ev.order_id, b.price, a.price
                )));
            }
        }
        if pre != post {
            outcome.update =
                Some(BestLimitUpdate { seq: self.next_seq, day: self.day, timestamp_ms: ev.timestamp_ms, pre, post });
            self.next_seq += 1;
        }
        Ok(outcome)
    }

    /// Deep copy of the current levels.
    pub fn snapshot(&self) -> BookSnapshot {
        BookSnapshot { bids: self.engine.levels(Side::Buy), asks: self.engine.levels(Side::Sell) }
    }
}

impl BookView for OrderBook {
    fn top(&self) -> TopOfBook {
        self.engine.top()
    }

    fn for_each_level(&self, side: Side, f: &mut dyn FnMut(Price, Qty) -> bool) {
        self.engine.for_each_level(side, f)
    }
}

/// Immutable level-aggregated copy of a book, best level first on each side.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BookSnapshot {
    pub bids: Vec<(Price, Qty)>,
    pub asks: Vec<(Price, Qty)>,
}

impl BookSnapshot {
    pub fn from_levels(bids: &[(Price, Qty)], asks: &[(Price, Qty)]) -> Self {
        Self { bids: bids.to_vec(), asks: asks.to_vec() }
    }
}

impl BookView for BookSnapshot {
    fn top(&self) -> TopOfBook {
        let q = |l: Option<&(Price, Qty)>| l.map(|&(price, size)| Quote { price, size });
        TopOfBook { bid: q(self.bids.first()), ask: q(self.asks.first()) }
    }

    fn for_each_level(&self, side: Side, f: &mut dyn FnMut(Price, Qty) -> bool) {
        let levels = match side {
            Side::Buy => &self.bids,
            Side::Sell => &self.asks,
        };
        for &(p, q) in levels {
            if !f(p, q) {
                break;
            }
        }
    }
}

/// Best quotes; fields are absent for an empty side.
pub fn best_quotes(book: &dyn BookView) -> TopOfBook {
    book.top()
}

/// Bid-ask spread in ticks, absent when either side is empty.
pub fn spread(book: &dyn BookView) -> Option<i64> {
    book.top().spread()
}
