//! Day-by-day replay: applies the order flow to a book, classifies every
//! submit against the pre-arrival state and records the best-limit-update
//! clock that the event studies run on.

use rayon::prelude::*;

use crate::book::{BookEngine, BookError, BookView, EngineRegistry, ExecSummary, OrderBook};
use crate::classifier::{classify, ClassifiedOrder, SpreadBuckets};
use crate::error::Error;
use crate::types::{Action, BestLimitUpdate, DayFlow, DayId, OrderFlow, Price, Qty, Side, TopOfBook, Trade};

/// A classified submit together with its position on the replay clocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplayOrder {
    pub event_index: usize,
    pub order: ClassifiedOrder,
    /// Index into [`DayReplay::updates`] of the update this order caused.
    pub update: Option<usize>,
    /// Number of updates emitted before this order arrived.
    pub prior_updates: usize,
}

/// An event the book refused; the book was left unchanged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    pub event_index: usize,
    pub error: BookError,
}

#[derive(Debug, Clone, Default)]
pub struct DayReplay {
    pub day: DayId,
    /// Top of book right after the bootstrap snapshot was installed.
    pub initial_top: TopOfBook,
    pub updates: Vec<BestLimitUpdate>,
    pub orders: Vec<ReplayOrder>,
    pub trades: Vec<Trade>,
    pub rejections: Vec<Rejection>,
}

impl DayReplay {
    /// Book quadruple after update `i`; `None` for `i` below zero gives the
    /// opening state.
    pub fn state_after(&self, i: isize) -> Option<TopOfBook> {
        if i < 0 {
            (i == -1).then_some(self.initial_top)
        } else {
            self.updates.get(i as usize).map(|u| u.post)
        }
    }
}

/// Volume an order at `limit` would execute against the opposite side.
fn marketable_volume(book: &dyn BookView, side: Side, limit: Price, size: Qty) -> Qty {
    let mut total = 0;
    book.for_each_level(side.opposite(), &mut |price, volume| {
        let crosses = match side {
            Side::Buy => price <= limit,
            Side::Sell => price >= limit,
        };
        if crosses {
            total += volume;
        }
        crosses && total < size
    });
    total.min(size)
}

/// Replays one day on a fresh engine.
pub fn replay_day(engine: Box<dyn BookEngine>, flow: &DayFlow, buckets: &SpreadBuckets) -> Result<DayReplay, Error> {
    let mut book = OrderBook::new(engine);
    book.start_day(flow.day);
    book.seed(&flow.snapshot).map_err(|e| Error::Input(format!("day {}: bootstrap snapshot: {e}", flow.day)))?;
    let mut out = DayReplay { day: flow.day, initial_top: book.top(), ..Default::default() };
    if let Some(w) = flow.events.windows(2).position(|w| w[1].timestamp_ms < w[0].timestamp_ms) {
        return Err(Error::Input(format!(
            "day {}: event {} has a timestamp earlier than its predecessor",
            flow.day,
            w + 1
        )));
    }

    for (event_index, ev) in flow.events.iter().enumerate() {
        let classified = if ev.action == Action::Submit && ev.size > 0 && ev.price > 0 {
            let executed = marketable_volume(&book, ev.side, ev.price, ev.size);
            let exec = ExecSummary { executed, remaining: ev.size - executed };
            Some(classify(&book, ev, exec, buckets)?)
        } else {
            None
        };
        let prior_updates = out.updates.len();
        let outcome = match book.apply(ev) {
            Ok(o) => o,
            Err(e) if e.is_internal() => return Err(e.into()),
            Err(error) => {
                log::debug!("day {} event {}: rejected: {error}", flow.day, event_index);
                out.rejections.push(Rejection { event_index, error });
                continue;
            }
        };
        if let Some(c) = &classified {
            if c.exec != outcome.exec {
                return Err(Error::Invariant(format!(
                    "day {} order {}: engine executed {:?}, book walk predicted {:?}",
                    flow.day, ev.order_id, outcome.exec, c.exec
                )));
            }
        }
        let update = outcome.update.map(|u| {
            out.updates.push(u);
            out.updates.len() - 1
        });
        out.trades.extend(outcome.trades);
        if let Some(order) = classified {
            out.orders.push(ReplayOrder { event_index, order, update, prior_updates });
        }
    }
    Ok(out)
}

/// Replays every day of `flow`, days in parallel, results in day order.
pub fn replay_flow(
    registry: &EngineRegistry,
    engine: &str,
    flow: &OrderFlow,
    buckets: &SpreadBuckets,
) -> Result<Vec<DayReplay>, Error> {
    // Fail fast on an unknown engine name before spawning work.
    registry.create(engine)?;
    flow.days.par_iter().map(|day| replay_day(registry.create(engine)?, day, buckets)).collect()
}
