use std::collections::BTreeMap;

use super::{BookEngine, BookView};
use crate::types::{OrderId, Price, Qty, Quote, Side, TopOfBook, Trade};

#[derive(Debug, Clone, Copy)]
struct NaiveOrder {
    id: OrderId,
    side: Side,
    price: Price,
    size: Qty,
    seq: u64,
}

/// Reference engine: an unsorted list of resting orders that is fully
/// re-scanned for every query. Slow, but each step is easy to audit.
#[derive(Debug, Default, Clone)]
pub struct NaiveEngine {
    orders: Vec<NaiveOrder>,
    next_seq: u64,
}

impl NaiveEngine {
    /// Index of the highest-priority resting order on `side`.
    fn best(&self, side: Side) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, o) in self.orders.iter().enumerate() {
            if o.side != side {
                continue;
            }
            best = match best {
                None => Some(i),
                Some(j) => {
                    let b = &self.orders[j];
                    let better_price = match side {
                        Side::Buy => o.price > b.price,
                        Side::Sell => o.price < b.price,
                    };
                    if better_price || (o.price == b.price && o.seq < b.seq) {
                        Some(i)
                    } else {
                        Some(j)
                    }
                }
            };
        }
        best
    }

    fn aggregate(&self, side: Side) -> BTreeMap<Price, Qty> {
        let mut levels = BTreeMap::new();
        for o in self.orders.iter().filter(|o| o.side == side) {
            *levels.entry(o.price).or_insert(0) += o.size;
        }
        levels
    }
}

impl BookView for NaiveEngine {
    fn top(&self) -> TopOfBook {
        let quote = |side: Side| {
            let levels = self.aggregate(side);
            let best = match side {
                Side::Buy => levels.last_key_value(),
                Side::Sell => levels.first_key_value(),
            };
            best.map(|(p, q)| Quote { price: *p, size: *q })
        };
        TopOfBook { bid: quote(Side::Buy), ask: quote(Side::Sell) }
    }

    fn for_each_level(&self, side: Side, f: &mut dyn FnMut(Price, Qty) -> bool) {
        let levels = self.aggregate(side);
        let mut ordered: Vec<_> = levels.into_iter().collect();
        if side == Side::Buy {
            ordered.reverse();
        }
        for (p, q) in ordered {
            if !f(p, q) {
                break;
            }
        }
    }
}

impl BookEngine for NaiveEngine {
    fn name(&self) -> &'static str {
        "naive"
    }

    fn clear(&mut self) {
        self.orders.clear();
        self.next_seq = 0;
    }

    fn match_incoming(
        &mut self,
        taker: OrderId,
        side: Side,
        limit: Price,
        size: Qty,
        timestamp_ms: u64,
        trades: &mut Vec<Trade>,
    ) -> Qty {
        let mut left = size;
        while left > 0 {
            let Some(i) = self.best(side.opposite()) else { break };
            let maker = self.orders[i];
            let crosses = match side {
                Side::Buy => maker.price <= limit,
                Side::Sell => maker.price >= limit,
            };
            if !crosses {
                break;
            }
            let fill = left.min(maker.size);
            left -= fill;
            trades.push(Trade {
                price: maker.price,
                size: fill,
                aggressor_side: side,
                maker_id: maker.id,
                taker_id: taker,
                timestamp_ms,
            });
            if fill == maker.size {
                self.orders.remove(i);
            } else {
                self.orders[i].size -= fill;
            }
        }
        size - left
    }

    fn rest(&mut self, id: OrderId, side: Side, price: Price, size: Qty) {
        self.orders.push(NaiveOrder { id, side, price, size, seq: self.next_seq });
        self.next_seq += 1;
    }

    fn reduce(&mut self, id: OrderId, size: Qty) {
        if let Some(i) = self.orders.iter().position(|o| o.id == id) {
            if self.orders[i].size <= size {
                self.orders.remove(i);
            } else {
                self.orders[i].size -= size;
            }
        }
    }

    fn resting(&self, id: OrderId) -> Option<(Side, Price, Qty)> {
        self.orders.iter().find(|o| o.id == id).map(|o| (o.side, o.price, o.size))
    }
}
