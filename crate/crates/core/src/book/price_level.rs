use std::collections::{BTreeMap, HashMap, VecDeque};

use super::{BookEngine, BookView};
use crate::types::{OrderId, Price, Qty, Quote, Side, TopOfBook, Trade};

#[derive(Debug, Default, Clone)]
struct Level {
    volume: Qty,
    queue: VecDeque<(OrderId, Qty)>,
}

#[derive(Debug, Clone, Copy)]
struct Resting {
    side: Side,
    price: Price,
    size: Qty,
}

/// Price-keyed book: one FIFO queue per level plus an id index for cancels.
#[derive(Debug, Default, Clone)]
pub struct PriceLevelEngine {
    bids: BTreeMap<Price, Level>,
    asks: BTreeMap<Price, Level>,
    orders: HashMap<OrderId, Resting>,
}

impl PriceLevelEngine {
    fn side_mut(&mut self, side: Side) -> &mut BTreeMap<Price, Level> {
        match side {
            Side::Buy => &mut self.bids,
            Side::Sell => &mut self.asks,
        }
    }
}

impl BookView for PriceLevelEngine {
    fn top(&self) -> TopOfBook {
        let quote = |(p, l): (&Price, &Level)| Quote { price: *p, size: l.volume };
        TopOfBook { bid: self.bids.last_key_value().map(quote), ask: self.asks.first_key_value().map(quote) }
    }

    fn for_each_level(&self, side: Side, f: &mut dyn FnMut(Price, Qty) -> bool) {
        match side {
            Side::Buy => {
                for (p, l) in self.bids.iter().rev() {
                    if !f(*p, l.volume) {
                        break;
                    }
                }
            }
            Side::Sell => {
                for (p, l) in self.asks.iter() {
                    if !f(*p, l.volume) {
                        break;
                    }
                }
            }
        }
    }
}

impl BookEngine for PriceLevelEngine {
    fn name(&self) -> &'static str {
        "price-level"
    }

    fn clear(&mut self) {
        self.bids.clear();
        self.asks.clear();
        self.orders.clear();
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
            let orders = &mut self.orders;
            let book = match side {
                Side::Buy => &mut self.asks,
                Side::Sell => &mut self.bids,
            };
            let mut entry = match side {
                Side::Buy => match book.first_entry() {
                    Some(e) if *e.key() <= limit => e,
                    _ => break,
                },
                Side::Sell => match book.last_entry() {
                    Some(e) if *e.key() >= limit => e,
                    _ => break,
                },
            };
            let price = *entry.key();
            let level = entry.get_mut();
            while left > 0 {
                let Some(front) = level.queue.front_mut() else { break };
                let fill = left.min(front.1);
                left -= fill;
                front.1 -= fill;
                level.volume -= fill;
                let maker = front.0;
                trades.push(Trade {
                    price,
                    size: fill,
                    aggressor_side: side,
                    maker_id: maker,
                    taker_id: taker,
                    timestamp_ms,
                });
                if front.1 == 0 {
                    level.queue.pop_front();
                    orders.remove(&maker);
                } else if let Some(r) = orders.get_mut(&maker) {
                    r.size -= fill;
                }
            }
            if level.queue.is_empty() {
                entry.remove();
            }
        }
        size - left
    }

    fn rest(&mut self, id: OrderId, side: Side, price: Price, size: Qty) {
        let level = self.side_mut(side).entry(price).or_default();
        level.volume += size;
        level.queue.push_back((id, size));
        self.orders.insert(id, Resting { side, price, size });
    }

    fn reduce(&mut self, id: OrderId, size: Qty) {
        let Some(r) = self.orders.get_mut(&id) else { return };
        let (side, price) = (r.side, r.price);
        r.size -= size;
        let gone = r.size == 0;
        if gone {
            self.orders.remove(&id);
        }
        let book = self.side_mut(side);
        let Some(level) = book.get_mut(&price) else { return };
        level.volume -= size;
        if let Some(pos) = level.queue.iter().position(|(oid, _)| *oid == id) {
            if gone {
                level.queue.remove(pos);
            } else {
                level.queue[pos].1 -= size;
            }
        }
        if level.queue.is_empty() {
            book.remove(&price);
        }
    }

    fn resting(&self, id: OrderId) -> Option<(Side, Price, Qty)> {
        self.orders.get(&id).map(|r| (r.side, r.price, r.size))
    }
}
