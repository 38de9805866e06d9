//! Core order-flow vocabulary shared by every stage of the pipeline.

use std::fmt;

/// Price in integer ticks.
pub type Price = i64;
/// Share count.
pub type Qty = u64;
pub type OrderId = u64;
pub type DayId = u32;

/// Milliseconds in one minute of the session clock.
pub const MINUTE_MS: u64 = 60_000;

/// Order ids at or above this value are reserved for anonymous bootstrap
/// liquidity and are rejected on ingest.
pub const BOOTSTRAP_ID_BASE: OrderId = 1 << 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
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

    pub fn code(self) -> char {
        match self {
            Side::Buy => 'B',
            Side::Sell => 'S',
        }
    }

    pub fn from_code(s: &str) -> Option<Side> {
        match s {
            "B" => Some(Side::Buy),
            "S" => Some(Side::Sell),
            _ => None,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Buy => "buy",
            Side::Sell => "sell",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Submit,
    /// Cancels `size` shares of a resting order; a full cancel uses the
    /// order's remaining size.
    Cancel,
}

impl Action {
    pub fn code(self) -> char {
        match self {
            Action::Submit => 'S',
            Action::Cancel => 'C',
        }
    }

    pub fn from_code(s: &str) -> Option<Action> {
        match s {
            "S" => Some(Action::Submit),
            "C" => Some(Action::Cancel),
            _ => None,
        }
    }
}

/// One raw order-flow record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrderEvent {
    pub day: DayId,
    /// Milliseconds since the session open on the concatenated session clock.
    pub timestamp_ms: u64,
    pub order_id: OrderId,
    pub side: Side,
    pub price: Price,
    pub size: Qty,
    pub action: Action,
}

impl OrderEvent {
    pub fn submit(day: DayId, ts: u64, id: OrderId, side: Side, price: Price, size: Qty) -> Self {
        Self { day, timestamp_ms: ts, order_id: id, side, price, size, action: Action::Submit }
    }

    pub fn cancel(day: DayId, ts: u64, id: OrderId, side: Side, price: Price, size: Qty) -> Self {
        Self { day, timestamp_ms: ts, order_id: id, side, price, size, action: Action::Cancel }
    }

    /// 1-based minute index of the event on the session clock.
    pub fn minute(&self) -> usize {
        minute_of(self.timestamp_ms)
    }
}

/// 1-based minute index containing `ts`.
pub fn minute_of(ts: u64) -> usize {
    (ts / MINUTE_MS) as usize + 1
}

/// One resting order of a bootstrap snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SnapshotOrder {
    pub side: Side,
    pub price: Price,
    pub size: Qty,
}

/// Bootstrap book plus the ordered event stream of one trading day.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DayFlow {
    pub day: DayId,
    pub snapshot: Vec<SnapshotOrder>,
    pub events: Vec<OrderEvent>,
}

/// All days of one instrument, in ascending day order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OrderFlow {
    pub days: Vec<DayFlow>,
}

impl OrderFlow {
    pub fn event_count(&self) -> usize {
        self.days.iter().map(|d| d.events.len()).sum()
    }

    /// Reflects every price about `pivot` and swaps sides. Ticks stay
    /// positive as long as `pivot` exceeds the highest price in the flow.
    pub fn mirrored(&self, pivot: Price) -> OrderFlow {
        OrderFlow {
            days: self
                .days
                .iter()
                .map(|d| DayFlow {
                    day: d.day,
                    snapshot: d
                        .snapshot
                        .iter()
                        .map(|o| SnapshotOrder { side: o.side.opposite(), price: pivot - o.price, size: o.size })
                        .collect(),
                    events: d
                        .events
                        .iter()
                        .map(|e| OrderEvent { side: e.side.opposite(), price: pivot - e.price, ..*e })
                        .collect(),
                })
                .collect(),
        }
    }
}

/// A best quote: price and aggregate resting volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Quote {
    pub price: Price,
    pub size: Qty,
}

/// The quadruple (b_1, B_1, a_1, A_1); either side may be absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct TopOfBook {
    pub bid: Option<Quote>,
    pub ask: Option<Quote>,
}

impl TopOfBook {
    /// a_1 - b_1 in ticks, absent when either side is empty.
    pub fn spread(&self) -> Option<i64> {
        match (self.bid, self.ask) {
            (Some(b), Some(a)) => Some(a.price - b.price),
            _ => None,
        }
    }

    pub fn side(&self, side: Side) -> Option<Quote> {
        match side {
            Side::Buy => self.bid,
            Side::Sell => self.ask,
        }
    }

    /// Same quotes after reflecting prices about `pivot` and swapping sides.
    pub fn mirrored(&self, pivot: Price) -> TopOfBook {
        let flip = |q: Option<Quote>| q.map(|q| Quote { price: pivot - q.price, size: q.size });
        TopOfBook { bid: flip(self.ask), ask: flip(self.bid) }
    }
}

/// One execution between an incoming (taker) order and a resting (maker) order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Trade {
    pub price: Price,
    pub size: Qty,
    pub aggressor_side: Side,
    pub maker_id: OrderId,
    pub taker_id: OrderId,
    pub timestamp_ms: u64,
}

/// A change of the top-of-book quadruple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BestLimitUpdate {
    /// Position on the day's update clock, starting at 0.
    pub seq: usize,
    pub day: DayId,
    pub timestamp_ms: u64,
    pub pre: TopOfBook,
    pub post: TopOfBook,
}

/// The 12-way aggressiveness taxonomy: buys are 1..=6, sells 7..=12.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrderType(u8);

impl OrderType {
    pub const ALL: [OrderType; 12] = [
        OrderType(1),
        OrderType(2),
        OrderType(3),
        OrderType(4),
        OrderType(5),
        OrderType(6),
        OrderType(7),
        OrderType(8),
        OrderType(9),
        OrderType(10),
        OrderType(11),
        OrderType(12),
    ];
    /// Effective market orders.
    pub const EFFECTIVE: [OrderType; 6] =
        [OrderType(1), OrderType(2), OrderType(3), OrderType(7), OrderType(8), OrderType(9)];
    /// Limit order types whose intensity drives book recovery.
    pub const RECOVERY: [OrderType; 4] = [OrderType(4), OrderType(5), OrderType(10), OrderType(11)];

    pub fn new(code: u8) -> Option<OrderType> {
        (1..=12).contains(&code).then_some(OrderType(code))
    }

    pub fn code(self) -> u8 {
        self.0
    }

    pub fn side(self) -> Side {
        if self.0 <= 6 {
            Side::Buy
        } else {
            Side::Sell
        }
    }

    /// Types 1-3 and 7-9.
    pub fn is_effective_market(self) -> bool {
        matches!(self.0, 1..=3 | 7..=9)
    }

    /// Maps a buy type to its sell counterpart and vice versa.
    pub fn mirror(self) -> OrderType {
        if self.0 <= 6 {
            OrderType(self.0 + 6)
        } else {
            OrderType(self.0 - 6)
        }
    }

    pub(crate) fn index(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for OrderType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "type{}", self.0)
    }
}
