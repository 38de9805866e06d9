//! Seeded zero-intelligence order flow.
//!
//! Limit orders, marketable orders and cancels arrive as independent
//! Poisson streams. Limit prices sit either inside the spread or a
//! geometrically distributed number of ticks behind the same-side best;
//! sizes are log-normal, rounded to lots. The generator keeps both sides of
//! the book populated by suppressing cancels and capping marketable orders
//! that would empty a side.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Geometric, LogNormal};

use crate::book::{BookView, OrderBook, PriceLevelEngine};
use crate::error::Error;
use crate::types::{
    Action, DayFlow, DayId, OrderEvent, OrderFlow, OrderId, OrderType, Price, Qty, Side, SnapshotOrder, MINUTE_MS,
};

#[derive(Debug, Clone, PartialEq)]
pub struct FlowParams {
    /// Non-marketable limit orders per minute.
    pub limit_rate: f64,
    /// Marketable orders per minute.
    pub market_rate: f64,
    /// Cancels per minute.
    pub cancel_rate: f64,
    /// Chance a limit order is placed strictly inside a spread of 2+ ticks.
    pub in_spread_prob: f64,
    /// Success probability of the geometric distance (ticks) behind the
    /// same-side best for limit orders outside the spread.
    pub placement_geom_p: f64,
    /// Chance a marketable order's limit price reaches one level deeper,
    /// applied repeatedly.
    pub market_deep_prob: f64,
    pub size_mu: f64,
    pub size_sigma: f64,
    pub lot: Qty,
    pub initial_mid: Price,
    pub bootstrap_levels: usize,
    /// Shares resting at each bootstrap level.
    pub bootstrap_depth: Qty,
    pub days: u32,
    pub session_minutes: usize,
    pub seed: u64,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            limit_rate: 40.0,
            market_rate: 8.0,
            cancel_rate: 25.0,
            in_spread_prob: 0.3,
            placement_geom_p: 0.4,
            market_deep_prob: 0.15,
            size_mu: 5.5,
            size_sigma: 0.8,
            lot: 100,
            initial_mid: 1000,
            bootstrap_levels: 10,
            bootstrap_depth: 2_000,
            days: 5,
            session_minutes: 240,
            seed: 42,
        }
    }
}

impl FlowParams {
    pub fn validate(&self) -> Result<(), Error> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        for (name, r) in
            [("limit_rate", self.limit_rate), ("market_rate", self.market_rate), ("cancel_rate", self.cancel_rate)]
        {
            if !(r.is_finite() && r >= 0.0) {
                return bad(&format!("{name} must be a finite rate >= 0"));
            }
        }
        for (name, p) in [("in_spread_prob", self.in_spread_prob), ("market_deep_prob", self.market_deep_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(&format!("{name} must lie in [0, 1]"));
            }
        }
        if !(self.placement_geom_p > 0.0 && self.placement_geom_p <= 1.0) {
            return bad("placement_geom_p must lie in (0, 1]");
        }
        if !(self.size_sigma.is_finite() && self.size_sigma >= 0.0 && self.size_mu.is_finite()) {
            return bad("size distribution parameters must be finite with sigma >= 0");
        }
        if self.lot == 0 || self.bootstrap_depth == 0 || self.bootstrap_levels == 0 {
            return bad("lot, bootstrap_depth and bootstrap_levels must be positive");
        }
        if self.initial_mid <= self.bootstrap_levels as Price + 1 {
            return bad("initial_mid too low for the bootstrap ladder");
        }
        if self.session_minutes == 0 {
            return bad("session_minutes must be positive");
        }
        Ok(())
    }

    /// Bootstrap ladder: `bootstrap_levels` levels per side starting one
    /// tick away from the mid.
    pub fn bootstrap(&self) -> Vec<SnapshotOrder> {
        (0..self.bootstrap_levels as Price)
            .flat_map(|i| {
                [
                    SnapshotOrder { side: Side::Buy, price: self.initial_mid - 1 - i, size: self.bootstrap_depth },
                    SnapshotOrder { side: Side::Sell, price: self.initial_mid + 1 + i, size: self.bootstrap_depth },
                ]
            })
            .collect()
    }
}

/// Ids of generator-owned resting orders, with O(1) removal and uniform
/// sampling in a deterministic order.
#[derive(Default)]
struct LiveOrders {
    ids: Vec<OrderId>,
    pos: HashMap<OrderId, usize>,
}

impl LiveOrders {
    fn insert(&mut self, id: OrderId) {
        self.pos.insert(id, self.ids.len());
        self.ids.push(id);
    }

    fn remove(&mut self, id: OrderId) {
        if let Some(i) = self.pos.remove(&id) {
            self.ids.swap_remove(i);
            if let Some(&moved) = self.ids.get(i) {
                self.pos.insert(moved, i);
            }
        }
    }
}

struct DayGenerator<'a> {
    params: &'a FlowParams,
    rng: ChaCha8Rng,
    book: OrderBook,
    live: LiveOrders,
    day: DayId,
    next_id: OrderId,
    sizes: LogNormal<f64>,
    placement: Geometric,
}

impl DayGenerator<'_> {
    fn size(&mut self) -> Qty {
        let raw = self.sizes.sample(&mut self.rng);
        let lots = (raw / self.params.lot as f64).round().max(1.0);
        lots as Qty * self.params.lot
    }

    fn limit_order(&mut self, ts: u64) -> Option<OrderEvent> {
        let side = if self.rng.random_bool(0.5) { Side::Buy } else { Side::Sell };
        let top = self.book.top();
        let in_spread = match top.spread() {
            Some(s) if s >= 2 => self.rng.random_bool(self.params.in_spread_prob),
            _ => false,
        };
        let price = if in_spread {
            let (b, a) = (top.bid?.price, top.ask?.price);
            self.rng.random_range(b + 1..a)
        } else {
            let k = self.placement.sample(&mut self.rng) as Price;
            match (side, top.side(side), top.side(side.opposite())) {
                (Side::Buy, Some(own), _) => own.price - k,
                (Side::Sell, Some(own), _) => own.price + k,
                (Side::Buy, None, Some(opp)) => opp.price - 1 - k,
                (Side::Sell, None, Some(opp)) => opp.price + 1 + k,
                (Side::Buy, None, None) => self.params.initial_mid - 1 - k,
                (Side::Sell, None, None) => self.params.initial_mid + 1 + k,
            }
        };
        if price < 1 {
            return None;
        }
        let size = self.size();
        Some(OrderEvent::submit(self.day, ts, self.take_id(), side, price, size))
    }

    fn market_order(&mut self, ts: u64) -> Option<OrderEvent> {
        let side = if self.rng.random_bool(0.5) { Side::Buy } else { Side::Sell };
        let levels = self.book.levels(side.opposite());
        if levels.is_empty() {
            return None;
        }
        let mut depth = 1;
        while depth < levels.len() && self.rng.random_bool(self.params.market_deep_prob) {
            depth += 1;
        }
        let price = levels[depth - 1].0;
        let reachable: Qty = levels[..depth].iter().map(|l| l.1).sum();
        let total: Qty = levels.iter().map(|l| l.1).sum();
        let mut size = self.size();
        if size.min(reachable) >= total {
            size = total - 1;
        }
        if size == 0 {
            return None;
        }
        Some(OrderEvent::submit(self.day, ts, self.take_id(), side, price, size))
    }

    fn cancel(&mut self, ts: u64) -> Option<OrderEvent> {
        if self.live.ids.is_empty() {
            return None;
        }
        let id = self.live.ids[self.rng.random_range(0..self.live.ids.len())];
        let (side, price, remaining) = self.book.resting(id)?;
        let mut others = 0;
        self.book.for_each_level(side, &mut |_, v| {
            others += v;
            others <= remaining
        });
        if others <= remaining {
            return None;
        }
        Some(OrderEvent::cancel(self.day, ts, id, side, price, remaining))
    }

    fn take_id(&mut self) -> OrderId {
        self.next_id += 1;
        self.next_id
    }

    fn apply(&mut self, ev: &OrderEvent) -> Result<(), Error> {
        let out = self.book.apply(ev)?;
        for t in &out.trades {
            if self.book.resting(t.maker_id).is_none() {
                self.live.remove(t.maker_id);
            }
        }
        match ev.action {
            Action::Submit if out.exec.remaining > 0 => self.live.insert(ev.order_id),
            Action::Cancel if self.book.resting(ev.order_id).is_none() => self.live.remove(ev.order_id),
            _ => {}
        }
        Ok(())
    }
}

fn day_rng(seed: u64, day: DayId) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(day));
    rng
}

/// Generates one day of flow.
pub fn generate_day(params: &FlowParams, day: DayId) -> Result<DayFlow, Error> {
    params.validate()?;
    let snapshot = params.bootstrap();
    let mut book = OrderBook::new(Box::new(PriceLevelEngine::default()));
    book.start_day(day);
    book.seed(&snapshot)?;
    let mut g = DayGenerator {
        params,
        rng: day_rng(params.seed, day),
        book,
        live: LiveOrders::default(),
        day,
        next_id: 0,
        sizes: LogNormal::new(params.size_mu, params.size_sigma).map_err(|e| Error::Config(e.to_string()))?,
        placement: Geometric::new(params.placement_geom_p).map_err(|e| Error::Config(e.to_string()))?,
    };
    let total_rate = params.limit_rate + params.market_rate + params.cancel_rate;
    let mut events = Vec::new();
    if total_rate > 0.0 {
        let gaps = Exp::new(total_rate).map_err(|e| Error::Config(e.to_string()))?;
        let horizon = params.session_minutes as f64;
        let mut clock = 0.0;
        loop {
            clock += gaps.sample(&mut g.rng);
            if clock >= horizon {
                break;
            }
            let ts = ((clock * MINUTE_MS as f64) as u64).min(params.session_minutes as u64 * MINUTE_MS - 1);
            let pick = g.rng.random::<f64>() * total_rate;
            let ev = if pick < params.limit_rate {
                g.limit_order(ts)
            } else if pick < params.limit_rate + params.market_rate {
                g.market_order(ts)
            } else {
                g.cancel(ts)
            };
            if let Some(ev) = ev {
                g.apply(&ev)?;
                events.push(ev);
            }
        }
    }
    Ok(DayFlow { day, snapshot, events })
}

/// Generates `params.days` days numbered from 1. Each day draws from its own
/// random stream, so output is fixed by the parameters alone.
pub fn generate(params: &FlowParams) -> Result<OrderFlow, Error> {
    use rayon::prelude::*;
    params.validate()?;
    let days = (1..=params.days).into_par_iter().map(|d| generate_day(params, d)).collect::<Result<_, _>>()?;
    Ok(OrderFlow { days })
}

/// A request to insert one effective market order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShockSpec {
    pub day: DayId,
    pub timestamp_ms: u64,
    /// One of 1, 2, 3, 7, 8, 9.
    pub order_type: OrderType,
    /// Penetrability for types 1/7 (at least 2), unexecuted remainder for
    /// types 2/8, order size for types 3/9. Sizes of types 3/9 are clamped
    /// so the best opposite level keeps at least one share.
    pub magnitude: Qty,
}

/// Where an injected order ended up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InjectedShock {
    pub spec: ShockSpec,
    pub order_id: OrderId,
    pub event_index: usize,
}

/// Buy-relative code (1, 2 or 3) of an effective type.
fn base_code(t: OrderType) -> Option<u8> {
    t.is_effective_market().then(|| (t.code() - 1) % 6 + 1)
}

fn feasible(levels: &[(Price, Qty)], code: u8, magnitude: Qty) -> bool {
    match code {
        1 => {
            let p = magnitude as usize;
            p >= 2 && (levels.len() > p || (levels.len() == p && levels[p - 1].1 >= 2))
        }
        2 => levels.len() >= 2,
        3 => levels.first().is_some_and(|l| l.1 >= 2),
        _ => false,
    }
}

fn build_shock(book: &OrderBook, spec: &ShockSpec, id: OrderId) -> Result<OrderEvent, Error> {
    let code = base_code(spec.order_type)
        .ok_or_else(|| Error::Shock(format!("{} is not an effective market order type", spec.order_type)))?;
    let side = spec.order_type.side();
    let levels = book.levels(side.opposite());
    if !feasible(&levels, code, spec.magnitude) {
        let ok: Vec<String> = OrderType::EFFECTIVE
            .iter()
            .filter(|t| t.side() == side && feasible(&levels, base_code(**t).unwrap(), spec.magnitude.max(2)))
            .map(ToString::to_string)
            .collect();
        return Err(Error::Shock(format!(
            "{} (magnitude {}) infeasible on day {} at {} ms with {} opposite levels; feasible: [{}]",
            spec.order_type,
            spec.magnitude,
            spec.day,
            spec.timestamp_ms,
            levels.len(),
            ok.join(", ")
        )));
    }
    let (price, size) = match code {
        1 => {
            let p = spec.magnitude as usize;
            let before: Qty = levels[..p - 1].iter().map(|l| l.1).sum();
            let last = levels[p - 1].1;
            (levels[p - 1].0, before + (last / 2).max(1))
        }
        2 => (levels[0].0, levels[0].1 + spec.magnitude.max(1)),
        _ => (levels[0].0, spec.magnitude.clamp(1, levels[0].1 - 1)),
    };
    Ok(OrderEvent::submit(spec.day, spec.timestamp_ms, id, side, price, size))
}

/// Inserts effective market orders into `flow`. Each shock goes after every
/// event at or before its timestamp. Events the shocks invalidate are
/// dropped, and cancels larger than what remains are trimmed.
pub fn inject_shocks(flow: &OrderFlow, specs: &[ShockSpec]) -> Result<(OrderFlow, Vec<InjectedShock>), Error> {
    let mut out = OrderFlow::default();
    let mut injected = Vec::new();
    for day in &flow.days {
        let mut todo: Vec<ShockSpec> = specs.iter().filter(|s| s.day == day.day).copied().collect();
        todo.sort_by_key(|s| s.timestamp_ms);
        if todo.is_empty() {
            out.days.push(day.clone());
            continue;
        }
        let mut next_id = day.events.iter().map(|e| e.order_id).max().unwrap_or(0);
        let mut book = OrderBook::new(Box::new(PriceLevelEngine::default()));
        book.start_day(day.day);
        book.seed(&day.snapshot)?;
        let mut events = Vec::with_capacity(day.events.len() + todo.len());
        let mut pending = todo.into_iter().peekable();
        let mut inject_until = |limit: Option<u64>, book: &mut OrderBook, events: &mut Vec<OrderEvent>| {
            while let Some(spec) = pending.next_if(|s| limit.is_none_or(|l| s.timestamp_ms < l)) {
                next_id += 1;
                let ev = build_shock(book, &spec, next_id)?;
                book.apply(&ev)?;
                injected.push(InjectedShock { spec, order_id: ev.order_id, event_index: events.len() });
                events.push(ev);
            }
            Ok::<(), Error>(())
        };
        for ev in &day.events {
            inject_until(Some(ev.timestamp_ms), &mut book, &mut events)?;
            let mut ev = *ev;
            if ev.action == Action::Cancel {
                match book.resting(ev.order_id) {
                    Some((_, _, remaining)) => ev.size = ev.size.min(remaining),
                    None => continue,
                }
            }
            match book.apply(&ev) {
                Ok(_) => events.push(ev),
                Err(e) if e.is_internal() => return Err(e.into()),
                Err(_) => {}
            }
        }
        inject_until(None, &mut book, &mut events)?;
        out.days.push(DayFlow { day: day.day, snapshot: day.snapshot.clone(), events });
    }
    if injected.len() != specs.len() {
        return Err(Error::Shock(format!(
            "{} of {} shocks name days absent from the flow",
            specs.len() - injected.len(),
            specs.len()
        )));
    }
    Ok((out, injected))
}

/// Single-shock form of [`inject_shocks`].
pub fn inject_shock(flow: &OrderFlow, spec: ShockSpec) -> Result<(OrderFlow, InjectedShock), Error> {
    let (flow, mut shocks) = inject_shocks(flow, &[spec])?;
    Ok((flow, shocks.remove(0)))
}
