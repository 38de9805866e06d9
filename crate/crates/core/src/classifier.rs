//! Penetrability and the 12-type aggressiveness classification.
//!
//! Every quantity here is measured on the book strictly before the order
//! arrives. An order's executed volume decides whether it is an effective
//! market order (p >= 1) or an effective limit order (p = 0); within each
//! class the price relative to the pre-arrival quotes picks the type.

use std::io::Write;

use thiserror::Error;

use crate::book::{BookView, ExecSummary};
use crate::types::{OrderEvent, OrderType, Price, Qty, Side, TopOfBook};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClassifyError {
    #[error("executed volume {executed} exceeds the {available} shares resting on the opposite side")]
    ExceedsOpposite { executed: Qty, available: Qty },
    #[error("order {order_id} priced at {price} crosses the opposite best {opposite} but executed nothing")]
    MarketableUnexecuted { order_id: u64, price: Price, opposite: Price },
    #[error("executed {executed} + remaining {remaining} does not add up to size {size}")]
    SizeMismatch { executed: Qty, remaining: Qty, size: Qty },
}

/// Spread buckets in ticks, given by strictly increasing lower edges. The
/// last bucket is open-ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpreadBuckets {
    lower: Vec<i64>,
}

impl SpreadBuckets {
    pub fn new(lower: Vec<i64>) -> Option<Self> {
        let increasing = lower.windows(2).all(|w| w[0] < w[1]);
        (!lower.is_empty() && increasing && lower[0] >= 1).then_some(Self { lower })
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn edges(&self) -> &[i64] {
        &self.lower
    }

    pub fn bucket_of(&self, spread: i64) -> Option<usize> {
        self.lower.iter().rposition(|&lo| lo <= spread)
    }

    /// Column label, e.g. `s=1`, `s=5..9` or `s>=4`.
    pub fn label(&self, bucket: usize) -> String {
        let lo = self.lower[bucket];
        match self.lower.get(bucket + 1) {
            None => format!("s>={lo}"),
            Some(&hi) if hi == lo + 1 => format!("s={lo}"),
            Some(&hi) => format!("s={lo}..{}", hi - 1),
        }
    }
}

impl Default for SpreadBuckets {
    fn default() -> Self {
        Self { lower: vec![1, 2, 3, 4] }
    }
}

/// A submitted order annotated with its aggressiveness type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassifiedOrder {
    pub event: OrderEvent,
    pub order_type: OrderType,
    pub penetrability: u32,
    pub exec: ExecSummary,
    /// Top of book at 0⁻.
    pub pre_top: TopOfBook,
    pub pre_spread: Option<i64>,
    pub spread_bucket: Option<usize>,
}

/// Number of opposite levels the executed part of an order consumes:
/// the smallest j with `executed <= V_1 + ... + V_j`, or 0 when nothing executed.
pub fn penetrability(book: &dyn BookView, side: Side, executed: Qty) -> Result<u32, ClassifyError> {
    if executed == 0 {
        return Ok(0);
    }
    let mut cumulative = 0;
    let mut levels = 0u32;
    book.for_each_level(side.opposite(), &mut |_, volume| {
        cumulative += volume;
        levels += 1;
        cumulative < executed
    });
    if cumulative < executed {
        return Err(ClassifyError::ExceedsOpposite { executed, available: cumulative });
    }
    Ok(levels)
}

/// Classifies `ev` against the pre-arrival `book`, given how much of it the
/// matching engine executed.
pub fn classify(
    book: &dyn BookView,
    ev: &OrderEvent,
    exec: ExecSummary,
    buckets: &SpreadBuckets,
) -> Result<ClassifiedOrder, ClassifyError> {
    if exec.executed + exec.remaining != ev.size {
        return Err(ClassifyError::SizeMismatch { executed: exec.executed, remaining: exec.remaining, size: ev.size });
    }
    let p = penetrability(book, ev.side, exec.executed)?;
    let top = book.top();
    let buy_code = if p > 1 {
        1
    } else if p == 1 {
        if exec.remaining > 0 {
            2
        } else {
            3
        }
    } else {
        limit_code(ev, &top)?
    };
    let code = match ev.side {
        Side::Buy => buy_code,
        Side::Sell => buy_code + 6,
    };
    let pre_spread = top.spread();
    Ok(ClassifiedOrder {
        event: *ev,
        order_type: OrderType::new(code).expect("codes are 1..=12"),
        penetrability: p,
        exec,
        pre_top: top,
        pre_spread,
        spread_bucket: pre_spread.and_then(|s| buckets.bucket_of(s)),
    })
}

/// Buy-side code 4, 5 or 6 for an order that executed nothing. Prices are
/// compared in the order's own direction, so sells mirror onto the same codes.
fn limit_code(ev: &OrderEvent, top: &TopOfBook) -> Result<u8, ClassifyError> {
    // Signed distance "towards the opposite side": positive is more aggressive.
    let toward = |p: Price| match ev.side {
        Side::Buy => p,
        Side::Sell => -p,
    };
    if let Some(opp) = top.side(ev.side.opposite()) {
        if toward(ev.price) >= toward(opp.price) {
            return Err(ClassifyError::MarketableUnexecuted {
                order_id: ev.order_id,
                price: ev.price,
                opposite: opp.price,
            });
        }
    }
    Ok(match top.side(ev.side) {
        Some(own) if ev.price == own.price => 5,
        Some(own) if toward(ev.price) < toward(own.price) => 6,
        _ => 4,
    })
}

/// Counts of the 12 types per pre-arrival spread bucket.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeCountTable {
    pub buckets: SpreadBuckets,
    /// `counts[type - 1][bucket]`.
    pub counts: Vec<Vec<u64>>,
    /// Orders that arrived while one side of the book was empty.
    pub undefined_spread: Vec<u64>,
}

impl TypeCountTable {
    pub fn new(buckets: SpreadBuckets) -> Self {
        let n = buckets.len();
        Self { buckets, counts: vec![vec![0; n]; 12], undefined_spread: vec![0; 12] }
    }

    pub fn add(&mut self, order: &ClassifiedOrder) {
        let row = order.order_type.index();
        match order.spread_bucket {
            Some(b) => self.counts[row][b] += 1,
            None => self.undefined_spread[row] += 1,
        }
    }

    pub fn merge(&mut self, other: &TypeCountTable) {
        for (row, other_row) in self.counts.iter_mut().zip(&other.counts) {
            for (c, o) in row.iter_mut().zip(other_row) {
                *c += o;
            }
        }
        for (c, o) in self.undefined_spread.iter_mut().zip(&other.undefined_spread) {
            *c += o;
        }
    }

    pub fn get(&self, order_type: OrderType, bucket: usize) -> u64 {
        self.counts[order_type.index()][bucket]
    }

    pub fn row_total(&self, order_type: OrderType) -> u64 {
        let i = order_type.index();
        self.counts[i].iter().sum::<u64>() + self.undefined_spread[i]
    }

    pub fn column_total(&self, bucket: usize) -> u64 {
        self.counts.iter().map(|row| row[bucket]).sum()
    }

    pub fn total(&self) -> u64 {
        OrderType::ALL.iter().map(|&t| self.row_total(t)).sum()
    }

    /// One row per type; columns are the spread buckets followed by
    /// `undefined` for orders placed against a one-sided book.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["type".to_string()];
        header.extend((0..self.buckets.len()).map(|b| self.buckets.label(b)));
        header.push("undefined".to_string());
        w.write_record(&header)?;
        for t in OrderType::ALL {
            let mut row = vec![t.code().to_string()];
            row.extend(self.counts[t.index()].iter().map(u64::to_string));
            row.push(self.undefined_spread[t.index()].to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Builds the type-by-spread table of a classified stream.
pub fn tabulate<'a>(orders: impl IntoIterator<Item = &'a ClassifiedOrder>, buckets: &SpreadBuckets) -> TypeCountTable {
    let mut table = TypeCountTable::new(buckets.clone());
    for o in orders {
        table.add(o);
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::book::BookSnapshot;

    fn book() -> BookSnapshot {
        BookSnapshot::from_levels(&[(1000, 500)], &[(1001, 400), (1002, 600)])
    }

    fn buy(price: Price, size: Qty) -> OrderEvent {
        OrderEvent::submit(1, 0, 1, Side::Buy, price, size)
    }

    fn exec(executed: Qty, remaining: Qty) -> ExecSummary {
        ExecSummary { executed, remaining }
    }

    #[test]
    fn penetrability_boundaries() {
        let b = book();
        assert_eq!(penetrability(&b, Side::Buy, 300), Ok(1));
        assert_eq!(penetrability(&b, Side::Buy, 400), Ok(1));
        assert_eq!(penetrability(&b, Side::Buy, 401), Ok(2));
        assert_eq!(penetrability(&b, Side::Buy, 0), Ok(0));
        assert_eq!(penetrability(&b, Side::Sell, 500), Ok(1));
        assert_eq!(
            penetrability(&b, Side::Buy, 1001),
            Err(ClassifyError::ExceedsOpposite { executed: 1001, available: 1000 })
        );
    }

    #[test]
    fn effective_market_buys() {
        let b = book();
        let buckets = SpreadBuckets::default();
        let t3 = classify(&b, &buy(1001, 300), exec(300, 0), &buckets).unwrap();
        assert_eq!((t3.order_type.code(), t3.penetrability), (3, 1));
        let t2 = classify(&b, &buy(1001, 700), exec(400, 300), &buckets).unwrap();
        assert_eq!((t2.order_type.code(), t2.penetrability), (2, 1));
        let t1 = classify(&b, &buy(1002, 700), exec(700, 0), &buckets).unwrap();
        assert_eq!((t1.order_type.code(), t1.penetrability), (1, 2));
        assert_eq!(t1.spread_bucket, Some(0));
        assert_eq!(t1.pre_spread, Some(1));
    }

    #[test]
    fn effective_limit_buys() {
        let b = BookSnapshot::from_levels(&[(1000, 500)], &[(1003, 400)]);
        let buckets = SpreadBuckets::default();
        let code = |price| classify(&b, &buy(price, 100), exec(0, 100), &buckets).unwrap().order_type.code();
        assert_eq!(code(1001), 4);
        assert_eq!(code(1000), 5);
        assert_eq!(code(999), 6);
        let c = classify(&b, &buy(1001, 100), exec(0, 100), &buckets).unwrap();
        assert_eq!(c.spread_bucket, Some(2));
    }

    #[test]
    fn sells_mirror_to_upper_codes() {
        let b = BookSnapshot::from_levels(&[(1000, 500)], &[(1003, 400)]);
        let buckets = SpreadBuckets::default();
        let sell = |price| OrderEvent::submit(1, 0, 1, Side::Sell, price, 100);
        let code = |price| classify(&b, &sell(price), exec(0, 100), &buckets).unwrap().order_type.code();
        assert_eq!(code(1002), 10);
        assert_eq!(code(1003), 11);
        assert_eq!(code(1004), 12);
        let t9 = classify(&b, &sell(1000), exec(100, 0), &buckets).unwrap();
        assert_eq!(t9.order_type.code(), 9);
    }

    #[test]
    fn unexecuted_marketable_order_is_internal_error() {
        let err = classify(&book(), &buy(1001, 10), exec(0, 10), &SpreadBuckets::default()).unwrap_err();
        assert!(matches!(err, ClassifyError::MarketableUnexecuted { .. }));
    }

    #[test]
    fn one_sided_books_use_p0_branch() {
        let buckets = SpreadBuckets::default();
        let no_asks = BookSnapshot::from_levels(&[(1000, 5)], &[]);
        let c = classify(&no_asks, &buy(1010, 10), exec(0, 10), &buckets).unwrap();
        assert_eq!(c.order_type.code(), 4);
        assert_eq!(c.spread_bucket, None);
        let empty = BookSnapshot::default();
        let c = classify(&empty, &buy(1010, 10), exec(0, 10), &buckets).unwrap();
        assert_eq!(c.order_type.code(), 4);
    }

    #[test]
    fn tabulate_examples() {
        let buckets = SpreadBuckets::default();
        let empty = tabulate(std::iter::empty(), &buckets);
        assert_eq!(empty.total(), 0);

        let tight = book();
        let wide = BookSnapshot::from_levels(&[(1000, 500)], &[(1003, 400)]);
        let orders = vec![
            classify(&tight, &buy(1001, 300), exec(300, 0), &buckets).unwrap(),
            classify(&tight, &buy(1001, 700), exec(400, 300), &buckets).unwrap(),
            classify(&tight, &buy(1002, 700), exec(700, 0), &buckets).unwrap(),
            classify(&wide, &buy(1001, 1), exec(0, 1), &buckets).unwrap(),
            classify(&wide, &buy(1000, 1), exec(0, 1), &buckets).unwrap(),
            classify(&wide, &buy(999, 1), exec(0, 1), &buckets).unwrap(),
        ];
        let table = tabulate(&orders, &buckets);
        let t = |c| OrderType::new(c).unwrap();
        for c in [1, 2, 3] {
            assert_eq!(table.get(t(c), 0), 1);
        }
        for c in [4, 5, 6] {
            assert_eq!(table.get(t(c), 2), 1);
        }
        assert_eq!(table.total(), 6);
        assert_eq!((0..4).map(|b| table.column_total(b)).sum::<u64>(), 6);

        let mut csv = Vec::new();
        table.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("type,s=1,s=2,s=3,s>=4,undefined"));
        assert_eq!(lines.next(), Some("1,1,0,0,0,0"));
        assert_eq!(text.lines().count(), 13);
    }

    #[test]
    fn bucket_edges() {
        let b = SpreadBuckets::default();
        assert_eq!(b.bucket_of(1), Some(0));
        assert_eq!(b.bucket_of(3), Some(2));
        assert_eq!(b.bucket_of(4), Some(3));
        assert_eq!(b.bucket_of(40), Some(3));
        assert!(SpreadBuckets::new(vec![1, 1]).is_none());
        assert!(SpreadBuckets::new(vec![]).is_none());
        let custom = SpreadBuckets::new(vec![1, 5, 10]).unwrap();
        assert_eq!(custom.label(1), "s=5..9");
    }
}
