//! Order-flow and bootstrap-snapshot CSV files.
//!
//! Order flow: `day,timestamp_ms,order_id,side,price,size,action` with side
//! `B`/`S`, action `S` (submit) / `C` (cancel) and prices in currency units
//! with exactly two decimals. Snapshot: `day,side,price,size`.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::Error;
use crate::session::Session;
use crate::types::{Action, DayFlow, DayId, OrderEvent, OrderFlow, Price, Side, SnapshotOrder, BOOTSTRAP_ID_BASE};

pub const ORDERS_HEADER: [&str; 7] = ["day", "timestamp_ms", "order_id", "side", "price", "size", "action"];
pub const SNAPSHOT_HEADER: [&str; 4] = ["day", "side", "price", "size"];

/// Fraction of bad order rows above which ingest aborts.
pub const MAX_BAD_ROW_FRACTION: f64 = 0.01;

/// Converts between two-decimal price strings and integer ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PriceFormat {
    tick_cents: i64,
}

impl PriceFormat {
    pub fn new(tick_cents: i64) -> Self {
        assert!(tick_cents > 0, "tick must be positive");
        Self { tick_cents }
    }

    pub fn parse(&self, s: &str) -> Result<Price, String> {
        let (units, frac) = s.split_once('.').ok_or_else(|| format!("price `{s}` needs two decimals"))?;
        let digits = |d: &str| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit());
        if !digits(units) || frac.len() != 2 || !digits(frac) {
            return Err(format!("price `{s}` must look like 12.34"));
        }
        let cents = units
            .parse::<i64>()
            .ok()
            .and_then(|u| u.checked_mul(100))
            .and_then(|c| c.checked_add(frac.parse::<i64>().ok()?))
            .ok_or_else(|| format!("price `{s}` out of range"))?;
        if cents % self.tick_cents != 0 {
            return Err(format!("price `{s}` is not on the tick grid"));
        }
        let ticks = cents / self.tick_cents;
        if ticks <= 0 {
            return Err(format!("price `{s}` must be positive"));
        }
        Ok(ticks)
    }

    pub fn format(&self, ticks: Price) -> String {
        let cents = ticks * self.tick_cents;
        format!("{}.{:02}", cents / 100, cents % 100)
    }
}

impl Default for PriceFormat {
    fn default() -> Self {
        Self::new(1)
    }
}

/// A rejected input row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    /// 1-based line number in the file, header included.
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub rows: usize,
    pub bad_rows: Vec<RowError>,
}

fn field(rec: &csv::StringRecord, i: usize) -> &str {
    rec.get(i).unwrap_or("").trim()
}

fn check_header(rdr: &mut csv::Reader<impl Read>, expected: &[&str], what: &str) -> Result<(), Error> {
    let header = rdr.headers()?;
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != expected {
        return Err(Error::Input(format!("{what} header must be `{}`, got `{}`", expected.join(","), got.join(","))));
    }
    Ok(())
}

fn parse_order_row(rec: &csv::StringRecord, session: &Session, prices: &PriceFormat) -> Result<OrderEvent, String> {
    if rec.len() != ORDERS_HEADER.len() {
        return Err(format!("expected {} fields, found {}", ORDERS_HEADER.len(), rec.len()));
    }
    let day: DayId = field(rec, 0).parse().map_err(|_| format!("bad day `{}`", field(rec, 0)))?;
    let ts: u64 = field(rec, 1).parse().map_err(|_| format!("bad timestamp `{}`", field(rec, 1)))?;
    if !session.contains(ts) {
        return Err(format!("timestamp {ts} outside the {}-minute session", session.total_minutes()));
    }
    let order_id: u64 = field(rec, 2).parse().map_err(|_| format!("bad order id `{}`", field(rec, 2)))?;
    if order_id >= BOOTSTRAP_ID_BASE {
        return Err(format!("order id {order_id} is reserved"));
    }
    let side = Side::from_code(field(rec, 3)).ok_or_else(|| format!("unknown side `{}`", field(rec, 3)))?;
    let price = prices.parse(field(rec, 4))?;
    let size_text = field(rec, 5);
    let size: i64 = size_text.parse().map_err(|_| format!("bad size `{size_text}`"))?;
    if size <= 0 {
        return Err(format!("size must be positive, got {size}"));
    }
    let action = Action::from_code(field(rec, 6)).ok_or_else(|| format!("unknown action `{}`", field(rec, 6)))?;
    Ok(OrderEvent { day, timestamp_ms: ts, order_id, side, price, size: size as u64, action })
}

/// Reads an order-flow file. Bad rows are skipped and reported; more than
/// [`MAX_BAD_ROW_FRACTION`] of them aborts the read. Events come back
/// grouped by day and stably sorted by timestamp.
pub fn read_orders<R: Read>(
    input: R,
    session: &Session,
    prices: &PriceFormat,
) -> Result<(BTreeMap<DayId, Vec<OrderEvent>>, IngestReport), Error> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    check_header(&mut rdr, &ORDERS_HEADER, "order file")?;
    let mut report = IngestReport::default();
    let mut days: BTreeMap<DayId, Vec<OrderEvent>> = BTreeMap::new();
    let mut rec = csv::StringRecord::new();
    loop {
        let line = rdr.position().line();
        match rdr.read_record(&mut rec) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                report.rows += 1;
                report.bad_rows.push(RowError { line, message: e.to_string() });
                continue;
            }
        }
        report.rows += 1;
        let line = rec.position().map_or(line, |p| p.line());
        match parse_order_row(&rec, session, prices) {
            Ok(ev) => days.entry(ev.day).or_default().push(ev),
            Err(message) => report.bad_rows.push(RowError { line, message }),
        }
    }
    for e in &report.bad_rows {
        log::warn!("line {}: {}", e.line, e.message);
    }
    if report.rows > 0 && report.bad_rows.len() as f64 > MAX_BAD_ROW_FRACTION * report.rows as f64 {
        let first = &report.bad_rows[0];
        return Err(Error::Input(format!(
            "{} of {} order rows are malformed (limit {}%); first at line {}: {}",
            report.bad_rows.len(),
            report.rows,
            MAX_BAD_ROW_FRACTION * 100.0,
            first.line,
            first.message
        )));
    }
    for events in days.values_mut() {
        events.sort_by_key(|e| e.timestamp_ms);
    }
    Ok((days, report))
}

/// Reads a bootstrap snapshot file; any malformed row is an error.
pub fn read_snapshot<R: Read>(input: R, prices: &PriceFormat) -> Result<BTreeMap<DayId, Vec<SnapshotOrder>>, Error> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    check_header(&mut rdr, &SNAPSHOT_HEADER, "snapshot file")?;
    let mut out: BTreeMap<DayId, Vec<SnapshotOrder>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |m: String| Error::Input(format!("snapshot line {line}: {m}"));
        if rec.len() != SNAPSHOT_HEADER.len() {
            return Err(bad(format!("expected 4 fields, found {}", rec.len())));
        }
        let day: DayId = field(&rec, 0).parse().map_err(|_| bad("bad day".into()))?;
        let side = Side::from_code(field(&rec, 1)).ok_or_else(|| bad(format!("unknown side `{}`", field(&rec, 1))))?;
        let price = prices.parse(field(&rec, 2)).map_err(bad)?;
        let size: u64 = field(&rec, 3).parse().map_err(|_| bad(format!("bad size `{}`", field(&rec, 3))))?;
        if size == 0 {
            return Err(bad("size must be positive".into()));
        }
        out.entry(day).or_default().push(SnapshotOrder { side, price, size });
    }
    Ok(out)
}

/// Combines order and snapshot tables into per-day flows. Days present in
/// either file are included.
pub fn assemble(
    mut events: BTreeMap<DayId, Vec<OrderEvent>>,
    mut snapshots: BTreeMap<DayId, Vec<SnapshotOrder>>,
) -> OrderFlow {
    let mut days: Vec<DayId> = events.keys().chain(snapshots.keys()).copied().collect();
    days.sort_unstable();
    days.dedup();
    OrderFlow {
        days: days
            .into_iter()
            .map(|day| DayFlow {
                day,
                snapshot: snapshots.remove(&day).unwrap_or_default(),
                events: events.remove(&day).unwrap_or_default(),
            })
            .collect(),
    }
}

/// Reads and validates an order file plus optional snapshot file.
pub fn ingest(
    orders: &Path,
    snapshot: Option<&Path>,
    session: &Session,
    prices: &PriceFormat,
) -> Result<(OrderFlow, IngestReport), Error> {
    let f = std::fs::File::open(orders).map_err(|e| Error::io(orders, e))?;
    let (events, report) = read_orders(std::io::BufReader::new(f), session, prices)?;
    let snaps = match snapshot {
        Some(p) => {
            let f = std::fs::File::open(p).map_err(|e| Error::io(p, e))?;
            read_snapshot(std::io::BufReader::new(f), prices)?
        }
        None => BTreeMap::new(),
    };
    Ok((assemble(events, snaps), report))
}

pub fn write_orders<W: Write>(flow: &OrderFlow, out: W, prices: &PriceFormat) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ORDERS_HEADER)?;
    for e in flow.days.iter().flat_map(|d| &d.events) {
        w.write_record([
            e.day.to_string(),
            e.timestamp_ms.to_string(),
            e.order_id.to_string(),
            e.side.code().to_string(),
            prices.format(e.price),
            e.size.to_string(),
            e.action.code().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_snapshot<W: Write>(flow: &OrderFlow, out: W, prices: &PriceFormat) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SNAPSHOT_HEADER)?;
    for d in &flow.days {
        for o in &d.snapshot {
            w.write_record([d.day.to_string(), o.side.code().to_string(), prices.format(o.price), o.size.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
