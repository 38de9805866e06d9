//! Helpers shared by the integration and acceptance targets: random stream
//! builders and independent reference computations.

#![allow(dead_code)]

use lobres::book::{BookEngine, OrderBook};
use lobres::resiliency::EventWindow;
use lobres::seasonality::SeasonalFactors;
use lobres::types::{DayFlow, OrderEvent, OrderId, OrderType, Side, SnapshotOrder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Arbitrary day of raw events around a 1000-tick mid, including invalid
/// ones (unknown cancels, oversized cancels, duplicate ids, zero sizes).
pub fn random_day(seed: u64, n: usize) -> DayFlow {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut snapshot = Vec::new();
    for i in 0..rng.random_range(0..6) {
        snapshot.push(SnapshotOrder { side: Side::Buy, price: 999 - i, size: rng.random_range(1..400) });
        snapshot.push(SnapshotOrder { side: Side::Sell, price: 1001 + i, size: rng.random_range(1..400) });
    }
    let mut live: Vec<(OrderId, Side, i64, u64)> = Vec::new();
    let mut events = Vec::with_capacity(n);
    let mut ts = 0u64;
    let mut next_id: OrderId = 1;
    for _ in 0..n {
        ts += rng.random_range(0..3);
        let roll = rng.random_range(0..100);
        let ev = if roll < 60 || live.is_empty() {
            let side = if rng.random_bool(0.5) { Side::Buy } else { Side::Sell };
            let price = 1000 + rng.random_range(-8..=8);
            let size = rng.random_range(1..=300);
            let id = if roll == 0 && next_id > 1 { rng.random_range(1..next_id) } else { next_id };
            if id == next_id {
                next_id += 1;
            }
            live.push((id, side, price, size));
            OrderEvent::submit(1, ts, id, side, price, if roll == 1 { 0 } else { size })
        } else if roll < 95 {
            let i = rng.random_range(0..live.len());
            let (id, side, price, size) = live[i];
            let cut = rng.random_range(1..=size + 20);
            if cut >= size {
                live.swap_remove(i);
            } else {
                live[i].3 -= cut;
            }
            OrderEvent::cancel(1, ts, id, side, price, cut)
        } else {
            OrderEvent::cancel(1, ts, next_id + 1_000_000, Side::Buy, 1000, 1)
        };
        events.push(ev);
    }
    DayFlow { day: 1, snapshot, events }
}

/// Everything observable from applying one event.
#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Applied {
        top: lobres::types::TopOfBook,
        trades: Vec<lobres::types::Trade>,
        update: Option<lobres::types::BestLimitUpdate>,
    },
    Rejected(String),
}

/// Runs `day` through `engine`, returning one step per event.
pub fn trajectory(engine: Box<dyn BookEngine>, day: &DayFlow) -> Vec<Step> {
    let mut book = OrderBook::new(engine);
    book.start_day(day.day);
    book.seed(&day.snapshot).expect("snapshot");
    day.events
        .iter()
        .map(|ev| match book.apply(ev) {
            Ok(o) => Step::Applied { top: lobres::book::best_quotes(&book), trades: o.trades, update: o.update },
            Err(e) => Step::Rejected(e.to_string()),
        })
        .collect()
}

/// OLS through the normal equations XᵀX b = Xᵀy solved by Gauss-Jordan
/// elimination with partial pivoting. Returns the coefficients and
/// (XᵀX)⁻¹.
pub fn normal_equations(rows: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let k = rows[0].len();
    let mut a = vec![vec![0.0; 2 * k + 1]; k];
    for (row, &yi) in rows.iter().zip(y) {
        for i in 0..k {
            for j in 0..k {
                a[i][j] += row[i] * row[j];
            }
            a[i][2 * k] += row[i] * yi;
        }
    }
    for (i, r) in a.iter_mut().enumerate() {
        r[k + i] = 1.0;
    }
    for col in 0..k {
        let pivot = (col..k).max_by(|&x, &z| a[x][col].abs().total_cmp(&a[z][col].abs())).unwrap();
        a.swap(col, pivot);
        let p = a[col][col];
        assert!(p.abs() > 1e-300, "singular normal equations");
        for v in a[col].iter_mut() {
            *v /= p;
        }
        for r in 0..k {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    let pivot_row = a[col].clone();
                    for (v, pv) in a[r].iter_mut().zip(pivot_row) {
                        *v -= f * pv;
                    }
                }
            }
        }
    }
    let beta = a.iter().map(|r| r[2 * k]).collect();
    let inv = a.iter().map(|r| r[k..2 * k].to_vec()).collect();
    (beta, inv)
}

/// FFF regressor row written out independently of the library.
pub fn fff_row(tau: usize, t_len: usize, q: usize, p: usize) -> Vec<f64> {
    let x = tau as f64 / t_len as f64;
    let mut row: Vec<f64> = (0..=q).map(|i| x.powi(i as i32)).collect();
    for j in 1..=p {
        let a = 2.0 * std::f64::consts::PI * j as f64 * x;
        row.push(a.cos());
        row.push(a.sin());
    }
    row
}

/// Series selector for the brute-force averages.
#[derive(Debug, Clone, Copy)]
pub enum Series {
    Spread,
    Bid,
    Ask,
    Intensity(OrderType),
}

/// Two-pass reference average: gathers every valid deseasonalized
/// observation per offset, then averages; level series are normalized by
/// their offset-0 mean.
pub fn brute_force_curve(
    windows: &[EventWindow],
    series: Series,
    factors: &SeasonalFactors,
) -> Vec<(i32, Option<f64>, usize)> {
    let offsets: Vec<i32> = match series {
        Series::Intensity(_) => {
            let m = windows[0].minute_half_width() as i32;
            (-m..=-1).chain(1..=m).collect()
        }
        _ => {
            let h = windows[0].update_half_width() as i32;
            (-h..=h).collect()
        }
    };
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); offsets.len()];
    for w in windows {
        for (i, &t) in offsets.iter().enumerate() {
            let value = match series {
                Series::Spread | Series::Bid | Series::Ask => {
                    let s = match series {
                        Series::Spread => w.spread_at(t),
                        Series::Bid => w.depth_bid_at(t),
                        _ => w.depth_ask_at(t),
                    };
                    s.and_then(|s| {
                        let (f, floored) = factors.get(s.tau);
                        (!floored).then(|| s.value / f)
                    })
                }
                Series::Intensity(k) => w.intensity_at(k, t).and_then(|o| {
                    let (lo, a) = factors.get(o.tau_lo);
                    let (hi, b) = factors.get(o.tau_hi);
                    (!(a && b)).then(|| o.count as f64 / ((lo + hi) / 2.0))
                }),
            };
            if let Some(v) = value {
                columns[i].push(v);
            }
        }
    }
    let means: Vec<Option<f64>> =
        columns.iter().map(|c| (!c.is_empty()).then(|| c.iter().sum::<f64>() / c.len() as f64)).collect();
    let base = match series {
        Series::Intensity(_) => None,
        _ => Some(means[offsets.iter().position(|&t| t == 0).unwrap()]),
    };
    offsets
        .iter()
        .zip(means)
        .zip(&columns)
        .map(|((&t, m), c)| {
            let v = match base {
                None => m,
                Some(b) => m.zip(b).map(|(m, b)| 100.0 * m / b),
            };
            (t, v, c.len())
        })
        .collect()
}

/// Relative closeness used for float curve comparisons.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
