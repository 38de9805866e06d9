mod common;

use common::random_day;
use lobres::book::{BookSnapshot, EngineRegistry, ExecSummary};
use lobres::classifier::{classify, penetrability, tabulate, SpreadBuckets};
use lobres::replay::{replay_day, replay_flow};
use lobres::synth::{generate, FlowParams};
use lobres::types::{OrderEvent, OrderFlow, OrderType, Side};
use proptest::prelude::*;

fn replayed(flow: &OrderFlow) -> Vec<lobres::replay::DayReplay> {
    replay_flow(&EngineRegistry::with_builtins(), "price-level", flow, &SpreadBuckets::default()).unwrap()
}

fn small_flow(seed: u64) -> OrderFlow {
    generate(&FlowParams { days: 2, session_minutes: 240, seed, ..FlowParams::default() }).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn raw_streams_classify_consistently(seed in any::<u64>()) {
        let day = random_day(seed, 500);
        let r = replay_day(Box::new(lobres::book::PriceLevelEngine::default()), &day, &SpreadBuckets::default()).unwrap();
        let submits = day.events.iter().filter(|e| e.action == lobres::types::Action::Submit).count();
        let rejected_submits = r
            .rejections
            .iter()
            .filter(|x| day.events[x.event_index].action == lobres::types::Action::Submit)
            .count();
        prop_assert_eq!(r.orders.len(), submits - rejected_submits);
        for o in &r.orders {
            let c = &o.order;
            prop_assert_eq!(c.order_type.is_effective_market(), c.penetrability >= 1);
            prop_assert_eq!(c.order_type.side(), c.event.side);
            prop_assert_eq!(c.exec.executed + c.exec.remaining, c.event.size);
            if c.pre_spread == Some(1) {
                prop_assert_ne!(c.order_type.code() % 6, 4);
            }
        }
    }

    #[test]
    fn penetrability_grows_with_execution(levels in prop::collection::vec(1u64..500, 1..8), a in 0u64..3000, b in 0u64..3000) {
        let asks: Vec<(i64, u64)> = levels.iter().enumerate().map(|(i, &v)| (1001 + i as i64, v)).collect();
        let book = BookSnapshot::from_levels(&[(1000, 10)], &asks);
        let total: u64 = levels.iter().sum();
        let (lo, hi) = (a.min(b).min(total), a.max(b).min(total));
        let p_lo = penetrability(&book, Side::Buy, lo).unwrap();
        let p_hi = penetrability(&book, Side::Buy, hi).unwrap();
        prop_assert!(p_lo <= p_hi);
        // Oracle: count levels whose cumulative volume before them is below the executed amount.
        let mut cum = 0;
        let oracle = levels.iter().take_while(|&&v| { let before = cum; cum += v; before < hi }).count() as u32;
        prop_assert_eq!(p_hi, oracle);
        prop_assert!(penetrability(&book, Side::Buy, total + 1).is_err());
    }
}

#[test]
fn every_submit_gets_one_type_and_types_partition() {
    let flow = small_flow(3);
    let replays = replayed(&flow);
    let submits: usize =
        flow.days.iter().map(|d| d.events.iter().filter(|e| e.action == lobres::types::Action::Submit).count()).sum();
    let orders: Vec<_> = replays.iter().flat_map(|r| r.orders.iter().map(|o| &o.order)).collect();
    assert_eq!(orders.len(), submits);
    let table = tabulate(orders.iter().copied(), &SpreadBuckets::default());
    assert_eq!(table.total() as usize, submits);
    let by_type: u64 = OrderType::ALL.iter().map(|&t| table.row_total(t)).sum();
    assert_eq!(by_type as usize, submits);
    assert_eq!(table.get(OrderType::new(4).unwrap(), 0), 0);
    assert_eq!(table.get(OrderType::new(10).unwrap(), 0), 0);
}

#[test]
fn mirrored_flow_swaps_type_k_with_k_plus_6() {
    let flow = small_flow(8);
    let pivot = 2000;
    let a = replayed(&flow);
    let b = replayed(&flow.mirrored(pivot));
    for (ra, rb) in a.iter().zip(&b) {
        assert_eq!(ra.orders.len(), rb.orders.len());
        for (x, y) in ra.orders.iter().zip(&rb.orders) {
            assert_eq!(x.order.order_type.mirror(), y.order.order_type);
            assert_eq!(x.order.penetrability, y.order.penetrability);
            assert_eq!(x.order.pre_spread, y.order.pre_spread);
        }
    }
}

#[test]
fn classification_of_a_hand_built_book() {
    let book = BookSnapshot::from_levels(&[(999, 300), (998, 200)], &[(1002, 100), (1003, 100)]);
    let b = SpreadBuckets::default();
    let ev = |side, price, size| OrderEvent::submit(1, 0, 1, side, price, size);
    let code = |e: OrderEvent, executed| {
        classify(&book, &e, ExecSummary { executed, remaining: e.size - executed }, &b).unwrap().order_type.code()
    };
    assert_eq!(code(ev(Side::Buy, 1003, 150), 150), 1);
    assert_eq!(code(ev(Side::Buy, 1002, 150), 100), 2);
    assert_eq!(code(ev(Side::Buy, 1002, 60), 60), 3);
    assert_eq!(code(ev(Side::Buy, 1000, 60), 0), 4);
    assert_eq!(code(ev(Side::Buy, 999, 60), 0), 5);
    assert_eq!(code(ev(Side::Buy, 990, 60), 0), 6);
    assert_eq!(code(ev(Side::Sell, 998, 400), 400), 7);
    assert_eq!(code(ev(Side::Sell, 999, 400), 300), 8);
    assert_eq!(code(ev(Side::Sell, 999, 10), 10), 9);
    assert_eq!(code(ev(Side::Sell, 1001, 10), 0), 10);
    assert_eq!(code(ev(Side::Sell, 1002, 10), 0), 11);
    assert_eq!(code(ev(Side::Sell, 1010, 10), 0), 12);
    let c = classify(&book, &ev(Side::Buy, 1000, 1), ExecSummary { executed: 0, remaining: 1 }, &b).unwrap();
    assert_eq!(c.pre_spread, Some(3));
    assert_eq!(b.label(c.spread_bucket.unwrap()), "s=3");
}
