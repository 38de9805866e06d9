use lobres::book::EngineRegistry;
use lobres::classifier::SpreadBuckets;
use lobres::replay::replay_flow;
use lobres::synth::{generate, inject_shocks, FlowParams, ShockSpec};
use lobres::types::{Action, OrderType};

#[test]
fn event_counts_match_poisson_rates() {
    let p = FlowParams { days: 4, seed: 77, ..FlowParams::default() };
    let flow = generate(&p).unwrap();
    let minutes = (p.days as usize * p.session_minutes) as f64;
    let submits = flow.days.iter().flat_map(|d| &d.events).filter(|e| e.action == Action::Submit).count() as f64;
    let expected = (p.limit_rate + p.market_rate) * minutes;
    // Poisson count: 4 standard deviations
    assert!((submits - expected).abs() < 4.0 * expected.sqrt(), "{submits} vs {expected}");
    let cancels = flow.event_count() as f64 - submits;
    // Cancels are skipped when nothing is live, so they can only fall short.
    assert!(cancels < p.cancel_rate * minutes + 4.0 * (p.cancel_rate * minutes).sqrt());
    assert!(cancels > 0.8 * p.cancel_rate * minutes);
}

#[test]
fn timestamps_stay_in_session_and_ordered() {
    let p = FlowParams { days: 2, ..FlowParams::default() };
    let flow = generate(&p).unwrap();
    let end = p.session_minutes as u64 * 60_000;
    for d in &flow.days {
        assert!(d.events.windows(2).all(|w| w[0].timestamp_ms <= w[1].timestamp_ms));
        assert!(d.events.iter().all(|e| e.timestamp_ms < end));
    }
}

#[test]
fn injected_type9_shocks_round_trip() {
    let flow = generate(&FlowParams { days: 2, seed: 5, ..FlowParams::default() }).unwrap();
    let nine = OrderType::new(9).unwrap();
    let specs: Vec<ShockSpec> = (0..100)
        .map(|i| ShockSpec {
            day: 1 + i % 2,
            timestamp_ms: 60_000 + (i as u64 / 2) * 250_000,
            order_type: nine,
            magnitude: 50 + i as u64,
        })
        .collect();
    let (shocked, info) = inject_shocks(&flow, &specs).unwrap();
    assert_eq!(info.len(), 100);
    let replays =
        replay_flow(&EngineRegistry::with_builtins(), "price-level", &shocked, &SpreadBuckets::default()).unwrap();
    for s in &info {
        let r = &replays[(s.spec.day - 1) as usize];
        assert!(r.rejections.is_empty());
        let o = r.orders.iter().find(|o| o.event_index == s.event_index).unwrap();
        assert_eq!(o.order.event.order_id, s.order_id);
        assert_eq!(o.order.order_type, nine);
        let bid = o.order.pre_top.bid.unwrap();
        let post = r.updates[o.update.unwrap()].post.bid.unwrap();
        assert_eq!(post.price, bid.price);
        assert_eq!(bid.size - post.size, o.order.event.size);
    }
}
