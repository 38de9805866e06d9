mod common;

use common::{random_day, trajectory, Step};
use lobres::book::{BookView, EngineRegistry, NaiveEngine, OrderBook, PriceLevelEngine};
use lobres::types::{OrderEvent, Side, SnapshotOrder};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn engines_agree_step_by_step(seed in any::<u64>(), n in 1usize..600) {
        let day = random_day(seed, n);
        let fast = trajectory(Box::new(PriceLevelEngine::default()), &day);
        let slow = trajectory(Box::new(NaiveEngine::default()), &day);
        prop_assert_eq!(fast, slow);
    }

    #[test]
    fn updates_only_when_top_changes(seed in any::<u64>()) {
        let day = random_day(seed, 400);
        let mut last = None;
        let mut seq = 0;
        for step in trajectory(Box::new(PriceLevelEngine::default()), &day) {
            if let Step::Applied { top, update, .. } = step {
                if let Some(prev) = last {
                    prop_assert_eq!(update.is_some(), prev != top);
                }
                if let Some(u) = update {
                    prop_assert_eq!(u.post, top);
                    prop_assert_eq!(u.seq, seq);
                    seq += 1;
                }
                last = Some(top);
            }
        }
    }

    #[test]
    fn mirrored_stream_mirrors_the_book(seed in any::<u64>()) {
        let day = random_day(seed, 300);
        let flow = lobres::types::OrderFlow { days: vec![day] };
        let mirrored = flow.mirrored(2000);
        let a = trajectory(Box::new(PriceLevelEngine::default()), &flow.days[0]);
        let b = trajectory(Box::new(PriceLevelEngine::default()), &mirrored.days[0]);
        for (x, y) in a.iter().zip(&b) {
            match (x, y) {
                (Step::Applied { top: t1, trades: tr1, .. }, Step::Applied { top: t2, trades: tr2, .. }) => {
                    prop_assert_eq!(t1.mirrored(2000), *t2);
                    prop_assert_eq!(tr1.len(), tr2.len());
                    for (p, q) in tr1.iter().zip(tr2) {
                        prop_assert_eq!(2000 - p.price, q.price);
                        prop_assert_eq!(p.size, q.size);
                    }
                }
                (Step::Rejected(_), Step::Rejected(_)) => {}
                _ => prop_assert!(false, "mirror changed acceptance"),
            }
        }
    }
}

#[test]
fn registry_builds_both_engines() {
    let reg = EngineRegistry::with_builtins();
    let mut names = reg.names();
    names.sort_unstable();
    assert_eq!(names, vec!["naive", "price-level"]);
    for n in names {
        assert_eq!(reg.create(n).unwrap().name(), n);
    }
    let err = reg.create("fancy").err().unwrap();
    assert!(err.to_string().contains("price-level"), "{err}");
}

#[test]
fn time_priority_within_a_level() {
    for engine in ["price-level", "naive"] {
        let mut book = OrderBook::new(EngineRegistry::with_builtins().create(engine).unwrap());
        book.start_day(1);
        for (id, size) in [(1, 100), (2, 50), (3, 70)] {
            book.apply(&OrderEvent::submit(1, id, id, Side::Sell, 1001, size)).unwrap();
        }
        let out = book.apply(&OrderEvent::submit(1, 9, 10, Side::Buy, 1001, 120)).unwrap();
        let fills: Vec<_> = out.trades.iter().map(|t| (t.maker_id, t.size)).collect();
        assert_eq!(fills, vec![(1, 100), (2, 20)], "{engine}");
        assert_eq!(book.resting(2), Some((Side::Sell, 1001, 30)));
        assert_eq!(book.top().ask.unwrap().size, 100);
    }
}

#[test]
fn bootstrap_liquidity_trades_but_cannot_be_cancelled() {
    let mut book = OrderBook::new(Box::new(PriceLevelEngine::default()));
    book.start_day(1);
    book.seed(&[SnapshotOrder { side: Side::Sell, price: 1001, size: 100 }]).unwrap();
    let out = book.apply(&OrderEvent::submit(1, 0, 1, Side::Buy, 1001, 40)).unwrap();
    assert_eq!(out.exec.executed, 40);
    assert!(out.trades[0].maker_id >= lobres::types::BOOTSTRAP_ID_BASE);
    let id = out.trades[0].maker_id;
    assert!(book.apply(&OrderEvent::cancel(1, 1, id, Side::Sell, 1001, 10)).is_err());
    assert_eq!(book.top().ask.unwrap().size, 60);
}
