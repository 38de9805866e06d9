use std::collections::BTreeMap;

use crate::classifier::{ClassifiedOrder, SpreadBuckets};
use crate::error::Error;
use crate::types::OrderType;

pub const DEFAULT_GROUPING: &str = "by-type";

/// Assigns anchors of an event study to named groups.
pub trait Grouping: Send + Sync {
    fn name(&self) -> &'static str;

    /// Group of `anchor`, or `None` to leave it out of the study.
    fn key(&self, anchor: &ClassifiedOrder, buckets: &SpreadBuckets) -> Option<String>;

    /// Every group the study should report; absent ones are warned about.
    fn expected_keys(&self, buckets: &SpreadBuckets) -> Vec<String>;
}

/// One group per effective market order type.
pub struct ByType;

impl Grouping for ByType {
    fn name(&self) -> &'static str {
        "by-type"
    }

    fn key(&self, anchor: &ClassifiedOrder, _: &SpreadBuckets) -> Option<String> {
        Some(anchor.order_type.to_string())
    }

    fn expected_keys(&self, _: &SpreadBuckets) -> Vec<String> {
        OrderType::EFFECTIVE.iter().map(ToString::to_string).collect()
    }
}

/// Buy or sell anchors per initial-spread bucket.
pub struct BySideBucket;

impl Grouping for BySideBucket {
    fn name(&self) -> &'static str {
        "by-side-bucket"
    }

    fn key(&self, anchor: &ClassifiedOrder, buckets: &SpreadBuckets) -> Option<String> {
        let b = anchor.spread_bucket?;
        Some(format!("{}|{}", anchor.order_type.side(), buckets.label(b)))
    }

    fn expected_keys(&self, buckets: &SpreadBuckets) -> Vec<String> {
        ["buy", "sell"]
            .iter()
            .flat_map(|side| (0..buckets.len()).map(move |b| format!("{side}|{}", buckets.label(b))))
            .collect()
    }
}

/// Each effective type per initial-spread bucket.
pub struct ByTypeBucket;

impl Grouping for ByTypeBucket {
    fn name(&self) -> &'static str {
        "by-type-bucket"
    }

    fn key(&self, anchor: &ClassifiedOrder, buckets: &SpreadBuckets) -> Option<String> {
        let b = anchor.spread_bucket?;
        Some(format!("{}|{}", anchor.order_type, buckets.label(b)))
    }

    fn expected_keys(&self, buckets: &SpreadBuckets) -> Vec<String> {
        OrderType::EFFECTIVE
            .iter()
            .flat_map(|t| (0..buckets.len()).map(move |b| format!("{t}|{}", buckets.label(b))))
            .collect()
    }
}

/// Groupings registered by name.
pub struct GroupingRegistry {
    entries: BTreeMap<&'static str, Box<dyn Grouping>>,
}

impl GroupingRegistry {
    pub fn with_builtins() -> Self {
        let mut reg = Self { entries: BTreeMap::new() };
        reg.register(Box::new(ByType));
        reg.register(Box::new(BySideBucket));
        reg.register(Box::new(ByTypeBucket));
        reg
    }

    pub fn register(&mut self, grouping: Box<dyn Grouping>) {
        self.entries.insert(grouping.name(), grouping);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Grouping, Error> {
        self.entries.get(name).map(|g| g.as_ref()).ok_or_else(|| Error::UnknownStrategy {
            kind: "grouping",
            name: name.to_string(),
            known: self.names().join(", "),
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }
}

impl Default for GroupingRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}
