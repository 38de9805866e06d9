use std::collections::BTreeMap;

use super::{BookEngine, NaiveEngine, PriceLevelEngine};
use crate::error::Error;

pub type EngineFactory = fn() -> Box<dyn BookEngine>;

pub const DEFAULT_ENGINE: &str = "price-level";

/// Book engines registered by name.
#[derive(Clone)]
pub struct EngineRegistry {
    factories: BTreeMap<&'static str, EngineFactory>,
}

impl EngineRegistry {
    pub fn empty() -> Self {
        Self { factories: BTreeMap::new() }
    }

    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        reg.register("price-level", || Box::new(PriceLevelEngine::default()));
        reg.register("naive", || Box::new(NaiveEngine::default()));
        reg
    }

    /// Registers `factory` under `name`, replacing any previous entry.
    pub fn register(&mut self, name: &'static str, factory: EngineFactory) {
        self.factories.insert(name, factory);
    }

    pub fn create(&self, name: &str) -> Result<Box<dyn BookEngine>, Error> {
        self.factories.get(name).map(|f| f()).ok_or_else(|| Error::UnknownStrategy {
            kind: "engine",
            name: name.to_string(),
            known: self.names().join(", "),
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.factories.keys().copied().collect()
    }
}

impl Default for EngineRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}
