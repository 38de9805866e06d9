//! Limit order book reconstruction and liquidity resiliency analysis.
//!
//! The crate replays raw order flow through a price-time-priority book,
//! classifies each incoming order by aggressiveness, removes intraday
//! seasonality from spread, depth and limit-order intensity with a Fourier
//! Flexible Form regression, and averages the deseasonalized series around
//! effective market orders.

pub mod book;
pub mod classifier;
pub mod config;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod replay;
pub mod resiliency;
pub mod seasonality;
pub mod session;
pub mod synth;
pub mod types;

pub use error::{Error, Result};
