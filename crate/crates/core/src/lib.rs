//! Trace-driven simulator for an eDRAM last-level cache.
//!
//! Four organizations are modeled: a refresh-everything eDRAM baseline, an
//! SRAM cache of the same geometry, a polyphase valid-only refresh scheme, and
//! a cache that resizes itself by page colors at interval boundaries.

pub mod cache;
pub mod config;
pub mod controller;
pub mod energy;
pub mod error;
pub mod output;
pub mod profiler;
pub mod refresh;
pub mod sim;
pub mod trace;

pub use cache::{color_count, lines_at, CacheGeometry, CacheState};
pub use controller::ControllerConfig;
pub use energy::{EnergyModel, EnergyParams, SchemeKind, Technology};
pub use error::{Error, Result};
pub use refresh::{RefreshConfig, RefreshPolicy};
pub use sim::{compare, run, ComparisonReport, RunOptions, RunReport, SchemeSpec, TimingParams};
pub use trace::{Op, TraceRecord};
