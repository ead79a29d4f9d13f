//! Deterministic simulator for the BB84, B92 and E91 quantum key
//! distribution protocols over noisy, eavesdropped polarization channels.
//!
//! Each protocol runs either as a seeded Monte Carlo session or as an exact
//! expectation computed by enumerating every per-round branch. The [`sweep`]
//! module evaluates whole (noise × eavesdropper) grids, and [`io`] provides
//! config parsing, table replay and CSV/JSON output for the `qkd` binary.

pub mod channel;
pub mod config;
pub mod error;
pub mod io;
pub mod metrics;
pub mod protocol;
pub mod qstate;
pub mod summary;
pub mod sweep;

pub use config::{AllocationMode, Protocol, SessionConfig};
pub use error::{Error, Result};
pub use summary::SessionSummary;
