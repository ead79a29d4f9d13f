//! Command-line configuration, table replay, and CSV/JSON output.

pub mod args;
pub mod emit;
pub mod replay;

pub use args::{parse_config, parse_config_text, Invocation, OutputFormat};
pub use emit::{emit_grid_csv, emit_grid_json, emit_summary};
pub use replay::{parse_replay_csv, replay, ReplayOutcome, ReplayRecord};
