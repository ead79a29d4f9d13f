//! Pinned output formats. Numbers are rounded to six significant digits;
//! JSON key order and CSV columns are fixed.

use serde::Serialize;

use super::OutputFormat;
use crate::summary::SessionSummary;
use crate::sweep::SweepGrid;

pub const SUMMARY_KEYS: [&str; 13] = [
    "protocol",
    "rounds",
    "noise_p",
    "eve_p",
    "eve_mode",
    "bell_ratio",
    "seed",
    "sifted_rate",
    "conclusive_rate",
    "qber_percent",
    "chsh_s",
    "risk",
    "decision",
];

pub const GRID_HEADER: &str = "noise_p,eve_p,qber_percent,rate,chsh_s,risk,decision";

/// Rounds to `digits` significant decimal digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let rounded: f64 = format!("{:.*e}", digits.saturating_sub(1), x).parse().unwrap_or(x);
    // Avoid emitting -0.
    if rounded == 0.0 {
        0.0
    } else {
        rounded
    }
}

fn num(x: f64) -> f64 {
    round_sig(x, 6)
}

fn csv_num(x: Option<f64>) -> String {
    x.map(|v| num(v).to_string()).unwrap_or_default()
}

// Field order here is the emitted key order.
#[derive(Serialize)]
struct SummaryRecord<'a> {
    protocol: &'a str,
    rounds: u64,
    noise_p: Option<f64>,
    eve_p: Option<f64>,
    eve_mode: Option<&'a str>,
    bell_ratio: Option<f64>,
    seed: Option<u64>,
    sifted_rate: Option<f64>,
    conclusive_rate: Option<f64>,
    qber_percent: f64,
    chsh_s: Option<f64>,
    risk: &'a str,
    decision: Option<&'a str>,
}

impl<'a> From<&'a SessionSummary> for SummaryRecord<'a> {
    fn from(s: &'a SessionSummary) -> Self {
        Self {
            protocol: s.protocol.label(),
            rounds: s.rounds,
            noise_p: s.noise_p.map(num),
            eve_p: s.eve_p.map(num),
            eve_mode: s.eve_mode.as_deref(),
            bell_ratio: s.bell_ratio.map(num),
            seed: s.seed,
            sifted_rate: s.sifted_rate.map(num),
            conclusive_rate: s.conclusive_rate.map(num),
            qber_percent: num(s.qber_percent),
            chsh_s: s.chsh_s.map(num),
            risk: s.risk.label(),
            decision: s.decision.as_ref().map(|d| d.label()),
        }
    }
}

pub fn emit_summary(summary: &SessionSummary, format: OutputFormat) -> String {
    let r = SummaryRecord::from(summary);
    match format {
        OutputFormat::Json => {
            let mut out = serde_json::to_string_pretty(&r).expect("summary serializes");
            out.push('\n');
            out
        }
        OutputFormat::Csv => {
            let fields = [
                r.protocol.to_string(),
                r.rounds.to_string(),
                csv_num(r.noise_p),
                csv_num(r.eve_p),
                r.eve_mode.unwrap_or_default().to_string(),
                csv_num(r.bell_ratio),
                r.seed.map(|s| s.to_string()).unwrap_or_default(),
                csv_num(r.sifted_rate),
                csv_num(r.conclusive_rate),
                csv_num(Some(r.qber_percent)),
                csv_num(r.chsh_s),
                r.risk.to_string(),
                r.decision.unwrap_or_default().to_string(),
            ];
            format!("{}\n{}\n", SUMMARY_KEYS.join(","), fields.join(","))
        }
    }
}

pub fn emit_grid_csv(grid: &SweepGrid) -> String {
    let mut out = String::with_capacity(64 * (grid.cells.len() + 1));
    out.push_str(GRID_HEADER);
    out.push('\n');
    for c in &grid.cells {
        let row = [
            csv_num(Some(c.noise_p)),
            csv_num(Some(c.eve_p)),
            csv_num(Some(100.0 * c.qber)),
            csv_num(Some(c.rate)),
            csv_num(c.chsh_s),
            c.risk.label().to_string(),
            c.decision.as_ref().map(|d| d.label().to_string()).unwrap_or_default(),
        ];
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct GridCellRecord<'a> {
    noise_p: f64,
    eve_p: f64,
    qber_percent: f64,
    rate: f64,
    chsh_s: Option<f64>,
    risk: &'a str,
    decision: Option<&'a str>,
}

#[derive(Serialize)]
struct GridRecord<'a> {
    spec: &'a crate::sweep::SweepSpec,
    cells: Vec<GridCellRecord<'a>>,
}

/// JSON form of a grid: the resolved sweep spec followed by the cells.
pub fn emit_grid_json(grid: &SweepGrid) -> String {
    let cells = grid
        .cells
        .iter()
        .map(|c| GridCellRecord {
            noise_p: num(c.noise_p),
            eve_p: num(c.eve_p),
            qber_percent: num(100.0 * c.qber),
            rate: num(c.rate),
            chsh_s: c.chsh_s.map(num),
            risk: c.risk.label(),
            decision: c.decision.as_ref().map(|d| d.label()),
        })
        .collect();
    let mut out = serde_json::to_string_pretty(&GridRecord { spec: &grid.spec, cells }).expect("grid serializes");
    out.push('\n');
    out
}
