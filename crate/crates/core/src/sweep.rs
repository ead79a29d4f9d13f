//! Parameter sweeps over (noise × eavesdropper) grids.
//!
//! Cells are independent: each gets its own seed derived from the base seed
//! and its grid coordinates, so evaluation order and parallelism never change
//! the output.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{check_probability, EveMode, EveSpec};
use crate::config::{AllocationMode, Protocol, SessionConfig, DEFAULT_BELL_RATIO, DEFAULT_ROUNDS};
use crate::error::{Error, Result};
use crate::metrics::{risk_from_percent, security_decision, RiskThresholds, RiskTier, SecurityDecision, DEFAULT_QBER_THRESHOLD};
use crate::protocol::{b92, bb84, e91};

/// Tolerance for the inclusive stop of a `start:stop:step` axis.
pub const AXIS_STOP_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    MonteCarlo,
    Oracle,
}

impl std::str::FromStr for SweepMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mc" | "montecarlo" | "monte-carlo" => Ok(SweepMode::MonteCarlo),
            "oracle" => Ok(SweepMode::Oracle),
            other => Err(Error::config("mode", format!("`{other}` not one of mc|oracle"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub protocol: Protocol,
    pub noise_axis: Vec<f64>,
    pub eve_axis: Vec<f64>,
    pub rounds_per_cell: u64,
    pub mode: SweepMode,
    pub eve_mode: Option<EveMode>,
    pub bell_ratio: Option<f64>,
    pub qber_threshold: f64,
    pub base_seed: u64,
}

impl SweepSpec {
    pub fn new(protocol: Protocol, noise_axis: Vec<f64>, eve_axis: Vec<f64>, mode: SweepMode) -> Self {
        let e91 = protocol == Protocol::E91;
        Self {
            protocol,
            noise_axis,
            eve_axis,
            rounds_per_cell: DEFAULT_ROUNDS,
            mode,
            eve_mode: e91.then_some(EveMode::Both),
            bell_ratio: e91.then_some(DEFAULT_BELL_RATIO),
            qber_threshold: DEFAULT_QBER_THRESHOLD,
            base_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_axis("noise", &self.noise_axis)?;
        check_axis("eve", &self.eve_axis)?;
        if self.mode == SweepMode::MonteCarlo && self.rounds_per_cell < 1 {
            return Err(Error::config("rounds", "must be at least 1 in mc mode"));
        }
        check_probability("qber_threshold", self.qber_threshold)?;
        // Cell configs carry the remaining protocol/field applicability checks.
        self.cell_config(0, 0).validate()
    }

    fn cell_config(&self, row: usize, col: usize) -> SessionConfig {
        let mut c = SessionConfig::new(self.protocol)
            .with_rounds(self.rounds_per_cell)
            .with_noise(self.noise_axis[row])
            .with_eve(self.eve_axis[col])
            .with_threshold(self.qber_threshold)
            .with_seed(derive_cell_seed(self.base_seed, row, col));
        c.eve_mode = self.eve_mode;
        c.bell_ratio = self.bell_ratio;
        if self.protocol != Protocol::E91 {
            c.allocation = None;
        }
        c
    }
}

fn check_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::config(name, "axis is empty"));
    }
    for &v in axis {
        check_probability(name, v)?;
    }
    if axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config(name, "axis must be strictly increasing"));
    }
    Ok(())
}

/// Parses `start:stop:step`, a comma-separated list, or a single value.
pub fn parse_axis(field: &str, text: &str) -> Result<Vec<f64>> {
    let num = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::config(field, format!("`{s}` is not a number")))
    };
    let values = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::config(field, format!("`{text}` is not start:stop:step")));
        }
        let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if step.is_nan() || step <= 0.0 || stop < start {
            return Err(Error::config(field, format!("`{text}` needs step > 0 and stop >= start")));
        }
        let mut out = Vec::new();
        for i in 0u64.. {
            let v = start + i as f64 * step;
            if v > stop + AXIS_STOP_EPSILON {
                break;
            }
            // Snap away accumulated binary error (3 × 0.05 ≠ 0.15 in f64).
            out.push(((v * 1e12).round() / 1e12).min(stop));
        }
        out
    } else {
        text.split(',').map(num).collect::<Result<Vec<_>>>()?
    };
    check_axis(field, &values)?;
    Ok(values)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-cell seed. For a fixed base seed this is injective over any grid with
/// both dimensions below 2³², and injective in the base seed at fixed
/// coordinates, since splitmix64 is a bijection.
pub fn derive_cell_seed(base_seed: u64, row: usize, col: usize) -> u64 {
    let coord = ((row as u64) << 32) | (col as u64 & 0xFFFF_FFFF);
    splitmix64(base_seed ^ splitmix64(coord))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub noise_p: f64,
    pub eve_p: f64,
    /// Error fraction in [0, 1].
    pub qber: f64,
    /// Sifted rate (BB84, E91 key fraction) or conclusive rate (B92).
    pub rate: f64,
    pub chsh_s: Option<f64>,
    pub risk: RiskTier,
    pub decision: Option<SecurityDecision>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub spec: SweepSpec,
    /// Row-major: noise index major, eve index minor.
    pub cells: Vec<GridCell>,
}

impl SweepGrid {
    pub fn cell(&self, row: usize, col: usize) -> &GridCell {
        &self.cells[row * self.spec.eve_axis.len() + col]
    }

    /// Cells along the noise axis at a fixed eve column.
    pub fn noise_slice(&self, col: usize) -> impl Iterator<Item = &GridCell> {
        (0..self.spec.noise_axis.len()).map(move |r| self.cell(r, col))
    }

    /// Cells along the eve axis at a fixed noise row.
    pub fn eve_slice(&self, row: usize) -> impl Iterator<Item = &GridCell> {
        (0..self.spec.eve_axis.len()).map(move |c| self.cell(row, c))
    }
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepGrid> {
    spec.validate()?;
    let cols = spec.eve_axis.len();
    let n = spec.noise_axis.len() * cols;
    let cells = (0..n)
        .into_par_iter()
        .map(|i| evaluate_cell(spec, i / cols, i % cols))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepGrid {
        spec: spec.clone(),
        cells,
    })
}

fn evaluate_cell(spec: &SweepSpec, row: usize, col: usize) -> Result<GridCell> {
    let config = spec.cell_config(row, col);
    let (noise_p, eve_p) = (config.noise_p, config.eve_p);
    match spec.mode {
        SweepMode::MonteCarlo => {
            let (qber, rate, chsh_s, risk, decision) = match spec.protocol {
                Protocol::Bb84 => {
                    let s = bb84::run_bb84(&config)?;
                    (s.qber.fraction, s.sifted_rate, None, s.risk, None)
                }
                Protocol::B92 => {
                    let s = b92::run_b92(&config)?;
                    (s.qber.fraction, s.conclusive_rate, None, s.risk, None)
                }
                Protocol::E91 => {
                    let s = e91::run_e91(&config)?;
                    (s.qber.fraction, s.sifted_rate, s.chsh.map(|c| c.s), s.risk, Some(s.decision))
                }
            };
            Ok(GridCell {
                noise_p,
                eve_p,
                qber,
                rate,
                chsh_s,
                risk,
                decision,
            })
        }
        SweepMode::Oracle => {
            let thresholds = RiskThresholds::default();
            match spec.protocol {
                Protocol::Bb84 | Protocol::B92 => {
                    let (stats, rate) = if spec.protocol == Protocol::Bb84 {
                        let s = bb84::expected_bb84(noise_p, eve_p)?;
                        (s, s.sifted_rate.unwrap_or_default())
                    } else {
                        let s = b92::expected_b92(noise_p, eve_p)?;
                        (s, s.conclusive_rate.unwrap_or_default())
                    };
                    Ok(GridCell {
                        noise_p,
                        eve_p,
                        qber: stats.qber,
                        rate,
                        chsh_s: None,
                        risk: risk_from_percent(100.0 * stats.qber, None, &thresholds),
                        decision: None,
                    })
                }
                Protocol::E91 => {
                    let mode = spec.eve_mode.unwrap_or(EveMode::Both);
                    let stats = e91::expected_e91(noise_p, eve_p, mode, &EveSpec::default_angle_set())?;
                    let s = stats.chsh_s.unwrap_or_default();
                    let bell_ratio = spec.bell_ratio.unwrap_or(DEFAULT_BELL_RATIO);
                    debug_assert_eq!(config.allocation, Some(AllocationMode::Designated));
                    Ok(GridCell {
                        noise_p,
                        eve_p,
                        qber: stats.qber,
                        rate: 1.0 - bell_ratio,
                        chsh_s: Some(s),
                        risk: risk_from_percent(100.0 * stats.qber, Some(s.abs()), &thresholds),
                        decision: Some(security_decision(s, stats.qber, spec.qber_threshold)),
                    })
                }
            }
        }
    }
}
