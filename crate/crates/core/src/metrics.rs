//! Error-rate accounting, risk tiers and the accept/abort rule.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard QBER ceiling for secure distillation.
pub const DEFAULT_QBER_THRESHOLD: f64 = 0.11;

/// Classical (local hidden variable) bound on |S|.
pub const CLASSICAL_CHSH_BOUND: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QberReport {
    pub n_error: u64,
    pub n_total: u64,
    pub fraction: f64,
    pub percent: f64,
    /// Set when `n_total` is zero; the fraction is then reported as 0.
    pub degenerate: bool,
}

pub fn qber(n_error: u64, n_total: u64) -> Result<QberReport> {
    if n_error > n_total {
        return Err(Error::Domain(format!("{n_error} errors exceed {n_total} compared bits")));
    }
    if n_total == 0 {
        return Ok(QberReport {
            n_error,
            n_total,
            fraction: 0.0,
            percent: 0.0,
            degenerate: true,
        });
    }
    Ok(QberReport {
        n_error,
        n_total,
        fraction: n_error as f64 / n_total as f64,
        percent: (100 * n_error) as f64 / n_total as f64,
        degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RiskTier {
    Lowest,
    Mid,
    Highest,
}

impl RiskTier {
    pub fn label(self) -> &'static str {
        match self {
            RiskTier::Lowest => "lowest",
            RiskTier::Mid => "mid",
            RiskTier::Highest => "highest",
        }
    }
}

impl fmt::Display for RiskTier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Tier boundaries. QBER bounds are inclusive upper limits in percent; CHSH
/// bounds are inclusive upper limits on S.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskThresholds {
    pub lowest_max_percent: f64,
    pub mid_max_percent: f64,
    pub chsh_mid_at_or_below: f64,
    pub chsh_highest_at_or_below: f64,
}

impl Default for RiskThresholds {
    fn default() -> Self {
        Self {
            lowest_max_percent: 4.0,
            mid_max_percent: 11.0,
            chsh_mid_at_or_below: 2.2,
            chsh_highest_at_or_below: 2.0,
        }
    }
}

pub fn risk_classify(q: &QberReport, s: Option<f64>) -> RiskTier {
    risk_classify_with(q, s, &RiskThresholds::default())
}

/// Maximum severity of the QBER tier and, when `s` is given, the CHSH tier.
pub fn risk_classify_with(q: &QberReport, s: Option<f64>, t: &RiskThresholds) -> RiskTier {
    risk_from_percent(q.percent, s, t)
}

/// Slack on tier boundaries so rounding in `100·a/b` or in an oracle sum
/// cannot push an exact 4% or 11% into the next tier.
const TIER_EPSILON_PERCENT: f64 = 1e-9;

/// Tier for a QBER given directly in percent, e.g. an oracle expectation.
pub fn risk_from_percent(percent: f64, s: Option<f64>, t: &RiskThresholds) -> RiskTier {
    let by_qber = if percent <= t.lowest_max_percent + TIER_EPSILON_PERCENT {
        RiskTier::Lowest
    } else if percent <= t.mid_max_percent + TIER_EPSILON_PERCENT {
        RiskTier::Mid
    } else {
        RiskTier::Highest
    };
    let by_chsh = match s {
        Some(s) if s <= t.chsh_highest_at_or_below + 1e-12 => RiskTier::Highest,
        Some(s) if s <= t.chsh_mid_at_or_below + 1e-12 => RiskTier::Mid,
        _ => RiskTier::Lowest,
    };
    by_qber.max(by_chsh)
}

pub fn sifted_rate(kept: u64, total: u64) -> Result<f64> {
    if total == 0 {
        return Err(Error::Domain("sifted rate over zero rounds".into()));
    }
    if kept > total {
        return Err(Error::Domain(format!("{kept} kept rounds exceed {total} total")));
    }
    Ok(kept as f64 / total as f64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SecurityDecision {
    Accept,
    Abort { reason: String },
}

impl SecurityDecision {
    pub fn is_accept(&self) -> bool {
        matches!(self, SecurityDecision::Accept)
    }

    pub fn label(&self) -> &'static str {
        match self {
            SecurityDecision::Accept => "accept",
            SecurityDecision::Abort { .. } => "abort",
        }
    }
}

/// Accept iff |s| exceeds the classical bound and `qber` is within threshold.
pub fn security_decision(s: f64, qber: f64, qber_threshold: f64) -> SecurityDecision {
    let mut reasons = Vec::new();
    if s.abs() <= CLASSICAL_CHSH_BOUND {
        reasons.push(format!("no Bell violation (|S| = {:.4} <= 2)", s.abs()));
    }
    if qber > qber_threshold {
        reasons.push(format!("QBER {:.4} exceeds threshold {:.4}", qber, qber_threshold));
    }
    if reasons.is_empty() {
        SecurityDecision::Accept
    } else {
        SecurityDecision::Abort {
            reason: reasons.join("; "),
        }
    }
}
