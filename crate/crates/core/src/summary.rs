//! Protocol-independent session results, as emitted by the CLI.

use serde::{Deserialize, Serialize};

use crate::config::{Protocol, SessionConfig};
use crate::metrics::{RiskTier, SecurityDecision};
use crate::protocol::b92::B92Session;
use crate::protocol::bb84::Bb84Session;
use crate::protocol::e91::E91Session;

/// Aggregate results of one simulated or replayed session. Fields that do
/// not apply to the protocol (or to replayed data) are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub protocol: Protocol,
    pub rounds: u64,
    pub noise_p: Option<f64>,
    pub eve_p: Option<f64>,
    pub eve_mode: Option<String>,
    pub bell_ratio: Option<f64>,
    pub seed: Option<u64>,
    pub sifted_rate: Option<f64>,
    pub conclusive_rate: Option<f64>,
    pub qber_percent: f64,
    pub chsh_s: Option<f64>,
    pub risk: RiskTier,
    pub decision: Option<SecurityDecision>,
}

impl SessionSummary {
    fn from_config(config: &SessionConfig, qber_percent: f64, risk: RiskTier) -> Self {
        Self {
            protocol: config.protocol,
            rounds: config.rounds,
            noise_p: Some(config.noise_p),
            eve_p: Some(config.eve_p),
            eve_mode: config.eve_mode.map(|m| m.label().to_string()),
            bell_ratio: config.bell_ratio,
            seed: Some(config.seed),
            sifted_rate: None,
            conclusive_rate: None,
            qber_percent,
            chsh_s: None,
            risk,
            decision: None,
        }
    }
}

impl From<&Bb84Session> for SessionSummary {
    fn from(s: &Bb84Session) -> Self {
        Self {
            sifted_rate: Some(s.sifted_rate),
            ..Self::from_config(&s.config, s.qber.percent, s.risk)
        }
    }
}

impl From<&B92Session> for SessionSummary {
    fn from(s: &B92Session) -> Self {
        Self {
            conclusive_rate: Some(s.conclusive_rate),
            ..Self::from_config(&s.config, s.qber.percent, s.risk)
        }
    }
}

impl From<&E91Session> for SessionSummary {
    fn from(s: &E91Session) -> Self {
        Self {
            sifted_rate: Some(s.sifted_rate),
            chsh_s: s.chsh.as_ref().map(|c| c.s),
            decision: Some(s.decision.clone()),
            ..Self::from_config(&s.config, s.qber.percent, s.risk)
        }
    }
}

/// Runs the session described by `config` and summarizes it.
pub fn run_session(config: &SessionConfig) -> crate::Result<SessionSummary> {
    use crate::protocol::{b92, bb84, e91};
    Ok(match config.protocol {
        Protocol::Bb84 => SessionSummary::from(&bb84::run_bb84(config)?),
        Protocol::B92 => SessionSummary::from(&b92::run_b92(config)?),
        Protocol::E91 => SessionSummary::from(&e91::run_e91(config)?),
    })
}
