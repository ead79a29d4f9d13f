//! Session parameters shared by the three protocols.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{check_probability, EveMode};
use crate::error::{Error, Result};
use crate::metrics::DEFAULT_QBER_THRESHOLD;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Protocol {
    #[serde(rename = "bb84")]
    Bb84,
    #[serde(rename = "b92")]
    B92,
    #[serde(rename = "e91")]
    E91,
}

impl Protocol {
    pub fn label(self) -> &'static str {
        match self {
            Protocol::Bb84 => "bb84",
            Protocol::B92 => "b92",
            Protocol::E91 => "e91",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bb84" => Ok(Protocol::Bb84),
            "b92" => Ok(Protocol::B92),
            "e91" => Ok(Protocol::E91),
            other => Err(Error::config("protocol", format!("`{other}` not one of bb84|b92|e91"))),
        }
    }
}

/// How E91 rounds are split between key generation and Bell testing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AllocationMode {
    /// Each round is a Bell round with probability `bell_ratio`, else a key round.
    Designated,
    /// Both parties pick angles independently; rounds are classified afterwards.
    Independent,
}

impl AllocationMode {
    pub fn label(self) -> &'static str {
        match self {
            AllocationMode::Designated => "designated",
            AllocationMode::Independent => "independent",
        }
    }
}

impl FromStr for AllocationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "designated" => Ok(AllocationMode::Designated),
            "independent" => Ok(AllocationMode::Independent),
            other => Err(Error::config(
                "allocation",
                format!("`{other}` not one of designated|independent"),
            )),
        }
    }
}

pub const DEFAULT_ROUNDS: u64 = 20_000;
pub const DEFAULT_BELL_RATIO: f64 = 0.25;

/// Full parameterization of one simulated session.
///
/// The E91-only fields are `Some` exactly when `protocol` is E91.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub protocol: Protocol,
    pub rounds: u64,
    pub noise_p: f64,
    pub eve_p: f64,
    pub eve_mode: Option<EveMode>,
    pub bell_ratio: Option<f64>,
    pub allocation: Option<AllocationMode>,
    pub qber_threshold: f64,
    pub sample_fraction: f64,
    pub seed: u64,
}

impl SessionConfig {
    pub fn new(protocol: Protocol) -> Self {
        let e91 = protocol == Protocol::E91;
        Self {
            protocol,
            rounds: DEFAULT_ROUNDS,
            noise_p: 0.0,
            eve_p: 0.0,
            eve_mode: e91.then_some(EveMode::Both),
            bell_ratio: e91.then_some(DEFAULT_BELL_RATIO),
            allocation: e91.then_some(AllocationMode::Designated),
            qber_threshold: DEFAULT_QBER_THRESHOLD,
            sample_fraction: 1.0,
            seed: 0,
        }
    }

    pub fn with_rounds(mut self, rounds: u64) -> Self {
        self.rounds = rounds;
        self
    }

    pub fn with_noise(mut self, p: f64) -> Self {
        self.noise_p = p;
        self
    }

    pub fn with_eve(mut self, p: f64) -> Self {
        self.eve_p = p;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_eve_mode(mut self, mode: EveMode) -> Self {
        self.eve_mode = Some(mode);
        self
    }

    pub fn with_bell_ratio(mut self, r: f64) -> Self {
        self.bell_ratio = Some(r);
        self
    }

    pub fn with_allocation(mut self, mode: AllocationMode) -> Self {
        self.allocation = Some(mode);
        self
    }

    pub fn with_threshold(mut self, t: f64) -> Self {
        self.qber_threshold = t;
        self
    }

    pub fn with_sample_fraction(mut self, f: f64) -> Self {
        self.sample_fraction = f;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds < 1 {
            return Err(Error::config("rounds", "must be at least 1"));
        }
        check_probability("noise_p", self.noise_p)?;
        check_probability("eve_p", self.eve_p)?;
        check_probability("qber_threshold", self.qber_threshold)?;
        if !(self.sample_fraction > 0.0 && self.sample_fraction <= 1.0) {
            return Err(Error::config(
                "sample_fraction",
                format!("{} outside (0, 1]", self.sample_fraction),
            ));
        }
        if self.protocol == Protocol::E91 {
            match self.eve_mode {
                None | Some(EveMode::NotApplicable) => {
                    return Err(Error::config("eve_mode", "E91 needs key|bell|both"))
                }
                Some(_) => {}
            }
            let r = self
                .bell_ratio
                .ok_or_else(|| Error::config("bell_ratio", "required for e91"))?;
            check_probability("bell_ratio", r)?;
            if self.allocation.is_none() {
                return Err(Error::config("allocation", "required for e91"));
            }
        } else {
            for (field, set) in [
                ("eve_mode", self.eve_mode.is_some()),
                ("bell_ratio", self.bell_ratio.is_some()),
                ("allocation", self.allocation.is_some()),
            ] {
                if set {
                    return Err(Error::config(field, format!("not applicable to {}", self.protocol)));
                }
            }
        }
        Ok(())
    }

    pub(crate) fn expect_protocol(&self, p: Protocol) -> Result<()> {
        if self.protocol != p {
            return Err(Error::config("protocol", format!("expected {p}, got {}", self.protocol)));
        }
        self.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_applicability() {
        let e = SessionConfig::new(Protocol::E91);
        assert_eq!(e.bell_ratio, Some(0.25));
        assert_eq!(e.eve_mode, Some(EveMode::Both));
        assert!(e.validate().is_ok());
        let b = SessionConfig::new(Protocol::Bb84);
        assert!(b.validate().is_ok());
        let err = b.clone().with_bell_ratio(0.5).validate().unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "bell_ratio"));
        assert!(b.clone().with_rounds(0).validate().is_err());
        assert!(b.clone().with_noise(1.5).validate().is_err());
        assert!(b.clone().with_sample_fraction(0.0).validate().is_err());
    }
}
