//! In-flight transformations of photon states: polarization-flip noise and
//! intercept-resend eavesdroppers for each protocol.
//!
//! The pipeline order used by every protocol is
//! encode → eavesdropper → noise → measurement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{measure_polarization, Outcome, PolarizationAngle};

pub(crate) fn check_probability(field: &str, p: f64) -> Result<f64> {
    if p.is_finite() && (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(Error::config(field, format!("{p} outside [0, 1]")))
    }
}

/// Channel noise: each photon is rotated by 90° with `flip_probability`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    flip_probability: f64,
}

impl NoiseSpec {
    pub fn new(flip_probability: f64) -> Result<Self> {
        Ok(Self {
            flip_probability: check_probability("noise_p", flip_probability)?,
        })
    }

    pub fn flip_probability(&self) -> f64 {
        self.flip_probability
    }
}

/// Which E91 rounds the eavesdropper targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EveMode {
    Key,
    Bell,
    Both,
    NotApplicable,
}

impl EveMode {
    pub fn covers_key(self) -> bool {
        matches!(self, EveMode::Key | EveMode::Both)
    }

    pub fn covers_bell(self) -> bool {
        matches!(self, EveMode::Bell | EveMode::Both)
    }

    pub fn label(self) -> &'static str {
        match self {
            EveMode::Key => "key",
            EveMode::Bell => "bell",
            EveMode::Both => "both",
            EveMode::NotApplicable => "n/a",
        }
    }
}

impl std::str::FromStr for EveMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "key" => Ok(EveMode::Key),
            "bell" => Ok(EveMode::Bell),
            "both" => Ok(EveMode::Both),
            other => Err(Error::config("eve_mode", format!("`{other}` not one of key|bell|both"))),
        }
    }
}

/// Eavesdropper parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EveSpec {
    intercept_probability: f64,
    mode: EveMode,
    angle_set: Vec<PolarizationAngle>,
}

impl EveSpec {
    pub fn new(intercept_probability: f64, mode: EveMode, angle_set: Vec<PolarizationAngle>) -> Result<Self> {
        check_probability("eve_p", intercept_probability)?;
        if angle_set.is_empty() {
            return Err(Error::config("eve_angle_set", "must not be empty"));
        }
        Ok(Self {
            intercept_probability,
            mode,
            angle_set,
        })
    }

    /// Eve for BB84/B92 sessions: mode is not applicable, angles unused.
    pub fn prepare_measure(intercept_probability: f64) -> Result<Self> {
        Self::new(intercept_probability, EveMode::NotApplicable, Self::default_angle_set())
    }

    pub fn default_angle_set() -> Vec<PolarizationAngle> {
        vec![PolarizationAngle::HORIZONTAL, PolarizationAngle::DIAGONAL]
    }

    pub fn intercept_probability(&self) -> f64 {
        self.intercept_probability
    }

    pub fn mode(&self) -> EveMode {
        self.mode
    }

    pub fn angle_set(&self) -> &[PolarizationAngle] {
        &self.angle_set
    }
}

/// What the eavesdropper did to one photon.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EveRecord {
    pub intercepted: bool,
    pub eve_analyzer: Option<PolarizationAngle>,
    pub eve_outcome: Option<Outcome>,
    pub eve_inferred_bit: Option<u8>,
    pub resent_state: Option<PolarizationAngle>,
    /// B92 only: Eve saw no click and resent a random signal state.
    pub guessed: bool,
}

impl EveRecord {
    pub fn untouched() -> Self {
        Self::default()
    }
}

fn pick<T: Copy>(items: &[T], draw: f64) -> T {
    let i = ((draw * items.len() as f64) as usize).min(items.len() - 1);
    items[i]
}

pub fn apply_flip_noise(state: PolarizationAngle, spec: NoiseSpec, draw: f64) -> Result<PolarizationAngle> {
    if !(0.0..1.0).contains(&draw) {
        return Err(Error::Domain(format!("draw {draw} outside [0, 1)")));
    }
    Ok(if draw < spec.flip_probability {
        state.orthogonal()
    } else {
        state
    })
}

/// BB84 intercept-resend. `draws[0]` picks Eve's basis (Z below ½, X
/// otherwise); `draws[1]` samples her measurement.
pub fn bb84_intercept_resend(state: PolarizationAngle, draws: [f64; 2]) -> Result<(PolarizationAngle, EveRecord)> {
    let analyzer = if draws[0] < 0.5 {
        PolarizationAngle::HORIZONTAL
    } else {
        PolarizationAngle::DIAGONAL
    };
    let outcome = measure_polarization(state, analyzer, draws[1])?;
    let resent = crate::qstate::collapse_partner(analyzer, outcome);
    Ok((
        resent,
        EveRecord {
            intercepted: true,
            eve_analyzer: Some(analyzer),
            eve_outcome: Some(outcome),
            eve_inferred_bit: Some(outcome.bit()),
            resent_state: Some(resent),
            guessed: false,
        },
    ))
}

/// B92 intercept-resend. `draws[0]` picks Eve's test analyzer (|V⟩ below ½,
/// |−⟩ otherwise), `draws[1]` decides the click, `draws[2]` picks the guessed
/// resend after a no-click.
pub fn b92_intercept_resend(state: PolarizationAngle, draws: [f64; 3]) -> Result<(PolarizationAngle, EveRecord)> {
    if !(state.approx_eq(PolarizationAngle::HORIZONTAL) || state.approx_eq(PolarizationAngle::DIAGONAL)) {
        return Err(Error::Domain(format!("{state} is not a B92 signal state")));
    }
    let analyzer = if draws[0] < 0.5 {
        PolarizationAngle::VERTICAL
    } else {
        PolarizationAngle::ANTI_DIAGONAL
    };
    let outcome = measure_polarization(state, analyzer, draws[1])?;
    let mut record = EveRecord {
        intercepted: true,
        eve_analyzer: Some(analyzer),
        eve_outcome: Some(outcome),
        ..EveRecord::default()
    };
    let resent = match outcome {
        Outcome::Aligned => {
            let (bit, resend) = if analyzer == PolarizationAngle::VERTICAL {
                (1, PolarizationAngle::DIAGONAL)
            } else {
                (0, PolarizationAngle::HORIZONTAL)
            };
            record.eve_inferred_bit = Some(bit);
            resend
        }
        Outcome::Orthogonal => {
            if !(0.0..1.0).contains(&draws[2]) {
                return Err(Error::Domain(format!("draw {} outside [0, 1)", draws[2])));
            }
            record.guessed = true;
            pick(&[PolarizationAngle::HORIZONTAL, PolarizationAngle::DIAGONAL], draws[2])
        }
    };
    record.resent_state = Some(resent);
    Ok((resent, record))
}

/// E91 interception of the receiver-bound photon. `draws[0]` picks Eve's
/// analyzer from `spec.angle_set`, `draws[1]` samples her measurement.
pub fn e91_intercept(flying_state: PolarizationAngle, spec: &EveSpec, draws: [f64; 2]) -> Result<(PolarizationAngle, EveRecord)> {
    if spec.mode == EveMode::NotApplicable {
        return Err(Error::config("eve_mode", "E91 interception needs key, bell or both"));
    }
    if spec.angle_set.is_empty() {
        return Err(Error::config("eve_angle_set", "must not be empty"));
    }
    if !(0.0..1.0).contains(&draws[0]) {
        return Err(Error::Domain(format!("draw {} outside [0, 1)", draws[0])));
    }
    let analyzer = pick(&spec.angle_set, draws[0]);
    let outcome = measure_polarization(flying_state, analyzer, draws[1])?;
    let resent = crate::qstate::collapse_partner(analyzer, outcome);
    Ok((
        resent,
        EveRecord {
            intercepted: true,
            eve_analyzer: Some(analyzer),
            eve_outcome: Some(outcome),
            eve_inferred_bit: Some(outcome.bit()),
            resent_state: Some(resent),
            guessed: false,
        },
    ))
}
