//! Single-photon polarization states and the Φ⁺ photon pair.
//!
//! Every state is a pure linear polarization described by one angle in
//! degrees. Measurement probabilities follow the Born rule,
//! `P(click) = cos²(state − analyzer)`. Sampling functions take their
//! uniform draws explicitly so that callers own the random stream.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance, in degrees, for comparing canonical angles.
pub const ANGLE_EPSILON: f64 = 1e-9;

/// Linear polarization orientation in degrees, canonical in `[0, 180)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PolarizationAngle(f64);

impl PolarizationAngle {
    pub const HORIZONTAL: Self = Self(0.0);
    pub const DIAGONAL: Self = Self(45.0);
    pub const VERTICAL: Self = Self(90.0);
    pub const ANTI_DIAGONAL: Self = Self(135.0);

    pub fn new(degrees: f64) -> Result<Self> {
        if !degrees.is_finite() {
            return Err(Error::Domain(format!("angle {degrees} is not finite")));
        }
        let mut d = degrees.rem_euclid(180.0);
        // rem_euclid can round up to exactly 180 for tiny negative inputs.
        if d >= 180.0 - ANGLE_EPSILON {
            d = 0.0;
        }
        Ok(Self(d))
    }

    /// Constructor for literal angles known to be finite.
    pub(crate) fn deg(degrees: f64) -> Self {
        Self::new(degrees).expect("finite literal angle")
    }

    pub fn degrees(self) -> f64 {
        self.0
    }

    pub fn rotated(self, degrees: f64) -> Self {
        Self::deg(self.0 + degrees)
    }

    pub fn orthogonal(self) -> Self {
        self.rotated(90.0)
    }

    /// Equality up to [`ANGLE_EPSILON`], wrapping across 0/180.
    pub fn approx_eq(self, other: Self) -> bool {
        let d = (self.0 - other.0).abs();
        d <= ANGLE_EPSILON || (180.0 - d) <= ANGLE_EPSILON
    }
}

impl fmt::Display for PolarizationAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}°", self.0)
    }
}

/// Which detector fired: the one on the analyzer axis or its perpendicular.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Aligned,
    Orthogonal,
}

impl Outcome {
    /// `+1` for [`Outcome::Aligned`], `−1` for [`Outcome::Orthogonal`].
    pub fn sign(self) -> i8 {
        match self {
            Outcome::Aligned => 1,
            Outcome::Orthogonal => -1,
        }
    }

    /// Bit reading of the outcome: Aligned is 0, Orthogonal is 1.
    pub fn bit(self) -> u8 {
        match self {
            Outcome::Aligned => 0,
            Outcome::Orthogonal => 1,
        }
    }
}

/// The four maximally entangled two-photon states. Only `PhiPlus` is simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

fn check_finite(a: PolarizationAngle) -> Result<()> {
    if a.0.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("angle {} is not finite", a.0)))
    }
}

fn check_draw(draw: f64) -> Result<()> {
    if (0.0..1.0).contains(&draw) {
        Ok(())
    } else {
        Err(Error::Domain(format!("draw {draw} outside [0, 1)")))
    }
}

/// Born-rule probability that a photon in `state` fires the detector aligned
/// with `analyzer`.
pub fn click_probability(state: PolarizationAngle, analyzer: PolarizationAngle) -> Result<f64> {
    check_finite(state)?;
    check_finite(analyzer)?;
    let delta = PolarizationAngle::deg((state.0 - analyzer.0).abs());
    // Parallel and orthogonal pairs are exact; cos² of 90° is not zero in f64.
    if delta.approx_eq(PolarizationAngle::HORIZONTAL) {
        return Ok(1.0);
    }
    if delta.approx_eq(PolarizationAngle::VERTICAL) {
        return Ok(0.0);
    }
    let c = delta.0.to_radians().cos();
    Ok((c * c).clamp(0.0, 1.0))
}

/// Samples a single-photon measurement. Aligned iff `draw < P(click)`.
pub fn measure_polarization(
    state: PolarizationAngle,
    analyzer: PolarizationAngle,
    draw: f64,
) -> Result<Outcome> {
    check_draw(draw)?;
    let p = click_probability(state, analyzer)?;
    Ok(if draw < p {
        Outcome::Aligned
    } else {
        Outcome::Orthogonal
    })
}

/// Expected product of outcome signs for Φ⁺ analyzed at `a` and `b`.
pub fn correlation_phi_plus(a: PolarizationAngle, b: PolarizationAngle) -> Result<f64> {
    check_finite(a)?;
    check_finite(b)?;
    Ok((2.0 * (a.0 - b.0)).to_radians().cos())
}

/// State of the second Φ⁺ photon once the first has been measured at `a`.
pub fn collapse_partner(a: PolarizationAngle, outcome: Outcome) -> PolarizationAngle {
    match outcome {
        Outcome::Aligned => a,
        Outcome::Orthogonal => a.orthogonal(),
    }
}

/// Samples both outcomes of a Φ⁺ pair: the first party is uniform, the
/// partner is measured in its collapsed state.
pub fn sample_pair_phi_plus(
    a: PolarizationAngle,
    b: PolarizationAngle,
    draws: (f64, f64),
) -> Result<(Outcome, Outcome)> {
    check_draw(draws.0)?;
    let first = if draws.0 < 0.5 {
        Outcome::Aligned
    } else {
        Outcome::Orthogonal
    };
    let second = measure_polarization(collapse_partner(a, first), b, draws.1)?;
    Ok((first, second))
}
