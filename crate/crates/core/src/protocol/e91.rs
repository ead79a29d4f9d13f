//! E91: Φ⁺ pairs shared between sender and receiver, key rounds at matched
//! analyzers and CHSH Bell rounds that certify entanglement.
//!
//! Analyzer angles: sender A0 = A1 = 0°, A2 = 45°; receiver B0 = 0°,
//! B1 = 22.5°, B3 = 67.5°. Key rounds use (A0, B0). The CHSH combination is
//! `S = E(A1,B1) − E(A1,B3) + E(A2,B1) + E(A2,B3)`, which reaches 2√2 at
//! these angles.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_oracle_probabilities, count_errors, disclose_sample, ExpectedStats, EMPTY_KEY_WARNING};
use crate::channel::{apply_flip_noise, e91_intercept, EveMode, EveRecord, EveSpec, NoiseSpec};
use crate::config::{AllocationMode, Protocol, SessionConfig};
use crate::error::{Error, Result};
use crate::metrics::{qber, risk_classify, security_decision, QberReport, RiskTier, SecurityDecision};
use crate::qstate::{click_probability, collapse_partner, measure_polarization, Outcome, PolarizationAngle};

pub const A1_DEG: f64 = 0.0;
pub const A2_DEG: f64 = 45.0;
pub const B1_DEG: f64 = 22.5;
pub const B3_DEG: f64 = 67.5;
pub const KEY_DEG: f64 = 0.0;

const SENDER_ANGLES: [f64; 2] = [A1_DEG, A2_DEG];
const RECEIVER_BELL_ANGLES: [f64; 2] = [B1_DEG, B3_DEG];
const RECEIVER_ANGLES: [f64; 3] = [KEY_DEG, B1_DEG, B3_DEG];

/// One of the four analyzer pairs entering the CHSH combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChshPair {
    A1B1,
    A1B3,
    A2B1,
    A2B3,
}

impl ChshPair {
    pub const ALL: [ChshPair; 4] = [ChshPair::A1B1, ChshPair::A1B3, ChshPair::A2B1, ChshPair::A2B3];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn angles(self) -> (f64, f64) {
        match self {
            ChshPair::A1B1 => (A1_DEG, B1_DEG),
            ChshPair::A1B3 => (A1_DEG, B3_DEG),
            ChshPair::A2B1 => (A2_DEG, B1_DEG),
            ChshPair::A2B3 => (A2_DEG, B3_DEG),
        }
    }

    /// Sign of this pair's term in S.
    pub fn sign(self) -> f64 {
        if self == ChshPair::A1B3 {
            -1.0
        } else {
            1.0
        }
    }
}

impl fmt::Display for ChshPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ChshPair::A1B1 => "(A1,B1)",
            ChshPair::A1B3 => "(A1,B3)",
            ChshPair::A2B1 => "(A2,B1)",
            ChshPair::A2B3 => "(A2,B3)",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RoundPurpose {
    Key,
    Bell(ChshPair),
    Discarded,
}

fn is(angle: PolarizationAngle, deg: f64) -> bool {
    angle.approx_eq(PolarizationAngle::deg(deg))
}

pub fn classify_round(a_angle: PolarizationAngle, b_angle: PolarizationAngle) -> Result<RoundPurpose> {
    let a1 = is(a_angle, A1_DEG);
    let a2 = is(a_angle, A2_DEG);
    if !(a1 || a2) {
        return Err(Error::Domain(format!("sender angle {a_angle} not in {{0°, 45°}}")));
    }
    let purpose = if is(b_angle, KEY_DEG) {
        if a1 {
            RoundPurpose::Key
        } else {
            RoundPurpose::Discarded
        }
    } else if is(b_angle, B1_DEG) {
        RoundPurpose::Bell(if a1 { ChshPair::A1B1 } else { ChshPair::A2B1 })
    } else if is(b_angle, B3_DEG) {
        RoundPurpose::Bell(if a1 { ChshPair::A1B3 } else { ChshPair::A2B3 })
    } else {
        return Err(Error::Domain(format!("receiver angle {b_angle} not in {{0°, 22.5°, 67.5°}}")));
    };
    Ok(purpose)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct E91Round {
    pub purpose: RoundPurpose,
    pub a_angle: PolarizationAngle,
    pub b_angle: PolarizationAngle,
    pub a_outcome: Outcome,
    pub b_outcome: Outcome,
    pub eve: EveRecord,
    pub noise_flipped: bool,
}

/// Same/different tallies for one analyzer pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PairCounts {
    pub n_same: u64,
    pub n_diff: u64,
}

impl PairCounts {
    pub fn record(&mut self, x: Outcome, y: Outcome) {
        if x == y {
            self.n_same += 1;
        } else {
            self.n_diff += 1;
        }
    }

    pub fn total(&self) -> u64 {
        self.n_same + self.n_diff
    }

    pub fn correlation(&self) -> Option<f64> {
        let n = self.total();
        (n > 0).then(|| (self.n_same as f64 - self.n_diff as f64) / n as f64)
    }
}

/// `(N_same − N_diff) / N_total` over the outcomes recorded for `pair`.
pub fn correlation_estimate(pair: ChshPair, outcomes: &[(Outcome, Outcome)]) -> Result<f64> {
    let mut c = PairCounts::default();
    for &(x, y) in outcomes {
        c.record(x, y);
    }
    c.correlation()
        .ok_or_else(|| Error::InsufficientData(format!("no rounds recorded for pair {pair}")))
}

/// Combines correlations given in [`ChshPair::ALL`] order.
pub fn chsh_value(estimates: [Option<f64>; 4]) -> Result<f64> {
    let mut s = 0.0;
    for pair in ChshPair::ALL {
        let e = estimates[pair.index()]
            .ok_or_else(|| Error::InsufficientData(format!("missing correlation for pair {pair}")))?;
        s += pair.sign() * e;
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshEstimate {
    pub e_values: [f64; 4],
    pub counts: [PairCounts; 4],
    pub s: f64,
}

impl ChshEstimate {
    pub fn from_counts(counts: [PairCounts; 4]) -> Result<Self> {
        let mut e_values = [0.0; 4];
        for pair in ChshPair::ALL {
            e_values[pair.index()] = counts[pair.index()]
                .correlation()
                .ok_or_else(|| Error::InsufficientData(format!("no rounds recorded for pair {pair}")))?;
        }
        let s = chsh_value(e_values.map(Some))?;
        Ok(Self { e_values, counts, s })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct E91Session {
    pub config: SessionConfig,
    pub rounds: Vec<E91Round>,
    /// Absent when some CHSH pair received no rounds.
    pub chsh: Option<ChshEstimate>,
    pub key_sender: Vec<u8>,
    pub key_receiver: Vec<u8>,
    pub sample_indices: Vec<usize>,
    pub qber: QberReport,
    /// Fraction of rounds used for key generation.
    pub sifted_rate: f64,
    pub discard_rate: f64,
    pub decision: SecurityDecision,
    pub risk: RiskTier,
    pub warnings: Vec<String>,
}

fn pick(options: &[f64], draw: f64) -> PolarizationAngle {
    let i = ((draw * options.len() as f64) as usize).min(options.len() - 1);
    PolarizationAngle::deg(options[i])
}

fn covers(mode: EveMode, purpose: RoundPurpose) -> bool {
    match purpose {
        RoundPurpose::Key => mode.covers_key(),
        RoundPurpose::Bell(_) => mode.covers_bell(),
        RoundPurpose::Discarded => mode == EveMode::Both,
    }
}

pub fn run_e91(config: &SessionConfig) -> Result<E91Session> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    run_e91_with_rng(config, &mut rng)
}

pub fn run_e91_with_rng<R: Rng + ?Sized>(config: &SessionConfig, rng: &mut R) -> Result<E91Session> {
    config.expect_protocol(Protocol::E91)?;
    let noise = NoiseSpec::new(config.noise_p)?;
    // validate() guarantees these are present for E91.
    let mode = config.eve_mode.unwrap_or(EveMode::Both);
    let bell_ratio = config.bell_ratio.unwrap_or(crate::config::DEFAULT_BELL_RATIO);
    let allocation = config.allocation.unwrap_or(AllocationMode::Designated);
    let eve = EveSpec::new(config.eve_p, mode, EveSpec::default_angle_set())?;

    let mut rounds = Vec::with_capacity(config.rounds as usize);
    for _ in 0..config.rounds {
        let d: [f64; 9] = rng.gen();
        let (a_angle, b_angle) = match allocation {
            AllocationMode::Designated if d[0] < bell_ratio => {
                (pick(&SENDER_ANGLES, d[1]), pick(&RECEIVER_BELL_ANGLES, d[2]))
            }
            AllocationMode::Designated => (PolarizationAngle::deg(KEY_DEG), PolarizationAngle::deg(KEY_DEG)),
            AllocationMode::Independent => (pick(&SENDER_ANGLES, d[1]), pick(&RECEIVER_ANGLES, d[2])),
        };
        let purpose = classify_round(a_angle, b_angle)?;
        let a_outcome = if d[3] < 0.5 { Outcome::Aligned } else { Outcome::Orthogonal };
        let flying = collapse_partner(a_angle, a_outcome);
        let (flying, eve_record) = if covers(mode, purpose) && d[4] < config.eve_p {
            e91_intercept(flying, &eve, [d[5], d[6]])?
        } else {
            (flying, EveRecord::untouched())
        };
        let received = apply_flip_noise(flying, noise, d[7])?;
        let b_outcome = measure_polarization(received, b_angle, d[8])?;
        rounds.push(E91Round {
            purpose,
            a_angle,
            b_angle,
            a_outcome,
            b_outcome,
            eve: eve_record,
            noise_flipped: received != flying,
        });
    }

    let mut counts = [PairCounts::default(); 4];
    let mut key_sender = Vec::new();
    let mut key_receiver = Vec::new();
    let mut discarded = 0u64;
    for r in &rounds {
        match r.purpose {
            RoundPurpose::Key => {
                key_sender.push(r.a_outcome.bit());
                key_receiver.push(r.b_outcome.bit());
            }
            RoundPurpose::Bell(pair) => counts[pair.index()].record(r.a_outcome, r.b_outcome),
            RoundPurpose::Discarded => discarded += 1,
        }
    }
    let n = rounds.len() as f64;
    let sample_indices = disclose_sample(rng, key_sender.len(), config.sample_fraction);
    let report = qber(count_errors(&key_sender, &key_receiver, &sample_indices), sample_indices.len() as u64)?;
    let mut warnings = Vec::new();
    if report.degenerate {
        warnings.push(EMPTY_KEY_WARNING.to_string());
    }
    let (chsh, decision, risk) = match ChshEstimate::from_counts(counts) {
        Ok(est) => {
            let decision = security_decision(est.s, report.fraction, config.qber_threshold);
            let risk = risk_classify(&report, Some(est.s.abs()));
            (Some(est), decision, risk)
        }
        Err(e) => {
            warnings.push(e.to_string());
            let decision = SecurityDecision::Abort {
                reason: "CHSH value unavailable: insufficient Bell-test rounds".into(),
            };
            (None, decision, RiskTier::Highest)
        }
    };
    Ok(E91Session {
        config: config.clone(),
        sifted_rate: key_sender.len() as f64 / n,
        discard_rate: discarded as f64 / n,
        rounds,
        chsh,
        key_sender,
        key_receiver,
        sample_indices,
        qber: report,
        decision,
        risk,
        warnings,
    })
}

/// Probability that the receiver's outcome matches the sender's for a Φ⁺
/// pair at `(a, b)`, enumerating the sender outcome, Eve's analyzer and
/// outcome (with probability `attack_p`) and the noise flip.
fn enumerate_same(a: f64, b: f64, attack_p: f64, noise_p: f64, angle_set: &[PolarizationAngle]) -> Result<f64> {
    let a = PolarizationAngle::deg(a);
    let b = PolarizationAngle::deg(b);
    let mut p_same = 0.0;
    for first in [Outcome::Aligned, Outcome::Orthogonal] {
        let partner = collapse_partner(a, first);
        let mut flying = vec![(partner, 1.0 - attack_p)];
        for &e in angle_set {
            let p_aligned = click_probability(partner, e)?;
            let w = attack_p / angle_set.len() as f64;
            flying.push((collapse_partner(e, Outcome::Aligned), w * p_aligned));
            flying.push((collapse_partner(e, Outcome::Orthogonal), w * (1.0 - p_aligned)));
        }
        for (state, w_eve) in flying {
            for (flipped, w_noise) in [(false, 1.0 - noise_p), (true, noise_p)] {
                let received = if flipped { state.orthogonal() } else { state };
                let p_aligned = click_probability(received, b)?;
                let p_match = match first {
                    Outcome::Aligned => p_aligned,
                    Outcome::Orthogonal => 1.0 - p_aligned,
                };
                p_same += 0.5 * w_eve * w_noise * p_match;
            }
        }
    }
    Ok(p_same)
}

/// Exact correlations, S and key-round error rate for the given channel and
/// eavesdropper, by enumeration of every per-round branch.
pub fn expected_e91(noise_p: f64, eve_p: f64, mode: EveMode, angle_set: &[PolarizationAngle]) -> Result<ExpectedStats> {
    check_oracle_probabilities(noise_p, eve_p)?;
    if mode == EveMode::NotApplicable {
        return Err(Error::config("eve_mode", "E91 needs key|bell|both"));
    }
    if angle_set.is_empty() {
        return Err(Error::config("eve_angle_set", "must not be empty"));
    }
    let bell_attack = if mode.covers_bell() { eve_p } else { 0.0 };
    let key_attack = if mode.covers_key() { eve_p } else { 0.0 };
    let mut correlations = [0.0; 4];
    for pair in ChshPair::ALL {
        let (a, b) = pair.angles();
        let same = enumerate_same(a, b, bell_attack, noise_p, angle_set)?;
        correlations[pair.index()] = 2.0 * same - 1.0;
    }
    let s = chsh_value(correlations.map(Some))?;
    let key_same = enumerate_same(KEY_DEG, KEY_DEG, key_attack, noise_p, angle_set)?;
    Ok(ExpectedStats {
        qber: 1.0 - key_same,
        correlations: Some(correlations),
        chsh_s: Some(s),
        ..ExpectedStats::default()
    })
}
