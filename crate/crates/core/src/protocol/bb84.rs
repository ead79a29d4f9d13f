//! BB84: four states in two conjugate bases, sifting on matched bases.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_oracle_probabilities, count_errors, disclose_sample, ExpectedStats, EMPTY_KEY_WARNING};
use crate::channel::{apply_flip_noise, bb84_intercept_resend, EveRecord, NoiseSpec};
use crate::config::{Protocol, SessionConfig};
use crate::error::Result;
use crate::metrics::{qber, risk_classify, sifted_rate, QberReport, RiskTier};
use crate::qstate::{click_probability, measure_polarization, Outcome, PolarizationAngle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    /// `+`: analyzer at 0°.
    Rectilinear,
    /// `×`: analyzer at 45°.
    Diagonal,
}

impl Basis {
    pub const ALL: [Basis; 2] = [Basis::Rectilinear, Basis::Diagonal];

    pub fn analyzer(self) -> PolarizationAngle {
        match self {
            Basis::Rectilinear => PolarizationAngle::HORIZONTAL,
            Basis::Diagonal => PolarizationAngle::DIAGONAL,
        }
    }

    fn from_draw(draw: f64) -> Self {
        if draw < 0.5 {
            Basis::Rectilinear
        } else {
            Basis::Diagonal
        }
    }
}

/// (0,+)→0°, (1,+)→90°, (0,×)→45°, (1,×)→135°.
pub fn encode(bit: u8, basis: Basis) -> PolarizationAngle {
    match (bit, basis) {
        (0, Basis::Rectilinear) => PolarizationAngle::HORIZONTAL,
        (_, Basis::Rectilinear) => PolarizationAngle::VERTICAL,
        (0, Basis::Diagonal) => PolarizationAngle::DIAGONAL,
        (_, Basis::Diagonal) => PolarizationAngle::ANTI_DIAGONAL,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bb84Round {
    pub sender_bit: u8,
    pub sender_basis: Basis,
    pub encoded_state: PolarizationAngle,
    pub eve: EveRecord,
    pub received_state: PolarizationAngle,
    pub receiver_basis: Basis,
    pub receiver_bit: u8,
    pub kept: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sifted {
    pub indices: Vec<usize>,
    pub sender: Vec<u8>,
    pub receiver: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bb84Session {
    pub config: SessionConfig,
    pub rounds: Vec<Bb84Round>,
    pub sifted_indices: Vec<usize>,
    pub sifted_sender: Vec<u8>,
    pub sifted_receiver: Vec<u8>,
    /// Positions within the sifted key compared publicly.
    pub sample_indices: Vec<usize>,
    pub qber: QberReport,
    pub sifted_rate: f64,
    pub risk: RiskTier,
    pub warnings: Vec<String>,
}

pub fn sift_bb84(rounds: &[Bb84Round]) -> Sifted {
    let mut out = Sifted::default();
    for (i, r) in rounds.iter().enumerate().filter(|(_, r)| r.kept) {
        out.indices.push(i);
        out.sender.push(r.sender_bit);
        out.receiver.push(r.receiver_bit);
    }
    out
}

pub fn run_bb84(config: &SessionConfig) -> Result<Bb84Session> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    run_bb84_with_rng(config, &mut rng)
}

/// Every round consumes the same eight uniform draws regardless of the
/// branch taken, so streams stay aligned across parameter changes.
pub fn run_bb84_with_rng<R: Rng + ?Sized>(config: &SessionConfig, rng: &mut R) -> Result<Bb84Session> {
    config.expect_protocol(Protocol::Bb84)?;
    let noise = NoiseSpec::new(config.noise_p)?;
    let mut rounds = Vec::with_capacity(config.rounds as usize);
    for _ in 0..config.rounds {
        let d: [f64; 8] = rng.gen();
        let sender_bit = u8::from(d[0] < 0.5);
        let sender_basis = Basis::from_draw(d[1]);
        let encoded_state = encode(sender_bit, sender_basis);
        let (in_flight, eve) = if d[2] < config.eve_p {
            bb84_intercept_resend(encoded_state, [d[3], d[4]])?
        } else {
            (encoded_state, EveRecord::untouched())
        };
        let received_state = apply_flip_noise(in_flight, noise, d[5])?;
        let receiver_basis = Basis::from_draw(d[6]);
        let receiver_bit = measure_polarization(received_state, receiver_basis.analyzer(), d[7])?.bit();
        rounds.push(Bb84Round {
            sender_bit,
            sender_basis,
            encoded_state,
            eve,
            received_state,
            receiver_basis,
            receiver_bit,
            kept: sender_basis == receiver_basis,
        });
    }
    let sifted = sift_bb84(&rounds);
    let sample_indices = disclose_sample(rng, sifted.sender.len(), config.sample_fraction);
    let errors = count_errors(&sifted.sender, &sifted.receiver, &sample_indices);
    let report = qber(errors, sample_indices.len() as u64)?;
    let mut warnings = Vec::new();
    if report.degenerate {
        warnings.push(EMPTY_KEY_WARNING.to_string());
    }
    Ok(Bb84Session {
        config: config.clone(),
        sifted_rate: sifted_rate(sifted.indices.len() as u64, rounds.len() as u64)?,
        rounds,
        sifted_indices: sifted.indices,
        sifted_sender: sifted.sender,
        sifted_receiver: sifted.receiver,
        sample_indices,
        risk: risk_classify(&report, None),
        qber: report,
        warnings,
    })
}

/// Exact sifted error rate and sifted rate, enumerating every branch of one
/// round with its Born or Bernoulli weight.
pub fn expected_bb84(noise_p: f64, eve_p: f64) -> Result<ExpectedStats> {
    check_oracle_probabilities(noise_p, eve_p)?;
    let mut kept = 0.0;
    let mut kept_errors = 0.0;
    for bit in [0u8, 1] {
        for sender_basis in Basis::ALL {
            let w_sender = 0.25;
            let sent = encode(bit, sender_basis);
            // (state after Eve, weight)
            let mut after_eve = vec![(sent, 1.0 - eve_p)];
            for eve_basis in Basis::ALL {
                let p_aligned = click_probability(sent, eve_basis.analyzer())?;
                for (outcome, p) in [(Outcome::Aligned, p_aligned), (Outcome::Orthogonal, 1.0 - p_aligned)] {
                    let resent = crate::qstate::collapse_partner(eve_basis.analyzer(), outcome);
                    after_eve.push((resent, eve_p * 0.5 * p));
                }
            }
            for (state, w_eve) in after_eve {
                for (flipped, w_noise) in [(false, 1.0 - noise_p), (true, noise_p)] {
                    let received = if flipped { state.orthogonal() } else { state };
                    for receiver_basis in Basis::ALL {
                        let w = w_sender * w_eve * w_noise * 0.5;
                        if receiver_basis != sender_basis || w == 0.0 {
                            continue;
                        }
                        let p_zero = click_probability(received, receiver_basis.analyzer())?;
                        let p_wrong = if bit == 0 { 1.0 - p_zero } else { p_zero };
                        kept += w;
                        kept_errors += w * p_wrong;
                    }
                }
            }
        }
    }
    Ok(ExpectedStats {
        qber: if kept > 0.0 { kept_errors / kept } else { 0.0 },
        sifted_rate: Some(kept),
        ..ExpectedStats::default()
    })
}
