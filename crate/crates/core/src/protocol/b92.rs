//! B92: two non-orthogonal signal states with unambiguous discrimination.
//!
//! Bit 0 is sent as |H⟩ (0°) and bit 1 as |+⟩ (45°). The receiver tests
//! either |V⟩ (90°) or |−⟩ (135°); a click on |V⟩ rules out |H⟩ and reads
//! bit 1, a click on |−⟩ rules out |+⟩ and reads bit 0. No click is
//! inconclusive and the slot is dropped.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_oracle_probabilities, count_errors, disclose_sample, ExpectedStats, EMPTY_KEY_WARNING};
use crate::channel::{apply_flip_noise, b92_intercept_resend, EveRecord, NoiseSpec};
use crate::config::{Protocol, SessionConfig};
use crate::error::{Error, Result};
use crate::metrics::{qber, risk_classify, QberReport, RiskTier};
use crate::qstate::{click_probability, measure_polarization, Outcome, PolarizationAngle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum B92MeasurementResult {
    ConclusiveBit0,
    ConclusiveBit1,
    Inconclusive,
}

impl B92MeasurementResult {
    pub fn bit(self) -> Option<u8> {
        match self {
            B92MeasurementResult::ConclusiveBit0 => Some(0),
            B92MeasurementResult::ConclusiveBit1 => Some(1),
            B92MeasurementResult::Inconclusive => None,
        }
    }
}

pub fn encode(bit: u8) -> PolarizationAngle {
    if bit == 0 {
        PolarizationAngle::HORIZONTAL
    } else {
        PolarizationAngle::DIAGONAL
    }
}

pub const RECEIVER_TESTS: [PolarizationAngle; 2] = [PolarizationAngle::VERTICAL, PolarizationAngle::ANTI_DIAGONAL];

fn conclusive_for(test: PolarizationAngle) -> Result<B92MeasurementResult> {
    if test.approx_eq(PolarizationAngle::VERTICAL) {
        Ok(B92MeasurementResult::ConclusiveBit1)
    } else if test.approx_eq(PolarizationAngle::ANTI_DIAGONAL) {
        Ok(B92MeasurementResult::ConclusiveBit0)
    } else {
        Err(Error::Domain(format!("{test} is not a B92 receiver test (90° or 135°)")))
    }
}

pub fn b92_receiver_measure(state: PolarizationAngle, test: PolarizationAngle, draw: f64) -> Result<B92MeasurementResult> {
    let on_click = conclusive_for(test)?;
    Ok(match measure_polarization(state, test, draw)? {
        Outcome::Aligned => on_click,
        Outcome::Orthogonal => B92MeasurementResult::Inconclusive,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct B92Round {
    pub sender_bit: u8,
    pub encoded_state: PolarizationAngle,
    pub eve: EveRecord,
    pub received_state: PolarizationAngle,
    pub receiver_test: PolarizationAngle,
    pub result: B92MeasurementResult,
    pub receiver_bit: Option<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct B92Session {
    pub config: SessionConfig,
    pub rounds: Vec<B92Round>,
    pub conclusive_rate: f64,
    pub conclusive_indices: Vec<usize>,
    pub sifted_sender: Vec<u8>,
    pub sifted_receiver: Vec<u8>,
    pub sample_indices: Vec<usize>,
    pub qber: QberReport,
    pub risk: RiskTier,
    pub warnings: Vec<String>,
}

pub fn run_b92(config: &SessionConfig) -> Result<B92Session> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    run_b92_with_rng(config, &mut rng)
}

pub fn run_b92_with_rng<R: Rng + ?Sized>(config: &SessionConfig, rng: &mut R) -> Result<B92Session> {
    config.expect_protocol(Protocol::B92)?;
    let noise = NoiseSpec::new(config.noise_p)?;
    let mut rounds = Vec::with_capacity(config.rounds as usize);
    for _ in 0..config.rounds {
        let d: [f64; 8] = rng.gen();
        let sender_bit = u8::from(d[0] < 0.5);
        let encoded_state = encode(sender_bit);
        let (in_flight, eve) = if d[1] < config.eve_p {
            b92_intercept_resend(encoded_state, [d[2], d[3], d[4]])?
        } else {
            (encoded_state, EveRecord::untouched())
        };
        let received_state = apply_flip_noise(in_flight, noise, d[5])?;
        let receiver_test = RECEIVER_TESTS[usize::from(d[6] >= 0.5)];
        let result = b92_receiver_measure(received_state, receiver_test, d[7])?;
        rounds.push(B92Round {
            sender_bit,
            encoded_state,
            eve,
            received_state,
            receiver_test,
            result,
            receiver_bit: result.bit(),
        });
    }

    let mut conclusive_indices = Vec::new();
    let mut sifted_sender = Vec::new();
    let mut sifted_receiver = Vec::new();
    for (i, r) in rounds.iter().enumerate() {
        if let Some(b) = r.receiver_bit {
            conclusive_indices.push(i);
            sifted_sender.push(r.sender_bit);
            sifted_receiver.push(b);
        }
    }
    let sample_indices = disclose_sample(rng, sifted_sender.len(), config.sample_fraction);
    let report = qber(count_errors(&sifted_sender, &sifted_receiver, &sample_indices), sample_indices.len() as u64)?;
    let mut warnings = Vec::new();
    if report.degenerate {
        warnings.push(EMPTY_KEY_WARNING.to_string());
    }
    Ok(B92Session {
        config: config.clone(),
        conclusive_rate: conclusive_indices.len() as f64 / rounds.len() as f64,
        rounds,
        conclusive_indices,
        sifted_sender,
        sifted_receiver,
        sample_indices,
        risk: risk_classify(&report, None),
        qber: report,
        warnings,
    })
}

/// Exact conclusive rate and conclusive-bit error rate by enumerating sender
/// bit, Eve's test, click and guess, the noise flip, and the receiver's test
/// and click.
pub fn expected_b92(noise_p: f64, eve_p: f64) -> Result<ExpectedStats> {
    check_oracle_probabilities(noise_p, eve_p)?;
    let signals = [PolarizationAngle::HORIZONTAL, PolarizationAngle::DIAGONAL];
    let mut conclusive = 0.0;
    let mut errors = 0.0;
    for bit in [0u8, 1] {
        let sent = encode(bit);
        let mut after_eve = vec![(sent, 1.0 - eve_p)];
        for eve_test in RECEIVER_TESTS {
            let p_click = click_probability(sent, eve_test)?;
            let on_click = if eve_test == PolarizationAngle::VERTICAL {
                PolarizationAngle::DIAGONAL
            } else {
                PolarizationAngle::HORIZONTAL
            };
            after_eve.push((on_click, eve_p * 0.5 * p_click));
            for guess in signals {
                after_eve.push((guess, eve_p * 0.5 * (1.0 - p_click) * 0.5));
            }
        }
        for (state, w_eve) in after_eve {
            for (flipped, w_noise) in [(false, 1.0 - noise_p), (true, noise_p)] {
                let received = if flipped { state.orthogonal() } else { state };
                for test in RECEIVER_TESTS {
                    let w = 0.5 * w_eve * w_noise * 0.5 * click_probability(received, test)?;
                    conclusive += w;
                    if conclusive_for(test)?.bit() != Some(bit) {
                        errors += w;
                    }
                }
            }
        }
    }
    Ok(ExpectedStats {
        qber: if conclusive > 0.0 { errors / conclusive } else { 0.0 },
        conclusive_rate: Some(conclusive),
        ..ExpectedStats::default()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ang(d: f64) -> PolarizationAngle {
        PolarizationAngle::new(d).unwrap()
    }

    #[test]
    fn receiver_measure_examples() {
        for draw in [0.0, 0.4, 0.9] {
            assert_eq!(b92_receiver_measure(ang(0.0), ang(90.0), draw).unwrap(), B92MeasurementResult::Inconclusive);
        }
        assert_eq!(b92_receiver_measure(ang(0.0), ang(135.0), 0.3).unwrap(), B92MeasurementResult::ConclusiveBit0);
        assert_eq!(b92_receiver_measure(ang(45.0), ang(90.0), 0.3).unwrap(), B92MeasurementResult::ConclusiveBit1);
        assert_eq!(b92_receiver_measure(ang(45.0), ang(90.0), 0.7).unwrap(), B92MeasurementResult::Inconclusive);
        assert!(b92_receiver_measure(ang(0.0), ang(45.0), 0.3).is_err());
    }

    #[test]
    fn oracle_examples() {
        let s = expected_b92(0.0, 0.0).unwrap();
        assert!((s.conclusive_rate.unwrap() - 0.25).abs() < 1e-12);
        assert_eq!(s.qber, 0.0);
        assert!((expected_b92(0.0, 1.0).unwrap().qber - 0.375).abs() < 1e-12);
        let s = expected_b92(0.1, 0.0).unwrap();
        assert!((s.conclusive_rate.unwrap() - 0.30).abs() < 1e-12);
        assert!((s.qber - 0.2 / 1.2).abs() < 1e-12);
    }

    #[test]
    fn oracle_matches_closed_forms() {
        for i in 0..=20 {
            let p = i as f64 / 20.0;
            let s = expected_b92(p, 0.0).unwrap();
            assert!((s.conclusive_rate.unwrap() - (1.0 + 2.0 * p) / 4.0).abs() < 1e-12);
            assert!((s.qber - 2.0 * p / (1.0 + 2.0 * p)).abs() < 1e-12);
            let e = p;
            let s = expected_b92(0.0, e).unwrap();
            assert!((s.conclusive_rate.unwrap() - 0.25).abs() < 1e-12);
            assert!((s.qber - 0.375 * e).abs() < 1e-12);
        }
    }

    #[test]
    fn oracle_qber_strictly_increasing_in_noise() {
        let qs: Vec<f64> = (0..=20).map(|i| expected_b92(i as f64 * 0.01, 0.0).unwrap().qber).collect();
        assert!(qs.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn clean_channel_has_zero_conclusive_errors() {
        let s = run_b92(&SessionConfig::new(Protocol::B92).with_seed(3)).unwrap();
        for r in &s.rounds {
            if let Some(b) = r.receiver_bit {
                assert_eq!(b, r.sender_bit);
            }
            assert_eq!(r.receiver_bit.is_some(), r.result != B92MeasurementResult::Inconclusive);
        }
        assert_eq!(s.qber.n_error, 0);
        assert!((s.conclusive_rate - 0.25).abs() <= 0.0092);
    }

    #[test]
    fn monte_carlo_matches_oracle_within_3_sigma() {
        let mut seed = 200;
        for p in [0.0, 0.1, 0.2] {
            for e in [0.0, 0.05, 0.1] {
                seed += 1;
                let s = run_b92(&SessionConfig::new(Protocol::B92).with_noise(p).with_eve(e).with_seed(seed)).unwrap();
                let o = expected_b92(p, e).unwrap();
                let c = o.conclusive_rate.unwrap();
                let n = s.rounds.len() as f64;
                assert!((s.conclusive_rate - c).abs() <= 3.0 * (c * (1.0 - c) / n).sqrt(), "rate ({p},{e})");
                let m = s.qber.n_total as f64;
                let tol = 3.0 * (o.qber * (1.0 - o.qber) / m).sqrt();
                assert!((s.qber.fraction - o.qber).abs() <= tol, "qber ({p},{e})");
            }
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let cfg = SessionConfig::new(Protocol::B92).with_eve(0.5).with_noise(0.05).with_rounds(2000).with_seed(8);
        assert_eq!(run_b92(&cfg).unwrap(), run_b92(&cfg).unwrap());
    }
}
