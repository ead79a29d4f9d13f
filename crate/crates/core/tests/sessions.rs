//! Cross-module checks on whole sessions: Monte Carlo against the
//! enumeration oracles, and the spec'd session examples.

use qkd_core::channel::{EveMode, EveSpec};
use qkd_core::protocol::b92::{expected_b92, run_b92};
use qkd_core::protocol::bb84::run_bb84;
use qkd_core::protocol::e91::{expected_e91, run_e91};
use qkd_core::{Protocol, SessionConfig};

fn three_sigma(q: f64, n: u64) -> f64 {
    3.0 * (q * (1.0 - q) / n as f64).sqrt()
}

#[test]
fn bb84_noise_only() {
    let s = run_bb84(&SessionConfig::new(Protocol::Bb84).with_noise(0.05).with_seed(31)).unwrap();
    assert!((s.qber.fraction - 0.05).abs() <= 0.0066, "{}", s.qber.fraction);
}

#[test]
fn b92_noise_conclusive_rate() {
    let s = run_b92(&SessionConfig::new(Protocol::B92).with_noise(0.1).with_seed(32)).unwrap();
    let o = expected_b92(0.1, 0.0).unwrap().conclusive_rate.unwrap();
    assert!((o - 0.3).abs() < 1e-12);
    assert!((s.conclusive_rate - o).abs() <= three_sigma(o, 20_000));
}

#[test]
fn e91_bell_attack_session() {
    let cfg = SessionConfig::new(Protocol::E91)
        .with_bell_ratio(0.5)
        .with_eve_mode(EveMode::Bell)
        .with_eve(1.0)
        .with_seed(33);
    let s = run_e91(&cfg).unwrap();
    let chsh = s.chsh.unwrap();
    assert!((chsh.s - 2f64.sqrt()).abs() <= 0.06, "{}", chsh.s);
    assert_eq!(s.qber.n_error, 0);
    assert!(!s.decision.is_accept());
}

#[test]
fn e91_noisy_session() {
    let cfg = SessionConfig::new(Protocol::E91).with_bell_ratio(0.5).with_noise(0.05).with_seed(34);
    let s = run_e91(&cfg).unwrap();
    let chsh = s.chsh.unwrap();
    assert!((chsh.s - 2.545).abs() <= 0.06, "{}", chsh.s);
    assert!((s.qber.fraction - 0.05).abs() <= 0.013);
    assert!(s.decision.is_accept());
}

#[test]
fn e91_monte_carlo_tracks_oracle_correlations() {
    let set = EveSpec::default_angle_set();
    let mut seed = 40;
    for mode in [EveMode::Key, EveMode::Bell, EveMode::Both] {
        for (p, e) in [(0.0, 0.5), (0.05, 1.0), (0.1, 0.25)] {
            seed += 1;
            let cfg = SessionConfig::new(Protocol::E91)
                .with_bell_ratio(0.5)
                .with_eve_mode(mode)
                .with_noise(p)
                .with_eve(e)
                .with_seed(seed);
            let s = run_e91(&cfg).unwrap();
            let o = expected_e91(p, e, mode, &set).unwrap();
            let chsh = s.chsh.unwrap();
            for (k, want) in o.correlations.unwrap().iter().enumerate() {
                let n = chsh.counts[k].total() as f64;
                let tol = 3.0 * ((1.0 - want * want) / n).sqrt();
                assert!((chsh.e_values[k] - want).abs() <= tol, "{mode:?} ({p},{e}) pair {k}");
            }
            assert!((s.qber.fraction - o.qber).abs() <= three_sigma(o.qber, s.qber.n_total).max(1e-12));
            for e in chsh.e_values {
                assert!(e.abs() <= 1.0);
            }
        }
    }
}
