//! Protocol sessions and their exact-expectation oracles.

pub mod b92;
pub mod bb84;
pub mod e91;

use rand::seq::index;
use rand::Rng;

/// Indices (into the sifted key) disclosed for error estimation.
pub(crate) fn disclose_sample<R: Rng + ?Sized>(rng: &mut R, sifted_len: usize, fraction: f64) -> Vec<usize> {
    if fraction >= 1.0 {
        return (0..sifted_len).collect();
    }
    let k = ((sifted_len as f64) * fraction).ceil() as usize;
    let mut picked = index::sample(rng, sifted_len, k.min(sifted_len)).into_vec();
    picked.sort_unstable();
    picked
}

/// Counts mismatches between two bit strings at the given positions.
pub(crate) fn count_errors(a: &[u8], b: &[u8], sample: &[usize]) -> u64 {
    sample.iter().filter(|&&i| a[i] != b[i]).count() as u64
}

pub(crate) const EMPTY_KEY_WARNING: &str = "empty sifted key; QBER reported as 0";

/// Exact per-round expectations computed by enumerating the discrete event
/// space of a protocol.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExpectedStats {
    /// Expected error fraction over the compared key bits.
    pub qber: f64,
    pub sifted_rate: Option<f64>,
    pub conclusive_rate: Option<f64>,
    /// E91 correlations in CHSH pair order (A1,B1), (A1,B3), (A2,B1), (A2,B3).
    pub correlations: Option<[f64; 4]>,
    pub chsh_s: Option<f64>,
}

pub(crate) fn check_oracle_probabilities(noise_p: f64, eve_p: f64) -> crate::error::Result<()> {
    crate::channel::check_probability("noise_p", noise_p)?;
    crate::channel::check_probability("eve_p", eve_p)?;
    Ok(())
}
