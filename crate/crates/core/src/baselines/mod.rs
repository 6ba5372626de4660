//! Comparison filters: stochastic EnKF, bootstrap SIR, auxiliary SIR and
//! the Gaussian sum particle filter.

mod enkf;
mod gspf;
mod particle;

pub use enkf::{enkf_step, Enkf};
pub use gspf::{gspf_step, Gspf, GspfMixture};
pub use particle::{
    asir_step, effective_sample_size, sir_step, systematic_resample, Asir, Sir, WeightedEnsemble,
};

use crate::error::{FilterError, Result};

/// Normalizes log-weights in place into probabilities.
pub(crate) fn normalize_log_weights(log_w: &[f64]) -> Result<Vec<f64>> {
    let top = log_w
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(FilterError::DegenerateWeights(
            "every particle likelihood vanished".into(),
        ));
    }
    let raw: Vec<f64> = log_w.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / total).collect())
}
