//! Building blocks of the bank recursion, each acting on one sub-ensemble
//! stored as a `J × γ` matrix with particles in columns.

use serde::{Deserialize, Serialize};

use crate::error::{FilterError, Result};
use crate::models::{measure_ensemble, MeasurementModel};
use crate::numerics::{chol_psd, relative_jitter, solve_right_spd, sym_sqrt, Matrix, Vector};

/// Relative jitter used when inverting innovation covariances.
const SOLVE_JITTER: f64 = 1e-12;

/// Arithmetic mean of the particles.
pub fn sample_mean(particles: &Matrix) -> Vector {
    let mut acc = Vector::zeros(particles.nrows());
    for x in particles.column_iter() {
        acc += x;
    }
    acc / particles.ncols() as f64
}

fn check_gamma(gamma: usize) -> Result<f64> {
    if gamma < 2 {
        return Err(FilterError::Parameter(format!(
            "anomaly matrices need at least 2 particles per mixand, got {gamma}"
        )));
    }
    Ok(((gamma - 1) as f64).sqrt())
}

/// `S`: column `u` is `(x_u − mean) / √(γ−1)`.
pub fn prediction_anomaly(particles: &Matrix, mean: &Vector) -> Result<Matrix> {
    let scale = check_gamma(particles.ncols())?;
    let mut s = particles.clone();
    for mut col in s.column_iter_mut() {
        col -= mean;
        col /= scale;
    }
    Ok(s)
}

/// Measurement anomaly about the sample mean of already mapped particles;
/// returns `(Sz, ⟨H⟩)`.
pub fn mapped_anomaly(mm: &dyn MeasurementModel, mapped: &Matrix) -> Result<(Matrix, Vector)> {
    let scale = check_gamma(mapped.ncols())?;
    let mean = sample_mean(mapped);
    let mut sz = Matrix::zeros(mapped.nrows(), mapped.ncols());
    for (u, hx) in mapped.column_iter().enumerate() {
        let diff = mm.innovation(&hx.into_owned(), &mean);
        sz.set_column(u, &(diff / scale));
    }
    Ok((sz, mean))
}

/// `Sz`: column `u` is `(H(x_u) − ⟨H⟩) / √(γ−1)`.
pub fn measurement_anomaly_pred(
    particles: &Matrix,
    mm: &dyn MeasurementModel,
    t: f64,
) -> Result<Matrix> {
    Ok(mapped_anomaly(mm, &measure_ensemble(mm, particles, t))?.0)
}

fn check_gain_shapes(s: &Matrix, sz: &Matrix, reg: &Matrix) -> Result<()> {
    if s.ncols() != sz.ncols() {
        return Err(FilterError::dim(
            "gain anomaly columns",
            s.ncols(),
            sz.ncols(),
        ));
    }
    if reg.nrows() != sz.nrows() || reg.ncols() != sz.nrows() {
        return Err(FilterError::dim(
            "gain regularization",
            format!("{0}x{0}", sz.nrows()),
            format!("{}x{}", reg.nrows(), reg.ncols()),
        ));
    }
    Ok(())
}

/// `K⁰ = S Szᵀ (Sz Szᵀ + Σ_Z)⁻¹`.
pub fn gain_zeroth(s: &Matrix, sz: &Matrix, sigma_z: &Matrix) -> Result<Matrix> {
    check_gain_shapes(s, sz, sigma_z)?;
    let c = sz * sz.transpose() + sigma_z;
    solve_right_spd(&(s * sz.transpose()), &c, SOLVE_JITTER)
}

/// Square-root gain `K̃ = S Szᵀ C^{-1/2} (C^{1/2} + Σ_Z^{1/2})⁻¹` with
/// `C = Sz Szᵀ + Σ_Z`. Anomalies moved by `−K̃ Sz` carry the posterior
/// covariance of a linear update.
pub fn gain_sqrt(s: &Matrix, sz: &Matrix, sigma_z: &Matrix) -> Result<Matrix> {
    check_gain_shapes(s, sz, sigma_z)?;
    let c = sz * sz.transpose() + sigma_z;
    let c_half = sym_sqrt(&c);
    let r_half = sym_sqrt(sigma_z);
    // K̃ [(C^{1/2} + R^{1/2}) C^{1/2}] = S Szᵀ
    let m = (&c_half + r_half) * &c_half;
    let rhs = (s * sz.transpose()).transpose();
    let kt =
        m.transpose().lu().solve(&rhs).ok_or_else(|| {
            FilterError::Numerical("singular square-root gain denominator".into())
        })?;
    Ok(kt.transpose())
}

/// Deterministic spread correction `(K⁰ − K̃)(H(x_u) − ⟨H⟩)` per particle.
/// Added to the literal zeroth update it turns it into an ensemble
/// square-root update with the same mean.
pub fn spread_correction(k0: &Matrix, k_sqrt: &Matrix, sz: &Matrix) -> Result<Matrix> {
    let scale = check_gamma(sz.ncols())?;
    Ok((k0 - k_sqrt) * sz * scale)
}

/// `x̂⁰_u = x̃_u + K⁰ (Z − H(x̃_u))`, without observation perturbation.
pub fn update_zeroth(
    predicted: &Matrix,
    z: &Vector,
    k0: &Matrix,
    mm: &dyn MeasurementModel,
    t: f64,
) -> Matrix {
    let mapped = measure_ensemble(mm, predicted, t);
    update_zeroth_mapped(predicted, &mapped, z, k0, mm)
}

pub(crate) fn update_zeroth_mapped(
    predicted: &Matrix,
    mapped: &Matrix,
    z: &Vector,
    k0: &Matrix,
    mm: &dyn MeasurementModel,
) -> Matrix {
    let mut out = predicted.clone();
    for (u, mut col) in out.column_iter_mut().enumerate() {
        let innov = mm.innovation(z, &mapped.column(u).into_owned());
        col += k0 * innov;
    }
    out
}

/// `(Ŝ, Ŝz)`: columns `(x̂_u − x̃_u)/√(γ−1)` and `(H(x̂_u) − Z)/√(γ−1)`.
pub fn anomalies_iter(
    updated: &Matrix,
    predicted: &Matrix,
    z: &Vector,
    mm: &dyn MeasurementModel,
    t: f64,
) -> Result<(Matrix, Matrix)> {
    if updated.shape() != predicted.shape() {
        return Err(FilterError::dim(
            "anomalies_iter ensembles",
            format!("{:?}", predicted.shape()),
            format!("{:?}", updated.shape()),
        ));
    }
    let scale = check_gamma(updated.ncols())?;
    let s_hat = (updated - predicted) / scale;
    let mapped = measure_ensemble(mm, updated, t);
    let mut sz_hat = Matrix::zeros(mapped.nrows(), mapped.ncols());
    for (u, hx) in mapped.column_iter().enumerate() {
        sz_hat.set_column(u, &(-mm.innovation(z, &hx.into_owned()) / scale));
    }
    Ok((s_hat, sz_hat))
}

/// Regularization of the iterated gain's inverse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum EpsilonMode {
    /// `ε = c · trace(Ŝz Ŝzᵀ) / d`.
    Relative(f64),
    Absolute(f64),
    /// No regularization at all.
    Zero,
}

impl Default for EpsilonMode {
    fn default() -> Self {
        EpsilonMode::Relative(1e-8)
    }
}

impl EpsilonMode {
    pub fn value(&self, sz_hat: &Matrix) -> f64 {
        match *self {
            EpsilonMode::Relative(c) => {
                let d = sz_hat.nrows().max(1) as f64;
                c * sz_hat.norm_squared() / d
            }
            EpsilonMode::Absolute(e) => e,
            EpsilonMode::Zero => 0.0,
        }
    }
}

/// `Ŝ Ŝzᵀ (Ŝz Ŝzᵀ + R)⁻¹` for an arbitrary symmetric regularizer `R`.
pub fn gain_iter_regularized(s_hat: &Matrix, sz_hat: &Matrix, reg: &Matrix) -> Result<Matrix> {
    check_gain_shapes(s_hat, sz_hat, reg)?;
    let c = sz_hat * sz_hat.transpose() + reg;
    if c.iter().all(|v| *v == 0.0) {
        // every iterate reproduces Z exactly; the innovation it would
        // multiply is zero
        return Ok(Matrix::zeros(s_hat.nrows(), sz_hat.nrows()));
    }
    let factor = chol_psd(&c, 0.0)
        .map_err(|_| FilterError::Numerical("iterated gain: singular Ŝz Ŝzᵀ + εI".into()))?;
    Ok(factor.solve(&(sz_hat * s_hat.transpose())).transpose())
}

/// `K = Ŝ Ŝzᵀ (Ŝz Ŝzᵀ + ε I)⁻¹`.
pub fn gain_iter(s_hat: &Matrix, sz_hat: &Matrix, eps: EpsilonMode) -> Result<Matrix> {
    let d = sz_hat.nrows();
    let reg = Matrix::identity(d, d) * eps.value(sz_hat);
    gain_iter_regularized(s_hat, sz_hat, &reg)
}

/// `x̂^l_u = x̃_u + (1 + α) K (Z − H(x̂^{l−1}_u))`.
pub fn update_iter(
    predicted: &Matrix,
    prev: &Matrix,
    z: &Vector,
    k: &Matrix,
    alpha: f64,
    mm: &dyn MeasurementModel,
    t: f64,
) -> Matrix {
    let mapped = measure_ensemble(mm, prev, t);
    let scaled = k * (1.0 + alpha);
    let mut out = predicted.clone();
    for (u, mut col) in out.column_iter_mut().enumerate() {
        let innov = mm.innovation(z, &mapped.column(u).into_owned());
        col += &scaled * innov;
    }
    out
}

/// `log N(Z; ⟨H⟩, Ŝz Ŝzᵀ + Σ_Z)`, the residual taken through the model's
/// innovation.
pub fn mixand_log_likelihood(
    mm: &dyn MeasurementModel,
    z: &Vector,
    mean_h: &Vector,
    sz: &Matrix,
) -> Result<f64> {
    let cov = sz * sz.transpose() + mm.noise_cov();
    let factor = chol_psd(&cov, relative_jitter(&cov, SOLVE_JITTER))?;
    let r = mm.innovation(z, mean_h);
    let y = factor
        .l
        .solve_lower_triangular(&r)
        .ok_or_else(|| FilterError::Numerical("singular mixand covariance".into()))?;
    let d = r.len() as f64;
    Ok(-0.5 * (d * (2.0 * std::f64::consts::PI).ln() + factor.log_det() + y.norm_squared()))
}
