//! State-space model abstractions: linearizable SDEs, discrete maps,
//! measurement functions and parameter augmentation.

mod augment;
mod linear;
mod propagate;

pub use augment::{augment, AugmentedModel, AugmentedSpec};
pub use linear::{LinearContinuous, LinearDiscrete, LinearMeasurement};
pub use propagate::{propagate_mean, propagate_subensemble, AnchorMode, ProcessModel};

use crate::error::{FilterError, Result};
use crate::numerics::{
    chol_psd, discretize_lti, mat_exp, relative_jitter, CholFactor, Matrix, RngStream, Vector,
};

/// A stochastic differential equation `dX = (Q̃(X̃ᵢ) X + f(t)) dt + G̃ dB`
/// whose drift coefficient matrix is rebuilt from an anchor state at the
/// start of every step.
pub trait ContinuousModel: Send + Sync {
    fn state_dim(&self) -> usize;

    /// Coefficient matrix of the drift, with any parameters frozen at the
    /// values read from `anchor`.
    fn drift_matrix(&self, anchor: &[f64], t: f64) -> Matrix;

    /// Diffusion matrix, `state_dim × q`.
    fn diffusion(&self, t: f64) -> Matrix;

    /// Deterministic forcing; `None` means zero.
    fn forcing(&self, _t: f64) -> Option<Vector> {
        None
    }

    /// Whether `drift_matrix` depends on the anchor at all.
    fn anchor_dependent(&self) -> bool {
        true
    }

    /// One-step transition `x ↦ Phi x + offset` over `[t, t + h]`. The
    /// forcing is interpolated linearly across the step and integrated
    /// exactly through an augmented exponential.
    fn transition(&self, anchor: &[f64], t: f64, h: f64) -> Result<(Matrix, Vector)> {
        let q = self.drift_matrix(anchor, t);
        forced_transition(&q, self.forcing(t), self.forcing(t + h), h)
    }

    /// Covariance of the integrated diffusion over one step.
    fn noise_covariance(&self, anchor: &[f64], t: f64, h: f64) -> Result<Matrix> {
        let q = self.drift_matrix(anchor, t);
        Ok(discretize_lti(&q, &self.diffusion(t), h)?.1)
    }
}

/// Exact transition of `ẋ = Q x + f(t)` with `f` linear on `[t, t + h]`.
pub fn forced_transition(
    q: &Matrix,
    f0: Option<Vector>,
    f1: Option<Vector>,
    h: f64,
) -> Result<(Matrix, Vector)> {
    let n = q.nrows();
    if !(h > 0.0) {
        return Err(FilterError::Parameter(format!(
            "step must be positive, got {h}"
        )));
    }
    match (f0, f1) {
        (None, None) => Ok((mat_exp(q, h)?, Vector::zeros(n))),
        (a, b) => {
            let a = a.unwrap_or_else(|| Vector::zeros(n));
            let b = b.unwrap_or_else(|| Vector::zeros(n));
            if a.len() != n || b.len() != n {
                return Err(FilterError::dim("forcing", n, a.len().max(b.len())));
            }
            // z = [x, 1, s - t]: the two extra states carry the constant and
            // ramp parts of the interpolated forcing.
            let mut m = Matrix::zeros(n + 2, n + 2);
            m.view_mut((0, 0), (n, n)).copy_from(q);
            m.view_mut((0, n), (n, 1)).copy_from(&a);
            m.view_mut((0, n + 1), (n, 1)).copy_from(&((&b - &a) / h));
            m[(n + 1, n)] = 1.0;
            let e = mat_exp(&m, h)?;
            let phi = e.view((0, 0), (n, n)).into_owned();
            let offset = e.view((0, n), (n, 1)).column(0).into_owned();
            Ok((phi, offset))
        }
    }
}

/// An explicit one-step map `X_{i+1} = Ψ(X_i, i, noise)`.
pub trait DiscreteModel: Send + Sync {
    fn state_dim(&self) -> usize;

    /// Length of the standard normal noise vector consumed by `step`.
    fn noise_dim(&self) -> usize;

    fn step(&self, x: &[f64], i: usize, noise: &[f64]) -> Vector;
}

/// Observation `Z = H(X, t) + G_z B_z`.
pub trait MeasurementModel: Send + Sync {
    fn obs_dim(&self) -> usize;

    /// Noise-free predicted measurement.
    fn measure(&self, x: &[f64], t: f64) -> Vector;

    /// `Σ_Z = G_z G_zᵀ`.
    fn noise_cov(&self) -> &Matrix;

    /// `z - hx`, overridden where a coordinate lives on a circle.
    fn innovation(&self, z: &Vector, hx: &Vector) -> Vector {
        z - hx
    }
}

/// `H(x, t)`.
pub fn measure(mm: &dyn MeasurementModel, x: &[f64], t: f64) -> Vector {
    mm.measure(x, t)
}

/// Applies `H` to each column of a `J × γ` ensemble, giving `d × γ`.
pub fn measure_ensemble(mm: &dyn MeasurementModel, particles: &Matrix, t: f64) -> Matrix {
    let d = mm.obs_dim();
    let mut out = Matrix::zeros(d, particles.ncols());
    for (u, x) in particles.column_iter().enumerate() {
        out.set_column(u, &mm.measure(x.as_slice(), t));
    }
    out
}

/// Gaussian observation likelihood with `Σ_Z` factored once.
#[derive(Debug, Clone)]
pub struct ObsLikelihood {
    factor: CholFactor,
    norm: f64,
}

impl ObsLikelihood {
    pub fn new(mm: &dyn MeasurementModel) -> Result<Self> {
        let cov = mm.noise_cov();
        let factor = chol_psd(cov, relative_jitter(cov, 1e-12))?;
        let d = cov.nrows() as f64;
        let norm = -0.5 * (d * (2.0 * std::f64::consts::PI).ln() + factor.log_det());
        Ok(Self { factor, norm })
    }

    /// `log N(z; hx, Σ_Z)` with the residual taken through `innovation`.
    pub fn log_lik(&self, mm: &dyn MeasurementModel, z: &Vector, hx: &Vector) -> f64 {
        let r = mm.innovation(z, hx);
        let y = self
            .factor
            .l
            .solve_lower_triangular(&r)
            .expect("cholesky factor has a positive diagonal");
        self.norm - 0.5 * y.norm_squared()
    }

    /// Lower Cholesky factor of `Σ_Z`.
    pub fn sqrt(&self) -> &Matrix {
        &self.factor.l
    }
}

/// Gaussian initial condition `N(mean, cov)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    pub mean: Vector,
    pub cov: Matrix,
}

impl Prior {
    pub fn new(mean: Vector, cov: Matrix) -> Result<Self> {
        let n = mean.len();
        if cov.nrows() != n || cov.ncols() != n {
            return Err(FilterError::dim(
                "prior covariance",
                format!("{n}x{n}"),
                format!("{}x{}", cov.nrows(), cov.ncols()),
            ));
        }
        Ok(Self { mean, cov })
    }

    pub fn diagonal(mean: Vec<f64>, variances: Vec<f64>) -> Result<Self> {
        Self::new(
            Vector::from_vec(mean),
            Matrix::from_diagonal(&Vector::from_vec(variances)),
        )
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `n` draws as the columns of a `dim × n` matrix.
    pub fn sample(&self, n: usize, stream: &mut RngStream) -> Result<Matrix> {
        sample_gaussian(&self.mean, &self.cov, n, stream)
    }
}

/// `n` draws from `N(mean, cov)` as matrix columns.
pub fn sample_gaussian(
    mean: &Vector,
    cov: &Matrix,
    n: usize,
    stream: &mut RngStream,
) -> Result<Matrix> {
    let l = chol_psd(cov, relative_jitter(cov, 1e-12))?.l;
    let j = mean.len();
    let mut out = Matrix::zeros(j, n);
    let mut z = Vector::zeros(j);
    for u in 0..n {
        stream.fill_normal(z.as_mut_slice());
        out.set_column(u, &(mean + &l * &z));
    }
    Ok(out)
}
