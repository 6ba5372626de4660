use super::{ContinuousModel, DiscreteModel, MeasurementModel};
use crate::error::{FilterError, Result};
use crate::numerics::{chol_psd, discretize_lti, relative_jitter, Matrix, Vector};

/// Time-invariant linear SDE `dX = Q X dt + G dB`.
#[derive(Debug, Clone)]
pub struct LinearContinuous {
    pub q: Matrix,
    pub g: Matrix,
}

impl LinearContinuous {
    pub fn new(q: Matrix, g: Matrix) -> Result<Self> {
        if !q.is_square() || g.nrows() != q.nrows() {
            return Err(FilterError::dim(
                "LinearContinuous",
                format!("{0}x{0} drift and {0}-row diffusion", q.nrows()),
                format!(
                    "{}x{} and {}x{}",
                    q.nrows(),
                    q.ncols(),
                    g.nrows(),
                    g.ncols()
                ),
            ));
        }
        Ok(Self { q, g })
    }
}

impl ContinuousModel for LinearContinuous {
    fn state_dim(&self) -> usize {
        self.q.nrows()
    }

    fn drift_matrix(&self, _anchor: &[f64], _t: f64) -> Matrix {
        self.q.clone()
    }

    fn diffusion(&self, _t: f64) -> Matrix {
        self.g.clone()
    }

    fn anchor_dependent(&self) -> bool {
        false
    }
}

/// `X_{i+1} = Φ X_i + L ξ` with `ξ` standard normal.
#[derive(Debug, Clone)]
pub struct LinearDiscrete {
    pub phi: Matrix,
    pub noise_sqrt: Matrix,
}

impl LinearDiscrete {
    pub fn new(phi: Matrix, noise_cov: &Matrix) -> Result<Self> {
        let noise_sqrt = chol_psd(noise_cov, relative_jitter(noise_cov, 1e-12))?.l;
        Ok(Self { phi, noise_sqrt })
    }

    /// Exact sampled version of a continuous LTI model.
    pub fn from_continuous(model: &LinearContinuous, h: f64) -> Result<Self> {
        let (phi, sigma) = discretize_lti(&model.q, &model.g, h)?;
        Self::new(phi, &sigma)
    }

    pub fn noise_cov(&self) -> Matrix {
        &self.noise_sqrt * self.noise_sqrt.transpose()
    }
}

impl DiscreteModel for LinearDiscrete {
    fn state_dim(&self) -> usize {
        self.phi.nrows()
    }

    fn noise_dim(&self) -> usize {
        self.noise_sqrt.ncols()
    }

    fn step(&self, x: &[f64], _i: usize, noise: &[f64]) -> Vector {
        let x = Vector::from_column_slice(x);
        let xi = Vector::from_column_slice(noise);
        &self.phi * x + &self.noise_sqrt * xi
    }
}

/// `Z = H X + noise`, with `H` a fixed matrix.
#[derive(Debug, Clone)]
pub struct LinearMeasurement {
    pub h: Matrix,
    pub r: Matrix,
}

impl LinearMeasurement {
    pub fn new(h: Matrix, r: Matrix) -> Self {
        Self { h, r }
    }

    /// Observes the listed coordinates of a `state_dim` vector.
    pub fn select(state_dim: usize, coords: &[usize], r: Matrix) -> Self {
        let mut h = Matrix::zeros(coords.len(), state_dim);
        for (row, &c) in coords.iter().enumerate() {
            h[(row, c)] = 1.0;
        }
        Self { h, r }
    }
}

impl MeasurementModel for LinearMeasurement {
    fn obs_dim(&self) -> usize {
        self.h.nrows()
    }

    fn measure(&self, x: &[f64], _t: f64) -> Vector {
        // only the leading columns of H are read, so augmented states work
        let cols = self.h.ncols();
        &self.h * Vector::from_column_slice(&x[..cols])
    }

    fn noise_cov(&self) -> &Matrix {
        &self.r
    }
}
