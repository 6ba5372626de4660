use serde::{Deserialize, Serialize};

use crate::models::{DiscreteModel, MeasurementModel};
use crate::numerics::{Matrix, RngStream, Vector};

/// Scalar nonstationary growth model with a quadratic measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrowthParams {
    pub gamma1: f64,
    pub gamma2: f64,
    pub theta: f64,
    pub h: f64,
    /// Process noise variance `G²`.
    pub process_var: f64,
    /// Measurement noise variance `G_z²`.
    pub meas_var: f64,
    pub steps: usize,
}

impl Default for GrowthParams {
    fn default() -> Self {
        Self {
            gamma1: 0.2,
            gamma2: 0.01,
            theta: 1.2,
            h: 1.0,
            process_var: 10.0,
            meas_var: 0.01,
            steps: 100,
        }
    }
}

impl GrowthParams {
    /// Noise-free part of the map at step `i`.
    pub fn drift(&self, x: f64, i: usize) -> f64 {
        (self.gamma1 * x + self.gamma2 * x * x + 8.0 * (self.theta * i as f64).cos()) * self.h
    }
}

/// `X_{i+1} = (γ₁X + γ₂X² + 8cos(ϑi))h + G√h ξ`.
#[derive(Debug, Clone)]
pub struct GrowthModel(pub GrowthParams);

impl DiscreteModel for GrowthModel {
    fn state_dim(&self) -> usize {
        1
    }

    fn noise_dim(&self) -> usize {
        1
    }

    fn step(&self, x: &[f64], i: usize, noise: &[f64]) -> Vector {
        let p = &self.0;
        Vector::from_element(
            1,
            p.drift(x[0], i) + (p.process_var * p.h).sqrt() * noise[0],
        )
    }
}

/// `Z = X² + G_z ξ`.
#[derive(Debug, Clone)]
pub struct SquareMeasurement {
    cov: Matrix,
}

impl SquareMeasurement {
    pub fn new(var: f64) -> Self {
        Self {
            cov: Matrix::from_element(1, 1, var),
        }
    }
}

impl MeasurementModel for SquareMeasurement {
    fn obs_dim(&self) -> usize {
        1
    }

    fn measure(&self, x: &[f64], _t: f64) -> Vector {
        Vector::from_element(1, x[0] * x[0])
    }

    fn noise_cov(&self) -> &Matrix {
        &self.cov
    }
}

/// Truth `X_1..X_T` from `X_0 ~ U[0, 1]`, and observations `Z_1..Z_T`.
pub fn gen_growth(params: &GrowthParams, stream: &mut RngStream) -> (Vec<f64>, Vec<f64>) {
    let x0 = stream.uniform();
    gen_growth_from(params, x0, stream)
}

/// As [`gen_growth`] from a given initial state.
pub fn gen_growth_from(
    params: &GrowthParams,
    x0: f64,
    stream: &mut RngStream,
) -> (Vec<f64>, Vec<f64>) {
    let mut truth = Vec::with_capacity(params.steps);
    let mut obs = Vec::with_capacity(params.steps);
    let (g, gz) = (
        (params.process_var * params.h).sqrt(),
        params.meas_var.sqrt(),
    );
    let mut x = x0;
    for i in 0..params.steps {
        x = params.drift(x, i) + g * stream.normal();
        truth.push(x);
        obs.push(x * x + gz * stream.normal());
    }
    (truth, obs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::measure;

    #[test]
    fn noise_free_first_step() {
        let p = GrowthParams {
            process_var: 0.0,
            meas_var: 0.0,
            steps: 1,
            ..GrowthParams::default()
        };
        let (truth, obs) = gen_growth_from(&p, 0.5, &mut RngStream::new(0, 0));
        assert!((truth[0] - 8.1025).abs() < 1e-12);
        assert_eq!(obs[0], truth[0] * truth[0]);
    }

    #[test]
    fn noiseless_observations_are_squares() {
        let p = GrowthParams {
            meas_var: 0.0,
            ..GrowthParams::default()
        };
        let (truth, obs) = gen_growth(&p, &mut RngStream::new(1, 0));
        for (x, z) in truth.iter().zip(&obs) {
            assert_eq!(*z, x * x);
        }
    }

    #[test]
    fn process_noise_variance() {
        let p = GrowthParams::default();
        let model = GrowthModel(p.clone());
        let mut s = RngStream::new(2, 0);
        let n = 100_000;
        let x = 1.3;
        let drift = p.drift(x, 4);
        let devs: Vec<f64> = (0..n)
            .map(|_| model.step(&[x], 4, &[s.normal()])[0] - drift)
            .collect();
        let mean = devs.iter().sum::<f64>() / n as f64;
        let var = devs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var / (p.process_var * p.h) - 1.0).abs() < 0.03);
    }

    #[test]
    fn square_measurement() {
        assert_eq!(measure(&SquareMeasurement::new(1.0), &[3.0], 0.0)[0], 9.0);
    }
}
