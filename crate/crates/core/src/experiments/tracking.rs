use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{FilterError, Result};
use crate::models::{DiscreteModel, MeasurementModel};
use crate::numerics::{chol_psd, Matrix, RngStream, Vector};

/// A deterministic acceleration applied over one sampling interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Maneuver {
    /// Time of the turn in seconds.
    pub time: f64,
    pub accel: [f64; 2],
}

/// Bearing/range tracking of a maneuvering target in the plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackingScenario {
    /// Sampling interval Δ.
    pub dt: f64,
    /// Horizon τ.
    pub horizon: f64,
    /// `[X, X_v, Y, Y_v]`.
    pub initial: [f64; 4],
    pub maneuvers: Vec<Maneuver>,
    /// Diagonal covariance of the target's random acceleration.
    pub truth_accel_var: [f64; 2],
    pub sensor: [f64; 2],
    /// Diagonal bearing and range noise variances.
    pub meas_var: [f64; 2],
}

impl Default for TrackingScenario {
    fn default() -> Self {
        Self {
            dt: 0.1,
            horizon: 80.0,
            initial: [0.5, 3.0, 1.0, 1.0],
            maneuvers: vec![
                Maneuver {
                    time: 20.0,
                    accel: [-40.0, 40.0],
                },
                Maneuver {
                    time: 30.0,
                    accel: [25.0, -25.0],
                },
                Maneuver {
                    time: 60.0,
                    accel: [25.0, -25.0],
                },
            ],
            truth_accel_var: [0.1, 0.1],
            sensor: [0.0, 0.0],
            meas_var: [0.2, 35.0],
        }
    }
}

impl TrackingScenario {
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(FilterError::config(
                "tracking.dt",
                "sampling interval must be positive",
            ));
        }
        for m in &self.maneuvers {
            if !(0.0..=self.horizon).contains(&m.time) {
                return Err(FilterError::config(
                    "tracking.maneuvers",
                    format!("maneuver time {} outside [0, {}]", m.time, self.horizon),
                ));
            }
        }
        Ok(())
    }

    /// Maneuver acceleration active over step `i → i+1`.
    fn maneuver_at(&self, i: usize) -> [f64; 2] {
        let mut a = [0.0, 0.0];
        for m in &self.maneuvers {
            if (m.time / self.dt).round() as usize == i {
                a[0] += m.accel[0];
                a[1] += m.accel[1];
            }
        }
        a
    }
}

/// `Υ` and `Λ` of the constant-velocity model with sampling interval `dt`.
pub fn cv_matrices(dt: f64) -> (Matrix, Matrix) {
    let upsilon = Matrix::from_row_slice(
        4,
        4,
        &[
            1.0, dt, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, dt, 0.0, 0.0, 0.0, 1.0,
        ],
    );
    let lambda = Matrix::from_row_slice(
        4,
        2,
        &[0.5 * dt * dt, 0.0, dt, 0.0, 0.0, 0.5 * dt * dt, 0.0, dt],
    );
    (upsilon, lambda)
}

/// Constant-velocity motion `Ξ_{i+1} = ΥΞ_i + Λw_i` with Gaussian
/// acceleration `w_i`.
#[derive(Debug, Clone)]
pub struct ConstantVelocity {
    upsilon: Matrix,
    lambda_sqrt: Matrix,
}

impl ConstantVelocity {
    pub fn new(dt: f64, accel_cov: &Matrix) -> Result<Self> {
        let (upsilon, lambda) = cv_matrices(dt);
        let l = chol_psd(accel_cov, 0.0)?.l;
        Ok(Self {
            upsilon,
            lambda_sqrt: lambda * l,
        })
    }
}

impl DiscreteModel for ConstantVelocity {
    fn state_dim(&self) -> usize {
        4
    }

    fn noise_dim(&self) -> usize {
        2
    }

    fn step(&self, x: &[f64], _i: usize, noise: &[f64]) -> Vector {
        &self.upsilon * Vector::from_column_slice(x)
            + &self.lambda_sqrt * Vector::from_column_slice(noise)
    }
}

/// Wraps an angle to `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// Bearing and range from a fixed sensor.
#[derive(Debug, Clone)]
pub struct BearingRange {
    pub sensor: [f64; 2],
    cov: Matrix,
}

impl BearingRange {
    pub fn new(sensor: [f64; 2], var: [f64; 2]) -> Self {
        Self {
            sensor,
            cov: Matrix::from_diagonal(&Vector::from_vec(var.to_vec())),
        }
    }
}

impl MeasurementModel for BearingRange {
    fn obs_dim(&self) -> usize {
        2
    }

    fn measure(&self, x: &[f64], _t: f64) -> Vector {
        let (dx, dy) = (x[0] - self.sensor[0], x[2] - self.sensor[1]);
        Vector::from_vec(vec![dy.atan2(dx), dx.hypot(dy)])
    }

    fn noise_cov(&self) -> &Matrix {
        &self.cov
    }

    fn innovation(&self, z: &Vector, hx: &Vector) -> Vector {
        Vector::from_vec(vec![wrap_angle(z[0] - hx[0]), z[1] - hx[1]])
    }
}

/// Truth `Ξ_1..Ξ_T` and noisy bearing/range observations. The bearing is
/// wrapped to `(−π, π]`; the range is clamped at zero.
pub fn gen_tracking(
    sc: &TrackingScenario,
    stream: &mut RngStream,
) -> Result<(Vec<Vector>, Vec<Vector>)> {
    sc.validate()?;
    let (upsilon, lambda) = cv_matrices(sc.dt);
    let sensor = BearingRange::new(sc.sensor, sc.meas_var);
    let accel_sd = [sc.truth_accel_var[0].sqrt(), sc.truth_accel_var[1].sqrt()];
    let meas_sd = [sc.meas_var[0].sqrt(), sc.meas_var[1].sqrt()];
    let mut x = Vector::from_column_slice(&sc.initial);
    let mut truth = Vec::with_capacity(sc.steps());
    let mut obs = Vec::with_capacity(sc.steps());
    for i in 0..sc.steps() {
        let m = sc.maneuver_at(i);
        let a = Vector::from_vec(vec![
            accel_sd[0] * stream.normal() + m[0],
            accel_sd[1] * stream.normal() + m[1],
        ]);
        x = &upsilon * x + &lambda * a;
        if x[0] == sc.sensor[0] && x[2] == sc.sensor[1] {
            return Err(FilterError::Numerical(format!(
                "target on the sensor at step {}: bearing undefined",
                i + 1
            )));
        }
        let clean = sensor.measure(x.as_slice(), 0.0);
        let z = Vector::from_vec(vec![
            wrap_angle(clean[0] + meas_sd[0] * stream.normal()),
            (clean[1] + meas_sd[1] * stream.normal()).max(0.0),
        ]);
        truth.push(x.clone());
        obs.push(z);
    }
    Ok((truth, obs))
}
