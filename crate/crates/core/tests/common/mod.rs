//! Shared fixtures for the integration tests: a linear-Gaussian test model
//! and an exact Kalman filter written independently of the library.

#![allow(dead_code)]

use igsf::models::{LinearDiscrete, LinearMeasurement, Prior, ProcessModel};
use igsf::numerics::{discretize_lti, Matrix, RngStream, Vector};
use nalgebra::{DMatrix, DVector};

/// Damped oscillator observed through its position.
pub struct LinearProblem {
    pub phi: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub m0: DVector<f64>,
    pub p0: DMatrix<f64>,
}

impl LinearProblem {
    pub fn oscillator() -> Self {
        let drift = Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, -0.2]);
        let g = Matrix::from_row_slice(2, 1, &[0.0, 0.5]);
        let (phi, q) = discretize_lti(&drift, &g, 0.1).unwrap();
        Self {
            phi,
            q,
            h: DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            r: DMatrix::from_element(1, 1, 0.1),
            m0: DVector::from_vec(vec![1.0, 0.0]),
            p0: DMatrix::identity(2, 2),
        }
    }

    pub fn process(&self) -> ProcessModel {
        ProcessModel::discrete(LinearDiscrete::new(self.phi.clone(), &self.q).unwrap(), 0.1)
    }

    pub fn measurement(&self) -> LinearMeasurement {
        LinearMeasurement::new(self.h.clone(), self.r.clone())
    }

    pub fn prior(&self) -> Prior {
        Prior::new(self.m0.clone(), self.p0.clone()).unwrap()
    }

    /// Truth and observations, drawn with hand-rolled Cholesky factors.
    pub fn simulate(&self, steps: usize, stream: &mut RngStream) -> (Vec<Vector>, Vec<Vector>) {
        let lq = self.q.clone().cholesky().unwrap().l();
        let lp = self.p0.clone().cholesky().unwrap().l();
        let lr = self.r[(0, 0)].sqrt();
        let mut w = DVector::zeros(2);
        stream.fill_normal(w.as_mut_slice());
        let mut x = &self.m0 + &lp * &w;
        let (mut truth, mut obs) = (Vec::new(), Vec::new());
        for _ in 0..steps {
            stream.fill_normal(w.as_mut_slice());
            x = &self.phi * &x + &lq * &w;
            let z = &self.h * &x + DVector::from_element(1, lr * stream.normal());
            truth.push(x.clone());
            obs.push(z);
        }
        (truth, obs)
    }

    /// Exact filtering means and marginal standard deviations.
    pub fn kalman(&self, obs: &[Vector]) -> (Vec<DVector<f64>>, Vec<DVector<f64>>) {
        let mut m = self.m0.clone();
        let mut p = self.p0.clone();
        let (mut means, mut stds) = (Vec::new(), Vec::new());
        for z in obs {
            m = &self.phi * &m;
            p = &self.phi * &p * self.phi.transpose() + &self.q;
            let s = &self.h * &p * self.h.transpose() + &self.r;
            let k = &p * self.h.transpose() * s.try_inverse().unwrap();
            m = &m + &k * (z - &self.h * &m);
            let i_kh = DMatrix::identity(2, 2) - &k * &self.h;
            // Joseph form keeps p symmetric positive definite
            p = &i_kh * &p * i_kh.transpose() + &k * &self.r * k.transpose();
            stds.push(p.diagonal().map(f64::sqrt));
            means.push(m.clone());
        }
        (means, stds)
    }
}
