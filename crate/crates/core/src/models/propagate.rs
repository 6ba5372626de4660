use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{ContinuousModel, DiscreteModel};
use crate::error::Result;
use crate::numerics::{chol_psd, relative_jitter, Matrix, RngStream, Vector};

/// Where the drift of a continuous model is linearized each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnchorMode {
    /// Every particle is propagated with a transition built from its own
    /// state, so parameter states couple into the dynamics.
    #[default]
    PerParticle,
    /// One transition per sub-ensemble, anchored at its sample mean.
    SubEnsembleMean,
}

/// A process model together with its time grid `t_i = i h`.
#[derive(Clone)]
pub enum ProcessModel {
    Continuous {
        model: Arc<dyn ContinuousModel>,
        h: f64,
        anchor: AnchorMode,
    },
    Discrete {
        model: Arc<dyn DiscreteModel>,
        h: f64,
    },
}

impl std::fmt::Debug for ProcessModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProcessModel::Continuous { h, anchor, model } => f
                .debug_struct("Continuous")
                .field("state_dim", &model.state_dim())
                .field("h", h)
                .field("anchor", anchor)
                .finish(),
            ProcessModel::Discrete { h, model } => f
                .debug_struct("Discrete")
                .field("state_dim", &model.state_dim())
                .field("h", h)
                .finish(),
        }
    }
}

impl ProcessModel {
    pub fn continuous(model: impl ContinuousModel + 'static, h: f64) -> Self {
        ProcessModel::Continuous {
            model: Arc::new(model),
            h,
            anchor: AnchorMode::default(),
        }
    }

    pub fn discrete(model: impl DiscreteModel + 'static, h: f64) -> Self {
        ProcessModel::Discrete {
            model: Arc::new(model),
            h,
        }
    }

    pub fn with_anchor(mut self, mode: AnchorMode) -> Self {
        if let ProcessModel::Continuous { anchor, .. } = &mut self {
            *anchor = mode;
        }
        self
    }

    pub fn state_dim(&self) -> usize {
        match self {
            ProcessModel::Continuous { model, .. } => model.state_dim(),
            ProcessModel::Discrete { model, .. } => model.state_dim(),
        }
    }

    pub fn step_size(&self) -> f64 {
        match self {
            ProcessModel::Continuous { h, .. } | ProcessModel::Discrete { h, .. } => *h,
        }
    }

    /// Time of grid point `i`.
    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.step_size()
    }
}

fn row_mean(particles: &Matrix) -> Vector {
    particles.column_mean()
}

/// Factor of a PSD noise covariance that leaves noiseless coordinates
/// exactly noiseless instead of loading them with jitter.
fn noise_factor(sigma: &Matrix) -> Result<Matrix> {
    let j = sigma.nrows();
    let active: Vec<usize> = (0..j).filter(|&k| sigma[(k, k)] > 0.0).collect();
    let mut out = Matrix::zeros(j, j);
    if active.is_empty() {
        return Ok(out);
    }
    let sub = sigma.select_rows(&active).select_columns(&active);
    let l = chol_psd(&sub, relative_jitter(&sub, 1e-12))?.l;
    for (a, &r) in active.iter().enumerate() {
        for (b, &c) in active.iter().enumerate() {
            out[(r, c)] = l[(a, b)];
        }
    }
    Ok(out)
}

/// Advances every column of a `J × γ` ensemble from `t_i` to `t_{i+1}`,
/// each particle drawing its own process noise from `stream`.
pub fn propagate_subensemble(
    model: &ProcessModel,
    particles: &Matrix,
    i: usize,
    stream: &mut RngStream,
) -> Result<Matrix> {
    let mut out = Matrix::zeros(particles.nrows(), particles.ncols());
    match model {
        ProcessModel::Continuous { model, h, anchor } => {
            let t = i as f64 * h;
            let mean = row_mean(particles);
            let l = noise_factor(&model.noise_covariance(mean.as_slice(), t, *h)?)?;
            let per_particle = model.anchor_dependent() && *anchor == AnchorMode::PerParticle;
            let shared = if per_particle {
                None
            } else {
                Some(model.transition(mean.as_slice(), t, *h)?)
            };
            let mut z = Vector::zeros(particles.nrows());
            for (u, x) in particles.column_iter().enumerate() {
                let own;
                let (phi, offset) = match &shared {
                    Some(s) => (&s.0, &s.1),
                    None => {
                        own = model.transition(x.as_slice(), t, *h)?;
                        (&own.0, &own.1)
                    }
                };
                stream.fill_normal(z.as_mut_slice());
                out.set_column(u, &(phi * x + offset + &l * &z));
            }
        }
        ProcessModel::Discrete { model, .. } => {
            let mut noise = vec![0.0; model.noise_dim()];
            for (u, x) in particles.column_iter().enumerate() {
                stream.fill_normal(&mut noise);
                out.set_column(u, &model.step(x.as_slice(), i, &noise));
            }
        }
    }
    Ok(out)
}

/// Noise-free propagation of every column, the predictive point used by
/// auxiliary particle filters.
pub fn propagate_mean(model: &ProcessModel, particles: &Matrix, i: usize) -> Result<Matrix> {
    let mut out = Matrix::zeros(particles.nrows(), particles.ncols());
    match model {
        ProcessModel::Continuous { model, h, anchor } => {
            let t = i as f64 * h;
            let per_particle = model.anchor_dependent() && *anchor == AnchorMode::PerParticle;
            let shared = if per_particle {
                None
            } else {
                Some(model.transition(row_mean(particles).as_slice(), t, *h)?)
            };
            for (u, x) in particles.column_iter().enumerate() {
                let (phi, offset) = match &shared {
                    Some(s) => s.clone(),
                    None => model.transition(x.as_slice(), t, *h)?,
                };
                out.set_column(u, &(phi * x + offset));
            }
        }
        ProcessModel::Discrete { model, .. } => {
            let noise = vec![0.0; model.noise_dim()];
            for (u, x) in particles.column_iter().enumerate() {
                out.set_column(u, &model.step(x.as_slice(), i, &noise));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::augment::tests::Decay;
    use crate::models::{augment, AugmentedSpec, LinearContinuous, LinearDiscrete};
    use crate::numerics::{discretize_lti, mat_exp};

    struct Identity;
    impl DiscreteModel for Identity {
        fn state_dim(&self) -> usize {
            2
        }
        fn noise_dim(&self) -> usize {
            0
        }
        fn step(&self, x: &[f64], _i: usize, _noise: &[f64]) -> Vector {
            Vector::from_column_slice(x)
        }
    }

    fn oscillator() -> LinearContinuous {
        LinearContinuous::new(
            Matrix::from_row_slice(2, 2, &[0.0, 1.0, -4.0, -0.4]),
            Matrix::from_row_slice(2, 1, &[0.0, 0.5]),
        )
        .unwrap()
    }

    #[test]
    fn zero_diffusion_maps_by_exponential() {
        let mut m = oscillator();
        m.g = Matrix::zeros(2, 1);
        let pm = ProcessModel::continuous(m.clone(), 0.1);
        let x = Matrix::from_row_slice(2, 3, &[1.0, -0.5, 2.0, 0.0, 0.3, -1.0]);
        let out = propagate_subensemble(&pm, &x, 0, &mut RngStream::new(1, 1)).unwrap();
        let e = mat_exp(&m.q, 0.1).unwrap();
        assert!((out - e * x).amax() < 1e-14);
    }

    #[test]
    fn discrete_identity_is_noop() {
        let pm = ProcessModel::discrete(Identity, 1.0);
        let x = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let out = propagate_subensemble(&pm, &x, 5, &mut RngStream::new(0, 0)).unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn single_particle_without_noise_is_repeatable() {
        let aug = augment(
            Decay {
                mu: 0.0,
                sigma: 0.0,
            },
            AugmentedSpec {
                n_x: 1,
                n_mu: 1,
                g_mu: vec![0.0],
                prior_mean: vec![1.0],
                prior_std: vec![0.1],
            },
        )
        .unwrap();
        let pm = ProcessModel::continuous(aug, 0.05);
        let x = Matrix::from_column_slice(2, 1, &[1.0, 0.8]);
        let a = propagate_subensemble(&pm, &x, 3, &mut RngStream::new(4, 4)).unwrap();
        let b = propagate_subensemble(&pm, &x, 3, &mut RngStream::new(9, 2)).unwrap();
        assert_eq!(a, b);
        assert!((a[(0, 0)] - (-0.8f64 * 0.05).exp()).abs() < 1e-15);
    }

    #[test]
    fn moments_propagate_like_the_lti_oracle() {
        let m = oscillator();
        let h = 0.2;
        let (phi, sigd) = discretize_lti(&m.q, &m.g, h).unwrap();
        let pm = ProcessModel::continuous(m, h);
        let n = 10_000;
        let mut init = RngStream::new(11, 0);
        let mean0 = Vector::from_vec(vec![1.0, -1.0]);
        let l0 = Matrix::from_row_slice(2, 2, &[0.3, 0.0, 0.1, 0.2]);
        let mut x = Matrix::zeros(2, n);
        for u in 0..n {
            let z = crate::numerics::draw_normal(&mut init, 2);
            x.set_column(u, &(&mean0 + &l0 * z));
        }
        let out = propagate_subensemble(&pm, &x, 0, &mut RngStream::new(11, 1)).unwrap();
        let p0 = &l0 * l0.transpose();
        let m1 = &phi * &mean0;
        let p1 = &phi * &p0 * phi.transpose() + sigd;
        let mean = out.column_mean();
        for k in 0..2 {
            let se = (p1[(k, k)] / n as f64).sqrt();
            assert!((mean[k] - m1[k]).abs() < 5.0 * se, "mean {k}");
        }
        let centered = &out - &mean * nalgebra::RowDVector::from_element(n, 1.0);
        let cov = &centered * centered.transpose() / (n - 1) as f64;
        for a in 0..2 {
            for b in 0..2 {
                // standard error of a sample covariance entry under normality
                let se = ((p1[(a, a)] * p1[(b, b)] + p1[(a, b)].powi(2)) / n as f64).sqrt();
                assert!((cov[(a, b)] - p1[(a, b)]).abs() < 5.0 * se, "cov {a}{b}");
            }
        }
    }

    #[test]
    fn parameter_increments_are_brownian() {
        let g = 0.3;
        let h = 0.5;
        let aug = augment(
            Decay {
                mu: 0.0,
                sigma: 0.2,
            },
            AugmentedSpec {
                n_x: 1,
                n_mu: 1,
                g_mu: vec![g],
                prior_mean: vec![1.0],
                prior_std: vec![0.0],
            },
        )
        .unwrap();
        let pm = ProcessModel::continuous(aug, h);
        let n = 20_000;
        let mut x = Matrix::zeros(2, n);
        for u in 0..n {
            x[(0, u)] = 1.0;
            x[(1, u)] = 1.0 + (u % 7) as f64 * 0.01;
        }
        let out = propagate_subensemble(&pm, &x, 0, &mut RngStream::new(3, 3)).unwrap();
        let inc: Vec<f64> = (0..n).map(|u| out[(1, u)] - x[(1, u)]).collect();
        let mean = inc.iter().sum::<f64>() / n as f64;
        let var = inc.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let target = g * g * h;
        assert!(mean.abs() < 5.0 * (target / n as f64).sqrt());
        assert!((var / target - 1.0).abs() < 5.0 * (2.0 / n as f64).sqrt());
    }

    #[test]
    fn anchor_mode_irrelevant_for_linear_drift() {
        let m = oscillator();
        let x = Matrix::from_row_slice(2, 3, &[1.0, -0.5, 2.0, 0.0, 0.3, -1.0]);
        let a = ProcessModel::continuous(m.clone(), 0.1);
        let b = ProcessModel::continuous(m, 0.1).with_anchor(AnchorMode::SubEnsembleMean);
        let ma = propagate_mean(&a, &x, 0).unwrap();
        let mb = propagate_mean(&b, &x, 0).unwrap();
        assert!((ma - mb).amax() < 1e-10);
    }

    #[test]
    fn noise_free_discrete_matches_map() {
        let d = LinearDiscrete::new(Matrix::identity(2, 2) * 0.5, &Matrix::identity(2, 2)).unwrap();
        let pm = ProcessModel::discrete(d, 1.0);
        let x = Matrix::from_row_slice(2, 1, &[2.0, 4.0]);
        assert_eq!(propagate_mean(&pm, &x, 0).unwrap().as_slice(), &[1.0, 2.0]);
    }
}
