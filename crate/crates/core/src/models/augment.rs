use super::ContinuousModel;
use crate::error::{FilterError, Result};
use crate::numerics::{Matrix, Vector};

/// Unknown parameters appended to the state as driftless Brownian
/// coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSpec {
    pub n_x: usize,
    pub n_mu: usize,
    /// Diagonal of the parameter pseudo-noise intensity `G_μ`.
    pub g_mu: Vec<f64>,
    pub prior_mean: Vec<f64>,
    pub prior_std: Vec<f64>,
}

impl AugmentedSpec {
    /// Pseudo-noise intensity of `rel × |prior mean|` per parameter.
    pub fn with_relative_noise(
        n_x: usize,
        prior_mean: Vec<f64>,
        prior_std: Vec<f64>,
        rel: f64,
    ) -> Self {
        let g_mu = prior_mean.iter().map(|m| rel * m.abs()).collect();
        Self {
            n_x,
            n_mu: prior_mean.len(),
            g_mu,
            prior_mean,
            prior_std,
        }
    }

    pub fn dim(&self) -> usize {
        self.n_x + self.n_mu
    }

    fn validate(&self) -> Result<()> {
        if self.g_mu.len() != self.n_mu
            || self.prior_mean.len() != self.n_mu
            || self.prior_std.len() != self.n_mu
        {
            return Err(FilterError::Parameter(format!(
                "augmented spec has n_mu = {} but G_mu/mean/std lengths {}/{}/{}",
                self.n_mu,
                self.g_mu.len(),
                self.prior_mean.len(),
                self.prior_std.len()
            )));
        }
        if self.g_mu.iter().any(|g| !(*g >= 0.0)) {
            return Err(FilterError::Parameter(
                "G_mu entries must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// A base model extended by `n_μ` parameter states.
#[derive(Debug, Clone)]
pub struct AugmentedModel<M> {
    pub base: M,
    pub spec: AugmentedSpec,
}

/// Declares the parameters of `base` as additional states.
pub fn augment<M: ContinuousModel>(base: M, spec: AugmentedSpec) -> Result<AugmentedModel<M>> {
    spec.validate()?;
    if base.state_dim() != spec.n_x {
        return Err(FilterError::Parameter(format!(
            "base model has {} states but the augmented spec declares n_x = {}",
            base.state_dim(),
            spec.n_x
        )));
    }
    Ok(AugmentedModel { base, spec })
}

impl<M> AugmentedModel<M> {
    fn pad_square(&self, block: Matrix, tail: impl Fn(usize) -> f64) -> Matrix {
        let (nx, j) = (self.spec.n_x, self.spec.dim());
        let mut out = Matrix::zeros(j, j);
        out.view_mut((0, 0), (nx, nx)).copy_from(&block);
        for k in 0..self.spec.n_mu {
            out[(nx + k, nx + k)] = tail(k);
        }
        out
    }

    fn pad_vector(&self, v: Vector) -> Vector {
        let mut out = Vector::zeros(self.spec.dim());
        out.rows_mut(0, self.spec.n_x).copy_from(&v);
        out
    }
}

impl<M: ContinuousModel> ContinuousModel for AugmentedModel<M> {
    fn state_dim(&self) -> usize {
        self.spec.dim()
    }

    fn drift_matrix(&self, anchor: &[f64], t: f64) -> Matrix {
        self.pad_square(self.base.drift_matrix(anchor, t), |_| 0.0)
    }

    fn diffusion(&self, t: f64) -> Matrix {
        let g = self.base.diffusion(t);
        let (nx, q) = (self.spec.n_x, g.ncols());
        let mut out = Matrix::zeros(self.spec.dim(), q + self.spec.n_mu);
        out.view_mut((0, 0), (nx, q)).copy_from(&g);
        for (k, gm) in self.spec.g_mu.iter().enumerate() {
            out[(nx + k, q + k)] = *gm;
        }
        out
    }

    fn forcing(&self, t: f64) -> Option<Vector> {
        self.base.forcing(t).map(|f| self.pad_vector(f))
    }

    fn anchor_dependent(&self) -> bool {
        self.base.anchor_dependent()
    }

    // parameter rows have zero drift, so only the base block needs an
    // exponential
    fn transition(&self, anchor: &[f64], t: f64, h: f64) -> Result<(Matrix, Vector)> {
        let (phi, offset) = self.base.transition(anchor, t, h)?;
        Ok((self.pad_square(phi, |_| 1.0), self.pad_vector(offset)))
    }

    fn noise_covariance(&self, anchor: &[f64], t: f64, h: f64) -> Result<Matrix> {
        let base = self.base.noise_covariance(anchor, t, h)?;
        Ok(self.pad_square(base, |k| self.spec.g_mu[k] * self.spec.g_mu[k] * h))
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::numerics::discretize_lti;

    /// `dx = -μ x dt + σ dB` with μ read from `anchor[1]` when present.
    pub(crate) struct Decay {
        pub mu: f64,
        pub sigma: f64,
    }

    impl ContinuousModel for Decay {
        fn state_dim(&self) -> usize {
            1
        }
        fn drift_matrix(&self, anchor: &[f64], _t: f64) -> Matrix {
            let mu = anchor.get(1).copied().unwrap_or(self.mu);
            Matrix::from_element(1, 1, -mu)
        }
        fn diffusion(&self, _t: f64) -> Matrix {
            Matrix::from_element(1, 1, self.sigma)
        }
    }

    fn spec(n_mu: usize) -> AugmentedSpec {
        AugmentedSpec {
            n_x: 1,
            n_mu,
            g_mu: vec![0.1; n_mu],
            prior_mean: vec![2.0; n_mu],
            prior_std: vec![1.0; n_mu],
        }
    }

    #[test]
    fn no_parameters_is_identity_transform() {
        let base = Decay {
            mu: 0.7,
            sigma: 0.3,
        };
        let aug = augment(
            Decay {
                mu: 0.7,
                sigma: 0.3,
            },
            spec(0),
        )
        .unwrap();
        assert_eq!(aug.state_dim(), 1);
        assert_eq!(
            aug.drift_matrix(&[1.0], 0.0),
            base.drift_matrix(&[1.0], 0.0)
        );
        assert_eq!(aug.diffusion(0.0), base.diffusion(0.0));
        assert_eq!(
            aug.transition(&[1.0], 0.0, 0.1).unwrap(),
            base.transition(&[1.0], 0.0, 0.1).unwrap()
        );
    }

    #[test]
    fn frozen_parameter_drift() {
        let aug = augment(
            Decay {
                mu: 0.0,
                sigma: 1.0,
            },
            spec(1),
        )
        .unwrap();
        let q = aug.drift_matrix(&[1.0, 2.0], 0.0);
        assert_eq!(q, Matrix::from_row_slice(2, 2, &[-2.0, 0.0, 0.0, 0.0]));
        let q3 = aug.drift_matrix(&[1.0, 3.0], 0.0);
        assert_eq!(q3[(0, 0)], -3.0);
        assert!(q3.row(1).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn block_transition_matches_full_van_loan() {
        let aug = augment(
            Decay {
                mu: 0.0,
                sigma: 0.5,
            },
            spec(1),
        )
        .unwrap();
        let anchor = [0.3, 1.7];
        let (phi, off) = aug.transition(&anchor, 0.0, 0.2).unwrap();
        let sig = aug.noise_covariance(&anchor, 0.0, 0.2).unwrap();
        let (phi_full, sig_full) =
            discretize_lti(&aug.drift_matrix(&anchor, 0.0), &aug.diffusion(0.0), 0.2).unwrap();
        assert!((phi - phi_full).amax() < 1e-14);
        assert!((sig - sig_full).amax() < 1e-14);
        assert_eq!(off.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let mut s = spec(1);
        s.n_x = 2;
        assert!(matches!(
            augment(
                Decay {
                    mu: 0.0,
                    sigma: 1.0
                },
                s
            ),
            Err(FilterError::Parameter(_))
        ));
        let mut s = spec(2);
        s.g_mu.pop();
        assert!(matches!(
            augment(
                Decay {
                    mu: 0.0,
                    sigma: 1.0
                },
                s
            ),
            Err(FilterError::Parameter(_))
        ));
    }
}
