use super::normalize_log_weights;
use crate::error::{FilterError, Result};
use crate::filter_bank::{mixand_streams, SequentialFilter};
use crate::models::{
    measure_ensemble, propagate_subensemble, sample_gaussian, MeasurementModel, ObsLikelihood,
    Prior, ProcessModel,
};
use crate::numerics::{symmetrize, Matrix, RngStream, Vector};

/// Gaussian mixture carried as weighted components, each represented by
/// its condensed moments and a fresh sample drawn from them.
#[derive(Debug, Clone, PartialEq)]
pub struct GspfMixture {
    pub weights: Vec<f64>,
    pub means: Vec<Vector>,
    pub covs: Vec<Matrix>,
    /// Per component, `J × γ` draws from `N(mean, cov)`.
    pub samples: Vec<Matrix>,
}

impl GspfMixture {
    pub fn estimate(&self) -> Vector {
        let mut out = Vector::zeros(self.means[0].len());
        for (m, w) in self.means.iter().zip(&self.weights) {
            out += m * *w;
        }
        out
    }
}

/// Weighted mean and covariance of the columns of `x`.
fn weighted_moments(x: &Matrix, w: &[f64]) -> (Vector, Matrix) {
    let mut mean = Vector::zeros(x.nrows());
    for (col, wi) in x.column_iter().zip(w) {
        mean += col * *wi;
    }
    let mut cov = Matrix::zeros(x.nrows(), x.nrows());
    for (col, wi) in x.column_iter().zip(w) {
        let d = col - &mean;
        cov += &d * d.transpose() * *wi;
    }
    (mean, symmetrize(&cov))
}

/// Gaussian sum particle filter step. Each component's sample is
/// propagated, importance-weighted by the likelihood, condensed to a
/// Gaussian and redrawn; component weights are scaled by the component's
/// average likelihood.
pub fn gspf_step(
    mix: &GspfMixture,
    model: &ProcessModel,
    mm: &dyn MeasurementModel,
    z: &Vector,
    i: usize,
    streams: &mut [RngStream],
) -> Result<GspfMixture> {
    let g = mix.weights.len();
    if streams.len() != g || mix.samples.len() != g {
        return Err(FilterError::dim(
            "gspf components",
            g,
            streams.len().min(mix.samples.len()),
        ));
    }
    let t = model.time(i + 1);
    let lik = ObsLikelihood::new(mm)?;
    let mut out = GspfMixture {
        weights: Vec::with_capacity(g),
        means: Vec::with_capacity(g),
        covs: Vec::with_capacity(g),
        samples: Vec::with_capacity(g),
    };
    let mut log_mix = Vec::with_capacity(g);
    for (eta, stream) in streams.iter_mut().enumerate() {
        let predicted = propagate_subensemble(model, &mix.samples[eta], i, stream)?;
        let ll: Vec<f64> = measure_ensemble(mm, &predicted, t)
            .column_iter()
            .map(|hx| lik.log_lik(mm, z, &hx.into_owned()))
            .collect();
        let top = ll.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // log of the average likelihood, then the normalized weights
        let avg = if top.is_finite() {
            top + (ll.iter().map(|l| (l - top).exp()).sum::<f64>() / ll.len() as f64).ln()
        } else {
            f64::NEG_INFINITY
        };
        log_mix.push(mix.weights[eta].ln() + avg);
        let w =
            normalize_log_weights(&ll).unwrap_or_else(|_| vec![1.0 / ll.len() as f64; ll.len()]);
        let (mean, cov) = weighted_moments(&predicted, &w);
        let redrawn = sample_gaussian(&mean, &cov, predicted.ncols(), stream)?;
        out.means.push(mean);
        out.covs.push(cov);
        out.samples.push(redrawn);
    }
    out.weights = normalize_log_weights(&log_mix)?;
    Ok(out)
}

/// GSPF with `N_G` components of `γ = N / N_G` particles.
#[derive(Debug, Clone)]
pub struct Gspf {
    pub mixture: GspfMixture,
    step: usize,
    streams: Vec<RngStream>,
}

impl Gspf {
    pub fn new(
        prior: &Prior,
        particles: usize,
        components: usize,
        seed: u64,
        key: u64,
    ) -> Result<Self> {
        if components == 0 || !particles.is_multiple_of(components) || particles / components < 2 {
            return Err(FilterError::config(
                "particles",
                format!("N divisible by N_G with at least 2 per component (N = {particles}, N_G = {components})"),
            ));
        }
        let gamma = particles / components;
        let mut streams = mixand_streams(seed, key, "gspf", components);
        let samples = streams
            .iter_mut()
            .map(|s| prior.sample(gamma, s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            mixture: GspfMixture {
                weights: vec![1.0 / components as f64; components],
                means: vec![prior.mean.clone(); components],
                covs: vec![prior.cov.clone(); components],
                samples,
            },
            step: 0,
            streams,
        })
    }
}

impl SequentialFilter for Gspf {
    fn step(&mut self, model: &ProcessModel, mm: &dyn MeasurementModel, z: &Vector) -> Result<()> {
        self.mixture = gspf_step(&self.mixture, model, mm, z, self.step, &mut self.streams)?;
        self.step += 1;
        Ok(())
    }

    fn estimate(&self) -> Vector {
        self.mixture.estimate()
    }

    fn mixture(&self) -> Option<crate::filter_bank::MixtureSummary> {
        Some(crate::filter_bank::MixtureSummary {
            weights: self.mixture.weights.clone(),
            means: self.mixture.means.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter_bank::sample_mean;
    use crate::models::{LinearDiscrete, LinearMeasurement};

    struct Flat(Matrix);
    impl MeasurementModel for Flat {
        fn obs_dim(&self) -> usize {
            1
        }
        fn measure(&self, _x: &[f64], _t: f64) -> Vector {
            Vector::zeros(1)
        }
        fn noise_cov(&self) -> &Matrix {
            &self.0
        }
    }

    fn model() -> ProcessModel {
        ProcessModel::discrete(
            LinearDiscrete::new(
                Matrix::identity(2, 2) * 0.9,
                &(Matrix::identity(2, 2) * 0.1),
            )
            .unwrap(),
            1.0,
        )
    }

    #[test]
    fn equal_likelihoods_keep_component_weights() {
        let prior = Prior::diagonal(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let mut f = Gspf::new(&prior, 30, 3, 1, 0).unwrap();
        f.mixture.weights = vec![0.2, 0.3, 0.5];
        f.step(&model(), &Flat(Matrix::identity(1, 1)), &Vector::zeros(1))
            .unwrap();
        for (a, b) in f.mixture.weights.iter().zip([0.2, 0.3, 0.5]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn redrawn_sample_matches_condensed_mean() {
        let prior = Prior::diagonal(vec![1.0, -1.0], vec![1.0, 2.0]).unwrap();
        let mut f = Gspf::new(&prior, 20_000, 1, 2, 0).unwrap();
        let mm = LinearMeasurement::select(2, &[0], Matrix::from_element(1, 1, 0.5));
        f.step(&model(), &mm, &Vector::from_element(1, 0.4))
            .unwrap();
        let drawn = sample_mean(&f.mixture.samples[0]);
        let cov = &f.mixture.covs[0];
        for k in 0..2 {
            let se = (cov[(k, k)] / 20_000.0).sqrt();
            assert!((drawn[k] - f.mixture.means[0][k]).abs() < 5.0 * se);
        }
        assert!((f.mixture.weights[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_indivisible_particle_count() {
        let prior = Prior::diagonal(vec![0.0], vec![1.0]).unwrap();
        assert!(matches!(
            Gspf::new(&prior, 10, 3, 0, 0),
            Err(FilterError::Config { .. })
        ));
    }
}
