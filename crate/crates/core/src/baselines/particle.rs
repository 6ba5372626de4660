use super::normalize_log_weights;
use crate::error::{FilterError, Result};
use crate::filter_bank::SequentialFilter;
use crate::models::{
    measure_ensemble, propagate_mean, propagate_subensemble, MeasurementModel, ObsLikelihood,
    Prior, ProcessModel,
};
use crate::numerics::{label_hash, stream_id, Matrix, RngStream, Vector};

/// Particles (columns) with normalized importance weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEnsemble {
    pub particles: Matrix,
    pub weights: Vec<f64>,
}

impl WeightedEnsemble {
    pub fn uniform(particles: Matrix) -> Self {
        let n = particles.ncols();
        Self {
            particles,
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn mean(&self) -> Vector {
        let mut out = Vector::zeros(self.particles.nrows());
        for (x, w) in self.particles.column_iter().zip(&self.weights) {
            out += x * *w;
        }
        out
    }

    fn select(&self, idx: &[usize]) -> Matrix {
        self.particles.select_columns(idx)
    }
}

/// `1 / Σ w²`.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    1.0 / weights.iter().map(|w| w * w).sum::<f64>()
}

/// Systematic resampling: `n` indices from one uniform offset `u0 ∈ [0, 1)`.
pub fn systematic_resample(weights: &[f64], n: usize, u0: f64) -> Vec<usize> {
    let mut out = Vec::with_capacity(n);
    let mut cum = weights[0];
    let mut j = 0;
    for k in 0..n {
        let target = (k as f64 + u0) / n as f64;
        while cum < target && j + 1 < weights.len() {
            j += 1;
            cum += weights[j];
        }
        out.push(j);
    }
    out
}

fn log_likelihoods(
    mm: &dyn MeasurementModel,
    lik: &ObsLikelihood,
    particles: &Matrix,
    z: &Vector,
    t: f64,
) -> Vec<f64> {
    measure_ensemble(mm, particles, t)
        .column_iter()
        .map(|hx| lik.log_lik(mm, z, &hx.into_owned()))
        .collect()
}

fn check(we: &WeightedEnsemble) -> Result<()> {
    if we.weights.len() != we.particles.ncols() || we.weights.is_empty() {
        return Err(FilterError::dim(
            "weighted ensemble",
            we.particles.ncols(),
            we.weights.len(),
        ));
    }
    Ok(())
}

/// Bootstrap particle filter step: resample systematically when the incoming
/// effective sample size is below `N / 2`, then propagate and reweight by the
/// observation likelihood. Resampling before the move keeps its noise out of
/// the reported weighted mean.
pub fn sir_step(
    we: &WeightedEnsemble,
    model: &ProcessModel,
    mm: &dyn MeasurementModel,
    z: &Vector,
    i: usize,
    stream: &mut RngStream,
) -> Result<WeightedEnsemble> {
    check(we)?;
    let n = we.particles.ncols();
    let resampled;
    let we = if effective_sample_size(&we.weights) < n as f64 / 2.0 {
        let idx = systematic_resample(&we.weights, n, stream.uniform());
        resampled = WeightedEnsemble::uniform(we.select(&idx));
        &resampled
    } else {
        we
    };
    let predicted = propagate_subensemble(model, &we.particles, i, stream)?;
    let lik = ObsLikelihood::new(mm)?;
    let ll = log_likelihoods(mm, &lik, &predicted, z, model.time(i + 1));
    let log_w: Vec<f64> = we
        .weights
        .iter()
        .zip(&ll)
        .map(|(w, l)| w.ln() + l)
        .collect();
    Ok(WeightedEnsemble {
        particles: predicted,
        weights: normalize_log_weights(&log_w)?,
    })
}

/// Auxiliary particle filter step with the noise-free propagation of each
/// particle as its predictive point.
pub fn asir_step(
    we: &WeightedEnsemble,
    model: &ProcessModel,
    mm: &dyn MeasurementModel,
    z: &Vector,
    i: usize,
    stream: &mut RngStream,
) -> Result<WeightedEnsemble> {
    check(we)?;
    let n = we.particles.ncols();
    let t = model.time(i + 1);
    let lik = ObsLikelihood::new(mm)?;
    let points = propagate_mean(model, &we.particles, i)?;
    let point_ll = log_likelihoods(mm, &lik, &points, z, t);
    let first: Vec<f64> = we
        .weights
        .iter()
        .zip(&point_ll)
        .map(|(w, l)| w.ln() + l)
        .collect();
    let first = normalize_log_weights(&first)?;
    let parents = systematic_resample(&first, n, stream.uniform());
    let moved = propagate_subensemble(model, &we.select(&parents), i, stream)?;
    let ll = log_likelihoods(mm, &lik, &moved, z, t);
    let second: Vec<f64> = parents
        .iter()
        .zip(&ll)
        .map(|(&k, l)| l - point_ll[k])
        .collect();
    Ok(WeightedEnsemble {
        particles: moved,
        weights: normalize_log_weights(&second)?,
    })
}

/// Bootstrap SIR filter.
#[derive(Debug, Clone)]
pub struct Sir {
    pub ensemble: WeightedEnsemble,
    step: usize,
    stream: RngStream,
}

impl Sir {
    pub fn new(prior: &Prior, n: usize, seed: u64, key: u64) -> Result<Self> {
        let mut stream = RngStream::new(seed, stream_id(&[key, label_hash("sir"), 0]));
        Ok(Self {
            ensemble: WeightedEnsemble::uniform(prior.sample(n, &mut stream)?),
            step: 0,
            stream,
        })
    }
}

impl SequentialFilter for Sir {
    fn step(&mut self, model: &ProcessModel, mm: &dyn MeasurementModel, z: &Vector) -> Result<()> {
        self.ensemble = sir_step(&self.ensemble, model, mm, z, self.step, &mut self.stream)?;
        self.step += 1;
        Ok(())
    }

    fn estimate(&self) -> Vector {
        self.ensemble.mean()
    }
}

/// Auxiliary SIR filter.
#[derive(Debug, Clone)]
pub struct Asir {
    pub ensemble: WeightedEnsemble,
    step: usize,
    stream: RngStream,
}

impl Asir {
    pub fn new(prior: &Prior, n: usize, seed: u64, key: u64) -> Result<Self> {
        let mut stream = RngStream::new(seed, stream_id(&[key, label_hash("asir"), 0]));
        Ok(Self {
            ensemble: WeightedEnsemble::uniform(prior.sample(n, &mut stream)?),
            step: 0,
            stream,
        })
    }
}

impl SequentialFilter for Asir {
    fn step(&mut self, model: &ProcessModel, mm: &dyn MeasurementModel, z: &Vector) -> Result<()> {
        self.ensemble = asir_step(&self.ensemble, model, mm, z, self.step, &mut self.stream)?;
        self.step += 1;
        Ok(())
    }

    fn estimate(&self) -> Vector {
        self.ensemble.mean()
    }
}
