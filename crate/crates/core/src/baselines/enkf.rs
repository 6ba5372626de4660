use crate::error::Result;
use crate::filter_bank::{
    gain_zeroth, mapped_anomaly, prediction_anomaly, sample_mean, SequentialFilter,
};
use crate::models::{
    measure_ensemble, propagate_subensemble, MeasurementModel, Prior, ProcessModel,
};
use crate::numerics::{
    chol_psd, label_hash, relative_jitter, stream_id, Matrix, RngStream, Vector,
};

/// Perturbed-observation ensemble Kalman filter step on a `J × N`
/// ensemble. Propagation noise is drawn first, then one observation
/// perturbation per particle.
pub fn enkf_step(
    ensemble: &Matrix,
    model: &ProcessModel,
    mm: &dyn MeasurementModel,
    z: &Vector,
    i: usize,
    stream: &mut RngStream,
) -> Result<Matrix> {
    let predicted = propagate_subensemble(model, ensemble, i, stream)?;
    let t = model.time(i + 1);
    let mapped = measure_ensemble(mm, &predicted, t);
    let s = prediction_anomaly(&predicted, &sample_mean(&predicted))?;
    let (sz, _) = mapped_anomaly(mm, &mapped)?;
    let r = mm.noise_cov();
    let k = gain_zeroth(&s, &sz, r)?;
    let r_sqrt = if r.iter().all(|v| *v == 0.0) {
        Matrix::zeros(r.nrows(), r.ncols())
    } else {
        chol_psd(r, relative_jitter(r, 1e-12))?.l
    };
    let mut xi = Vector::zeros(r.nrows());
    let mut out = predicted;
    for (u, mut col) in out.column_iter_mut().enumerate() {
        stream.fill_normal(xi.as_mut_slice());
        let perturbed = z + &r_sqrt * &xi;
        col += &k * mm.innovation(&perturbed, &mapped.column(u).into_owned());
    }
    Ok(out)
}

/// Stochastic EnKF as a sequential filter.
#[derive(Debug, Clone)]
pub struct Enkf {
    pub particles: Matrix,
    step: usize,
    stream: RngStream,
}

impl Enkf {
    pub fn new(prior: &Prior, n: usize, seed: u64, key: u64) -> Result<Self> {
        let mut stream = RngStream::new(seed, stream_id(&[key, label_hash("enkf"), 0]));
        Ok(Self {
            particles: prior.sample(n, &mut stream)?,
            step: 0,
            stream,
        })
    }
}

impl SequentialFilter for Enkf {
    fn step(&mut self, model: &ProcessModel, mm: &dyn MeasurementModel, z: &Vector) -> Result<()> {
        self.particles = enkf_step(&self.particles, model, mm, z, self.step, &mut self.stream)?;
        self.step += 1;
        Ok(())
    }

    fn estimate(&self) -> Vector {
        sample_mean(&self.particles)
    }
}
