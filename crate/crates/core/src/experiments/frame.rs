use serde::{Deserialize, Serialize};

use crate::error::{FilterError, Result};
use crate::models::{forced_transition, ContinuousModel, LinearMeasurement};
use crate::numerics::{discretize_lti, Matrix, RngStream, Vector};

/// Multi-story shear frame with unit floor masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShearFrameSpec {
    pub stiffness: Vec<f64>,
    pub damping: Vec<f64>,
    /// Amplitude of the harmonic force applied to every floor.
    pub force_amp: f64,
    /// Forcing frequency in rad/s.
    pub force_freq: f64,
    /// Process noise intensity on each floor velocity.
    pub process_noise: f64,
    /// Observation noise std as a fraction of each clean displacement's RMS.
    pub noise_fraction: f64,
    pub h: f64,
    pub horizon: f64,
    /// Stiffness and damping used to center the parameter prior.
    pub nominal_stiffness: f64,
    pub nominal_damping: f64,
    /// Prior mean as a multiple of the nominal values.
    pub prior_bias: f64,
    /// Prior std as a fraction of the nominal values.
    pub prior_spread: f64,
    /// Prior std of floor displacements and velocities.
    pub state_prior_std: f64,
    /// Parameter pseudo-noise intensity relative to the prior mean.
    pub param_noise: f64,
}

impl Default for ShearFrameSpec {
    fn default() -> Self {
        Self::uniform(5, 100.0, 5.0)
    }
}

impl ShearFrameSpec {
    pub fn uniform(n: usize, s: f64, c: f64) -> Self {
        Self {
            stiffness: vec![s; n],
            damping: vec![c; n],
            force_amp: 30.0,
            force_freq: 5.0,
            process_noise: 0.1,
            noise_fraction: 0.005,
            h: 0.01,
            horizon: 10.0,
            nominal_stiffness: s,
            nominal_damping: c,
            prior_bias: 1.3,
            prior_spread: 0.2,
            state_prior_std: 0.01,
            param_noise: 1e-2,
        }
    }

    pub fn floors(&self) -> usize {
        self.stiffness.len()
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.h).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.floors();
        if n == 0 {
            return Err(FilterError::config("frame.stiffness", "at least one floor"));
        }
        if self.damping.len() != n {
            return Err(FilterError::config(
                "frame.damping",
                format!("expected {n} entries, got {}", self.damping.len()),
            ));
        }
        if self
            .stiffness
            .iter()
            .chain(&self.damping)
            .any(|v| !(*v > 0.0))
        {
            return Err(FilterError::config(
                "frame.stiffness",
                "stiffness and damping must be positive",
            ));
        }
        if !(self.h > 0.0) || !(self.horizon > 0.0) {
            return Err(FilterError::config(
                "frame.h",
                "step and horizon must be positive",
            ));
        }
        Ok(())
    }
}

/// Tridiagonal shear-building matrix: `k_j + k_{j+1}` on the diagonal,
/// `−k_{j+1}` off it, `k_n` in the last diagonal slot.
fn shear_matrix(k: &[f64]) -> Matrix {
    let n = k.len();
    let mut m = Matrix::zeros(n, n);
    for j in 0..n {
        m[(j, j)] = k[j] + if j + 1 < n { k[j + 1] } else { 0.0 };
        if j + 1 < n {
            m[(j, j + 1)] = -k[j + 1];
            m[(j + 1, j)] = -k[j + 1];
        }
    }
    m
}

/// Stiffness and damping matrices of an `n`-floor shear frame.
pub fn build_shear_frame(s: &[f64], c: &[f64]) -> Result<(Matrix, Matrix)> {
    if s.len() != c.len() {
        return Err(FilterError::Parameter(format!(
            "stiffness has {} entries but damping has {}",
            s.len(),
            c.len()
        )));
    }
    Ok((shear_matrix(s), shear_matrix(c)))
}

/// First-order shear-frame dynamics on `[x₁, v₁, …, xₙ, vₙ]`. Stiffness and
/// damping are read from the anchor's trailing `2n` entries when present,
/// so the model can be augmented with its own parameters.
#[derive(Debug, Clone)]
pub struct ShearFrameModel {
    pub spec: ShearFrameSpec,
}

impl ShearFrameModel {
    pub fn new(spec: ShearFrameSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self { spec })
    }

    /// Drift block for the given stiffness and damping.
    pub fn drift_for(&self, s: &[f64], c: &[f64]) -> Matrix {
        let n = s.len();
        let sm = shear_matrix(s);
        let cm = shear_matrix(c);
        let mut q = Matrix::zeros(2 * n, 2 * n);
        for j in 0..n {
            q[(2 * j, 2 * j + 1)] = 1.0;
            for k in 0..n {
                q[(2 * j + 1, 2 * k)] = -sm[(j, k)];
                q[(2 * j + 1, 2 * k + 1)] = -cm[(j, k)];
            }
        }
        q
    }
}

impl ContinuousModel for ShearFrameModel {
    fn state_dim(&self) -> usize {
        2 * self.spec.floors()
    }

    fn drift_matrix(&self, anchor: &[f64], _t: f64) -> Matrix {
        let n = self.spec.floors();
        if anchor.len() >= 4 * n {
            self.drift_for(&anchor[2 * n..3 * n], &anchor[3 * n..4 * n])
        } else {
            self.drift_for(&self.spec.stiffness, &self.spec.damping)
        }
    }

    fn diffusion(&self, _t: f64) -> Matrix {
        let n = self.spec.floors();
        let mut g = Matrix::zeros(2 * n, n);
        for j in 0..n {
            g[(2 * j + 1, j)] = self.spec.process_noise;
        }
        g
    }

    fn forcing(&self, t: f64) -> Option<Vector> {
        let n = self.spec.floors();
        let f = self.spec.force_amp * (self.spec.force_freq * t).cos();
        Some(Vector::from_fn(
            2 * n,
            |r, _| if r % 2 == 1 { f } else { 0.0 },
        ))
    }
}

/// Simulated frame response at the true parameters.
#[derive(Debug, Clone)]
pub struct FrameData {
    /// `[x, v]` at steps `1..=T`.
    pub truth: Vec<Vector>,
    /// Noisy floor displacements at steps `1..=T`.
    pub obs: Vec<Vector>,
    /// Observation noise std per floor.
    pub noise_std: Vec<f64>,
}

fn simulate(model: &ShearFrameModel, noise: Option<&mut RngStream>) -> Result<Vec<Vector>> {
    let spec = &model.spec;
    let n2 = 2 * spec.floors();
    let q = model.drift_for(&spec.stiffness, &spec.damping);
    let noise_l = match noise {
        Some(_) => {
            let (_, sig) = discretize_lti(&q, &model.diffusion(0.0), spec.h)?;
            Some(crate::numerics::chol_psd(&sig, crate::numerics::relative_jitter(&sig, 1e-12))?.l)
        }
        None => None,
    };
    let mut stream = noise;
    let mut x = Vector::zeros(n2);
    let mut out = Vec::with_capacity(spec.steps());
    let mut z = Vector::zeros(n2);
    for i in 0..spec.steps() {
        let t = i as f64 * spec.h;
        let (phi, offset) =
            forced_transition(&q, model.forcing(t), model.forcing(t + spec.h), spec.h)?;
        x = phi * x + offset;
        if let (Some(l), Some(s)) = (&noise_l, stream.as_deref_mut()) {
            s.fill_normal(z.as_mut_slice());
            x += l * &z;
        }
        out.push(x.clone());
    }
    Ok(out)
}

/// Per-floor RMS displacement of the noise-free response.
pub fn clean_rms(spec: &ShearFrameSpec) -> Result<Vec<f64>> {
    let model = ShearFrameModel::new(spec.clone())?;
    let clean = simulate(&model, None)?;
    let n = spec.floors();
    Ok((0..n)
        .map(|j| (clean.iter().map(|x| x[2 * j].powi(2)).sum::<f64>() / clean.len() as f64).sqrt())
        .collect())
}

/// Truth trajectory with process noise and displacement observations with
/// noise std `fraction × clean RMS` per floor.
pub fn gen_frame(spec: &ShearFrameSpec, stream: &mut RngStream) -> Result<FrameData> {
    let noise_std: Vec<f64> = clean_rms(spec)?
        .iter()
        .map(|r| r * spec.noise_fraction)
        .collect();
    let model = ShearFrameModel::new(spec.clone())?;
    let truth = simulate(&model, Some(stream))?;
    let n = spec.floors();
    let obs = truth
        .iter()
        .map(|x| Vector::from_fn(n, |j, _| x[2 * j] + noise_std[j] * stream.normal()))
        .collect();
    Ok(FrameData {
        truth,
        obs,
        noise_std,
    })
}

/// Displacement observation of the augmented `4n` state.
pub fn frame_measurement(spec: &ShearFrameSpec, noise_std: &[f64]) -> LinearMeasurement {
    let n = spec.floors();
    let coords: Vec<usize> = (0..n).map(|j| 2 * j).collect();
    let r = Matrix::from_diagonal(&Vector::from_iterator(n, noise_std.iter().map(|s| s * s)));
    LinearMeasurement::select(4 * n, &coords, r)
}
