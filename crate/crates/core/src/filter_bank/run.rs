use super::bank::{
    bank_estimate, igsf_bank_step, init_bank, update_mixand, zeroth_bank_step, BankConfig,
    FilterBank,
};
use super::ops::sample_mean;
use crate::error::Result;
use crate::models::{propagate_subensemble, MeasurementModel, Prior, ProcessModel};
use crate::numerics::{label_hash, stream_id, RngStream, Vector};

/// Weights and component means of a mixture filter after one step.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSummary {
    pub weights: Vec<f64>,
    pub means: Vec<Vector>,
}

/// A filter advanced one observation at a time.
pub trait SequentialFilter {
    /// Assimilates the observation at the next grid point.
    fn step(&mut self, model: &ProcessModel, mm: &dyn MeasurementModel, z: &Vector) -> Result<()>;

    /// Current posterior mean estimate.
    fn estimate(&self) -> Vector;

    fn mixture(&self) -> Option<MixtureSummary> {
        None
    }

    /// Non-fatal events since the last call.
    fn take_warnings(&mut self) -> Vec<String> {
        Vec::new()
    }
}

/// Estimates after every observation, plus mixture diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub estimates: Vec<Vector>,
    pub mixtures: Vec<MixtureSummary>,
    pub warnings: Vec<String>,
}

/// Runs `filter` over the observations `Z_1, Z_2, …`.
pub fn run_filter(
    filter: &mut dyn SequentialFilter,
    model: &ProcessModel,
    mm: &dyn MeasurementModel,
    observations: &[Vector],
) -> Result<Trajectory> {
    let mut out = Trajectory::default();
    for (k, z) in observations.iter().enumerate() {
        filter.step(model, mm, z)?;
        out.estimates.push(filter.estimate());
        if let Some(m) = filter.mixture() {
            out.mixtures.push(m);
        }
        out.warnings.extend(
            filter
                .take_warnings()
                .into_iter()
                .map(|w| format!("step {k}: {w}")),
        );
    }
    Ok(out)
}

/// One stream per mixand, keyed by `(key, family, η)`.
pub fn mixand_streams(seed: u64, key: u64, family: &str, count: usize) -> Vec<RngStream> {
    let tag = label_hash(family);
    (0..count)
        .map(|eta| RngStream::new(seed, stream_id(&[key, tag, eta as u64])))
        .collect()
}

/// Stream family shared by every member of the iterated-gain family, so
/// the bank, its zeroth-only reduction and the single filter see the same
/// noise.
pub const IGSF_FAMILY: &str = "igsf";

/// The iterated gain-based stochastic filter bank.
#[derive(Debug, Clone)]
pub struct IgsfBank {
    pub bank: FilterBank,
    pub config: BankConfig,
    streams: Vec<RngStream>,
    warnings: Vec<String>,
}

impl IgsfBank {
    pub fn new(prior: &Prior, config: BankConfig, seed: u64, key: u64) -> Result<Self> {
        config.validate()?;
        let mut streams = mixand_streams(seed, key, IGSF_FAMILY, config.mixands);
        let bank = init_bank(prior, &config, &mut streams)?;
        Ok(Self {
            bank,
            config,
            streams,
            warnings: Vec::new(),
        })
    }
}

impl SequentialFilter for IgsfBank {
    fn step(&mut self, model: &ProcessModel, mm: &dyn MeasurementModel, z: &Vector) -> Result<()> {
        let report = igsf_bank_step(
            &mut self.bank,
            model,
            mm,
            z,
            &self.config,
            &mut self.streams,
        )?;
        self.warnings.extend(report.degenerate_weights);
        Ok(())
    }

    fn estimate(&self) -> Vector {
        bank_estimate(&self.bank)
    }

    fn mixture(&self) -> Option<MixtureSummary> {
        Some(MixtureSummary {
            weights: self.bank.weights(),
            means: self.bank.means(),
        })
    }

    fn take_warnings(&mut self) -> Vec<String> {
        std::mem::take(&mut self.warnings)
    }
}

/// Gaussian-sum filter using only the zeroth (square-root) update.
#[derive(Debug, Clone)]
pub struct ZerothBank {
    pub bank: FilterBank,
    pub spread_correction: bool,
    streams: Vec<RngStream>,
}

impl ZerothBank {
    pub fn new(prior: &Prior, config: &BankConfig, seed: u64, key: u64) -> Result<Self> {
        let mut streams = mixand_streams(seed, key, IGSF_FAMILY, config.mixands);
        let bank = init_bank(prior, config, &mut streams)?;
        Ok(Self {
            bank,
            spread_correction: config.spread_correction,
            streams,
        })
    }
}

impl SequentialFilter for ZerothBank {
    fn step(&mut self, model: &ProcessModel, mm: &dyn MeasurementModel, z: &Vector) -> Result<()> {
        zeroth_bank_step(
            &mut self.bank,
            model,
            mm,
            z,
            self.spread_correction,
            &mut self.streams,
        )?;
        Ok(())
    }

    fn estimate(&self) -> Vector {
        bank_estimate(&self.bank)
    }

    fn mixture(&self) -> Option<MixtureSummary> {
        Some(MixtureSummary {
            weights: self.bank.weights(),
            means: self.bank.means(),
        })
    }
}

/// A single iterated-gain filter over the whole ensemble, without mixand
/// weights.
#[derive(Debug, Clone)]
pub struct SingleIgsf {
    pub particles: crate::numerics::Matrix,
    pub config: BankConfig,
    step: usize,
    stream: RngStream,
}

impl SingleIgsf {
    pub fn new(prior: &Prior, config: BankConfig, seed: u64, key: u64) -> Result<Self> {
        let mut single = config.clone();
        single.mixands = 1;
        single.validate()?;
        let mut streams = mixand_streams(seed, key, IGSF_FAMILY, 1);
        let bank = init_bank(prior, &single, &mut streams)?;
        Ok(Self {
            particles: bank.mixands[0].particles.clone(),
            config: single,
            step: 0,
            stream: streams.remove(0),
        })
    }
}

impl SequentialFilter for SingleIgsf {
    fn step(&mut self, model: &ProcessModel, mm: &dyn MeasurementModel, z: &Vector) -> Result<()> {
        let predicted = propagate_subensemble(model, &self.particles, self.step, &mut self.stream)?;
        let upd = update_mixand(&predicted, z, mm, model.time(self.step + 1), &self.config)?;
        self.particles = upd.particles;
        self.step += 1;
        Ok(())
    }

    fn estimate(&self) -> Vector {
        sample_mean(&self.particles)
    }
}
