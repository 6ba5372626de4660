use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::frame::{frame_measurement, gen_frame, ShearFrameModel, ShearFrameSpec};
use super::growth::{gen_growth, GrowthModel, GrowthParams, SquareMeasurement};
use super::metrics::rmse_series;
use super::tracking::{gen_tracking, BearingRange, ConstantVelocity, TrackingScenario};
use crate::baselines::{Asir, Enkf, Gspf, Sir};
use crate::error::{FilterError, Result};
use crate::filter_bank::{
    run_filter, AdpSchedule, BankConfig, EpsilonMode, IgsfBank, IterationForm, MixandInit,
    ScheduleKind, SequentialFilter, SingleIgsf,
};
use crate::models::{augment, AnchorMode, AugmentedSpec, MeasurementModel, Prior, ProcessModel};
use crate::numerics::{label_hash, stream_id, Matrix, RngStream, Vector};

/// The named benchmark problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    Growth,
    Tracking,
    Frame5,
    Frame20,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 4] =
        [Self::Growth, Self::Tracking, Self::Frame5, Self::Frame20];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Growth => "growth",
            Self::Tracking => "tracking",
            Self::Frame5 => "frame5",
            Self::Frame20 => "frame20",
        }
    }

    /// Filter settings used when a filter entry leaves them out.
    pub fn filter_defaults(self) -> FilterDefaults {
        let (particles, mixands, iterations, alpha1, schedule) = match self {
            Self::Growth => (1000, 10, 5, 1.0, ScheduleKind::ExpDecay),
            Self::Tracking => (200, 5, 10, 10.0, ScheduleKind::ExpDecay),
            Self::Frame5 => (400, 10, 10, 2.0, ScheduleKind::ConstantThenZero),
            Self::Frame20 => (400, 10, 8, 3.0, ScheduleKind::ConstantThenZero),
        };
        FilterDefaults {
            particles,
            mixands,
            iterations,
            alpha1,
            schedule,
        }
    }

    /// Filters compared when none are listed.
    pub fn default_filters(self) -> Vec<FilterKind> {
        match self {
            Self::Growth => vec![FilterKind::IgsfBank, FilterKind::Gspf],
            Self::Tracking => vec![FilterKind::IgsfBank, FilterKind::Asir],
            Self::Frame5 | Self::Frame20 => vec![FilterKind::IgsfBank, FilterKind::Enkf],
        }
    }

    pub fn default_problem(self) -> Problem {
        match self {
            Self::Growth => Problem::Growth(GrowthSetup::default()),
            Self::Tracking => Problem::Tracking(TrackingSetup::default()),
            Self::Frame5 => Problem::Frame(ShearFrameSpec::uniform(5, 100.0, 5.0)),
            Self::Frame20 => {
                let mut spec = ShearFrameSpec::uniform(20, 100.0, 5.0);
                spec.stiffness[18] = 98.0;
                spec.stiffness[19] = 98.0;
                Problem::Frame(spec)
            }
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentName {
    type Err = FilterError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| {
                FilterError::Parameter(format!(
                    "unknown experiment `{s}` (expected growth, tracking, frame5 or frame20)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterDefaults {
    pub particles: usize,
    pub mixands: usize,
    pub iterations: usize,
    pub alpha1: f64,
    pub schedule: ScheduleKind,
}

/// Growth model truth parameters and the filter prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrowthSetup {
    pub params: GrowthParams,
    pub prior_mean: f64,
    pub prior_var: f64,
}

impl Default for GrowthSetup {
    fn default() -> Self {
        Self {
            params: GrowthParams::default(),
            prior_mean: 0.5,
            prior_var: 2.0,
        }
    }
}

/// Tracking scenario plus the filters' motion model and prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackingSetup {
    pub scenario: TrackingScenario,
    /// Diagonal acceleration covariance assumed by the filters.
    pub filter_accel_var: [f64; 2],
    pub prior_mean: [f64; 4],
    pub prior_var: [f64; 4],
}

impl Default for TrackingSetup {
    fn default() -> Self {
        Self {
            scenario: TrackingScenario::default(),
            filter_accel_var: [8.0, 8.0],
            prior_mean: [0.0, 40.0, 0.2, 0.075],
            prior_var: [1.0, 100.0, 1.0, 100.0],
        }
    }
}

/// A fully specified benchmark problem.
#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Growth(GrowthSetup),
    Tracking(TrackingSetup),
    Frame(ShearFrameSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterKind {
    IgsfBank,
    /// Single iterated-gain filter with ADP (`N_G = 1`).
    Igsf,
    Enkf,
    Sir,
    Asir,
    Gspf,
}

impl FilterKind {
    pub const ALL: [FilterKind; 6] = [
        Self::IgsfBank,
        Self::Igsf,
        Self::Enkf,
        Self::Sir,
        Self::Asir,
        Self::Gspf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::IgsfBank => "igsf-bank",
            Self::Igsf => "igsf",
            Self::Enkf => "enkf",
            Self::Sir => "sir",
            Self::Asir => "asir",
            Self::Gspf => "gspf",
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FilterKind {
    type Err = FilterError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| FilterError::config("filter", format!("unknown filter `{s}`")))
    }
}

/// One filter entry. Unset fields take the experiment's defaults in
/// [`FilterSpec::resolve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSpec {
    pub kind: FilterKind,
    /// Output directory name; defaults to the kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub particles: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixands: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<EpsilonMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub form: Option<IterationForm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spread_correction: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<MixandInit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<AnchorMode>,
}

impl FilterSpec {
    pub fn new(kind: FilterKind) -> Self {
        Self {
            kind,
            label: None,
            particles: None,
            mixands: None,
            iterations: None,
            alpha1: None,
            schedule: None,
            epsilon: None,
            form: None,
            spread_correction: None,
            init: None,
            anchor: None,
        }
    }

    /// Fills every unset field. Settings that do not apply to the kind are
    /// left unset.
    pub fn resolve(mut self, d: &FilterDefaults) -> Self {
        self.label
            .get_or_insert_with(|| self.kind.as_str().to_string());
        self.particles.get_or_insert(d.particles);
        self.anchor.get_or_insert(AnchorMode::default());
        match self.kind {
            FilterKind::IgsfBank | FilterKind::Igsf => {
                if self.kind == FilterKind::IgsfBank {
                    self.mixands.get_or_insert(d.mixands);
                } else {
                    self.mixands = Some(1);
                }
                self.iterations.get_or_insert(d.iterations);
                self.alpha1.get_or_insert(d.alpha1);
                self.schedule.get_or_insert(d.schedule);
                self.epsilon.get_or_insert(EpsilonMode::default());
                self.form.get_or_insert(IterationForm::default());
                self.spread_correction.get_or_insert(true);
                self.init.get_or_insert(MixandInit::default());
            }
            FilterKind::Gspf => {
                self.mixands.get_or_insert(d.mixands);
            }
            FilterKind::Enkf | FilterKind::Sir | FilterKind::Asir => {}
        }
        self
    }

    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or(self.kind.as_str())
    }

    fn defaults_missing(&self, field: &str) -> FilterError {
        FilterError::config(
            format!("filters.{}.{field}", self.label()),
            "unresolved setting",
        )
    }

    /// Bank settings of an iterated-gain filter entry.
    pub fn bank_config(&self) -> Result<BankConfig> {
        let get = |v: Option<usize>, f: &str| v.ok_or_else(|| self.defaults_missing(f));
        let schedule = AdpSchedule::new(
            self.alpha1.ok_or_else(|| self.defaults_missing("alpha1"))?,
            self.schedule.unwrap_or_default(),
            get(self.iterations, "iterations")?,
        )
        .map_err(|e| {
            FilterError::config(format!("filters.{}.alpha1", self.label()), e.to_string())
        })?;
        let mut cfg = BankConfig::new(
            get(self.particles, "particles")?,
            get(self.mixands, "mixands")?,
            schedule,
        );
        cfg.epsilon = self.epsilon.unwrap_or_default();
        cfg.form = self.form.unwrap_or_default();
        cfg.spread_correction = self.spread_correction.unwrap_or(true);
        cfg.init = self.init.unwrap_or_default();
        Ok(cfg)
    }

    /// Checks the constraints of a resolved entry.
    pub fn validate(&self) -> Result<()> {
        let field = |f: &str| format!("filters.{}.{f}", self.label());
        let n = self
            .particles
            .ok_or_else(|| self.defaults_missing("particles"))?;
        match self.kind {
            FilterKind::IgsfBank | FilterKind::Igsf => {
                self.bank_config()?.validate().map_err(|e| match e {
                    FilterError::Config { field: f, message } => {
                        FilterError::config(field(&f), message)
                    }
                    other => other,
                })?;
            }
            FilterKind::Gspf => {
                let g = self
                    .mixands
                    .ok_or_else(|| self.defaults_missing("mixands"))?;
                if g == 0 || n % g != 0 || n / g < 2 {
                    return Err(FilterError::config(
                        field("particles"),
                        format!(
                            "N divisible by N_G with at least 2 per component (N = {n}, N_G = {g})"
                        ),
                    ));
                }
            }
            FilterKind::Enkf | FilterKind::Sir | FilterKind::Asir => {
                if n < 2 {
                    return Err(FilterError::config(
                        field("particles"),
                        "at least 2 particles",
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Stream key of one filter in one run. Depends on the filter kind and
/// the run only, so reordering filters changes nothing.
pub fn filter_key(run: usize, kind: FilterKind) -> u64 {
    stream_id(&[run as u64, label_hash(kind.as_str())])
}

/// Stream id of the truth and observation draws of one run.
pub fn truth_stream_id(run: usize) -> u64 {
    stream_id(&[run as u64, label_hash("truth")])
}

/// Builds the filter described by a resolved entry.
pub fn build_filter(
    spec: &FilterSpec,
    prior: &Prior,
    seed: u64,
    key: u64,
) -> Result<Box<dyn SequentialFilter + Send>> {
    spec.validate()?;
    let n = spec.particles.unwrap_or_default();
    Ok(match spec.kind {
        FilterKind::IgsfBank => Box::new(IgsfBank::new(prior, spec.bank_config()?, seed, key)?),
        FilterKind::Igsf => Box::new(SingleIgsf::new(prior, spec.bank_config()?, seed, key)?),
        FilterKind::Enkf => Box::new(Enkf::new(prior, n, seed, key)?),
        FilterKind::Sir => Box::new(Sir::new(prior, n, seed, key)?),
        FilterKind::Asir => Box::new(Asir::new(prior, n, seed, key)?),
        FilterKind::Gspf => Box::new(Gspf::new(prior, n, spec.mixands.unwrap_or(1), seed, key)?),
    })
}

/// A reported coordinate of the filter state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    pub index: usize,
    pub name: String,
}

/// Models, prior and truth generator of a problem, shared by every run.
pub struct ProblemInstance {
    pub process: ProcessModel,
    pub measurement: Arc<dyn MeasurementModel>,
    pub prior: Prior,
    pub components: Vec<Component>,
    pub steps: usize,
    problem: Problem,
}

impl fmt::Debug for ProblemInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("process", &self.process)
            .field("prior", &self.prior)
            .field("components", &self.components)
            .field("steps", &self.steps)
            .finish()
    }
}

fn named(index: usize, name: impl Into<String>) -> Component {
    Component {
        index,
        name: name.into(),
    }
}

/// Frame filter state `[x1, v1, …, xn, vn, s1..sn, c1..cn]`.
fn frame_parts(spec: &ShearFrameSpec) -> Result<(ProcessModel, Prior, Vec<Component>)> {
    let n = spec.floors();
    let nominal: Vec<f64> = std::iter::repeat_n(spec.nominal_stiffness, n)
        .chain(std::iter::repeat_n(spec.nominal_damping, n))
        .collect();
    let mean: Vec<f64> = nominal.iter().map(|v| v * spec.prior_bias).collect();
    let std: Vec<f64> = nominal.iter().map(|v| v * spec.prior_spread).collect();
    let aug_spec =
        AugmentedSpec::with_relative_noise(2 * n, mean.clone(), std.clone(), spec.param_noise);
    let model = augment(ShearFrameModel::new(spec.clone())?, aug_spec)?;
    let prior = Prior::diagonal(
        std::iter::repeat_n(0.0, 2 * n).chain(mean).collect(),
        std::iter::repeat_n(spec.state_prior_std.powi(2), 2 * n)
            .chain(std.iter().map(|s| s * s))
            .collect(),
    )?;
    let mut components: Vec<Component> = (0..n)
        .map(|j| named(2 * j, format!("x{}", j + 1)))
        .collect();
    components.extend((0..n).map(|j| named(2 * n + j, format!("s{}", j + 1))));
    components.extend((0..n).map(|j| named(3 * n + j, format!("c{}", j + 1))));
    Ok((ProcessModel::continuous(model, spec.h), prior, components))
}

impl ProblemInstance {
    pub fn new(problem: &Problem) -> Result<Self> {
        Ok(match problem {
            Problem::Growth(g) => Self {
                process: ProcessModel::discrete(GrowthModel(g.params.clone()), g.params.h),
                measurement: Arc::new(SquareMeasurement::new(g.params.meas_var)),
                prior: Prior::diagonal(vec![g.prior_mean], vec![g.prior_var])?,
                components: vec![named(0, "x")],
                steps: g.params.steps,
                problem: problem.clone(),
            },
            Problem::Tracking(t) => {
                t.scenario.validate()?;
                let accel = Matrix::from_diagonal(&Vector::from_column_slice(&t.filter_accel_var));
                Self {
                    process: ProcessModel::discrete(
                        ConstantVelocity::new(t.scenario.dt, &accel)?,
                        t.scenario.dt,
                    ),
                    measurement: Arc::new(BearingRange::new(
                        t.scenario.sensor,
                        t.scenario.meas_var,
                    )),
                    prior: Prior::diagonal(t.prior_mean.to_vec(), t.prior_var.to_vec())?,
                    components: vec![named(0, "X"), named(2, "Y")],
                    steps: t.scenario.steps(),
                    problem: problem.clone(),
                }
            }
            Problem::Frame(spec) => {
                spec.validate()?;
                let (process, prior, components) = frame_parts(spec)?;
                let noise_std: Vec<f64> = super::frame::clean_rms(spec)?
                    .iter()
                    .map(|r| r * spec.noise_fraction)
                    .collect();
                Self {
                    process,
                    measurement: Arc::new(frame_measurement(spec, &noise_std)),
                    prior,
                    components,
                    steps: spec.steps(),
                    problem: problem.clone(),
                }
            }
        })
    }

    pub fn state_dim(&self) -> usize {
        self.prior.dim()
    }

    /// Truth (padded to the filter state) and observations of one run.
    pub fn generate(&self, stream: &mut RngStream) -> Result<(Vec<Vector>, Vec<Vector>)> {
        match &self.problem {
            Problem::Growth(g) => {
                let (x, z) = gen_growth(&g.params, stream);
                Ok((
                    x.into_iter().map(|v| Vector::from_element(1, v)).collect(),
                    z.into_iter().map(|v| Vector::from_element(1, v)).collect(),
                ))
            }
            Problem::Tracking(t) => gen_tracking(&t.scenario, stream),
            Problem::Frame(spec) => {
                let data = gen_frame(spec, stream)?;
                let n2 = 2 * spec.floors();
                let params: Vec<f64> = spec
                    .stiffness
                    .iter()
                    .chain(&spec.damping)
                    .copied()
                    .collect();
                let truth = data
                    .truth
                    .into_iter()
                    .map(|x| {
                        Vector::from_iterator(
                            2 * n2,
                            x.iter().copied().chain(params.iter().copied()),
                        )
                    })
                    .collect();
                Ok((truth, data.obs))
            }
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (1..=self.steps).map(|i| self.process.time(i)).collect()
    }
}

/// Estimates of one filter over every run.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub spec: FilterSpec,
    /// `runs × T` estimates.
    pub estimates: Vec<Vec<Vector>>,
    /// `T × components` RMSE across runs.
    pub rmse: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

/// Everything produced by one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub experiment: String,
    pub master_seed: u64,
    pub components: Vec<Component>,
    pub times: Vec<f64>,
    /// `runs × T`, padded to the filter state.
    pub truths: Vec<Vec<Vector>>,
    pub observations: Vec<Vec<Vector>>,
    pub filters: Vec<FilterOutcome>,
}

impl RunArtifacts {
    pub fn runs(&self) -> usize {
        self.truths.len()
    }

    pub fn component_indices(&self) -> Vec<usize> {
        self.components.iter().map(|c| c.index).collect()
    }
}

/// Prefixes the message of an error while keeping its kind.
pub fn with_context(e: FilterError, ctx: &str) -> FilterError {
    match e {
        FilterError::Numerical(m) => FilterError::Numerical(format!("{ctx}: {m}")),
        FilterError::DegenerateWeights(m) => FilterError::DegenerateWeights(format!("{ctx}: {m}")),
        FilterError::Parameter(m) => FilterError::Parameter(format!("{ctx}: {m}")),
        FilterError::Io(m) => FilterError::Io(format!("{ctx}: {m}")),
        other => other,
    }
}

struct RunResult {
    truth: Vec<Vector>,
    obs: Vec<Vector>,
    estimates: Vec<Vec<Vector>>,
    warnings: Vec<Vec<String>>,
}

fn one_run(
    inst: &ProblemInstance,
    filters: &[FilterSpec],
    run: usize,
    seed: u64,
) -> Result<RunResult> {
    let (truth, obs) = inst
        .generate(&mut RngStream::new(seed, truth_stream_id(run)))
        .map_err(|e| with_context(e, &format!("run {run} truth")))?;
    let mut estimates = Vec::with_capacity(filters.len());
    let mut warnings = Vec::with_capacity(filters.len());
    for spec in filters {
        let process = inst
            .process
            .clone()
            .with_anchor(spec.anchor.unwrap_or_default());
        let ctx = format!("{}, run {run}", spec.label());
        let mut filter = build_filter(spec, &inst.prior, seed, filter_key(run, spec.kind))?;
        let traj = run_filter(filter.as_mut(), &process, inst.measurement.as_ref(), &obs)
            .map_err(|e| with_context(e, &ctx))?;
        estimates.push(traj.estimates);
        warnings.push(
            traj.warnings
                .into_iter()
                .map(|w| format!("run {run}: {w}"))
                .collect(),
        );
    }
    Ok(RunResult {
        truth,
        obs,
        estimates,
        warnings,
    })
}

/// Runs every filter on `runs` Monte Carlo replicates. Runs are spread over
/// `threads` workers; each run owns its streams, so the result does not
/// depend on the thread count.
pub fn run_experiment(
    experiment: &str,
    problem: &Problem,
    filters: &[FilterSpec],
    runs: usize,
    master_seed: u64,
    threads: usize,
) -> Result<RunArtifacts> {
    if runs == 0 {
        return Err(FilterError::config("runs", "M must be at least 1"));
    }
    for f in filters {
        f.validate()?;
    }
    let inst = ProblemInstance::new(problem)?;
    let threads = threads.clamp(1, runs);
    let mut slots: Vec<Option<Result<RunResult>>> = (0..runs).map(|_| None).collect();
    if threads == 1 {
        // inline, so single-threaded targets never spawn
        for (m, slot) in slots.iter_mut().enumerate() {
            *slot = Some(one_run(&inst, filters, m, master_seed));
        }
    } else {
        std::thread::scope(|scope| {
            let inst = &inst;
            let chunks = slots.chunks_mut(runs.div_ceil(threads));
            let mut start = 0;
            for chunk in chunks {
                let first = start;
                start += chunk.len();
                scope.spawn(move || {
                    for (k, slot) in chunk.iter_mut().enumerate() {
                        *slot = Some(one_run(inst, filters, first + k, master_seed));
                    }
                });
            }
        });
    }
    let mut results = Vec::with_capacity(runs);
    for slot in slots {
        results.push(slot.expect("every run slot is filled")?);
    }

    let components = inst.components.clone();
    let idx: Vec<usize> = components.iter().map(|c| c.index).collect();
    let truths: Vec<Vec<Vector>> = results.iter().map(|r| r.truth.clone()).collect();
    let mut outcomes = Vec::with_capacity(filters.len());
    for (f, spec) in filters.iter().enumerate() {
        let estimates: Vec<Vec<Vector>> = results.iter().map(|r| r.estimates[f].clone()).collect();
        let rmse = rmse_series(&estimates, &truths, &idx)?;
        outcomes.push(FilterOutcome {
            spec: spec.clone(),
            estimates,
            rmse,
            warnings: results.iter().flat_map(|r| r.warnings[f].clone()).collect(),
        });
    }
    Ok(RunArtifacts {
        experiment: experiment.to_string(),
        master_seed,
        components,
        times: inst.times(),
        truths,
        observations: results.into_iter().map(|r| r.obs).collect(),
        filters: outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_growth() -> Problem {
        let mut g = GrowthSetup::default();
        g.params.steps = 12;
        Problem::Growth(g)
    }

    fn specs(kinds: &[FilterKind], d: &FilterDefaults) -> Vec<FilterSpec> {
        kinds
            .iter()
            .map(|k| {
                let mut s = FilterSpec::new(*k);
                s.particles = Some(60);
                s.mixands = Some(3);
                s.resolve(d)
            })
            .collect()
    }

    #[test]
    fn names_round_trip() {
        for e in ExperimentName::ALL {
            assert_eq!(e.as_str().parse::<ExperimentName>().unwrap(), e);
        }
        for k in FilterKind::ALL {
            assert_eq!(k.as_str().parse::<FilterKind>().unwrap(), k);
        }
        assert!("frame7".parse::<ExperimentName>().is_err());
    }

    #[test]
    fn frame20_defaults() {
        let d = ExperimentName::Frame20.filter_defaults();
        assert_eq!(
            (d.iterations, d.alpha1, d.particles, d.mixands),
            (8, 3.0, 400, 10)
        );
        let Problem::Frame(spec) = ExperimentName::Frame20.default_problem() else {
            panic!()
        };
        assert_eq!(spec.stiffness.iter().filter(|s| **s == 98.0).count(), 2);
        assert_eq!(
            (spec.stiffness[18], spec.stiffness[19], spec.stiffness[17]),
            (98.0, 98.0, 100.0)
        );
    }

    #[test]
    fn frame_instance_dimensions() {
        let inst = ProblemInstance::new(&ExperimentName::Frame5.default_problem()).unwrap();
        assert_eq!(inst.state_dim(), 20);
        assert_eq!(inst.process.state_dim(), 20);
        assert_eq!(inst.measurement.obs_dim(), 5);
        let names: Vec<&str> = inst.components.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(&names[..6], &["x1", "x2", "x3", "x4", "x5", "s1"]);
        assert_eq!(inst.components[5].index, 10);
        assert!((inst.prior.mean[10] - 130.0).abs() < 1e-12);
        assert!((inst.prior.cov[(15, 15)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn same_seed_same_artifacts() {
        let d = ExperimentName::Growth.filter_defaults();
        let f = specs(&[FilterKind::IgsfBank, FilterKind::Gspf], &d);
        let a = run_experiment("growth", &small_growth(), &f, 2, 7, 1).unwrap();
        let b = run_experiment("growth", &small_growth(), &f, 2, 7, 2).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.filters[0].rmse.len(), 12);
    }

    #[test]
    fn filter_order_does_not_matter() {
        let d = ExperimentName::Growth.filter_defaults();
        let ab = specs(&[FilterKind::Enkf, FilterKind::Sir], &d);
        let ba = specs(&[FilterKind::Sir, FilterKind::Enkf], &d);
        let x = run_experiment("growth", &small_growth(), &ab, 1, 3, 1).unwrap();
        let y = run_experiment("growth", &small_growth(), &ba, 1, 3, 1).unwrap();
        assert_eq!(x.filters[0].estimates, y.filters[1].estimates);
        assert_eq!(x.truths, y.truths);
    }

    #[test]
    fn zero_runs_rejected() {
        let d = ExperimentName::Growth.filter_defaults();
        let f = specs(&[FilterKind::Enkf], &d);
        assert!(matches!(
            run_experiment("growth", &small_growth(), &f, 0, 0, 1),
            Err(FilterError::Config { .. })
        ));
    }
}
