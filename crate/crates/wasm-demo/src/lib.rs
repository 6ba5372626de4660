//! Browser bindings: a growth-model run, a tracking run and the ADP
//! schedule. Each entry point has a plain Rust twin returning JSON so the
//! logic is testable off the browser.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use igsf::experiments::{
    run_experiment, ExperimentName, FilterKind, FilterSpec, GrowthSetup, Problem,
};
use igsf::filter_bank::{AdpSchedule, ScheduleKind};

#[derive(Serialize)]
struct Series {
    label: String,
    /// Per step, one value per reported component.
    estimate: Vec<Vec<f64>>,
    rmse: Vec<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct DemoRun {
    times: Vec<f64>,
    components: Vec<String>,
    truth: Vec<Vec<f64>>,
    observations: Vec<Vec<f64>>,
    filters: Vec<Series>,
}

fn parse_kinds(filters: &str) -> Result<Vec<FilterKind>, String> {
    filters
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<FilterKind>().map_err(|e| e.to_string()))
        .collect()
}

/// One run per filter, so a diverging filter is reported without hiding the others.
fn demo(
    name: ExperimentName,
    problem: Problem,
    kinds: &[FilterKind],
    particles: usize,
    seed: u64,
) -> Result<DemoRun, String> {
    if kinds.is_empty() {
        return Err("choose at least one filter".into());
    }
    let defaults = name.filter_defaults();
    let mut out: Option<DemoRun> = None;
    let mut filters = Vec::new();
    for kind in kinds {
        let mut spec = FilterSpec::new(*kind);
        spec.particles = Some(particles);
        let spec = spec.resolve(&defaults);
        spec.validate().map_err(|e| e.to_string())?;
        match run_experiment(
            name.as_str(),
            &problem,
            std::slice::from_ref(&spec),
            1,
            seed,
            1,
        ) {
            Ok(art) => {
                let idx = art.component_indices();
                let pick =
                    |v: &igsf::numerics::Vector| idx.iter().map(|&i| v[i]).collect::<Vec<f64>>();
                let f = &art.filters[0];
                filters.push(Series {
                    label: spec.label().to_string(),
                    estimate: f.estimates[0].iter().map(pick).collect(),
                    rmse: f
                        .rmse
                        .iter()
                        .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
                        .collect(),
                    error: None,
                });
                out.get_or_insert_with(|| DemoRun {
                    times: art.times.clone(),
                    components: art.components.iter().map(|c| c.name.clone()).collect(),
                    truth: art.truths[0].iter().map(pick).collect(),
                    observations: art.observations[0]
                        .iter()
                        .map(|z| z.iter().copied().collect())
                        .collect(),
                    filters: Vec::new(),
                });
            }
            Err(e) => filters.push(Series {
                label: spec.label().to_string(),
                estimate: Vec::new(),
                rmse: Vec::new(),
                error: Some(e.to_string()),
            }),
        }
    }
    let mut run = out.ok_or_else(|| {
        filters
            .iter()
            .filter_map(|f| f.error.clone())
            .collect::<Vec<_>>()
            .join("; ")
    })?;
    run.filters = filters;
    Ok(run)
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

/// Growth-model run as JSON.
pub fn growth_json(
    seed: u64,
    steps: usize,
    meas_var: f64,
    particles: usize,
    filters: &str,
) -> Result<String, String> {
    let mut g = GrowthSetup::default();
    g.params.steps = steps;
    g.params.meas_var = meas_var;
    let run = demo(
        ExperimentName::Growth,
        Problem::Growth(g),
        &parse_kinds(filters)?,
        particles,
        seed,
    )?;
    to_json(&run)
}

/// Bearing-range tracking run as JSON.
pub fn tracking_json(seed: u64, particles: usize, filters: &str) -> Result<String, String> {
    let problem = ExperimentName::Tracking.default_problem();
    let run = demo(
        ExperimentName::Tracking,
        problem,
        &parse_kinds(filters)?,
        particles,
        seed,
    )?;
    to_json(&run)
}

/// `α¹ … α^Γ`.
pub fn schedule_values(alpha1: f64, kind: &str, iterations: usize) -> Result<Vec<f64>, String> {
    let kind = match kind {
        "exp-decay" => ScheduleKind::ExpDecay,
        "constant-then-zero" => ScheduleKind::ConstantThenZero,
        other => return Err(format!("unknown schedule `{other}`")),
    };
    Ok(AdpSchedule::new(alpha1, kind, iterations)
        .map_err(|e| e.to_string())?
        .values())
}

#[wasm_bindgen]
pub fn growth_demo(
    seed: u32,
    steps: usize,
    meas_var: f64,
    particles: usize,
    filters: &str,
) -> Result<String, JsError> {
    growth_json(seed.into(), steps, meas_var, particles, filters).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn tracking_demo(seed: u32, particles: usize, filters: &str) -> Result<String, JsError> {
    tracking_json(seed.into(), particles, filters).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn adp_schedule(alpha1: f64, kind: &str, iterations: usize) -> Result<Vec<f64>, JsError> {
    schedule_values(alpha1, kind, iterations).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn growth_run_has_matching_lengths() {
        let v: Value =
            serde_json::from_str(&growth_json(1, 12, 1.0, 100, "igsf-bank, gspf").unwrap())
                .unwrap();
        assert_eq!(v["times"].as_array().unwrap().len(), 12);
        assert_eq!(v["truth"].as_array().unwrap().len(), 12);
        let filters = v["filters"].as_array().unwrap();
        assert_eq!(filters.len(), 2);
        for f in filters {
            assert_eq!(f["estimate"].as_array().unwrap().len(), 12);
            assert!(f["error"].is_null());
        }
    }

    #[test]
    fn same_seed_same_json() {
        assert_eq!(
            growth_json(4, 8, 0.5, 60, "sir").unwrap(),
            growth_json(4, 8, 0.5, 60, "sir").unwrap()
        );
    }

    #[test]
    fn tracking_reports_two_components() {
        let v: Value = serde_json::from_str(&tracking_json(2, 100, "enkf").unwrap()).unwrap();
        assert_eq!(v["components"], serde_json::json!(["X", "Y"]));
        assert_eq!(v["observations"][0].as_array().unwrap().len(), 2);
    }

    #[test]
    fn schedules() {
        let v = schedule_values(1.0, "exp-decay", 3).unwrap();
        assert_eq!(v, vec![1.0, (-1.0f64).exp(), (-1.0f64).exp() / 2f64.exp()]);
        assert_eq!(
            schedule_values(2.0, "constant-then-zero", 3).unwrap(),
            vec![2.0, 2.0, 0.0]
        );
        assert!(schedule_values(1.0, "linear", 3).is_err());
    }

    #[test]
    fn bad_inputs_are_errors() {
        assert!(growth_json(1, 10, 1.0, 100, "").is_err());
        assert!(growth_json(1, 10, 1.0, 100, "kalman").is_err());
        assert!(growth_json(1, 10, 1.0, 105, "igsf-bank").is_err());
    }
}
