use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{FilterError, Result};
use crate::experiments::frame::ShearFrameSpec;
use crate::experiments::{
    ExperimentName, FilterKind, FilterSpec, GrowthSetup, Problem, TrackingSetup,
};

fn one() -> usize {
    1
}

fn default_out() -> String {
    "out".into()
}

/// Run configuration. After [`Config::parse`] every default is filled in,
/// so serializing it shows exactly what will run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub experiment: ExperimentName,
    /// Monte Carlo runs `M`.
    #[serde(default = "one")]
    pub runs: usize,
    /// Master seed.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: String,
    /// Worker threads; 0 means one per available core.
    #[serde(default)]
    pub threads: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth: Option<GrowthSetup>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tracking: Option<TrackingSetup>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<ShearFrameSpec>,
    #[serde(default)]
    pub filters: Vec<FilterSpec>,
}

/// Command-line settings that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub runs: Option<usize>,
    pub out: Option<String>,
    /// Replaces the filter list when nonempty.
    pub filters: Vec<FilterKind>,
}

fn section_name(e: ExperimentName) -> &'static str {
    match e {
        ExperimentName::Growth => "growth",
        ExperimentName::Tracking => "tracking",
        ExperimentName::Frame5 | ExperimentName::Frame20 => "frame",
    }
}

/// Overlays `top` onto `base`, recursing into tables.
fn merge(base: &mut toml::Table, top: toml::Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn default_section(e: ExperimentName) -> Result<toml::Table> {
    let value = match e.default_problem() {
        Problem::Growth(g) => toml::Table::try_from(g),
        Problem::Tracking(t) => toml::Table::try_from(t),
        Problem::Frame(f) => toml::Table::try_from(f),
    };
    value.map_err(|err| FilterError::config(section_name(e), err.to_string()))
}

fn syntax(err: toml::de::Error) -> FilterError {
    let msg = err.message().to_string();
    // serde names the offending key in most messages; keep the full text
    let field = msg
        .split('`')
        .nth(1)
        .filter(|f| !f.is_empty())
        .unwrap_or("config")
        .to_string();
    FilterError::config(field, err.to_string().trim_end().to_string())
}

impl Config {
    /// Parses TOML text and fills the named experiment's defaults.
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with(text, &Overrides::default())
    }

    /// As [`Config::parse`], applying command-line overrides before the
    /// defaults are resolved.
    pub fn parse_with(text: &str, ov: &Overrides) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(syntax)?;
        let name = match table.get("experiment") {
            Some(toml::Value::String(s)) => s
                .parse::<ExperimentName>()
                .map_err(|e| FilterError::config("experiment", e.to_string()))?,
            Some(_) => return Err(FilterError::config("experiment", "expected a string")),
            None => return Err(FilterError::config("experiment", "missing experiment name")),
        };
        let section = section_name(name);
        for other in ["growth", "tracking", "frame"] {
            if other != section && table.contains_key(other) {
                return Err(FilterError::config(
                    other,
                    format!("section does not apply to experiment `{name}`"),
                ));
            }
        }
        let mut resolved = default_section(name)?;
        match table.remove(section) {
            Some(toml::Value::Table(user)) => merge(&mut resolved, user),
            Some(_) => return Err(FilterError::config(section, "expected a table")),
            None => {}
        }
        table.insert(section.into(), toml::Value::Table(resolved));
        let mut cfg: Config = toml::Value::Table(table).try_into().map_err(syntax)?;
        cfg.apply(ov);
        cfg.resolve()?;
        Ok(cfg)
    }

    pub fn for_experiment(name: ExperimentName) -> Result<Self> {
        Self::parse(&format!("experiment = \"{name}\"\n"))
    }

    fn apply(&mut self, ov: &Overrides) {
        if let Some(s) = ov.seed {
            self.seed = s;
        }
        if let Some(r) = ov.runs {
            self.runs = r;
        }
        if let Some(o) = &ov.out {
            self.out = o.clone();
        }
        if !ov.filters.is_empty() {
            self.filters = ov.filters.iter().map(|k| FilterSpec::new(*k)).collect();
        }
    }

    fn resolve(&mut self) -> Result<()> {
        if self.filters.is_empty() {
            self.filters = self
                .experiment
                .default_filters()
                .into_iter()
                .map(FilterSpec::new)
                .collect();
        }
        let defaults = self.experiment.filter_defaults();
        let mut seen: HashMap<String, usize> = HashMap::new();
        for f in self.filters.iter_mut() {
            let explicit = f.label.is_some();
            *f = f.clone().resolve(&defaults);
            let count = seen.entry(f.label().to_string()).or_insert(0);
            *count += 1;
            if *count > 1 {
                if explicit {
                    return Err(FilterError::config(
                        "filters",
                        format!("duplicate label `{}`", f.label()),
                    ));
                }
                f.label = Some(format!("{}-{}", f.label(), count));
            }
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(FilterError::config("runs", "M must be at least 1"));
        }
        if self.filters.is_empty() {
            return Err(FilterError::config("filters", "at least one filter"));
        }
        for f in &self.filters {
            let bad = f.label().is_empty()
                || f.label().contains(['/', '\\'])
                || f.label().starts_with('.');
            if bad {
                return Err(FilterError::config(
                    "filters.label",
                    format!("`{}` is not a directory name", f.label()),
                ));
            }
            f.validate()?;
        }
        let problem = self.problem()?;
        if let Problem::Tracking(t) = &problem {
            t.scenario.validate()?;
        }
        if let Problem::Frame(f) = &problem {
            f.validate()?;
        }
        Ok(())
    }

    /// The resolved problem of the named experiment.
    pub fn problem(&self) -> Result<Problem> {
        let missing = || FilterError::config(section_name(self.experiment), "section missing");
        Ok(match self.experiment {
            ExperimentName::Growth => Problem::Growth(self.growth.clone().ok_or_else(missing)?),
            ExperimentName::Tracking => {
                Problem::Tracking(self.tracking.clone().ok_or_else(missing)?)
            }
            ExperimentName::Frame5 | ExperimentName::Frame20 => {
                Problem::Frame(self.frame.clone().ok_or_else(missing)?)
            }
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| FilterError::config("config", e.to_string()))
    }

    pub fn worker_threads(&self) -> usize {
        if self.threads > 0 {
            self.threads
        } else {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter_bank::ScheduleKind;

    #[test]
    fn minimal_growth_config() {
        let cfg = Config::parse("experiment = \"growth\"").unwrap();
        let g = cfg.growth.as_ref().unwrap();
        assert_eq!(g.params.process_var, 10.0);
        assert_eq!((g.prior_mean, g.prior_var), (0.5, 2.0));
        let bank = &cfg.filters[0];
        assert_eq!(bank.kind, FilterKind::IgsfBank);
        assert_eq!(
            (bank.particles, bank.mixands, bank.iterations, bank.alpha1),
            (Some(1000), Some(10), Some(5), Some(1.0))
        );
        assert_eq!(cfg.filters[1].kind, FilterKind::Gspf);
        assert!(cfg.tracking.is_none() && cfg.frame.is_none());
    }

    #[test]
    fn indivisible_particles() {
        let text = "experiment = \"growth\"\n[[filters]]\nkind = \"igsf-bank\"\nparticles = 1000\nmixands = 7\n";
        match Config::parse(text) {
            Err(FilterError::Config { field, message }) => {
                assert!(field.ends_with("particles"), "{field}");
                assert!(message.contains("N divisible by N_G"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn round_trip() {
        let text = "experiment = \"tracking\"\nruns = 3\n[tracking]\nfilter_accel_var = [4.0, 4.0]\n[[filters]]\nkind = \"asir\"\n";
        let cfg = Config::parse(text).unwrap();
        assert_eq!(cfg.tracking.as_ref().unwrap().filter_accel_var, [4.0, 4.0]);
        assert_eq!(
            cfg.tracking.as_ref().unwrap().prior_mean,
            [0.0, 40.0, 0.2, 0.075]
        );
        let again = Config::parse(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again);
        for e in ExperimentName::ALL {
            let c = Config::for_experiment(e).unwrap();
            assert_eq!(Config::parse(&c.to_toml().unwrap()).unwrap(), c);
        }
    }

    #[test]
    fn frame20_partial_section_keeps_its_defaults() {
        let cfg = Config::parse("experiment = \"frame20\"\n[frame]\nhorizon = 1.0\n").unwrap();
        let f = cfg.frame.unwrap();
        assert_eq!(f.floors(), 20);
        assert_eq!(f.stiffness[19], 98.0);
        assert_eq!(f.horizon, 1.0);
        assert_eq!(
            cfg.filters[0].schedule,
            Some(ScheduleKind::ConstantThenZero)
        );
        assert_eq!(cfg.filters[0].iterations, Some(8));
    }

    #[test]
    fn errors_name_the_field() {
        let field = |t: &str| match Config::parse(t) {
            Err(FilterError::Config { field, .. }) => field,
            other => panic!("{other:?}"),
        };
        assert_eq!(field("runs = 2"), "experiment");
        assert_eq!(field("experiment = \"growth\"\nruns = 0"), "runs");
        assert_eq!(field("experiment = \"growth\"\n[frame]\nh = 1.0"), "frame");
        assert_eq!(field("experiment = \"nope\""), "experiment");
        assert!(field("experiment = \"growth\"\nbogus = 1").contains("bogus"));
        assert!(Config::parse("experiment = ").is_err());
    }

    #[test]
    fn overrides_and_duplicate_labels() {
        let ov = Overrides {
            seed: Some(9),
            runs: Some(4),
            out: Some("elsewhere".into()),
            filters: vec![FilterKind::Enkf, FilterKind::Enkf],
        };
        let cfg = Config::parse_with("experiment = \"frame5\"\nseed = 1", &ov).unwrap();
        assert_eq!((cfg.seed, cfg.runs, cfg.out.as_str()), (9, 4, "elsewhere"));
        let labels: Vec<&str> = cfg.filters.iter().map(|f| f.label()).collect();
        assert_eq!(labels, ["enkf", "enkf-2"]);
        assert_eq!(cfg.filters[0].particles, Some(400));
    }
}
