use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::Config;
use crate::error::{FilterError, Result};
use crate::experiments::{
    filter_key, time_averaged_rmse, truth_stream_id, win_rate, ExperimentName, FilterKind,
    RunArtifacts,
};

/// Fixed 17-significant-digit scientific notation.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `contents` to `path` through a sibling temp file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .ok_or_else(|| FilterError::Io(format!("{} has no parent", path.display())))?;
    fs::create_dir_all(dir).map_err(|e| FilterError::Io(format!("{}: {e}", dir.display())))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    fs::write(&tmp, contents).map_err(|e| FilterError::Io(format!("{}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| FilterError::Io(format!("{}: {e}", path.display())))
}

pub fn rmse_csv(art: &RunArtifacts, filter: usize) -> String {
    let mut s = String::from("step,time,component,rmse\n");
    for (i, row) in art.filters[filter].rmse.iter().enumerate() {
        for (c, v) in art.components.iter().zip(row) {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                i + 1,
                fmt_num(art.times[i]),
                c.name,
                fmt_num(*v)
            );
        }
    }
    s
}

pub fn estimates_csv(art: &RunArtifacts, filter: usize) -> String {
    let mut s = String::from("step,time,run,component,estimate,truth\n");
    for (m, (est, truth)) in art.filters[filter]
        .estimates
        .iter()
        .zip(&art.truths)
        .enumerate()
    {
        for (i, (e, x)) in est.iter().zip(truth).enumerate() {
            for c in &art.components {
                let _ = writeln!(
                    s,
                    "{},{},{m},{},{},{}",
                    i + 1,
                    fmt_num(art.times[i]),
                    c.name,
                    fmt_num(e[c.index]),
                    fmt_num(x[c.index])
                );
            }
        }
    }
    s
}

pub fn observations_csv(art: &RunArtifacts) -> String {
    let mut s = String::from("step,time,run,index,value\n");
    for (m, obs) in art.observations.iter().enumerate() {
        for (i, z) in obs.iter().enumerate() {
            for (k, v) in z.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "{},{},{m},{k},{}",
                    i + 1,
                    fmt_num(art.times[i]),
                    fmt_num(*v)
                );
            }
        }
    }
    s
}

#[derive(Serialize)]
struct RunSeeds {
    run: usize,
    truth_stream: u64,
    filter_key: u64,
}

#[derive(Serialize)]
struct Meta<'a> {
    experiment: ExperimentName,
    filter: &'a str,
    kind: FilterKind,
    master_seed: u64,
    runs: usize,
    /// `α¹ … α^Γ` as used.
    schedule_values: Option<Vec<f64>>,
    seeds: Vec<RunSeeds>,
    components: &'a [crate::experiments::Component],
    warnings: &'a [String],
    config: &'a Config,
}

pub fn meta_json(cfg: &Config, art: &RunArtifacts, filter: usize) -> Result<String> {
    let f = &art.filters[filter];
    let schedule_values = match f.spec.kind {
        FilterKind::IgsfBank | FilterKind::Igsf => Some(f.spec.bank_config()?.schedule.values()),
        _ => None,
    };
    let meta = Meta {
        experiment: cfg.experiment,
        filter: f.spec.label(),
        kind: f.spec.kind,
        master_seed: art.master_seed,
        runs: art.runs(),
        schedule_values,
        seeds: (0..art.runs())
            .map(|run| RunSeeds {
                run,
                truth_stream: truth_stream_id(run),
                filter_key: filter_key(run, f.spec.kind),
            })
            .collect(),
        components: &art.components,
        warnings: &f.warnings,
        config: cfg,
    };
    let mut s = serde_json::to_string_pretty(&meta).map_err(|e| FilterError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Writes the per-filter files under `<out>/<experiment>/<filter>/` and
/// returns the directories.
pub fn write_artifacts(cfg: &Config, art: &RunArtifacts) -> Result<Vec<PathBuf>> {
    let root = Path::new(&cfg.out).join(cfg.experiment.as_str());
    let observations = observations_csv(art);
    let mut dirs = Vec::with_capacity(art.filters.len());
    for (f, outcome) in art.filters.iter().enumerate() {
        let dir = root.join(outcome.spec.label());
        write_atomic(&dir.join("rmse.csv"), rmse_csv(art, f).as_bytes())?;
        write_atomic(&dir.join("estimates.csv"), estimates_csv(art, f).as_bytes())?;
        write_atomic(&dir.join("observations.csv"), observations.as_bytes())?;
        write_atomic(&dir.join("meta.json"), meta_json(cfg, art, f)?.as_bytes())?;
        dirs.push(dir);
    }
    Ok(dirs)
}

/// Per filter and run, the time-averaged RMSE of each component.
pub fn per_run_scores(art: &RunArtifacts) -> Result<Vec<Vec<Vec<f64>>>> {
    let idx = art.component_indices();
    art.filters
        .iter()
        .map(|f| {
            f.estimates
                .iter()
                .zip(&art.truths)
                .map(|(e, x)| time_averaged_rmse(e, x, &idx))
                .collect()
        })
        .collect()
}

/// `metric,filter,other,component,value` rows: the mean over runs of each
/// filter's time-averaged RMSE, then the win-rate of every ordered pair.
pub fn summary_csv(art: &RunArtifacts) -> Result<String> {
    if art.filters.len() < 2 {
        return Err(FilterError::config(
            "filters",
            "compare needs at least two filters",
        ));
    }
    let scores = per_run_scores(art)?;
    let mut s = String::from("metric,filter,other,component,value\n");
    for (f, outcome) in art.filters.iter().enumerate() {
        for (c, comp) in art.components.iter().enumerate() {
            let mean = scores[f].iter().map(|r| r[c]).sum::<f64>() / scores[f].len() as f64;
            let _ = writeln!(
                s,
                "time_avg_rmse,{},,{},{}",
                outcome.spec.label(),
                comp.name,
                fmt_num(mean)
            );
        }
    }
    for (a, fa) in art.filters.iter().enumerate() {
        for (b, fb) in art.filters.iter().enumerate() {
            if a == b {
                continue;
            }
            for (c, comp) in art.components.iter().enumerate() {
                let xa: Vec<f64> = scores[a].iter().map(|r| r[c]).collect();
                let xb: Vec<f64> = scores[b].iter().map(|r| r[c]).collect();
                let _ = writeln!(
                    s,
                    "win_rate,{},{},{},{}",
                    fa.spec.label(),
                    fb.spec.label(),
                    comp.name,
                    fmt_num(win_rate(&xa, &xb)?)
                );
            }
        }
    }
    Ok(s)
}

pub fn write_summary(cfg: &Config, art: &RunArtifacts) -> Result<PathBuf> {
    let path = Path::new(&cfg.out)
        .join(cfg.experiment.as_str())
        .join("summary.csv");
    write_atomic(&path, summary_csv(art)?.as_bytes())?;
    Ok(path)
}
