use serde::{Deserialize, Serialize};

use crate::error::{FilterError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    /// `α^{l+1} = α^l / e^l`.
    #[default]
    ExpDecay,
    /// `α^l = α¹` for `l < Γ`, then `α^Γ = 0`.
    ConstantThenZero,
}

/// Artificial diffusion parameter schedule over `Γ` iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdpSchedule {
    pub alpha1: f64,
    pub kind: ScheduleKind,
    /// Number of iterations after the zeroth update.
    pub iterations: usize,
}

impl AdpSchedule {
    pub fn new(alpha1: f64, kind: ScheduleKind, iterations: usize) -> Result<Self> {
        if !(alpha1 >= 0.0) || !alpha1.is_finite() {
            return Err(FilterError::Parameter(format!(
                "alpha1 must be finite and >= 0, got {alpha1}"
            )));
        }
        Ok(Self {
            alpha1,
            kind,
            iterations,
        })
    }

    /// Zeroth update only.
    pub fn none() -> Self {
        Self {
            alpha1: 0.0,
            kind: ScheduleKind::ExpDecay,
            iterations: 0,
        }
    }

    /// `α^1, …, α^Γ`.
    pub fn values(&self) -> Vec<f64> {
        let g = self.iterations;
        match self.kind {
            ScheduleKind::ExpDecay => {
                let mut out = Vec::with_capacity(g);
                let mut a = self.alpha1;
                for l in 1..=g {
                    out.push(a);
                    a /= (l as f64).exp();
                }
                out
            }
            ScheduleKind::ConstantThenZero => (1..=g)
                .map(|l| if l < g { self.alpha1 } else { 0.0 })
                .collect(),
        }
    }
}

/// `α^l` for `1 ≤ l ≤ Γ`.
pub fn adp_value(schedule: &AdpSchedule, l: usize) -> Result<f64> {
    if l == 0 || l > schedule.iterations {
        return Err(FilterError::Parameter(format!(
            "ADP index {l} outside 1..={}",
            schedule.iterations
        )));
    }
    Ok(schedule.values()[l - 1])
}
