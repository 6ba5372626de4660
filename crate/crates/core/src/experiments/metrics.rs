use crate::error::{FilterError, Result};
use crate::numerics::Vector;

fn check_shapes(
    estimates: &[Vec<Vector>],
    truths: &[Vec<Vector>],
    components: &[usize],
) -> Result<usize> {
    if estimates.is_empty() || estimates.len() != truths.len() {
        return Err(FilterError::Parameter(format!(
            "rmse needs matching nonzero run counts, got {} estimates and {} truths",
            estimates.len(),
            truths.len()
        )));
    }
    let t = truths[0].len();
    for (m, (e, x)) in estimates.iter().zip(truths).enumerate() {
        if e.len() != t || x.len() != t {
            return Err(FilterError::Parameter(format!(
                "run {m}: {} estimates and {} truths, expected {t}",
                e.len(),
                x.len()
            )));
        }
        for (a, b) in e.iter().zip(x) {
            if a.len() != b.len() || components.iter().any(|&c| c >= a.len()) {
                return Err(FilterError::Parameter(format!(
                    "run {m}: state lengths {} and {} do not cover components {components:?}",
                    a.len(),
                    b.len()
                )));
            }
        }
    }
    Ok(t)
}

/// Per-step RMSE across runs, `T × |components|`.
pub fn rmse_series(
    estimates: &[Vec<Vector>],
    truths: &[Vec<Vector>],
    components: &[usize],
) -> Result<Vec<Vec<f64>>> {
    let t = check_shapes(estimates, truths, components)?;
    let m = estimates.len() as f64;
    Ok((0..t)
        .map(|i| {
            components
                .iter()
                .map(|&c| {
                    let sq: f64 = estimates
                        .iter()
                        .zip(truths)
                        .map(|(e, x)| (e[i][c] - x[i][c]).powi(2))
                        .sum();
                    (sq / m).sqrt()
                })
                .collect()
        })
        .collect())
}

/// `sqrt(mean_t err²)` of one run, per component.
pub fn time_averaged_rmse(
    estimates: &[Vector],
    truths: &[Vector],
    components: &[usize],
) -> Result<Vec<f64>> {
    let t = check_shapes(
        std::slice::from_ref(&estimates.to_vec()),
        std::slice::from_ref(&truths.to_vec()),
        components,
    )?;
    if t == 0 {
        return Err(FilterError::Parameter(
            "time-averaged rmse of an empty trajectory".into(),
        ));
    }
    Ok(components
        .iter()
        .map(|&c| {
            let sq: f64 = estimates
                .iter()
                .zip(truths)
                .map(|(e, x)| (e[c] - x[c]).powi(2))
                .sum();
            (sq / t as f64).sqrt()
        })
        .collect())
}

/// Fraction of paired runs where `a < b`; ties count one half.
pub fn win_rate(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || a.len() != b.len() {
        return Err(FilterError::Parameter(format!(
            "win rate needs equal nonzero run counts, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let score: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Less) => 1.0,
            Some(std::cmp::Ordering::Equal) => 0.5,
            _ => 0.0,
        })
        .sum();
    Ok(score / a.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: &[f64]) -> Vec<Vector> {
        v.iter().map(|x| Vector::from_element(1, *x)).collect()
    }

    #[test]
    fn two_runs_hand_value() {
        let est = vec![scalar(&[1.0]), scalar(&[3.0])];
        let truth = vec![scalar(&[0.0]), scalar(&[0.0])];
        let r = rmse_series(&est, &truth, &[0]).unwrap();
        assert!((r[0][0] - 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn exact_and_offset_estimates() {
        let truth = vec![scalar(&[1.0, -2.0, 4.0]); 3];
        let r = rmse_series(&truth, &truth, &[0]).unwrap();
        assert!(r.iter().all(|row| row[0] == 0.0));
        let off: Vec<Vec<Vector>> = truth
            .iter()
            .map(|run| run.iter().map(|x| x.add_scalar(-0.75)).collect())
            .collect();
        let r = rmse_series(&off, &truth, &[0]).unwrap();
        assert!(r.iter().all(|row| (row[0] - 0.75).abs() < 1e-15));
    }

    #[test]
    fn shape_mismatch() {
        let a = vec![scalar(&[1.0, 2.0])];
        let b = vec![scalar(&[1.0])];
        assert!(rmse_series(&a, &b, &[0]).is_err());
        assert!(rmse_series(&a, &a, &[1]).is_err());
        assert!(rmse_series(&[], &[], &[0]).is_err());
    }

    #[test]
    fn time_average() {
        let r = time_averaged_rmse(&scalar(&[1.0, 3.0]), &scalar(&[0.0, 0.0]), &[0]).unwrap();
        assert!((r[0] - 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn win_rate_ties_split() {
        assert_eq!(win_rate(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.5);
        assert_eq!(win_rate(&[0.0, 0.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(win_rate(&[1.0, 3.0], &[2.0, 2.0]).unwrap(), 0.5);
        assert!(win_rate(&[1.0], &[]).is_err());
    }
}
