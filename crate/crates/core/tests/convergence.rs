mod common;

use common::LinearProblem;
use igsf::baselines::Enkf;
use igsf::filter_bank::{run_filter, AdpSchedule, BankConfig, IgsfBank, SequentialFilter};
use igsf::numerics::RngStream;

/// RMS over steps and seeds of the Kalman-normalized mean error.
fn normalized_error(make: impl Fn(u64) -> Box<dyn SequentialFilter>) -> f64 {
    let lp = LinearProblem::oscillator();
    let (process, mm) = (lp.process(), lp.measurement());
    let (mut sq, mut count) = (0.0, 0usize);
    for seed in 0..12u64 {
        let (_, obs) = lp.simulate(50, &mut RngStream::new(seed, 77));
        let (km, ks) = lp.kalman(&obs);
        let mut f = make(seed);
        let traj = run_filter(f.as_mut(), &process, &mm, &obs).unwrap();
        for (i, e) in traj.estimates.iter().enumerate() {
            for c in 0..2 {
                sq += ((e[c] - km[i][c]) / ks[i][c]).powi(2);
                count += 1;
            }
        }
    }
    (sq / count as f64).sqrt()
}

fn assert_root_n(errs: &[f64]) {
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!(
            (1.4..=2.9).contains(&ratio),
            "quadrupling N changed the error by {ratio} ({errs:?})"
        );
    }
}

#[test]
fn bank_error_shrinks_like_root_n() {
    let prior = LinearProblem::oscillator().prior();
    let errs: Vec<f64> = [250, 1000, 4000]
        .iter()
        .map(|&n| {
            normalized_error(|seed| {
                Box::new(
                    IgsfBank::new(&prior, BankConfig::new(n, 1, AdpSchedule::none()), seed, 5)
                        .unwrap(),
                )
            })
        })
        .collect();
    assert_root_n(&errs);
}

#[test]
fn enkf_error_shrinks_like_root_n() {
    let prior = LinearProblem::oscillator().prior();
    let errs: Vec<f64> = [250, 1000, 4000]
        .iter()
        .map(|&n| normalized_error(|seed| Box::new(Enkf::new(&prior, n, seed, 5).unwrap())))
        .collect();
    assert_root_n(&errs);
}
