//! Linear algebra and random-number primitives shared by every filter.

mod linalg;
mod rng;

pub use linalg::{
    chol_psd, discretize_lti, gauss_logpdf, mat_exp, relative_jitter, solve_right_spd, sym_sqrt,
    symmetrize, CholFactor, Matrix, Vector, MAX_JITTER_ESCALATIONS,
};
pub use rng::{draw_normal, label_hash, stream_id, RngStream};

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn mat4() -> impl Strategy<Value = Matrix> {
        prop::collection::vec(-1.0f64..1.0, 16).prop_map(|v| {
            let m = Matrix::from_vec(4, 4, v);
            // scale so the spectral radius stays at or below 2
            let r = m.iter().map(|x| x.abs()).sum::<f64>() / 4.0;
            if r > 2.0 {
                m * (2.0 / r)
            } else {
                m
            }
        })
    }

    proptest! {
        #[test]
        fn exp_semigroup(a in mat4(), t1 in 0.0f64..1.5, t2 in 0.0f64..1.5) {
            let lhs = mat_exp(&a, t1).unwrap() * mat_exp(&a, t2).unwrap();
            let rhs = mat_exp(&a, t1 + t2).unwrap();
            prop_assert!((lhs - &rhs).amax() <= 1e-8 * rhs.amax().max(1.0));
        }

        #[test]
        fn van_loan_covariance_is_psd(q in mat4(), g in prop::collection::vec(-1.0f64..1.0, 8), h in 0.01f64..2.0) {
            let g = Matrix::from_vec(4, 2, g);
            let (_, sig) = discretize_lti(&q, &g, h).unwrap();
            prop_assert!((&sig - sig.transpose()).amax() <= 1e-12);
            let eig = nalgebra::SymmetricEigen::new(sig).eigenvalues;
            prop_assert!(eig.iter().all(|&e| e >= -1e-10));
        }

        #[test]
        fn chol_reconstructs(v in prop::collection::vec(-1.0f64..1.0, 12)) {
            let b = Matrix::from_vec(4, 3, v);
            let m = &b * b.transpose();
            let f = chol_psd(&m, 1e-12).unwrap();
            for i in 0..4 {
                prop_assert!(f.l[(i, i)] >= 0.0);
                for j in (i + 1)..4 {
                    prop_assert_eq!(f.l[(i, j)], 0.0);
                }
            }
            let recon = &f.l * f.l.transpose();
            let target = m + Matrix::identity(4, 4) * f.jitter;
            prop_assert!((recon - target).amax() <= 1e-10);
        }
    }
}
