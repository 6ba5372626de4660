//! Dense linear algebra: matrix exponential, Van Loan discretization,
//! jittered Cholesky and Gaussian log-densities.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{FilterError, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
// Largest 1-norms for which each Padé degree reaches double precision.
const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.53939833006323e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA13: f64 = 5.371920351148152;

/// Maximum number of jitter escalations tried by [`chol_psd`].
pub const MAX_JITTER_ESCALATIONS: usize = 10;

fn norm1(a: &Matrix) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn check_finite(a: &Matrix, context: &'static str) -> Result<()> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(FilterError::Numerical(format!(
            "{context}: non-finite entry"
        )))
    }
}

/// `exp(A t)` by scaling and squaring around a diagonal Padé approximant
/// (degree 3 to 13 selected from the 1-norm).
pub fn mat_exp(a: &Matrix, t: f64) -> Result<Matrix> {
    if !a.is_square() {
        return Err(FilterError::dim(
            "mat_exp",
            "square matrix",
            format!("{}x{}", a.nrows(), a.ncols()),
        ));
    }
    check_finite(a, "mat_exp")?;
    let n = a.nrows();
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let x = a * t;
    let nrm = norm1(&x);
    if nrm == 0.0 {
        return Ok(Matrix::identity(n, n));
    }
    let ident = Matrix::identity(n, n);

    for &(degree, theta) in &THETA {
        if nrm <= theta {
            let coeffs: &[f64] = match degree {
                3 => &PADE3,
                5 => &PADE5,
                7 => &PADE7,
                _ => &PADE9,
            };
            return pade_low(&x, coeffs, &ident);
        }
    }

    let s = (nrm / THETA13).log2().ceil().max(0.0) as i32;
    let x = x * 2f64.powi(-s);
    let b = &PADE13;
    let x2 = &x * &x;
    let x4 = &x2 * &x2;
    let x6 = &x4 * &x2;
    let inner_u = &x6 * (&x6 * b[13] + &x4 * b[11] + &x2 * b[9]);
    let u = &x * (inner_u + &x6 * b[7] + &x4 * b[5] + &x2 * b[3] + &ident * b[1]);
    let inner_v = &x6 * (&x6 * b[12] + &x4 * b[10] + &x2 * b[8]);
    let v = inner_v + &x6 * b[6] + &x4 * b[4] + &x2 * b[2] + &ident * b[0];
    let mut r = pade_solve(&u, &v)?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

fn pade_low(x: &Matrix, b: &[f64], ident: &Matrix) -> Result<Matrix> {
    let x2 = x * x;
    let mut power = ident.clone();
    let mut u_part = ident * b[1];
    let mut v = ident * b[0];
    let mut k = 2;
    while k < b.len() {
        power = &power * &x2;
        v += &power * b[k];
        if k + 1 < b.len() {
            u_part += &power * b[k + 1];
        }
        k += 2;
    }
    let u = x * u_part;
    pade_solve(&u, &v)
}

fn pade_solve(u: &Matrix, v: &Matrix) -> Result<Matrix> {
    let p = v + u;
    let q = v - u;
    q.lu()
        .solve(&p)
        .ok_or_else(|| FilterError::Numerical("singular Padé denominator".into()))
}

/// Exact one-step discretization of `dx = Q x dt + G dB` over a step `h`.
///
/// Returns `(Phi, SigmaD)` with `Phi = exp(Q h)` and
/// `SigmaD = ∫₀ʰ exp(Q s) G Gᵀ exp(Qᵀ s) ds`, the latter from the Van Loan
/// block exponential of `[[-Q, G Gᵀ], [0, Qᵀ]] h`.
pub fn discretize_lti(q: &Matrix, g: &Matrix, h: f64) -> Result<(Matrix, Matrix)> {
    if !(h > 0.0) {
        return Err(FilterError::Parameter(format!(
            "discretization step must be positive, got {h}"
        )));
    }
    if !q.is_square() {
        return Err(FilterError::dim(
            "discretize_lti drift",
            "square matrix",
            format!("{}x{}", q.nrows(), q.ncols()),
        ));
    }
    let n = q.nrows();
    if g.nrows() != n {
        return Err(FilterError::dim(
            "discretize_lti diffusion rows",
            n,
            g.nrows(),
        ));
    }
    let mut block = Matrix::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(&(-q));
    block
        .view_mut((0, n), (n, n))
        .copy_from(&(g * g.transpose()));
    block.view_mut((n, n), (n, n)).copy_from(&q.transpose());
    let e = mat_exp(&block, h)?;
    let phi: Matrix = e.view((n, n), (n, n)).transpose();
    let sigma = &phi * e.view((0, n), (n, n));
    Ok((phi, symmetrize(&sigma)))
}

/// `(M + Mᵀ) / 2`.
pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Result of a jittered Cholesky factorization.
#[derive(Debug, Clone)]
pub struct CholFactor {
    /// Lower-triangular factor with `L Lᵀ = M + jitter I`.
    pub l: Matrix,
    /// Diagonal loading that made the factorization succeed.
    pub jitter: f64,
}

impl CholFactor {
    /// `log det(L Lᵀ)`.
    pub fn log_det(&self) -> f64 {
        2.0 * self.l.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    /// Solves `(L Lᵀ) X = B`.
    pub fn solve(&self, b: &Matrix) -> Matrix {
        let y = self
            .l
            .solve_lower_triangular(b)
            .expect("cholesky factor has a positive diagonal");
        self.l
            .tr_solve_lower_triangular(&y)
            .expect("cholesky factor has a positive diagonal")
    }
}

/// Cholesky factor of a symmetric positive semidefinite matrix.
///
/// The input is symmetrized first. Diagonal loads `0, jitter, 10 jitter, ...`
/// are tried in turn; the factorization fails after
/// [`MAX_JITTER_ESCALATIONS`] escalations.
pub fn chol_psd(m: &Matrix, jitter: f64) -> Result<CholFactor> {
    if !m.is_square() {
        return Err(FilterError::dim(
            "chol_psd",
            "square matrix",
            format!("{}x{}", m.nrows(), m.ncols()),
        ));
    }
    check_finite(m, "chol_psd")?;
    let sym = symmetrize(m);
    let n = sym.nrows();
    let mut delta = 0.0;
    for attempt in 0..=MAX_JITTER_ESCALATIONS {
        if attempt == 1 {
            delta = jitter;
        } else if attempt > 1 {
            delta *= 10.0;
        }
        if attempt > 0 && delta <= 0.0 {
            break;
        }
        let mut loaded = sym.clone();
        for i in 0..n {
            loaded[(i, i)] += delta;
        }
        if let Some(ch) = Cholesky::<f64, Dyn>::new(loaded) {
            let l = ch.unpack();
            if l.diagonal().iter().all(|d| *d > 0.0 && d.is_finite()) {
                return Ok(CholFactor { l, jitter: delta });
            }
        }
    }
    Err(FilterError::Numerical(format!(
        "cholesky failed after {MAX_JITTER_ESCALATIONS} jitter escalations from {jitter:e}"
    )))
}

/// Base jitter scaled to the magnitude of a covariance matrix.
pub fn relative_jitter(m: &Matrix, rel: f64) -> f64 {
    let n = m.nrows().max(1) as f64;
    let scale = m.diagonal().iter().map(|v| v.abs()).sum::<f64>() / n;
    rel * if scale > 0.0 { scale } else { 1.0 }
}

/// `B C⁻¹` for symmetric positive (semi)definite `C`.
pub fn solve_right_spd(b: &Matrix, c: &Matrix, rel_jitter: f64) -> Result<Matrix> {
    let factor = chol_psd(c, relative_jitter(c, rel_jitter))?;
    Ok(factor.solve(&b.transpose()).transpose())
}

/// Symmetric square root of a symmetric positive semidefinite matrix;
/// negative eigenvalues from round-off are clamped to zero.
pub fn sym_sqrt(m: &Matrix) -> Matrix {
    let eig = SymmetricEigen::new(symmetrize(m));
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * Matrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// Log-density of `N(mean, cov)` at `x`.
pub fn gauss_logpdf(x: &Vector, mean: &Vector, cov: &Matrix) -> Result<f64> {
    let d = x.len();
    if mean.len() != d {
        return Err(FilterError::dim("gauss_logpdf mean", d, mean.len()));
    }
    if cov.nrows() != d || cov.ncols() != d {
        return Err(FilterError::dim(
            "gauss_logpdf covariance",
            format!("{d}x{d}"),
            format!("{}x{}", cov.nrows(), cov.ncols()),
        ));
    }
    let factor = chol_psd(cov, relative_jitter(cov, 1e-12))?;
    let diff = x - mean;
    let y = factor
        .l
        .solve_lower_triangular(&diff)
        .ok_or_else(|| FilterError::Numerical("singular covariance".into()))?;
    let maha = y.norm_squared();
    Ok(-0.5 * (d as f64 * (2.0 * std::f64::consts::PI).ln() + factor.log_det() + maha))
}
