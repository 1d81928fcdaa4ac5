//! Complex matrix aliases and the few factorization helpers shared by the
//! optimizers.

pub use nalgebra::Complex;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

/// Squared Frobenius norm.
pub fn frob2(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// Unit-modulus complex number with the given phase.
#[inline]
pub fn cis(phase: f64) -> C64 {
    C64::from_polar(1.0, phase)
}

/// Hermitian part `(A + Aᴴ)/2`.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

/// Cholesky factor of a Hermitian matrix. On failure retries once with a
/// diagonal jitter of `1e-12 · trace/n`.
pub fn hermitian_cholesky(a: &CMat, what: &'static str) -> Result<Cholesky<C64, Dyn>> {
    if let Some(chol) = checked_cholesky(a.clone()) {
        return Ok(chol);
    }
    let n = a.nrows();
    let trace: f64 = (0..n).map(|i| a[(i, i)].re).sum();
    let jitter = 1e-12 * trace.abs() / n.max(1) as f64;
    if jitter > 0.0 {
        let mut b = a.clone();
        for i in 0..n {
            b[(i, i)] += C64::new(jitter, 0.0);
        }
        if let Some(chol) = checked_cholesky(b) {
            return Ok(chol);
        }
    }
    Err(Error::NotPositiveDefinite(what))
}

// nalgebra's complex Cholesky takes complex square roots of negative pivots
// instead of failing, so the pivots are checked here.
fn checked_cholesky(a: CMat) -> Option<Cholesky<C64, Dyn>> {
    let chol = Cholesky::new(a)?;
    let l = chol.l_dirty();
    let ok = (0..l.nrows()).all(|i| {
        let d = l[(i, i)];
        d.re > 0.0 && d.im.abs() <= 1e-12 * d.re && d.re.is_finite()
    });
    ok.then_some(chol)
}

/// Solves `A x = rhs` for Hermitian positive definite `A`.
pub fn hermitian_solve(a: &CMat, rhs: &CVec, what: &'static str) -> Result<CVec> {
    Ok(hermitian_cholesky(a, what)?.solve(rhs))
}

/// Real-valued `n×n` identity.
pub fn eye(n: usize) -> RMat {
    RMat::identity(n, n)
}

/// Frobenius inner product of two real matrices.
pub fn inner(a: &RMat, b: &RMat) -> f64 {
    a.dot(b)
}

/// Symmetrizes in place.
pub fn symmetrize(a: &mut RMat) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}
