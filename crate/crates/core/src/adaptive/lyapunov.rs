//! Continuous Lyapunov equation `P A + Aᵀ P = −Q`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;

/// Largest real part among the eigenvalues of `a`.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues()
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn is_hurwitz(a: &DMatrix<f64>) -> bool {
    a.is_square() && spectral_abscissa(a) < 0.0
}

/// Solves `P A + Aᵀ P = −Q` for the unique SPD `P` of a Hurwitz `A`.
///
/// The equation is vectorized column-major as
/// `(Aᵀ ⊗ I + I ⊗ Aᵀ) vec(P) = −vec(Q)` and solved by LU; the system is
/// `n² × n²`, which is fine for the 2–6 dimensional state spaces used here.
pub fn lyapunov_solve(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !a.is_square() || q.shape() != a.shape() {
        return Err(Error::DimensionMismatch {
            context: "lyapunov operands",
            expected: a.nrows(),
            got: q.nrows(),
        });
    }
    let abscissa = spectral_abscissa(a);
    if !(abscissa < 0.0) {
        return Err(Error::NotHurwitz(abscissa));
    }
    if linalg::sym_eigenvalues(q).first().copied().unwrap_or(0.0) <= 0.0 || linalg::asymmetry(q) > 1e-12 {
        return Err(Error::NotSpd("Q"));
    }
    let n = a.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let at = a.transpose();
    let lhs = at.kronecker(&eye) + eye.kronecker(&at);
    let rhs = -DMatrix::from_column_slice(n * n, 1, q.as_slice());
    let sol = lhs.lu().solve(&rhs).ok_or(Error::NotHurwitz(abscissa))?;
    let p = linalg::symmetrize(&DMatrix::from_column_slice(n, n, sol.as_slice()));
    if linalg::sym_eigenvalues(&p)[0] <= 0.0 {
        return Err(Error::NotSpd("Lyapunov solution"));
    }
    Ok(p)
}
