//! Small dense linear-algebra helpers shared by the kinematic and geometric layers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative rank tolerance used when inverting singular values.
pub const RANK_RTOL: f64 = 1e-8;

/// Singular values of `m`, sorted descending.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Smallest of the `min(rows, cols)` singular values.
pub fn sigma_min(m: &DMatrix<f64>) -> f64 {
    singular_values(m).last().copied().unwrap_or(0.0)
}

/// Moore-Penrose pseudo-inverse via SVD, truncating singular values below
/// `RANK_RTOL * sigma_max`.
pub fn pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return DMatrix::zeros(c, r);
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd computed with u");
    let v_t = svd.v_t.expect("svd computed with v_t");
    let s = &svd.singular_values;
    let smax = s.iter().copied().fold(0.0, f64::max);
    let tol = RANK_RTOL * smax;
    let mut out = DMatrix::zeros(c, r);
    for (k, &sk) in s.iter().enumerate() {
        if sk > tol && sk > 0.0 {
            let vk = v_t.row(k).transpose();
            let uk = u.column(k);
            out += (vk * uk.transpose()) / sk;
        }
    }
    out
}

/// Pseudo-inverse that refuses matrices without full row rank.
pub fn pinv_full_row_rank(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let s = singular_values(m);
    let smax = s.first().copied().unwrap_or(0.0);
    let smin = if s.len() < m.nrows() {
        0.0
    } else {
        s.last().copied().unwrap_or(0.0)
    };
    if smax == 0.0 || smin <= RANK_RTOL * smax {
        return Err(Error::Singular { sigma_min: smin });
    }
    Ok(pinv(m))
}

/// Damped least-squares right inverse `Jᵀ (J Jᵀ + λ² I)⁻¹`.
pub fn damped_pinv(m: &DMatrix<f64>, damping: f64) -> DMatrix<f64> {
    let r = m.nrows();
    let gram = m * m.transpose() + DMatrix::identity(r, r) * (damping * damping);
    match gram.try_inverse() {
        Some(inv) => m.transpose() * inv,
        None => pinv(m),
    }
}

/// `(A + Aᵀ) / 2`.
pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Largest absolute entry of `A - Aᵀ`.
pub fn asymmetry(a: &DMatrix<f64>) -> f64 {
    (a - a.transpose()).amax()
}

/// Applies a scalar function to the eigenvalues of a symmetric matrix.
pub fn sym_fn(a: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetrize(a));
    let d = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|&l| f(l)));
    let q = &eig.eigenvectors;
    symmetrize(&(q * DMatrix::from_diagonal(&d) * q.transpose()))
}

/// Eigenvalues of a symmetric matrix sorted ascending.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let eig = SymmetricEigen::new(symmetrize(a));
    let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// 2-D scalar cross product `a × b`.
#[inline]
pub fn cross2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}
