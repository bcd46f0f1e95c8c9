//! SPD ellipsoids: nominal task ellipsoid construction, the affine-invariant
//! logarithm/exponential maps and Mandel vectorization.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{self, sym_fn};

/// Symmetric positive definite matrix of dimension 2 or 3.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdEllipsoid(DMatrix<f64>);

impl SpdEllipsoid {
    /// Validates symmetry (relative to the matrix scale) and positive
    /// eigenvalues, then stores the exactly symmetrized matrix.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || !(2..=3).contains(&m.nrows()) {
            return Err(Error::InvalidParameter(format!(
                "ellipsoid must be 2x2 or 3x3, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::NotSpd("non-finite entry"));
        }
        let scale = m.amax().max(1.0);
        let asym = linalg::asymmetry(&m);
        if asym > 1e-9 * scale {
            return Err(Error::Asymmetric(asym));
        }
        let m = linalg::symmetrize(&m);
        let eig = linalg::sym_eigenvalues(&m);
        if eig[0] <= 0.0 {
            return Err(Error::NotSpd("nonpositive eigenvalue"));
        }
        Ok(Self(m))
    }

    pub fn identity(d: usize) -> Self {
        Self(DMatrix::identity(d, d))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::sym_eigenvalues(&self.0)
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// Same shape, rescaled so that the trace equals `trace`.
    pub fn with_trace(&self, trace: f64) -> Result<Self> {
        if !(trace > 0.0) {
            return Err(Error::InvalidParameter("target trace must be positive".into()));
        }
        Ok(Self(&self.0 * (trace / self.trace())))
    }
}

/// Parameters of the nominal task ellipsoid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskEllipsoidSpec {
    /// Desired task force `F_t`; its dimension fixes the ellipsoid dimension.
    pub desired_force: Vec<f64>,
    /// Ratio `c_f ∈ (0, 1]` of the short axes to the long axis.
    pub shape_coefficient: f64,
    /// Long axis of the ellipsoid before alignment; defaults to the world x axis.
    #[serde(default)]
    pub reference_axis: Option<Vec<f64>>,
    /// Length `l_x` of the long axis.
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl TaskEllipsoidSpec {
    pub fn isotropic(d: usize, scale: f64) -> Self {
        Self {
            desired_force: vec![0.0; d],
            shape_coefficient: 1.0,
            reference_axis: None,
            scale,
        }
    }

    pub fn dim(&self) -> usize {
        self.desired_force.len()
    }

    fn axis(&self) -> DVector<f64> {
        match &self.reference_axis {
            Some(a) => DVector::from_column_slice(a),
            None => {
                let mut e = DVector::zeros(self.dim());
                e[0] = 1.0;
                e
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if !(2..=3).contains(&d) {
            return Err(Error::InvalidParameter(format!(
                "task ellipsoid dimension must be 2 or 3, got {d}"
            )));
        }
        if !(self.shape_coefficient > 0.0 && self.shape_coefficient <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "shape coefficient must lie in (0, 1], got {}",
                self.shape_coefficient
            )));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidParameter("ellipsoid scale must be positive".into()));
        }
        let a = self.axis();
        check_len("reference axis", d, a.len())?;
        if (a.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter("reference axis must be a unit vector".into()));
        }
        Ok(())
    }
}

/// Rotation taking the unit vector `a` onto the direction of `f`.
///
/// In 3-D this is the angle-axis rotation about `a × f` by the included
/// angle; the antiparallel case turns by π about the coordinate axis most
/// orthogonal to `a`. In 2-D it is the planar rotation by the signed angle.
pub fn rotation_aligning(f: &DVector<f64>, a: &DVector<f64>) -> Result<DMatrix<f64>> {
    check_len("alignment axis", f.len(), a.len())?;
    let fnorm = f.norm();
    if fnorm == 0.0 || !fnorm.is_finite() {
        return Err(Error::ZeroNorm("desired force"));
    }
    let anorm = a.norm();
    if anorm == 0.0 {
        return Err(Error::ZeroNorm("reference axis"));
    }
    match f.len() {
        2 => {
            let angle = f[1].atan2(f[0]) - a[1].atan2(a[0]);
            let (s, c) = angle.sin_cos();
            Ok(DMatrix::from_row_slice(2, 2, &[c, -s, s, c]))
        }
        3 => {
            let fu = nalgebra::Vector3::new(f[0], f[1], f[2]) / fnorm;
            let au = nalgebra::Vector3::new(a[0], a[1], a[2]) / anorm;
            let axis = au.cross(&fu);
            let sin = axis.norm();
            let cos = au.dot(&fu).clamp(-1.0, 1.0);
            if sin < 1e-12 {
                if cos > 0.0 {
                    return Ok(DMatrix::identity(3, 3));
                }
                // π about an axis orthogonal to a: R = 2 u uᵀ − I
                let k = (0..3)
                    .min_by(|&i, &j| au[i].abs().total_cmp(&au[j].abs()))
                    .expect("three axes");
                let mut e = nalgebra::Vector3::zeros();
                e[k] = 1.0;
                let u = (e - au * au[k]).normalize();
                let r = u * u.transpose() * 2.0 - nalgebra::Matrix3::identity();
                return Ok(DMatrix::from_column_slice(3, 3, r.as_slice()));
            }
            let u = axis / sin;
            let phi = cos.acos();
            let (s, c) = phi.sin_cos();
            let ux = u.cross_matrix();
            let r = nalgebra::Matrix3::identity() * c + u * u.transpose() * (1.0 - c) + ux * s;
            Ok(DMatrix::from_column_slice(3, 3, r.as_slice()))
        }
        d => Err(Error::InvalidParameter(format!(
            "rotation_aligning supports 2-D and 3-D, got {d}"
        ))),
    }
}

/// Nominal task ellipsoid `M_t = C Cᵀ`, `C = R_r R_s`: an ellipsoid of
/// revolution whose long axis (length `l_x`) points along the desired force
/// and whose other axes have length `c_f l_x`.
pub fn nominal_task_ellipsoid(spec: &TaskEllipsoidSpec) -> Result<SpdEllipsoid> {
    spec.validate()?;
    let d = spec.dim();
    let lx = spec.scale;
    let cf = spec.shape_coefficient;
    let f = DVector::from_column_slice(&spec.desired_force);
    if f.norm() == 0.0 {
        if cf < 1.0 {
            return Err(Error::ZeroNorm(
                "desired force (orientation undefined for anisotropic ellipsoid)",
            ));
        }
        return SpdEllipsoid::new(DMatrix::identity(d, d) * (lx * lx));
    }
    let a = spec.axis();
    // unit-sphere image under R_s, expressed with its long axis along a
    let base = (DMatrix::identity(d, d) * (cf * cf) + &a * a.transpose() * (1.0 - cf * cf)) * (lx * lx);
    let r = rotation_aligning(&f, &a)?;
    SpdEllipsoid::new(&r * base * r.transpose())
}

/// `x^{1/2}` and `x^{-1/2}` of an SPD matrix.
fn sqrt_and_inv_sqrt(x: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    (sym_fn(x, f64::sqrt), sym_fn(x, |l| 1.0 / l.sqrt()))
}

/// Affine-invariant logarithm map `Log_base(target)`.
pub fn spd_log(base: &SpdEllipsoid, target: &SpdEllipsoid) -> Result<DMatrix<f64>> {
    check_len("spd_log target", base.dim(), target.dim())?;
    let (s, si) = sqrt_and_inv_sqrt(base.matrix());
    let inner = &si * target.matrix() * &si;
    let l = sym_fn(&inner, f64::ln);
    Ok(linalg::symmetrize(&(&s * l * &s)))
}

/// Affine-invariant exponential map `Exp_base(tangent)`.
pub fn spd_exp(base: &SpdEllipsoid, tangent: &DMatrix<f64>) -> Result<SpdEllipsoid> {
    check_len("spd_exp tangent", base.dim(), tangent.nrows())?;
    check_symmetric(tangent)?;
    let (s, si) = sqrt_and_inv_sqrt(base.matrix());
    let inner = &si * tangent * &si;
    let e = sym_fn(&inner, f64::exp);
    SpdEllipsoid::new(linalg::symmetrize(&(&s * e * &s)))
}

/// Geodesic distance `‖logm(A^{-1/2} B A^{-1/2})‖_F`.
pub fn affine_invariant_distance(a: &SpdEllipsoid, b: &SpdEllipsoid) -> Result<f64> {
    check_len("distance", a.dim(), b.dim())?;
    let si = sym_fn(a.matrix(), |l| 1.0 / l.sqrt());
    let inner = &si * b.matrix() * &si;
    Ok(linalg::sym_eigenvalues(&inner)
        .iter()
        .map(|l| l.ln().powi(2))
        .sum::<f64>()
        .sqrt())
}

fn check_symmetric(s: &DMatrix<f64>) -> Result<()> {
    if !s.is_square() {
        return Err(Error::InvalidParameter("matrix must be square".into()));
    }
    let asym = linalg::asymmetry(s);
    if asym > 1e-10 * s.amax().max(1.0) {
        return Err(Error::Asymmetric(asym));
    }
    Ok(())
}

/// Mandel vectorization: diagonal first, then `√2`-scaled off-diagonals
/// `(S₂₃, S₁₃, S₁₂)` in 3-D or `S₁₂` in 2-D.
pub fn mandel_vec(s: &DMatrix<f64>) -> Result<DVector<f64>> {
    check_symmetric(s)?;
    let r2 = std::f64::consts::SQRT_2;
    match s.nrows() {
        2 => Ok(DVector::from_column_slice(&[s[(0, 0)], s[(1, 1)], r2 * s[(0, 1)]])),
        3 => Ok(DVector::from_column_slice(&[
            s[(0, 0)],
            s[(1, 1)],
            s[(2, 2)],
            r2 * s[(1, 2)],
            r2 * s[(0, 2)],
            r2 * s[(0, 1)],
        ])),
        d => Err(Error::InvalidParameter(format!(
            "Mandel form defined for d = 2, 3, got {d}"
        ))),
    }
}

/// Inverse of [`mandel_vec`].
pub fn mandel_unvec(v: &DVector<f64>) -> Result<DMatrix<f64>> {
    let r2 = std::f64::consts::SQRT_2;
    match v.len() {
        3 => {
            let o = v[2] / r2;
            Ok(DMatrix::from_row_slice(2, 2, &[v[0], o, o, v[1]]))
        }
        6 => {
            let (a, b, c) = (v[3] / r2, v[4] / r2, v[5] / r2);
            Ok(DMatrix::from_row_slice(3, 3, &[v[0], c, b, c, v[1], a, b, a, v[2]]))
        }
        n => Err(Error::InvalidParameter(format!(
            "Mandel vector length must be 3 or 6, got {n}"
        ))),
    }
}

/// Length of the Mandel vector for a `d × d` symmetric matrix.
pub fn mandel_len(d: usize) -> usize {
    d * (d + 1) / 2
}
