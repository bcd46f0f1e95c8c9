//! Weighted force manipulability ellipsoid (WFME), its configuration
//! derivative, and null-space tracking of a target ellipsoid.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ellipsoid::{mandel_len, mandel_vec, spd_log, SpdEllipsoid};
use crate::error::{check_len, Error, Result};
use crate::linalg;

/// Below this smallest singular value of `J` the null-space term is dropped.
pub const SINGULARITY_SIGMA: f64 = 1e-4;
/// Damping used for the task term near singularities.
pub const DLS_DAMPING: f64 = 1e-6;

/// Diagonal entries `1 / τ_max,i` of the torque weighting matrix `W`.
pub fn torque_weights(torque_limits: &[f64]) -> Result<DVector<f64>> {
    if torque_limits.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidParameter("torque limits must be positive".into()));
    }
    Ok(DVector::from_iterator(
        torque_limits.len(),
        torque_limits.iter().map(|t| 1.0 / t),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct WfmeState {
    pub ellipsoid: SpdEllipsoid,
    pub weights: DVector<f64>,
}

impl WfmeState {
    pub fn new(j: &DMatrix<f64>, weights: DVector<f64>) -> Result<Self> {
        let ellipsoid = wfme(j, &weights)?;
        Ok(Self { ellipsoid, weights })
    }
}

/// Scaling matrix `K_M` over Mandel coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingGains {
    pub k_m: DMatrix<f64>,
    /// Damping for the manipulability-Jacobian inverse; 0 gives the plain pseudo-inverse.
    pub damping: f64,
}

impl TrackingGains {
    pub fn scalar(d: usize, k: f64) -> Self {
        let m = mandel_len(d);
        Self {
            k_m: DMatrix::identity(m, m) * k,
            damping: 0.0,
        }
    }

    pub fn with_damping(mut self, damping: f64) -> Self {
        self.damping = damping;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.k_m.is_square() {
            return Err(Error::InvalidParameter("K_M must be square".into()));
        }
        if linalg::asymmetry(&self.k_m) > 1e-12 {
            return Err(Error::Asymmetric(linalg::asymmetry(&self.k_m)));
        }
        if linalg::sym_eigenvalues(&self.k_m).first().copied().unwrap_or(0.0) < -1e-12 {
            return Err(Error::InvalidParameter("K_M must be positive semidefinite".into()));
        }
        if !(self.damping >= 0.0 && self.damping.is_finite()) {
            return Err(Error::InvalidParameter(
                "damping must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// `J Wᵀ W Jᵀ` with `W = diag(weights)`.
fn weighted_gram(j: &DMatrix<f64>, weights: &DVector<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_len("torque weights", j.ncols(), weights.len())?;
    let w2 = DMatrix::from_diagonal(&weights.map(|w| w * w));
    let jw = j * w2;
    let gram = &jw * j.transpose();
    Ok((jw, gram))
}

/// WFME `M^f = (J Wᵀ W Jᵀ)⁻¹`.
pub fn wfme(j: &DMatrix<f64>, weights: &DVector<f64>) -> Result<SpdEllipsoid> {
    if weights.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::InvalidParameter("weights must be positive".into()));
    }
    let (_, gram) = weighted_gram(j, weights)?;
    let smin = linalg::sigma_min(j);
    let smax = linalg::singular_values(j).first().copied().unwrap_or(0.0);
    if smin <= linalg::RANK_RTOL * smax {
        return Err(Error::Singular { sigma_min: smin });
    }
    let inv = gram
        .cholesky()
        .map(|c| c.inverse())
        .ok_or(Error::Singular { sigma_min: smin })?;
    SpdEllipsoid::new(linalg::symmetrize(&inv))
}

/// Configuration derivative of the WFME: slice `i` is `∂M^f/∂q_i`,
/// computed as `−M^f (∂M^{f−1}/∂q_i) M^f` with
/// `∂M^{f−1}/∂q_i = (∂J/∂q_i) J_Wᵀ + J_W (∂J/∂q_i)ᵀ` and `J_W = J WᵀW`.
pub fn wfme_jacobian(
    j: &DMatrix<f64>,
    partials: &[DMatrix<f64>],
    weights: &DVector<f64>,
    mf: &SpdEllipsoid,
) -> Result<Vec<DMatrix<f64>>> {
    check_len("Jacobian partial slices", j.ncols(), partials.len())?;
    check_len("WFME dimension", j.nrows(), mf.dim())?;
    let (jw, _) = weighted_gram(j, weights)?;
    let m = mf.matrix();
    partials
        .iter()
        .map(|dj| {
            if dj.shape() != j.shape() {
                return Err(Error::DimensionMismatch {
                    context: "Jacobian partial slice",
                    expected: j.len(),
                    got: dj.len(),
                });
            }
            let d_inv = dj * jw.transpose() + &jw * dj.transpose();
            Ok(linalg::symmetrize(&(-(m * d_inv * m))))
        })
        .collect()
}

/// Stacks the Mandel vector of each slice as a column (`d(d+1)/2 × n`).
pub fn mandel_matricize(slices: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let first = slices
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty manipulability Jacobian".into()))?;
    let rows = mandel_len(first.nrows());
    let mut out = DMatrix::zeros(rows, slices.len());
    for (c, s) in slices.iter().enumerate() {
        out.set_column(c, &mandel_vec(s)?);
    }
    Ok(out)
}

/// `q̇ = q̇_task + (I − J⁺J) 𝒥_M⁺ K_M vec(Log_{M^f} M_t)`.
///
/// `q̇_task` is the pseudo-inverse solution `J⁺ ẋ`; the second term lives in
/// the null space of `J` and so leaves the end-effector motion unchanged.
pub fn nullspace_tracking_velocity(
    j: &DMatrix<f64>,
    qdot_task: &DVector<f64>,
    manip_jacobian: &[DMatrix<f64>],
    mf: &SpdEllipsoid,
    mt: &SpdEllipsoid,
    gains: &TrackingGains,
) -> Result<DVector<f64>> {
    let jp = linalg::pinv_full_row_rank(j)?;
    Ok(qdot_task + nullspace_term(j, &jp, manip_jacobian, mf, mt, gains)?)
}

fn nullspace_term(
    j: &DMatrix<f64>,
    jp: &DMatrix<f64>,
    manip_jacobian: &[DMatrix<f64>],
    mf: &SpdEllipsoid,
    mt: &SpdEllipsoid,
    gains: &TrackingGains,
) -> Result<DVector<f64>> {
    let n = j.ncols();
    check_len("task-space velocity command", n, jp.nrows())?;
    check_len("target ellipsoid", mf.dim(), mt.dim())?;
    let jm = mandel_matricize(manip_jacobian)?;
    check_len("K_M", jm.nrows(), gains.k_m.nrows())?;
    let log = mandel_vec(&spd_log(mf, mt)?)?;
    let projector = DMatrix::identity(n, n) - jp * j;
    let jm_inv = if gains.damping > 0.0 {
        linalg::damped_pinv(&jm, gains.damping)
    } else {
        linalg::pinv(&jm)
    };
    Ok(projector * jm_inv * (&gains.k_m * log))
}

/// Result of one guarded tracking evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingCommand {
    pub qdot: DVector<f64>,
    /// `false` when the null-space term was suppressed near a singularity.
    pub null_active: bool,
    pub sigma_min: f64,
}

/// Velocity-level IK with manipulability tracking and a singularity guard.
///
/// When `σ_min(J)` falls below [`SINGULARITY_SIGMA`] the task term switches
/// to damped least squares and the null-space term is zeroed.
pub fn guarded_tracking_velocity(
    j: &DMatrix<f64>,
    x_dot: &DVector<f64>,
    tracking: Option<(&[DMatrix<f64>], &SpdEllipsoid, &SpdEllipsoid, &TrackingGains)>,
) -> Result<TrackingCommand> {
    check_len("task velocity", j.nrows(), x_dot.len())?;
    let sigma_min = linalg::sigma_min(j);
    if sigma_min < SINGULARITY_SIGMA {
        log::debug!("near-singular Jacobian (σ_min = {sigma_min:.2e}); null-space term disabled");
        return Ok(TrackingCommand {
            qdot: linalg::damped_pinv(j, DLS_DAMPING) * x_dot,
            null_active: false,
            sigma_min,
        });
    }
    let jp = linalg::pinv(j);
    let mut qdot = &jp * x_dot;
    let mut null_active = false;
    if let Some((mjac, mf, mt, gains)) = tracking {
        qdot += nullspace_term(j, &jp, mjac, mf, mt, gains)?;
        null_active = true;
    }
    Ok(TrackingCommand {
        qdot,
        null_active,
        sigma_min,
    })
}

/// How the nominal task ellipsoid is scaled relative to the WFME.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetScale {
    /// Use the ellipsoid as built from its `scale` parameter.
    #[default]
    Fixed,
    /// Rescale the target so its trace equals the current WFME trace.
    MatchTrace,
}
