//! Per-robot ability-aware adaptive controller.
//!
//! Each robot runs a model-reference adaptive law against a local copy of
//! the object's reference dynamics. Its commanded force is shrunk toward a
//! capability limit by μ-modification; whatever it cannot deliver is the
//! control deficiency `ΔF`, which is the only quantity robots share. The
//! reference model absorbs the broadcast deficiencies so that every agent
//! degrades its target trajectory the same way.

mod lyapunov;
mod rbf;

pub use lyapunov::{is_hurwitz, lyapunov_solve, spectral_abscissa};
pub use rbf::{rbf_features, RbfNetwork};

use nalgebra::{DMatrix, DVector, Vector2};

use crate::error::{check_len, Error, Result};

/// Twist dimension of the planar object state `(v_x, v_y, ω_z)`.
pub const STATE_DIM: usize = 3;
/// Force dimension of a planar robot input `(F_x, F_y)`.
pub const FORCE_DIM: usize = 2;

/// Object reference dynamics `ẍ* = A* ẋ* + B* (F* + Σ K_fᵀ ΔF − N_cg)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceModel {
    pub a_star: DMatrix<f64>,
    pub b_star: DMatrix<f64>,
    b_star_inv: DMatrix<f64>,
    pub nominal_mass: f64,
    pub nominal_inertia: f64,
    pub gravity: [f64; 2],
    /// Current reference twist `ẋ*`.
    pub state: DVector<f64>,
}

impl ReferenceModel {
    /// Planar reference from nominal object parameters, starting at `initial`.
    pub fn planar(
        nominal_mass: f64,
        nominal_inertia: f64,
        nominal_mu_linear: f64,
        nominal_mu_rotational: f64,
        gravity: [f64; 2],
        initial: DVector<f64>,
    ) -> Result<Self> {
        if !(nominal_mass > 0.0 && nominal_inertia > 0.0) {
            return Err(Error::InvalidParameter(
                "nominal mass and inertia must be positive".into(),
            ));
        }
        check_len("reference state", STATE_DIM, initial.len())?;
        let a_star = DMatrix::from_diagonal(&DVector::from_column_slice(&[
            -nominal_mu_linear / nominal_mass,
            -nominal_mu_linear / nominal_mass,
            -nominal_mu_rotational / nominal_inertia,
        ]));
        if !is_hurwitz(&a_star) {
            return Err(Error::NotHurwitz(spectral_abscissa(&a_star)));
        }
        let b_star = DMatrix::from_diagonal(&DVector::from_column_slice(&[
            1.0 / nominal_mass,
            1.0 / nominal_mass,
            1.0 / nominal_inertia,
        ]));
        let b_star_inv = DMatrix::from_diagonal(&DVector::from_column_slice(&[
            nominal_mass,
            nominal_mass,
            nominal_inertia,
        ]));
        Ok(Self {
            a_star,
            b_star,
            b_star_inv,
            nominal_mass,
            nominal_inertia,
            gravity,
            state: initial,
        })
    }

    pub fn b_star_inv(&self) -> &DMatrix<f64> {
        &self.b_star_inv
    }

    /// `N_cg = (−m* g, ω × (I* ω))`; the gyroscopic part vanishes for a
    /// scalar planar inertia.
    pub fn n_cg(&self, _omega: f64) -> DVector<f64> {
        DVector::from_column_slice(&[
            -self.nominal_mass * self.gravity[0],
            -self.nominal_mass * self.gravity[1],
            0.0,
        ])
    }

    /// Nominal input matrix of a robot gripping at world offset `r`:
    /// `[E/m*; I*⁻¹ r^×]`.
    pub fn nominal_input_matrix(&self, r_world: Vector2<f64>) -> DMatrix<f64> {
        input_matrix(self.nominal_mass, self.nominal_inertia, r_world)
    }

    /// Advances `ẋ*` by one explicit Euler step of the modified reference
    /// dynamics. `deficiency_sum` is `Σ_k K_fkᵀ ΔF_k`, or `None` when no
    /// robot broadcast this tick.
    pub fn step(
        &mut self,
        f_t_star: &DVector<f64>,
        deficiency_sum: Option<&DVector<f64>>,
        n_cg: &DVector<f64>,
        dt: f64,
    ) {
        self.state = modified_reference_step(self, f_t_star, deficiency_sum, n_cg, dt);
    }
}

/// `B_k = [E/m; I⁻¹ r^×]` for a planar force input at offset `r`.
pub fn input_matrix(mass: f64, inertia: f64, r_world: Vector2<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(
        STATE_DIM,
        FORCE_DIM,
        &[
            1.0 / mass,
            0.0,
            0.0,
            1.0 / mass,
            -r_world.y / inertia,
            r_world.x / inertia,
        ],
    )
}

/// Reference force from a desired twist and its derivative:
/// `F* = B*⁻¹ (ẍ* − A* ẋ*) + N_cg`.
pub fn reference_input(
    model: &ReferenceModel,
    x_dot_desired: &DVector<f64>,
    x_ddot_desired: &DVector<f64>,
    n_cg: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_len("desired twist", STATE_DIM, x_dot_desired.len())?;
    check_len("desired acceleration", STATE_DIM, x_ddot_desired.len())?;
    Ok(model.b_star_inv() * (x_ddot_desired - &model.a_star * x_dot_desired) + n_cg)
}

/// One Euler step of the (modified) reference dynamics, returning the new `ẋ*`.
pub fn modified_reference_step(
    model: &ReferenceModel,
    f_t_star: &DVector<f64>,
    deficiency_sum: Option<&DVector<f64>>,
    n_cg: &DVector<f64>,
    dt: f64,
) -> DVector<f64> {
    let mut input = f_t_star - n_cg;
    if let Some(d) = deficiency_sum {
        input += d;
    }
    let accel = &model.a_star * &model.state + &model.b_star * input;
    &model.state + accel * dt
}

/// SPD learning rates of the adaptive laws.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningRates {
    pub gamma_x: DMatrix<f64>,
    pub gamma_r: DMatrix<f64>,
    pub gamma_n: DMatrix<f64>,
    pub gamma_f: DMatrix<f64>,
    pub gamma_phi: DMatrix<f64>,
}

impl LearningRates {
    pub fn scalar(
        state_dim: usize,
        force_dim: usize,
        n_features: usize,
        x: f64,
        r: f64,
        n: f64,
        f: f64,
        phi: f64,
    ) -> Self {
        Self {
            gamma_x: DMatrix::identity(state_dim, state_dim) * x,
            gamma_r: DMatrix::identity(state_dim, state_dim) * r,
            gamma_n: DMatrix::identity(state_dim, state_dim) * n,
            gamma_f: DMatrix::identity(force_dim, force_dim) * f,
            gamma_phi: DMatrix::identity(n_features, n_features) * phi,
        }
    }
}

/// Adaptive gain matrices of one robot.
///
/// Shapes, with `s` the state dimension, `f` the force dimension and `p` the
/// number of RBF features: `K_x, K_r, K_n: s × f`, `K_f: f × s`,
/// `W_φ: p × f`, `P: s × s`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveGains {
    pub k_x: DMatrix<f64>,
    pub k_r: DMatrix<f64>,
    pub k_n: DMatrix<f64>,
    pub k_f: DMatrix<f64>,
    pub w_phi: DMatrix<f64>,
    pub rates: LearningRates,
    pub p: DMatrix<f64>,
    /// Frobenius-norm cap applied to each gain after every update.
    pub norm_cap: Option<f64>,
}

impl AdaptiveGains {
    pub fn zeros(state_dim: usize, force_dim: usize, n_features: usize, rates: LearningRates, p: DMatrix<f64>) -> Self {
        Self {
            k_x: DMatrix::zeros(state_dim, force_dim),
            k_r: DMatrix::zeros(state_dim, force_dim),
            k_n: DMatrix::zeros(state_dim, force_dim),
            k_f: DMatrix::zeros(force_dim, state_dim),
            w_phi: DMatrix::zeros(n_features, force_dim),
            rates,
            p,
            norm_cap: None,
        }
    }

    pub fn state_dim(&self) -> usize {
        self.k_x.nrows()
    }

    pub fn force_dim(&self) -> usize {
        self.k_x.ncols()
    }

    /// `K_fᵀ ΔF`, the payload a saturated robot broadcasts.
    pub fn deficiency_payload(&self, delta_f: &DVector<f64>) -> DVector<f64> {
        self.k_f.transpose() * delta_f
    }

    /// `(name, matrix)` pairs for logging.
    pub fn named(&self) -> [(&'static str, &DMatrix<f64>); 5] {
        [
            ("K_x", &self.k_x),
            ("K_r", &self.k_r),
            ("K_n", &self.k_n),
            ("K_f", &self.k_f),
            ("W_phi", &self.w_phi),
        ]
    }
}

/// `F_k = K_xᵀ ẋ_o + K_rᵀ F* + K_nᵀ N_cg + W_φᵀ Φ`.
pub fn adaptive_input(
    gains: &AdaptiveGains,
    x_dot: &DVector<f64>,
    f_t_star: &DVector<f64>,
    n_cg: &DVector<f64>,
    phi: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_len("object twist", gains.k_x.nrows(), x_dot.len())?;
    check_len("reference input", gains.k_r.nrows(), f_t_star.len())?;
    check_len("N_cg", gains.k_n.nrows(), n_cg.len())?;
    check_len("RBF features", gains.w_phi.nrows(), phi.len())?;
    Ok(gains.k_x.tr_mul(x_dot) + gains.k_r.tr_mul(f_t_star) + gains.k_n.tr_mul(n_cg) + gains.w_phi.tr_mul(phi))
}

/// Saturation limits with the μ-modification safety margin.
#[derive(Debug, Clone, PartialEq)]
pub struct SaturationSpec {
    pub f_max: DVector<f64>,
    pub delta: DVector<f64>,
    pub mu: f64,
}

impl SaturationSpec {
    /// `δ = fraction · F_max`.
    pub fn with_margin_fraction(f_max: DVector<f64>, fraction: f64, mu: f64) -> Result<Self> {
        let delta = &f_max * fraction;
        let s = Self { f_max, delta, mu };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        check_len("saturation margin", self.f_max.len(), self.delta.len())?;
        if !(self.mu > 0.0) {
            return Err(Error::InvalidParameter("μ must be positive".into()));
        }
        for (f, d) in self.f_max.iter().zip(self.delta.iter()) {
            if !(*d > 0.0 && d < f) {
                return Err(Error::InvalidParameter(format!(
                    "saturation margin must satisfy 0 < δ < F_max (δ = {d}, F_max = {f})"
                )));
            }
        }
        Ok(())
    }

    /// Interior threshold `F_max − δ`.
    pub fn inner_limit(&self) -> DVector<f64> {
        &self.f_max - &self.delta
    }
}

/// μ-modification of a commanded force, returning `(F̄, ΔF)`.
///
/// Inside `±(F_max − δ)` the command passes through unchanged; outside it is
/// blended toward the inner limit as `(F ± μ (F_max − δ)) / (1 + μ)`. The
/// deficiency is measured against the hard limit:
/// `ΔF = F_max sat(F̄ / F_max) − F`.
pub fn mu_modification(force: &DVector<f64>, sat: &SaturationSpec) -> Result<(DVector<f64>, DVector<f64>)> {
    check_len("commanded force", sat.f_max.len(), force.len())?;
    let inner = sat.inner_limit();
    let mut bar = force.clone();
    let mut deficiency = DVector::zeros(force.len());
    for i in 0..force.len() {
        let f = force[i];
        let lim = inner[i];
        bar[i] = if f > lim {
            (f + sat.mu * lim) / (1.0 + sat.mu)
        } else if f < -lim {
            (f - sat.mu * lim) / (1.0 + sat.mu)
        } else {
            f
        };
        let applied = bar[i].clamp(-sat.f_max[i], sat.f_max[i]);
        deficiency[i] = if applied == f { 0.0 } else { applied - f };
    }
    Ok((bar, deficiency))
}

/// Hard clip to `±F_max`; the baseline controller's only constraint handling.
pub fn hard_clip(force: &DVector<f64>, f_max: &DVector<f64>) -> DVector<f64> {
    force.zip_map(f_max, |f, m| f.clamp(-m, m))
}

/// Signals the adaptive laws integrate over one step.
#[derive(Debug, Clone)]
pub struct LawInputs<'a> {
    /// Tracking error `e = ẋ_o − ẋ*`.
    pub error: &'a DVector<f64>,
    pub x_dot: &'a DVector<f64>,
    pub f_t_star: &'a DVector<f64>,
    pub n_cg: &'a DVector<f64>,
    pub phi: &'a DVector<f64>,
    pub delta_f: &'a DVector<f64>,
    /// The robot's own estimate of its input matrix `B_k`.
    pub b_k: &'a DMatrix<f64>,
    pub b_star: &'a DMatrix<f64>,
}

/// Explicit Euler step of the adaptive laws:
///
/// ```text
/// K̇_x = −Γ_x ẋ_o eᵀ P B_k     K̇_r = −Γ_r F* eᵀ P B_k
/// K̇_n = −Γ_n N_cg eᵀ P B_k     Ẇ_φ = −Γ_φ Φ eᵀ P B_k
/// K̇_f = +Γ_f ΔF eᵀ P B*
/// ```
pub fn adaptive_law_step(gains: &AdaptiveGains, inputs: &LawInputs<'_>, dt: f64) -> Result<AdaptiveGains> {
    let s = gains.state_dim();
    check_len("tracking error", s, inputs.error.len())?;
    check_len("B_k rows", s, inputs.b_k.nrows())?;
    check_len("B_k cols", gains.force_dim(), inputs.b_k.ncols())?;
    check_len("deficiency", gains.force_dim(), inputs.delta_f.len())?;
    let mut next = gains.clone();
    let ep = inputs.error.transpose() * &gains.p;
    let ep_bk = &ep * inputs.b_k;
    let r = &gains.rates;
    next.k_x -= &r.gamma_x * inputs.x_dot * &ep_bk * dt;
    next.k_r -= &r.gamma_r * inputs.f_t_star * &ep_bk * dt;
    next.k_n -= &r.gamma_n * inputs.n_cg * &ep_bk * dt;
    next.w_phi -= &r.gamma_phi * inputs.phi * &ep_bk * dt;
    if inputs.delta_f.iter().any(|d| *d != 0.0) {
        next.k_f += &r.gamma_f * inputs.delta_f * (&ep * inputs.b_star) * dt;
    }
    if let Some(cap) = gains.norm_cap {
        for m in [
            &mut next.k_x,
            &mut next.k_r,
            &mut next.k_n,
            &mut next.k_f,
            &mut next.w_phi,
        ] {
            let norm = m.norm();
            if norm > cap {
                *m *= cap / norm;
            }
        }
    }
    Ok(next)
}
