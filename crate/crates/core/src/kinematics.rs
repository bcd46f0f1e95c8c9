//! Planar serial-manipulator kinematics and rigid-body dynamics.
//!
//! Every joint is revolute about the world z axis. Link `i` runs from joint
//! `i` to joint `i + 1` with its centre of mass at mid-link. The end-effector
//! pose is the tip of the last link.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg;

/// Planar pose `(x, y, θ)` in the world frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta }
    }
}

/// Which end-effector coordinates a Jacobian row set covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskSpace {
    /// `(x, y)` rows only.
    #[default]
    Translation,
    /// `(x, y, θ)` rows.
    Full,
}

impl TaskSpace {
    pub fn dim(self) -> usize {
        match self {
            TaskSpace::Translation => 2,
            TaskSpace::Full => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManipulatorModel {
    pub link_lengths: Vec<f64>,
    pub link_masses: Vec<f64>,
    /// Moment of inertia of each link about its own centre of mass.
    pub link_inertias: Vec<f64>,
    #[serde(default)]
    pub base_pose: Pose2,
    pub torque_limits: Vec<f64>,
    /// In-plane gravity. Zero for tabletop scenarios where gravity is
    /// normal to the plane of motion.
    #[serde(default)]
    pub gravity: [f64; 2],
}

impl ManipulatorModel {
    pub fn new(
        link_lengths: Vec<f64>,
        link_masses: Vec<f64>,
        link_inertias: Vec<f64>,
        base_pose: Pose2,
        torque_limits: Vec<f64>,
    ) -> Result<Self> {
        let model = Self {
            link_lengths,
            link_masses,
            link_inertias,
            base_pose,
            torque_limits,
            gravity: [0.0, 0.0],
        };
        model.validate()?;
        Ok(model)
    }

    /// Uniform slender-rod arm: inertia `m L² / 12` per link.
    pub fn slender(link_lengths: &[f64], link_mass: f64, base_pose: Pose2, torque_limit: f64) -> Result<Self> {
        let n = link_lengths.len();
        let inertias = link_lengths.iter().map(|l| link_mass * l * l / 12.0).collect();
        Self::new(
            link_lengths.to_vec(),
            vec![link_mass; n],
            inertias,
            base_pose,
            vec![torque_limit; n],
        )
    }

    pub fn n_joints(&self) -> usize {
        self.link_lengths.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_joints();
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "manipulator needs at least 2 joints, got {n}"
            )));
        }
        check_len("link_masses", n, self.link_masses.len())?;
        check_len("link_inertias", n, self.link_inertias.len())?;
        check_len("torque_limits", n, self.torque_limits.len())?;
        let positive = |name: &str, v: &[f64]| {
            if v.iter().all(|x| x.is_finite() && *x > 0.0) {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be strictly positive")))
            }
        };
        positive("link_lengths", &self.link_lengths)?;
        positive("link_masses", &self.link_masses)?;
        positive("link_inertias", &self.link_inertias)?;
        positive("torque_limits", &self.torque_limits)?;
        Ok(())
    }

    /// Absolute link angles `θ_b + q_1 + … + q_i`.
    fn link_angles(&self, q: &DVector<f64>) -> Vec<f64> {
        let mut phi = self.base_pose.theta;
        q.iter()
            .map(|qi| {
                phi += qi;
                phi
            })
            .collect()
    }

    /// Joint origins `p_1 … p_n` followed by the tip `p_{n+1}`.
    fn joint_positions(&self, phi: &[f64]) -> Vec<[f64; 2]> {
        let mut p = [self.base_pose.x, self.base_pose.y];
        let mut out = Vec::with_capacity(phi.len() + 1);
        out.push(p);
        for (l, a) in self.link_lengths.iter().zip(phi) {
            p = [p[0] + l * a.cos(), p[1] + l * a.sin()];
            out.push(p);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub angles: DVector<f64>,
    pub velocities: DVector<f64>,
}

impl JointState {
    pub fn new(angles: DVector<f64>, velocities: DVector<f64>) -> Result<Self> {
        check_len("joint velocities", angles.len(), velocities.len())?;
        if angles.iter().chain(velocities.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite joint state".into()));
        }
        Ok(Self { angles, velocities })
    }

    pub fn at_rest(angles: DVector<f64>) -> Self {
        let n = angles.len();
        Self {
            angles,
            velocities: DVector::zeros(n),
        }
    }

    /// Semi-implicit Euler: velocity first, then position with the new velocity.
    pub fn integrate(&mut self, qdd: &DVector<f64>, dt: f64) {
        self.velocities += qdd * dt;
        self.angles += &self.velocities * dt;
    }
}

/// Desired joint trajectory sample for the computed-torque law.
#[derive(Debug, Clone, PartialEq)]
pub struct JointReference {
    pub angles: DVector<f64>,
    pub velocities: DVector<f64>,
    pub accelerations: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotControlGains {
    pub kp: Vec<f64>,
    pub kv: Vec<f64>,
}

impl RobotControlGains {
    pub fn uniform(n: usize, kp: f64, kv: f64) -> Self {
        Self {
            kp: vec![kp; n],
            kv: vec![kv; n],
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        check_len("kp", n, self.kp.len())?;
        check_len("kv", n, self.kv.len())?;
        if self.kp.iter().chain(&self.kv).any(|g| !(*g >= 0.0)) {
            return Err(Error::InvalidParameter("control gains must be nonnegative".into()));
        }
        Ok(())
    }
}

pub fn forward_kinematics(model: &ManipulatorModel, q: &DVector<f64>) -> Result<Pose2> {
    check_len("joint angles", model.n_joints(), q.len())?;
    let phi = model.link_angles(q);
    let tip = *model.joint_positions(&phi).last().expect("at least one point");
    Ok(Pose2::new(tip[0], tip[1], *phi.last().expect("n >= 2")))
}

/// Task Jacobian. Column `j` is the end-effector twist produced by unit
/// velocity of joint `j`.
pub fn jacobian(model: &ManipulatorModel, q: &DVector<f64>, task: TaskSpace) -> Result<DMatrix<f64>> {
    check_len("joint angles", model.n_joints(), q.len())?;
    let phi = model.link_angles(q);
    let pts = model.joint_positions(&phi);
    let tip = pts[pts.len() - 1];
    let n = model.n_joints();
    let mut j = DMatrix::zeros(task.dim(), n);
    for c in 0..n {
        j[(0, c)] = -(tip[1] - pts[c][1]);
        j[(1, c)] = tip[0] - pts[c][0];
        if task == TaskSpace::Full {
            j[(2, c)] = 1.0;
        }
    }
    Ok(j)
}

/// `∂J/∂q_i` for every joint `i`, as `n` slices of the Jacobian's shape.
///
/// With `J_x,j = −Σ_{l≥j} L_l sin φ_l` and `J_y,j = Σ_{l≥j} L_l cos φ_l`, the
/// derivative with respect to `q_i` sums the links `l ≥ max(i, j)`.
pub fn jacobian_partials(model: &ManipulatorModel, q: &DVector<f64>, task: TaskSpace) -> Result<Vec<DMatrix<f64>>> {
    check_len("joint angles", model.n_joints(), q.len())?;
    let n = model.n_joints();
    let phi = model.link_angles(q);
    // suffix sums of L cos φ and L sin φ
    let mut cos_tail = vec![0.0; n + 1];
    let mut sin_tail = vec![0.0; n + 1];
    for l in (0..n).rev() {
        cos_tail[l] = cos_tail[l + 1] + model.link_lengths[l] * phi[l].cos();
        sin_tail[l] = sin_tail[l + 1] + model.link_lengths[l] * phi[l].sin();
    }
    Ok((0..n)
        .map(|i| {
            let mut s = DMatrix::zeros(task.dim(), n);
            for j in 0..n {
                let k = i.max(j);
                s[(0, j)] = -cos_tail[k];
                s[(1, j)] = -sin_tail[k];
            }
            s
        })
        .collect())
}

/// `J̇ = Σ_i (∂J/∂q_i) q̇_i`.
pub fn jacobian_dot(
    model: &ManipulatorModel,
    q: &DVector<f64>,
    qd: &DVector<f64>,
    task: TaskSpace,
) -> Result<DMatrix<f64>> {
    check_len("joint velocities", model.n_joints(), qd.len())?;
    let partials = jacobian_partials(model, q, task)?;
    let mut out = DMatrix::zeros(task.dim(), model.n_joints());
    for (s, v) in partials.iter().zip(qd.iter()) {
        out += s * *v;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsTerms {
    /// Joint-space inertia matrix.
    pub h: DMatrix<f64>,
    /// Coriolis and centrifugal torques.
    pub c: DVector<f64>,
    /// Gravity torques.
    pub g: DVector<f64>,
}

#[inline]
fn perp(w: f64, r: [f64; 2]) -> [f64; 2] {
    // w ẑ × r
    [-w * r[1], w * r[0]]
}

/// Planar recursive Newton–Euler inverse dynamics.
pub fn inverse_dynamics(
    model: &ManipulatorModel,
    q: &DVector<f64>,
    qd: &DVector<f64>,
    qdd: &DVector<f64>,
    with_gravity: bool,
) -> Result<DVector<f64>> {
    let n = model.n_joints();
    check_len("joint angles", n, q.len())?;
    check_len("joint velocities", n, qd.len())?;
    check_len("joint accelerations", n, qdd.len())?;
    let phi = model.link_angles(q);
    let pts = model.joint_positions(&phi);

    // forward pass: link angular rates and COM accelerations
    let mut a_joint = if with_gravity {
        [-model.gravity[0], -model.gravity[1]]
    } else {
        [0.0, 0.0]
    };
    let (mut w, mut alpha) = (0.0, 0.0);
    let mut a_com = Vec::with_capacity(n);
    let mut alphas = Vec::with_capacity(n);
    for i in 0..n {
        w += qd[i];
        alpha += qdd[i];
        let link = [pts[i + 1][0] - pts[i][0], pts[i + 1][1] - pts[i][1]];
        let half = [0.5 * link[0], 0.5 * link[1]];
        let t_half = perp(alpha, half);
        a_com.push([
            a_joint[0] + t_half[0] - w * w * half[0],
            a_joint[1] + t_half[1] - w * w * half[1],
        ]);
        let t_full = perp(alpha, link);
        a_joint = [
            a_joint[0] + t_full[0] - w * w * link[0],
            a_joint[1] + t_full[1] - w * w * link[1],
        ];
        alphas.push(alpha);
    }

    // backward pass: forces and moments about each joint
    let mut tau = DVector::zeros(n);
    let mut f_next = [0.0, 0.0];
    let mut n_next = 0.0;
    for i in (0..n).rev() {
        let m = model.link_masses[i];
        let f_inertial = [m * a_com[i][0], m * a_com[i][1]];
        let link = [pts[i + 1][0] - pts[i][0], pts[i + 1][1] - pts[i][1]];
        let half = [0.5 * link[0], 0.5 * link[1]];
        let f = [f_inertial[0] + f_next[0], f_inertial[1] + f_next[1]];
        let moment = model.link_inertias[i] * alphas[i]
            + n_next
            + linalg::cross2(half, f_inertial)
            + linalg::cross2(link, f_next);
        tau[i] = moment;
        f_next = f;
        n_next = moment;
    }
    Ok(tau)
}

pub fn dynamics_terms(model: &ManipulatorModel, q: &DVector<f64>, qd: &DVector<f64>) -> Result<DynamicsTerms> {
    let n = model.n_joints();
    check_len("joint velocities", n, qd.len())?;
    let zero = DVector::zeros(n);
    let mut h = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = 1.0;
        h.set_column(j, &inverse_dynamics(model, q, &zero, &e, false)?);
    }
    let h = linalg::symmetrize(&h);
    let c = inverse_dynamics(model, q, qd, &zero, false)?;
    let g = inverse_dynamics(model, q, &zero, &zero, true)?;
    Ok(DynamicsTerms { h, c, g })
}

/// Christoffel-symbol Coriolis matrix `C(q, q̇)` with `C(q, q̇) q̇` equal to the
/// Coriolis torque vector. `∂H/∂q` is taken by central differences.
pub fn coriolis_matrix(model: &ManipulatorModel, q: &DVector<f64>, qd: &DVector<f64>) -> Result<DMatrix<f64>> {
    let n = model.n_joints();
    check_len("joint velocities", n, qd.len())?;
    let zero = DVector::zeros(n);
    let step = 1e-6;
    let mut dh = Vec::with_capacity(n);
    for k in 0..n {
        let mut qp = q.clone();
        let mut qm = q.clone();
        qp[k] += step;
        qm[k] -= step;
        let hp = dynamics_terms(model, &qp, &zero)?.h;
        let hm = dynamics_terms(model, &qm, &zero)?.h;
        dh.push((hp - hm) / (2.0 * step));
    }
    let mut c = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += 0.5 * (dh[k][(i, j)] + dh[j][(i, k)] - dh[i][(j, k)]) * qd[k];
            }
            c[(i, j)] = acc;
        }
    }
    Ok(c)
}

/// Minimum-norm joint velocity achieving `x_dot`.
pub fn ik_velocity(j: &DMatrix<f64>, x_dot: &DVector<f64>) -> Result<DVector<f64>> {
    check_len("task velocity", j.nrows(), x_dot.len())?;
    Ok(linalg::pinv_full_row_rank(j)? * x_dot)
}

/// `J⁺ (ẍ − J̇ q̇)`.
pub fn ik_acceleration(j: &DMatrix<f64>, jdot_qdot: &DVector<f64>, x_ddot: &DVector<f64>) -> Result<DVector<f64>> {
    check_len("task acceleration", j.nrows(), x_ddot.len())?;
    check_len("J̇q̇", j.nrows(), jdot_qdot.len())?;
    Ok(linalg::pinv_full_row_rank(j)? * (x_ddot - jdot_qdot))
}

/// `τ = H (q̈_ref + K_p e + K_v ė) + C + G + Jᵀ w` with `e = q_ref − q`.
pub fn computed_torque(
    model: &ManipulatorModel,
    state: &JointState,
    reference: &JointReference,
    gains: &RobotControlGains,
    wrench: &DVector<f64>,
    task: TaskSpace,
) -> Result<DVector<f64>> {
    let n = model.n_joints();
    check_len("reference angles", n, reference.angles.len())?;
    check_len("reference velocities", n, reference.velocities.len())?;
    check_len("reference accelerations", n, reference.accelerations.len())?;
    check_len("wrench", task.dim(), wrench.len())?;
    gains.validate(n)?;
    let dyn_terms = dynamics_terms(model, &state.angles, &state.velocities)?;
    let e = &reference.angles - &state.angles;
    let ed = &reference.velocities - &state.velocities;
    let mut v = reference.accelerations.clone();
    for i in 0..n {
        v[i] += gains.kp[i] * e[i] + gains.kv[i] * ed[i];
    }
    let j = jacobian(model, &state.angles, task)?;
    Ok(&dyn_terms.h * v + dyn_terms.c + dyn_terms.g + j.transpose() * wrench)
}

/// `q̈ = H⁻¹ (τ − C − G − Jᵀ w)` where `w` is the wrench the end-effector
/// exerts on its environment.
pub fn forward_dynamics(
    model: &ManipulatorModel,
    state: &JointState,
    tau: &DVector<f64>,
    wrench: &DVector<f64>,
    task: TaskSpace,
) -> Result<DVector<f64>> {
    check_len("joint torques", model.n_joints(), tau.len())?;
    check_len("wrench", task.dim(), wrench.len())?;
    let d = dynamics_terms(model, &state.angles, &state.velocities)?;
    let j = jacobian(model, &state.angles, task)?;
    let rhs = tau - d.c - d.g - j.transpose() * wrench;
    d.h.cholesky()
        .map(|ch| ch.solve(&rhs))
        .ok_or(Error::NotSpd("joint inertia matrix"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn two_link() -> ManipulatorModel {
        ManipulatorModel::slender(&[1.0, 1.0], 1.0, Pose2::default(), 1.0).unwrap()
    }

    fn four_link() -> ManipulatorModel {
        ManipulatorModel::slender(&[0.4, 0.3, 0.3, 0.2], 0.5, Pose2::default(), 0.8).unwrap()
    }

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    #[test]
    fn fk_extended_chain() {
        let p = forward_kinematics(&two_link(), &dv(&[0.0, 0.0])).unwrap();
        assert!((p.x - 2.0).abs() < 1e-15 && p.y.abs() < 1e-15 && p.theta == 0.0);
    }

    #[test]
    fn fk_rotated_chain() {
        let p = forward_kinematics(&two_link(), &dv(&[FRAC_PI_2, 0.0])).unwrap();
        assert!(p.x.abs() < 1e-15);
        assert!((p.y - 2.0).abs() < 1e-15);
        assert!((p.theta - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn fk_matches_direct_trig_sum() {
        let model = four_link();
        let q = [0.3f64, -0.5, 0.7, 0.1];
        // direct summation, written out independently
        let a1 = q[0];
        let a2 = q[0] + q[1];
        let a3 = q[0] + q[1] + q[2];
        let a4 = q[0] + q[1] + q[2] + q[3];
        let x = 0.4 * a1.cos() + 0.3 * a2.cos() + 0.3 * a3.cos() + 0.2 * a4.cos();
        let y = 0.4 * a1.sin() + 0.3 * a2.sin() + 0.3 * a3.sin() + 0.2 * a4.sin();
        let p = forward_kinematics(&model, &dv(&q)).unwrap();
        assert!((p.x - x).abs() < 1e-14);
        assert!((p.y - y).abs() < 1e-14);
        assert!((p.theta - a4).abs() < 1e-14);
    }

    #[test]
    fn fk_dimension_mismatch() {
        assert!(matches!(
            forward_kinematics(&two_link(), &dv(&[0.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn jacobian_two_link_at_zero() {
        let j = jacobian(&two_link(), &dv(&[0.0, 0.0]), TaskSpace::Translation).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 2.0, 1.0]);
        assert!((j - expected).amax() < 1e-15);
    }

    #[test]
    fn jacobian_base_rotation_equivariance() {
        let mut rotated = four_link();
        let tb = 0.7;
        rotated.base_pose = Pose2::new(0.3, -0.2, tb);
        let q = dv(&[0.2, 0.4, -0.3, 0.5]);
        let j0 = jacobian(&four_link(), &q, TaskSpace::Translation).unwrap();
        let j1 = jacobian(&rotated, &q, TaskSpace::Translation).unwrap();
        let r = DMatrix::from_row_slice(2, 2, &[tb.cos(), -tb.sin(), tb.sin(), tb.cos()]);
        assert!((j1 - r * j0).amax() < 1e-14);
    }

    #[test]
    fn partials_two_link_hand_expansion() {
        // J = [[-s1 - s12, -s12], [c1 + c12, c12]]
        // ∂J/∂q1 = [[-c1 - c12, -c12], [-s1 - s12, -s12]]
        // ∂J/∂q2 = [[-c12, -c12], [-s12, -s12]]
        let q = [0.4f64, -1.1];
        let (c1, s1) = (q[0].cos(), q[0].sin());
        let (c12, s12) = ((q[0] + q[1]).cos(), (q[0] + q[1]).sin());
        let p = jacobian_partials(&two_link(), &dv(&q), TaskSpace::Translation).unwrap();
        let d1 = DMatrix::from_row_slice(2, 2, &[-c1 - c12, -c12, -s1 - s12, -s12]);
        let d2 = DMatrix::from_row_slice(2, 2, &[-c12, -c12, -s12, -s12]);
        assert!((&p[0] - d1).amax() < 1e-15);
        assert!((&p[1] - d2).amax() < 1e-15);

        // at q = 0 the second slice is [[-1, -1], [0, 0]]
        let p0 = jacobian_partials(&two_link(), &dv(&[0.0, 0.0]), TaskSpace::Translation).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[-1.0, -1.0, 0.0, 0.0]);
        assert!((&p0[1] - expected).amax() < 1e-15);
    }

    #[test]
    fn zero_length_virtual_link_has_zero_slice() {
        let mut model = ManipulatorModel::slender(&[1.0, 1.0, 1.0], 1.0, Pose2::default(), 1.0).unwrap();
        model.link_lengths[2] = 0.0;
        let p = jacobian_partials(&model, &dv(&[0.3, 0.2, -0.4]), TaskSpace::Translation).unwrap();
        assert!(p[2].amax() < 1e-15);
        // and the last Jacobian column vanishes too
        let j = jacobian(&model, &dv(&[0.3, 0.2, -0.4]), TaskSpace::Translation).unwrap();
        assert!(j.column(2).amax() < 1e-15);
    }

    #[test]
    fn rotation_row_has_zero_partials() {
        let p = jacobian_partials(&four_link(), &dv(&[0.1, 0.2, 0.3, 0.4]), TaskSpace::Full).unwrap();
        for s in p {
            assert!(s.row(2).amax() == 0.0);
        }
    }

    #[test]
    fn coriolis_vanishes_at_rest() {
        let d = dynamics_terms(&four_link(), &dv(&[0.1, 0.5, -0.2, 0.3]), &DVector::zeros(4)).unwrap();
        assert!(d.c.amax() < 1e-15);
    }

    #[test]
    fn gravity_off_gives_zero_g() {
        let d = dynamics_terms(&four_link(), &dv(&[0.1, 0.5, -0.2, 0.3]), &dv(&[1.0, -1.0, 0.5, 0.2])).unwrap();
        assert!(d.g.amax() == 0.0);
    }

    #[test]
    fn two_link_inertia_matches_textbook() {
        // uniform rods: H11 = I1 + I2 + m1 l1²/4 + m2 (l1² + l2²/4 + l1 l2 c2)
        let model = two_link();
        let q2: f64 = 0.6;
        let d = dynamics_terms(&model, &dv(&[0.2, q2]), &DVector::zeros(2)).unwrap();
        let i = 1.0 / 12.0;
        let h11 = 2.0 * i + 0.25 + (1.0 + 0.25 + q2.cos());
        let h12 = i + 0.25 + 0.5 * q2.cos();
        let h22 = i + 0.25;
        assert!((d.h[(0, 0)] - h11).abs() < 1e-13);
        assert!((d.h[(0, 1)] - h12).abs() < 1e-13);
        assert!((d.h[(1, 1)] - h22).abs() < 1e-13);
    }

    #[test]
    fn in_plane_gravity_on_horizontal_two_link() {
        let mut model = two_link();
        model.gravity = [0.0, -9.81];
        let d = dynamics_terms(&model, &dv(&[0.0, 0.0]), &DVector::zeros(2)).unwrap();
        // G1 = g (m1 l1/2 + m2 (l1 + l2/2)), G2 = g m2 l2/2
        assert!((d.g[0] - 9.81 * (0.5 + 1.5)).abs() < 1e-12);
        assert!((d.g[1] - 9.81 * 0.5).abs() < 1e-12);
    }

    #[test]
    fn square_ik_equals_inverse() {
        let j = jacobian(&two_link(), &dv(&[0.3, 0.9]), TaskSpace::Translation).unwrap();
        let xd = dv(&[0.2, -0.1]);
        let qd = ik_velocity(&j, &xd).unwrap();
        let direct = j.clone().try_inverse().unwrap() * &xd;
        assert!((qd - direct).amax() < 1e-12);
    }

    #[test]
    fn zero_task_velocity_gives_zero() {
        let j = jacobian(&four_link(), &dv(&[0.3, 0.9, 0.2, 0.1]), TaskSpace::Translation).unwrap();
        assert!(ik_velocity(&j, &DVector::zeros(2)).unwrap().amax() == 0.0);
    }

    #[test]
    fn singular_ik_reports_sigma() {
        let j = jacobian(&two_link(), &dv(&[0.0, 0.0]), TaskSpace::Translation).unwrap();
        match ik_velocity(&j, &dv(&[1.0, 0.0])) {
            Err(Error::Singular { sigma_min }) => assert!(sigma_min < 1e-12),
            other => panic!("expected singularity, got {other:?}"),
        }
    }

    #[test]
    fn computed_torque_pure_compensation() {
        let model = four_link();
        let q = dv(&[0.1, 0.5, -0.2, 0.3]);
        let qd = dv(&[0.3, -0.2, 0.1, 0.4]);
        let state = JointState::new(q.clone(), qd.clone()).unwrap();
        let reference = JointReference {
            angles: q.clone(),
            velocities: qd.clone(),
            accelerations: DVector::zeros(4),
        };
        let gains = RobotControlGains::uniform(4, 100.0, 20.0);
        let tau = computed_torque(
            &model,
            &state,
            &reference,
            &gains,
            &DVector::zeros(2),
            TaskSpace::Translation,
        )
        .unwrap();
        let d = dynamics_terms(&model, &q, &qd).unwrap();
        assert!((tau - (d.c + d.g)).amax() < 1e-14);
    }

    #[test]
    fn computed_torque_zero_gains() {
        let model = four_link();
        let state = JointState::new(dv(&[0.1, 0.5, -0.2, 0.3]), dv(&[0.3, -0.2, 0.1, 0.4])).unwrap();
        let reference = JointReference {
            angles: dv(&[1.0, 1.0, 1.0, 1.0]),
            velocities: dv(&[0.5, 0.5, 0.5, 0.5]),
            accelerations: dv(&[0.2, -0.1, 0.3, 0.0]),
        };
        let w = dv(&[0.7, -0.4]);
        let gains = RobotControlGains::uniform(4, 0.0, 0.0);
        let tau = computed_torque(&model, &state, &reference, &gains, &w, TaskSpace::Translation).unwrap();
        let d = dynamics_terms(&model, &state.angles, &state.velocities).unwrap();
        let j = jacobian(&model, &state.angles, TaskSpace::Translation).unwrap();
        let expected = &d.h * &reference.accelerations + d.c + d.g + j.transpose() * w;
        assert!((tau - expected).amax() < 1e-14);
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(ManipulatorModel::slender(&[1.0], 1.0, Pose2::default(), 1.0).is_err());
        assert!(ManipulatorModel::slender(&[1.0, -1.0], 1.0, Pose2::default(), 1.0).is_err());
        assert!(ManipulatorModel::new(
            vec![1.0, 1.0],
            vec![1.0, 1.0],
            vec![0.1, 0.1],
            Pose2::default(),
            vec![1.0]
        )
        .is_err());
    }
}
