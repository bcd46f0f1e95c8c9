//! A robot agent: one arm (or bare force actuator) with its own adaptive
//! controller.
//!
//! An agent sees only what [`Observation`] carries plus the broadcast inbox.
//! Everything else it uses is its own configuration.

use nalgebra::{DMatrix, DVector, Vector2, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::adaptive::{
    adaptive_input, adaptive_law_step, hard_clip, lyapunov_solve, mu_modification, rbf_features, AdaptiveGains,
    LawInputs, LearningRates, RbfNetwork, ReferenceModel, SaturationSpec, FORCE_DIM, STATE_DIM,
};
use crate::capability::{f_kmax_vector, force_polytope};
use crate::ellipsoid::{nominal_task_ellipsoid, SpdEllipsoid};
use crate::error::{Error, Result};
use crate::kinematics::{
    dynamics_terms, forward_dynamics, forward_kinematics, ik_acceleration, jacobian, jacobian_dot, jacobian_partials,
    JointState, ManipulatorModel, Pose2, TaskSpace,
};
use crate::linalg;
use crate::manipulability::{
    guarded_tracking_velocity, torque_weights, wfme, wfme_jacobian, TargetScale, TrackingGains,
};

use super::scenario::{ControllerKind, DeficiencyGainInit, ScenarioConfig};
use super::task::TaskProfile;

/// Smallest force limit handed to the saturation, so a fully consumed torque
/// budget still yields a well-defined (near-zero) limit.
const MIN_FORCE_LIMIT: f64 = 1e-9;

/// What one robot may observe in a tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub tick: usize,
    pub time: f64,
    /// Object twist `(v_x, v_y, ω_z)`.
    pub object_velocity: Vector3<f64>,
    /// This robot's grasp offset from the object centre, world frame.
    pub grasp_offset: Vector2<f64>,
    /// This robot's grasp point, world frame.
    pub grasp_position: Vector2<f64>,
}

/// Output of the sensing and control phase of one tick.
#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    pub commanded: DVector<f64>,
    /// Force actually exerted on the object.
    pub applied: DVector<f64>,
    pub deficiency: DVector<f64>,
    pub f_max: DVector<f64>,
    pub saturated: bool,
    /// `K_fᵀ ΔF` to post on the bus.
    pub broadcast: Option<DVector<f64>>,
}

#[derive(Debug, Clone)]
struct Pending {
    x_dot: DVector<f64>,
    f_t_star: DVector<f64>,
    n_cg: DVector<f64>,
    phi: DVector<f64>,
    delta_f: DVector<f64>,
    b_k: DMatrix<f64>,
    applied: DVector<f64>,
}

#[derive(Debug, Clone)]
struct Arm {
    model: ManipulatorModel,
    joints: JointState,
    kv: f64,
    clik: f64,
    /// Commanded torque of the current tick.
    tau: DVector<f64>,
    jacobian: DMatrix<f64>,
    bias: DVector<f64>,
}

#[derive(Debug, Clone)]
struct ManipTracking {
    target: SpdEllipsoid,
    scale: TargetScale,
    gains: TrackingGains,
}

#[derive(Debug, Clone)]
pub struct RobotAgent {
    pub id: String,
    index: usize,
    kind: ControllerKind,
    enabled: bool,
    arm: Option<Arm>,
    fixed_f_max: DVector<f64>,
    manip: Option<ManipTracking>,
    reference: ReferenceModel,
    task: TaskProfile,
    gains: AdaptiveGains,
    rbf: RbfNetwork,
    mu: f64,
    delta_fraction: f64,
    noise: Option<(ChaCha8Rng, Normal<f64>)>,
    pending: Option<Pending>,
}

impl RobotAgent {
    /// Builds agent `index` of `cfg`, with its tool placed on the grasp point
    /// `grasp_world` at t = 0.
    pub fn new(
        cfg: &ScenarioConfig,
        index: usize,
        grasp_world: Vector2<f64>,
        grasp_offset_world: Vector2<f64>,
    ) -> Result<Self> {
        let rc = &cfg.robots[index];
        let n = &cfg.nominal;
        let reference = ReferenceModel::planar(
            n.mass,
            n.inertia,
            n.mu_linear,
            n.mu_rotational,
            cfg.object.gravity,
            cfg.task.initial_reference(),
        )?;
        let a = &cfg.adaptive;
        let rbf = RbfNetwork::grid(a.rbf.grid, a.rbf.lo, a.rbf.hi, a.rbf.width)?;
        let p = lyapunov_solve(
            &reference.a_star,
            &(DMatrix::identity(STATE_DIM, STATE_DIM) * a.q_scale),
        )?;
        let rates = LearningRates::scalar(
            STATE_DIM,
            FORCE_DIM,
            rbf.len(),
            a.gamma_x,
            a.gamma_r,
            a.gamma_n,
            a.gamma_f,
            a.gamma_phi,
        );
        let mut gains = AdaptiveGains::zeros(STATE_DIM, FORCE_DIM, rbf.len(), rates, p);
        gains.norm_cap = a.norm_cap;
        let team = cfg.robots.len() as f64;
        gains.k_r = DMatrix::identity(STATE_DIM, FORCE_DIM) / team;
        if a.kf_init == DeficiencyGainInit::Nominal {
            gains.k_f = (reference.b_star_inv() * reference.nominal_input_matrix(grasp_offset_world)).transpose();
        }

        let arm = match &rc.arm {
            None => None,
            Some(ac) => {
                let q0 = DVector::from_column_slice(&ac.initial_angles);
                let mut model = ManipulatorModel::new(
                    ac.link_lengths.clone(),
                    ac.link_masses.clone(),
                    ac.inertias(),
                    Pose2::new(0.0, 0.0, ac.base_theta),
                    ac.torque_limits.clone(),
                )?;
                let tip = forward_kinematics(&model, &q0)?;
                model.base_pose = Pose2::new(grasp_world.x - tip.x, grasp_world.y - tip.y, ac.base_theta);
                let nj = model.n_joints();
                let j = jacobian(&model, &q0, TaskSpace::Translation)?;
                let v0 = cfg.task.initial_reference();
                let r = grasp_offset_world;
                let v_grasp = DVector::from_column_slice(&[v0[0] - v0[2] * r.y, v0[1] + v0[2] * r.x]);
                let qd0 = linalg::damped_pinv(&j, 1e-3) * v_grasp;
                Some(Arm {
                    model,
                    joints: JointState {
                        angles: q0,
                        velocities: qd0,
                    },
                    kv: cfg.arm_control.kv,
                    clik: cfg.arm_control.clik,
                    tau: DVector::zeros(nj),
                    jacobian: j,
                    bias: DVector::zeros(nj),
                })
            }
        };
        let fixed_f_max = rc
            .f_max
            .map(|f| DVector::from_column_slice(&f))
            .unwrap_or_else(|| DVector::zeros(FORCE_DIM));

        let manip = match (&arm, cfg.manip_opt) {
            (Some(_), true) => {
                let te = cfg.task_ellipsoid.as_ref().ok_or_else(|| {
                    Error::InvalidParameter("manipulability optimisation needs a task_ellipsoid".into())
                })?;
                Some(ManipTracking {
                    target: nominal_task_ellipsoid(&te.spec)?,
                    scale: te.target_scale,
                    gains: TrackingGains::scalar(2, cfg.manipulability.k_m).with_damping(cfg.manipulability.damping),
                })
            }
            _ => None,
        };

        let noise = if cfg.velocity_noise > 0.0 {
            let stream = cfg.seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(index as u64 + 1));
            Some((
                ChaCha8Rng::seed_from_u64(stream),
                Normal::new(0.0, cfg.velocity_noise).map_err(|e| Error::InvalidParameter(e.to_string()))?,
            ))
        } else {
            None
        };

        Ok(Self {
            id: rc.id.clone(),
            index,
            kind: cfg.controller_of(index),
            enabled: true,
            arm,
            fixed_f_max,
            manip,
            reference,
            task: cfg.task.clone(),
            gains,
            rbf,
            mu: a.mu,
            delta_fraction: a.delta_fraction,
            noise,
            pending: None,
        })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn kind(&self) -> ControllerKind {
        self.kind
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled
    }

    pub fn disable(&mut self) {
        self.enabled = false;
        self.pending = None;
    }

    pub fn scale_capability(&mut self, factor: f64) {
        match &mut self.arm {
            Some(arm) => arm.model.torque_limits.iter_mut().for_each(|t| *t *= factor),
            None => self.fixed_f_max *= factor,
        }
    }

    /// Local modified reference twist `ẋ*`.
    pub fn reference_state(&self) -> &DVector<f64> {
        &self.reference.state
    }

    pub fn gains(&self) -> &AdaptiveGains {
        &self.gains
    }

    pub fn gains_mut(&mut self) -> &mut AdaptiveGains {
        &mut self.gains
    }

    pub fn joint_state(&self) -> Option<&JointState> {
        self.arm.as_ref().map(|a| &a.joints)
    }

    pub fn model(&self) -> Option<&ManipulatorModel> {
        self.arm.as_ref().map(|a| &a.model)
    }

    /// Tool position, for arms.
    pub fn tool_position(&self) -> Option<Vector2<f64>> {
        let arm = self.arm.as_ref()?;
        let p = forward_kinematics(&arm.model, &arm.joints.angles).ok()?;
        Some(Vector2::new(p.x, p.y))
    }

    /// Joint torque commanded in the current tick.
    pub fn joint_torque(&self) -> Option<&DVector<f64>> {
        self.arm.as_ref().map(|a| &a.tau)
    }

    /// `max_i |τ_i| / τ_max,i` of the current tick.
    pub fn torque_ratio(&self) -> Option<f64> {
        let arm = self.arm.as_ref()?;
        Some(
            arm.tau
                .iter()
                .zip(&arm.model.torque_limits)
                .map(|(t, l)| t.abs() / l)
                .fold(0.0, f64::max),
        )
    }

    /// Vertices of the current force polytope (arms only).
    pub fn polytope_vertices(&self) -> Option<Vec<DVector<f64>>> {
        let arm = self.arm.as_ref()?;
        let mut p = force_polytope(&arm.jacobian, &arm.model.torque_limits, &arm.bias).ok()?;
        p.vertices().ok().map(|v| v.to_vec())
    }

    fn measure(&mut self, v: Vector3<f64>) -> DVector<f64> {
        let mut x = DVector::from_column_slice(v.as_slice());
        if let Some((rng, dist)) = &mut self.noise {
            for xi in x.iter_mut() {
                *xi += dist.sample(rng);
            }
        }
        x
    }

    /// Sensing and control phase: computes the force to exert and the
    /// deficiency to broadcast.
    pub fn act(&mut self, obs: &Observation) -> Result<Action> {
        if !self.enabled {
            let z = DVector::zeros(FORCE_DIM);
            return Ok(Action {
                commanded: z.clone(),
                applied: z.clone(),
                deficiency: z.clone(),
                f_max: z,
                saturated: false,
                broadcast: None,
            });
        }
        let x_dot = self.measure(obs.object_velocity);
        let n_cg = self.reference.n_cg(x_dot[2]);
        let f_t_star = self.task.reference_force(obs.time, &self.reference, &n_cg)?;

        let f_max = match self.arm.is_some() {
            true => self.arm_step(obs, &x_dot, &f_t_star, &n_cg)?,
            false => self.fixed_f_max.clone(),
        };

        let phi = rbf_features(&self.rbf, x_dot.as_slice());
        let commanded = adaptive_input(&self.gains, &x_dot, &f_t_star, &n_cg, &phi)?;
        let limit = f_max.map(|f| f.max(MIN_FORCE_LIMIT));
        let (applied, deficiency) = match self.kind {
            ControllerKind::AbilityAware => {
                let sat = SaturationSpec::with_margin_fraction(limit.clone(), self.delta_fraction, self.mu)?;
                let (bar, d) = mu_modification(&commanded, &sat)?;
                (hard_clip(&bar, &limit), d)
            }
            ControllerKind::AbilityAgnostic => {
                let applied = hard_clip(&commanded, &limit);
                let d = &applied - &commanded;
                (applied, d)
            }
        };
        let saturated = deficiency.iter().any(|d| *d != 0.0);
        let broadcast = (saturated && self.kind == ControllerKind::AbilityAware)
            .then(|| self.gains.deficiency_payload(&deficiency));

        if let Some(arm) = &mut self.arm {
            arm.tau = &arm.bias + arm.jacobian.transpose() * &applied;
        }

        let law_deficiency = match self.kind {
            ControllerKind::AbilityAware => deficiency.clone(),
            ControllerKind::AbilityAgnostic => DVector::zeros(FORCE_DIM),
        };
        self.pending = Some(Pending {
            b_k: self.reference.nominal_input_matrix(obs.grasp_offset),
            x_dot,
            f_t_star,
            n_cg,
            phi,
            delta_f: law_deficiency,
            applied: applied.clone(),
        });
        Ok(Action {
            commanded,
            applied,
            deficiency,
            f_max,
            saturated,
            broadcast,
        })
    }

    /// Joint-space reference for the arm and the resulting force limit.
    fn arm_step(
        &mut self,
        obs: &Observation,
        x_dot: &DVector<f64>,
        f_t_star: &DVector<f64>,
        n_cg: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        let arm = self.arm.as_mut().expect("arm present");
        let q = arm.joints.angles.clone();
        let qd = arm.joints.velocities.clone();
        let r = obs.grasp_offset;
        let w = x_dot[2];
        let v_grasp = DVector::from_column_slice(&[x_dot[0] - w * r.y, x_dot[1] + w * r.x]);
        let a_ref = &self.reference.a_star * &self.reference.state + &self.reference.b_star * (f_t_star - n_cg);
        let alpha = a_ref[2];
        let a_grasp = DVector::from_column_slice(&[
            a_ref[0] - alpha * r.y - w * w * r.x,
            a_ref[1] + alpha * r.x - w * w * r.y,
        ]);

        let pose = forward_kinematics(&arm.model, &q)?;
        let j = jacobian(&arm.model, &q, TaskSpace::Translation)?;
        let pos_err = DVector::from_column_slice(&[obs.grasp_position.x - pose.x, obs.grasp_position.y - pose.y]);
        let x_cmd = &v_grasp + &pos_err * arm.clik;

        let cmd = match &self.manip {
            Some(m) => {
                let weights = torque_weights(&arm.model.torque_limits)?;
                let mf = wfme(&j, &weights);
                match mf {
                    Ok(mf) => {
                        let partials = jacobian_partials(&arm.model, &q, TaskSpace::Translation)?;
                        let mjac = wfme_jacobian(&j, &partials, &weights, &mf)?;
                        let target = match m.scale {
                            TargetScale::Fixed => m.target.clone(),
                            TargetScale::MatchTrace => m.target.with_trace(mf.trace())?,
                        };
                        guarded_tracking_velocity(&j, &x_cmd, Some((&mjac, &mf, &target, &m.gains)))?
                    }
                    Err(_) => guarded_tracking_velocity(&j, &x_cmd, None)?,
                }
            }
            None => guarded_tracking_velocity(&j, &x_cmd, None)?,
        };

        let jd = jacobian_dot(&arm.model, &q, &qd, TaskSpace::Translation)?;
        let jdqd = &jd * &qd;
        let qdd_task =
            ik_acceleration(&j, &jdqd, &a_grasp).unwrap_or_else(|_| linalg::damped_pinv(&j, 1e-3) * (&a_grasp - &jdqd));
        let qdd_cmd = qdd_task + (&cmd.qdot - &qd) * arm.kv;

        let dyn_terms = dynamics_terms(&arm.model, &q, &qd)?;
        let bias = &dyn_terms.h * &qdd_cmd + &dyn_terms.c + &dyn_terms.g;
        let f_max = match f_kmax_vector(&j, &arm.model.torque_limits, &bias) {
            Ok(f) => f,
            Err(Error::InfeasiblePolytope { .. }) => DVector::zeros(FORCE_DIM),
            Err(e) => return Err(e),
        };
        arm.jacobian = j;
        arm.bias = bias;
        Ok(f_max)
    }

    /// Learning, reference and actuation phase, after the bus round.
    pub fn update(&mut self, inbox_sum: Option<&DVector<f64>>, dt: f64) -> Result<()> {
        if !self.enabled {
            return Ok(());
        }
        let p = self
            .pending
            .take()
            .ok_or_else(|| Error::InvalidParameter("update before act".into()))?;
        let error = &p.x_dot - &self.reference.state;
        let inputs = LawInputs {
            error: &error,
            x_dot: &p.x_dot,
            f_t_star: &p.f_t_star,
            n_cg: &p.n_cg,
            phi: &p.phi,
            delta_f: &p.delta_f,
            b_k: &p.b_k,
            b_star: &self.reference.b_star,
        };
        self.gains = adaptive_law_step(&self.gains, &inputs, dt)?;
        let modification = match self.kind {
            ControllerKind::AbilityAware => inbox_sum,
            ControllerKind::AbilityAgnostic => None,
        };
        self.reference.step(&p.f_t_star, modification, &p.n_cg, dt);

        if let Some(arm) = &mut self.arm {
            let qdd = forward_dynamics(&arm.model, &arm.joints, &arm.tau, &p.applied, TaskSpace::Translation)?;
            arm.joints.integrate(&qdd, dt);
        }
        Ok(())
    }

    /// Largest magnitude among the agent's internal states, for blow-up checks.
    pub fn state_norm(&self) -> f64 {
        let mut m = self.reference.state.amax();
        for (_, g) in self.gains.named() {
            m = m.max(g.amax());
        }
        if let Some(arm) = &self.arm {
            m = m.max(arm.joints.velocities.amax()).max(arm.tau.amax());
        }
        if m.is_finite() {
            m
        } else {
            f64::INFINITY
        }
    }
}
