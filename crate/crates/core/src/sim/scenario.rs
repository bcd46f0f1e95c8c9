//! Declarative scenario description, loaded from TOML.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ellipsoid::TaskEllipsoidSpec;
use crate::manipulability::TargetScale;
use crate::object::ObjectModel;

use super::events::Event;
use super::task::TaskProfile;
use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    /// μ-modification, deficiency broadcast and reference modification.
    #[default]
    AbilityAware,
    /// Hard clipping at the force limit; no broadcast, no reference change.
    AbilityAgnostic,
}

impl std::str::FromStr for ControllerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ability_aware" => Ok(Self::AbilityAware),
            "ability_agnostic" => Ok(Self::AbilityAgnostic),
            other => Err(format!("unknown controller kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub dt: f64,
    pub duration: f64,
    #[serde(default)]
    pub seed: u64,
    /// Default controller for robots that do not set their own.
    #[serde(default)]
    pub controller: ControllerKind,
    #[serde(default)]
    pub manip_opt: bool,
    #[serde(default)]
    pub bus_delay: u64,
    /// Seconds excluded from the start of the error averages.
    #[serde(default)]
    pub warmup: f64,
    /// Standard deviation of additive noise on each robot's velocity reading.
    #[serde(default)]
    pub velocity_noise: f64,
    #[serde(default = "default_gain_decimation")]
    pub gain_log_decimation: usize,
    #[serde(default = "default_joint_decimation")]
    pub joint_log_decimation: usize,
    pub object: ObjectConfig,
    pub nominal: NominalConfig,
    pub task: TaskProfile,
    #[serde(default)]
    pub task_ellipsoid: Option<TaskEllipsoidConfig>,
    #[serde(default)]
    pub adaptive: AdaptiveConfig,
    #[serde(default)]
    pub manipulability: ManipulabilityConfig,
    #[serde(default)]
    pub arm_control: ArmControlConfig,
    pub robots: Vec<RobotConfig>,
    #[serde(default)]
    pub events: Vec<Event>,
}

fn default_gain_decimation() -> usize {
    500
}

fn default_joint_decimation() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectConfig {
    pub mass: f64,
    pub inertia: f64,
    pub mu_linear: f64,
    pub mu_rotational: f64,
    #[serde(default)]
    pub gravity: [f64; 2],
    /// `(x, y, θ)` at t = 0; the object starts at rest.
    #[serde(default)]
    pub initial_pose: [f64; 3],
}

impl ObjectConfig {
    pub fn model(&self) -> ObjectModel {
        ObjectModel {
            mass: self.mass,
            inertia: self.inertia,
            mu_linear: self.mu_linear,
            mu_rotational: self.mu_rotational,
            gravity: self.gravity,
        }
    }
}

/// Object parameters as the robots believe them to be.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NominalConfig {
    pub mass: f64,
    pub inertia: f64,
    pub mu_linear: f64,
    pub mu_rotational: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskEllipsoidConfig {
    #[serde(flatten)]
    pub spec: TaskEllipsoidSpec,
    #[serde(default)]
    pub target_scale: TargetScale,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeficiencyGainInit {
    Zero,
    /// `K_fᵀ = B*⁻¹ B̂_k` from the nominal model.
    #[default]
    Nominal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdaptiveConfig {
    pub gamma_x: f64,
    pub gamma_r: f64,
    pub gamma_n: f64,
    pub gamma_f: f64,
    pub gamma_phi: f64,
    pub mu: f64,
    /// Safety margin `δ` as a fraction of the current force limit.
    pub delta_fraction: f64,
    /// `Q = q_scale · I` in the Lyapunov equation.
    pub q_scale: f64,
    pub norm_cap: Option<f64>,
    pub kf_init: DeficiencyGainInit,
    pub rbf: RbfConfig,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self {
            gamma_x: 1.0,
            gamma_r: 1.0,
            gamma_n: 1.0,
            gamma_f: 1.0,
            gamma_phi: 0.5,
            mu: 1.0,
            delta_fraction: 0.1,
            q_scale: 1.0,
            norm_cap: Some(1e3),
            kf_init: DeficiencyGainInit::Nominal,
            rbf: RbfConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RbfConfig {
    pub grid: usize,
    pub lo: f64,
    pub hi: f64,
    pub width: f64,
}

impl Default for RbfConfig {
    fn default() -> Self {
        Self {
            grid: 5,
            lo: -0.5,
            hi: 0.5,
            width: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ManipulabilityConfig {
    /// Scalar `K_M` for null-space ellipsoid tracking.
    pub k_m: f64,
    /// Damping of the manipulability-Jacobian inverse.
    pub damping: f64,
}

impl Default for ManipulabilityConfig {
    fn default() -> Self {
        Self { k_m: 1.0, damping: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArmControlConfig {
    /// Joint velocity feedback toward the resolved-rate reference.
    pub kv: f64,
    /// Task-space position feedback keeping the tool on its grasp point.
    pub clik: f64,
}

impl Default for ArmControlConfig {
    fn default() -> Self {
        Self { kv: 20.0, clik: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotConfig {
    pub id: String,
    /// Grasp offset from the object's centre of mass, object frame.
    pub grasp: [f64; 2],
    /// Fixed force limit for robots without an arm model.
    #[serde(default)]
    pub f_max: Option<[f64; 2]>,
    #[serde(default)]
    pub arm: Option<ArmConfig>,
    #[serde(default)]
    pub controller: Option<ControllerKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmConfig {
    pub link_lengths: Vec<f64>,
    pub link_masses: Vec<f64>,
    /// Defaults to slender rods, `m L² / 12`.
    #[serde(default)]
    pub link_inertias: Option<Vec<f64>>,
    pub torque_limits: Vec<f64>,
    pub initial_angles: Vec<f64>,
    /// Base heading; the base position is placed so the tool starts on the
    /// grasp point.
    #[serde(default)]
    pub base_theta: f64,
}

impl ArmConfig {
    pub fn inertias(&self) -> Vec<f64> {
        match &self.link_inertias {
            Some(v) => v.clone(),
            None => self
                .link_lengths
                .iter()
                .zip(&self.link_masses)
                .map(|(l, m)| m * l * l / 12.0)
                .collect(),
        }
    }
}

/// Command-line overrides applied on top of a scenario file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub duration: Option<f64>,
    pub dt: Option<f64>,
    pub controller: Option<ControllerKind>,
    pub manip_opt: Option<bool>,
    pub bus_delay: Option<u64>,
}

impl ScenarioConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, SimError> {
        let cfg: Self = toml::from_str(s).map_err(|e| SimError::Validation(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::Validation(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Applies overrides. A controller override replaces every robot's kind.
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(d) = o.duration {
            self.duration = d;
        }
        if let Some(dt) = o.dt {
            self.dt = dt;
        }
        if let Some(c) = o.controller {
            self.controller = c;
            for r in &mut self.robots {
                r.controller = None;
            }
        }
        if let Some(m) = o.manip_opt {
            self.manip_opt = m;
        }
        if let Some(d) = o.bus_delay {
            self.bus_delay = d;
        }
    }

    pub fn controller_of(&self, robot: usize) -> ControllerKind {
        self.robots[robot].controller.unwrap_or(self.controller)
    }

    pub fn n_ticks(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn robot_index(&self, id: &str) -> Option<usize> {
        self.robots.iter().position(|r| r.id == id)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Validation(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad(format!("duration must be positive, got {}", self.duration));
        }
        if self.robots.is_empty() {
            return bad("scenario needs at least one robot".into());
        }
        if !(self.warmup >= 0.0 && self.warmup < self.duration) {
            return bad(format!("warmup must lie in [0, duration), got {}", self.warmup));
        }
        if !(self.velocity_noise >= 0.0) {
            return bad("velocity_noise must be nonnegative".into());
        }
        if self.gain_log_decimation == 0 || self.joint_log_decimation == 0 {
            return bad("log decimation must be at least 1".into());
        }
        self.object.model().validate().map_err(SimError::from_config)?;
        let n = &self.nominal;
        if !(n.mass > 0.0 && n.inertia > 0.0 && n.mu_linear > 0.0 && n.mu_rotational > 0.0) {
            return bad("nominal parameters must be positive (the reference model must be Hurwitz)".into());
        }
        self.task.validate().map_err(SimError::from_config)?;
        if let Some(te) = &self.task_ellipsoid {
            te.spec.validate().map_err(SimError::from_config)?;
            if te.spec.dim() != 2 {
                return bad("planar arms need a 2-D task ellipsoid".into());
            }
        }
        let a = &self.adaptive;
        for (name, g) in [
            ("gamma_x", a.gamma_x),
            ("gamma_r", a.gamma_r),
            ("gamma_n", a.gamma_n),
            ("gamma_f", a.gamma_f),
            ("gamma_phi", a.gamma_phi),
            ("mu", a.mu),
            ("q_scale", a.q_scale),
        ] {
            if !(g > 0.0 && g.is_finite()) {
                return bad(format!("{name} must be positive, got {g}"));
            }
        }
        if !(a.delta_fraction > 0.0 && a.delta_fraction < 1.0) {
            return bad(format!("delta_fraction must lie in (0, 1), got {}", a.delta_fraction));
        }
        if let Some(c) = a.norm_cap {
            if !(c > 0.0) {
                return bad("norm_cap must be positive".into());
            }
        }
        crate::adaptive::RbfNetwork::grid(a.rbf.grid, a.rbf.lo, a.rbf.hi, a.rbf.width)
            .map_err(SimError::from_config)?;
        if !(self.manipulability.k_m >= 0.0) {
            return bad("k_m must be nonnegative".into());
        }
        if !(self.manipulability.damping >= 0.0 && self.manipulability.damping.is_finite()) {
            return bad("manipulability damping must be finite and nonnegative".into());
        }
        let ac = &self.arm_control;
        if !(ac.kv >= 0.0 && ac.clik >= 0.0) {
            return bad("arm control gains must be nonnegative".into());
        }

        let mut ids = BTreeSet::new();
        let mut grasps: Vec<[f64; 2]> = Vec::new();
        for r in &self.robots {
            if r.id.is_empty() || !r.id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return bad(format!("robot id `{}` must be nonempty and filename-safe", r.id));
            }
            if !ids.insert(r.id.clone()) {
                return bad(format!("duplicate robot id `{}`", r.id));
            }
            if grasps
                .iter()
                .any(|g| (g[0] - r.grasp[0]).abs() < 1e-12 && (g[1] - r.grasp[1]).abs() < 1e-12)
            {
                return bad(format!("robot `{}` shares a grasp point with another robot", r.id));
            }
            grasps.push(r.grasp);
            match (&r.arm, &r.f_max) {
                (Some(_), Some(_)) => return bad(format!("robot `{}` sets both arm and f_max", r.id)),
                (None, None) => return bad(format!("robot `{}` needs either arm or f_max", r.id)),
                (None, Some(f)) => {
                    if !(f[0] > 0.0 && f[1] > 0.0) {
                        return bad(format!("robot `{}` f_max must be positive", r.id));
                    }
                }
                (Some(arm), None) => {
                    let model = crate::kinematics::ManipulatorModel::new(
                        arm.link_lengths.clone(),
                        arm.link_masses.clone(),
                        arm.inertias(),
                        Default::default(),
                        arm.torque_limits.clone(),
                    )
                    .map_err(|e| SimError::Validation(format!("robot `{}`: {e}", r.id)))?;
                    if arm.initial_angles.len() != model.n_joints() {
                        return bad(format!("robot `{}` initial_angles length mismatch", r.id));
                    }
                }
            }
        }

        let mut last = 0.0;
        for e in &self.events {
            let t = e.time();
            if !(0.0..=self.duration).contains(&t) {
                return bad(format!("event at t = {t} lies outside [0, {}]", self.duration));
            }
            if t < last {
                return bad("events must be sorted by time".into());
            }
            last = t;
            if let Some(id) = e.robot() {
                if self.robot_index(id).is_none() {
                    return bad(format!("event refers to unknown robot `{id}`"));
                }
            }
            e.validate().map_err(SimError::Validation)?;
        }
        Ok(())
    }
}
