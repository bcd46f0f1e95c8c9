//! The shared planar object: rigid-body dynamics with viscous friction and
//! grasp-point kinematics.

use nalgebra::{DVector, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectModel {
    pub mass: f64,
    /// Scalar inertia about the vertical axis through the centre of mass.
    pub inertia: f64,
    /// Viscous linear friction, N·s/m.
    pub mu_linear: f64,
    /// Viscous rotational friction, N·m·s/rad.
    pub mu_rotational: f64,
    #[serde(default)]
    pub gravity: [f64; 2],
}

impl ObjectModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.inertia > 0.0) {
            return Err(Error::InvalidParameter(
                "object mass and inertia must be positive".into(),
            ));
        }
        if !(self.mu_linear >= 0.0 && self.mu_rotational >= 0.0) {
            return Err(Error::InvalidParameter(
                "friction coefficients must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObjectState {
    pub position: Vector2<f64>,
    pub orientation: f64,
    /// `(v_x, v_y, ω_z)`.
    pub velocity: Vector3<f64>,
}

impl ObjectState {
    pub fn at_rest(x: f64, y: f64, theta: f64) -> Self {
        Self {
            position: Vector2::new(x, y),
            orientation: theta,
            velocity: Vector3::zeros(),
        }
    }

    pub fn kinetic_energy(&self, model: &ObjectModel) -> f64 {
        let v = self.velocity;
        0.5 * model.mass * (v.x * v.x + v.y * v.y) + 0.5 * model.inertia * v.z * v.z
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().chain(self.velocity.iter()).all(|x| x.is_finite()) && self.orientation.is_finite()
    }
}

/// Grasp offsets from the object's centre of mass, one per robot, in the
/// object frame.
#[derive(Debug, Clone, PartialEq)]
pub struct GraspMap {
    pub offsets: Vec<Vector2<f64>>,
}

impl GraspMap {
    /// Offset of robot `k` rotated into the world frame.
    pub fn world_offset(&self, k: usize, orientation: f64) -> Vector2<f64> {
        rotate(self.offsets[k], orientation)
    }

    pub fn world_offsets(&self, orientation: f64) -> Vec<Vector2<f64>> {
        self.offsets.iter().map(|r| rotate(*r, orientation)).collect()
    }
}

pub fn rotate(r: Vector2<f64>, angle: f64) -> Vector2<f64> {
    let (s, c) = angle.sin_cos();
    Vector2::new(c * r.x - s * r.y, s * r.x + c * r.y)
}

/// Planar grasp matrix `G_pk`; its transpose maps the object twist to the
/// grasp-point twist, `ẋ_k = G_pkᵀ ẋ_o`.
pub fn grasp_matrix(r_world: Vector2<f64>) -> Matrix3<f64> {
    Matrix3::new(
        1.0, 0.0, 0.0, //
        0.0, 1.0, 0.0, //
        -r_world.y, r_world.x, 1.0,
    )
}

/// `Ġ_pk` for rotation rate `ω`, using `ṙ = ω × r`.
pub fn grasp_matrix_dot(r_world: Vector2<f64>, omega: f64) -> Matrix3<f64> {
    let rdot = Vector2::new(-omega * r_world.y, omega * r_world.x);
    Matrix3::new(
        0.0, 0.0, 0.0, //
        0.0, 0.0, 0.0, //
        -rdot.y, rdot.x, 0.0,
    )
}

pub fn grasp_velocity(g: &Matrix3<f64>, object_twist: &Vector3<f64>) -> Vector3<f64> {
    g.transpose() * object_twist
}

/// `ẍ_k = G_pkᵀ ẍ_o + Ġ_pkᵀ ẋ_o`.
pub fn grasp_acceleration(
    g: &Matrix3<f64>,
    g_dot: &Matrix3<f64>,
    object_twist: &Vector3<f64>,
    object_accel: &Vector3<f64>,
) -> Vector3<f64> {
    g.transpose() * object_accel + g_dot.transpose() * object_twist
}

/// Net wrench `(F_x, F_y, τ_z)` on the object from per-robot forces applied at
/// world-frame offsets. Three-component forces carry an extra pure torque.
pub fn wrench_from_forces(forces: &[DVector<f64>], offsets_world: &[Vector2<f64>]) -> Result<Vector3<f64>> {
    if forces.len() != offsets_world.len() {
        return Err(Error::DimensionMismatch {
            context: "forces vs grasp offsets",
            expected: offsets_world.len(),
            got: forces.len(),
        });
    }
    let mut w = Vector3::zeros();
    for (f, r) in forces.iter().zip(offsets_world) {
        match f.len() {
            2 | 3 => {
                w.x += f[0];
                w.y += f[1];
                w.z += r.x * f[1] - r.y * f[0];
                if f.len() == 3 {
                    w.z += f[2];
                }
            }
            n => {
                return Err(Error::DimensionMismatch {
                    context: "robot force",
                    expected: 2,
                    got: n,
                })
            }
        }
    }
    Ok(w)
}

/// Object acceleration `(v̇, ω̇)` under the applied wrench.
pub fn object_acceleration(model: &ObjectModel, state: &ObjectState, wrench: &Vector3<f64>) -> Vector3<f64> {
    let v = state.velocity;
    Vector3::new(
        (wrench.x - model.mu_linear * v.x) / model.mass + model.gravity[0],
        (wrench.y - model.mu_linear * v.y) / model.mass + model.gravity[1],
        (wrench.z - model.mu_rotational * v.z) / model.inertia,
    )
}

/// Semi-implicit Euler step: velocity first, then pose with the new velocity.
pub fn step_object(model: &ObjectModel, state: &ObjectState, wrench: &Vector3<f64>, dt: f64) -> ObjectState {
    let a = object_acceleration(model, state, wrench);
    let velocity = state.velocity + a * dt;
    ObjectState {
        position: state.position + Vector2::new(velocity.x, velocity.y) * dt,
        orientation: state.orientation + velocity.z * dt,
        velocity,
    }
}
