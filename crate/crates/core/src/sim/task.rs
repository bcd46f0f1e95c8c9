//! Reference task profiles shared by every robot on the team.

use nalgebra::{DVector, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::adaptive::{reference_input, ReferenceModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskProfile {
    /// Reference input given directly: `F*_i = A_i sin(ω_i t + φ_i)`.
    ForceSinusoid {
        amplitude: [f64; 3],
        frequency: [f64; 3],
        #[serde(default)]
        phase: [f64; 3],
    },
    /// Circle of radius `r` traversed at angular rate `ω`, starting on the
    /// +x side heading +y: `v = rω (−sin ωt, cos ωt)`.
    Circle { radius: f64, angular_rate: f64 },
    /// Minimum-jerk translation from `start` to `target` over `duration`.
    PointToPoint {
        #[serde(default)]
        start: [f64; 2],
        target: [f64; 2],
        duration: f64,
    },
}

impl TaskProfile {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            TaskProfile::ForceSinusoid {
                amplitude,
                frequency,
                phase,
            } => amplitude.iter().chain(frequency).chain(phase).all(|x| x.is_finite()),
            TaskProfile::Circle { radius, angular_rate } => {
                *radius > 0.0 && radius.is_finite() && angular_rate.is_finite()
            }
            TaskProfile::PointToPoint {
                start,
                target,
                duration,
            } => *duration > 0.0 && start.iter().chain(target).all(|x| x.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid task profile {self:?}")))
        }
    }

    /// Desired object twist and its derivative, for velocity-defined tasks.
    pub fn desired_twist(&self, t: f64) -> Option<(Vector3<f64>, Vector3<f64>)> {
        match *self {
            TaskProfile::ForceSinusoid { .. } => None,
            TaskProfile::Circle {
                radius,
                angular_rate: w,
            } => {
                let (s, c) = (w * t).sin_cos();
                Some((
                    Vector3::new(-radius * w * s, radius * w * c, 0.0),
                    Vector3::new(-radius * w * w * c, -radius * w * w * s, 0.0),
                ))
            }
            TaskProfile::PointToPoint {
                start,
                target,
                duration,
            } => {
                let d = Vector2::new(target[0] - start[0], target[1] - start[1]);
                let tau = t / duration;
                if !(0.0..1.0).contains(&tau) {
                    return Some((Vector3::zeros(), Vector3::zeros()));
                }
                let sd = (30.0 * tau.powi(2) - 60.0 * tau.powi(3) + 30.0 * tau.powi(4)) / duration;
                let sdd = (60.0 * tau - 180.0 * tau.powi(2) + 120.0 * tau.powi(3)) / (duration * duration);
                Some((
                    Vector3::new(d.x * sd, d.y * sd, 0.0),
                    Vector3::new(d.x * sdd, d.y * sdd, 0.0),
                ))
            }
        }
    }

    /// Reference input `F*(t)` as a robot computes it from its nominal model.
    pub fn reference_force(&self, t: f64, model: &ReferenceModel, n_cg: &DVector<f64>) -> Result<DVector<f64>> {
        match self {
            TaskProfile::ForceSinusoid {
                amplitude,
                frequency,
                phase,
            } => Ok(DVector::from_iterator(
                3,
                (0..3).map(|i| amplitude[i] * (frequency[i] * t + phase[i]).sin()),
            )),
            _ => {
                let (v, a) = self.desired_twist(t).expect("velocity task");
                reference_input(
                    model,
                    &DVector::from_column_slice(v.as_slice()),
                    &DVector::from_column_slice(a.as_slice()),
                    n_cg,
                )
            }
        }
    }

    /// Starting value of the reference twist.
    pub fn initial_reference(&self) -> DVector<f64> {
        match self.desired_twist(0.0) {
            Some((v, _)) => DVector::from_column_slice(v.as_slice()),
            None => DVector::zeros(3),
        }
    }

    /// Unit direction of a point-to-point motion.
    pub fn motion_direction(&self) -> Option<Vector2<f64>> {
        match *self {
            TaskProfile::PointToPoint { start, target, .. } => {
                let d = Vector2::new(target[0] - start[0], target[1] - start[1]);
                (d.norm() > 0.0).then(|| d.normalize())
            }
            _ => None,
        }
    }
}
