//! Timed parameter changes applied during a run.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Event {
    SetObjectMass {
        time: f64,
        value: f64,
    },
    /// Sets both the linear and the rotational viscous coefficients.
    SetFriction {
        time: f64,
        value: f64,
    },
    /// Multiplies the robot's torque limits (or fixed force limit).
    ScaleRobotCapability {
        time: f64,
        robot: String,
        factor: f64,
    },
    DisableRobot {
        time: f64,
        robot: String,
    },
}

impl Event {
    pub fn time(&self) -> f64 {
        match self {
            Event::SetObjectMass { time, .. }
            | Event::SetFriction { time, .. }
            | Event::ScaleRobotCapability { time, .. }
            | Event::DisableRobot { time, .. } => *time,
        }
    }

    pub fn robot(&self) -> Option<&str> {
        match self {
            Event::ScaleRobotCapability { robot, .. } | Event::DisableRobot { robot, .. } => Some(robot),
            _ => None,
        }
    }

    /// Tick at which the event fires.
    pub fn tick(&self, dt: f64) -> usize {
        (self.time() / dt).round() as usize
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            Event::SetObjectMass { value, .. } if !(*value > 0.0) => {
                Err(format!("object mass must be positive, got {value}"))
            }
            Event::SetFriction { value, .. } if !(*value >= 0.0) => {
                Err(format!("friction must be nonnegative, got {value}"))
            }
            Event::ScaleRobotCapability { factor, .. } if !(*factor > 0.0) => {
                Err(format!("capability factor must be positive, got {factor}"))
            }
            _ => Ok(()),
        }
    }
}

/// Events indexed by firing tick, consumed in order.
#[derive(Debug, Clone, Default)]
pub struct EventSchedule {
    pending: Vec<(usize, Event)>,
    next: usize,
}

impl EventSchedule {
    pub fn new(events: &[Event], dt: f64) -> Self {
        let mut pending: Vec<(usize, Event)> = events.iter().map(|e| (e.tick(dt), e.clone())).collect();
        pending.sort_by_key(|(t, _)| *t);
        Self { pending, next: 0 }
    }

    /// Events that fire at `tick`.
    pub fn due(&mut self, tick: usize) -> Vec<Event> {
        let mut out = Vec::new();
        while let Some((t, e)) = self.pending.get(self.next) {
            if *t > tick {
                break;
            }
            out.push(e.clone());
            self.next += 1;
        }
        out
    }

    pub fn ticks(&self) -> Vec<usize> {
        self.pending.iter().map(|(t, _)| *t).collect()
    }
}
