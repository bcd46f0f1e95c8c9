//! Lock-step scheduler tying agents, bus, events and the object plant together.

use std::path::Path;

use nalgebra::{DVector, Vector2, Vector3};

use crate::adaptive::ReferenceModel;
use crate::object::{rotate, step_object, wrench_from_forces, ObjectModel, ObjectState};

use super::agent::{Observation, RobotAgent};
use super::bus::{payload_sum, BroadcastMessage, MessageBus};
use super::events::{Event, EventSchedule};
use super::logs::{BusRow, GainRow, JointRow, ObjectRow, PolytopeRow, RobotRow, RunLogs};
use super::metrics::{metrics_report, RunMetrics};
use super::scenario::ScenarioConfig;
use super::SimError;

/// Any state magnitude above this aborts the run.
pub const BLOWUP_LIMIT: f64 = 1e6;

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: RunMetrics,
    pub logs: RunLogs,
    /// Net wrench applied to the object in each tick.
    pub wrenches: Vec<Vector3<f64>>,
    /// Per robot, `max_i |τ_i| / τ_max,i` in each tick; empty for robots
    /// without an arm.
    pub torque_ratio: Vec<Vec<f64>>,
    pub initial_joints: Vec<Option<DVector<f64>>>,
    pub agents: Vec<RobotAgent>,
    pub final_object: ObjectState,
}

/// A scenario in progress. Most callers want [`run_scenario`].
#[derive(Debug, Clone)]
pub struct Simulation {
    cfg: ScenarioConfig,
    plant: ObjectModel,
    object: ObjectState,
    offsets: Vec<Vector2<f64>>,
    agents: Vec<RobotAgent>,
    bus: MessageBus,
    events: EventSchedule,
    original: ReferenceModel,
    tick: usize,
    logs: RunLogs,
    wrenches: Vec<Vector3<f64>>,
    torque_ratio: Vec<Vec<f64>>,
    initial_joints: Vec<Option<DVector<f64>>>,
}

impl Simulation {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        let plant = cfg.object.model();
        let [x, y, theta] = cfg.object.initial_pose;
        let mut object = ObjectState::at_rest(x, y, theta);
        object.velocity = Vector3::from_column_slice(cfg.task.initial_reference().as_slice());
        let offsets: Vec<Vector2<f64>> = cfg
            .robots
            .iter()
            .map(|r| Vector2::new(r.grasp[0], r.grasp[1]))
            .collect();
        let mut agents = Vec::with_capacity(cfg.robots.len());
        for (k, r) in offsets.iter().enumerate() {
            let rw = rotate(*r, theta);
            let agent = RobotAgent::new(cfg, k, object.position + rw, rw).map_err(SimError::from_config)?;
            agents.push(agent);
        }
        let n = &cfg.nominal;
        let original = ReferenceModel::planar(
            n.mass,
            n.inertia,
            n.mu_linear,
            n.mu_rotational,
            cfg.object.gravity,
            cfg.task.initial_reference(),
        )
        .map_err(SimError::from_config)?;
        let initial_joints = agents
            .iter()
            .map(|a| a.joint_state().map(|j| j.angles.clone()))
            .collect();
        let n_ticks = cfg.n_ticks();
        let logs = RunLogs {
            object: Vec::with_capacity(n_ticks),
            robots: cfg
                .robots
                .iter()
                .map(|r| (r.id.clone(), Vec::with_capacity(n_ticks)))
                .collect(),
            ..Default::default()
        };
        let torque_ratio = agents
            .iter()
            .map(|a| {
                if a.model().is_some() {
                    Vec::with_capacity(n_ticks)
                } else {
                    Vec::new()
                }
            })
            .collect();
        Ok(Self {
            plant,
            object,
            offsets,
            agents,
            bus: MessageBus::new(cfg.bus_delay as usize),
            events: EventSchedule::new(&cfg.events, cfg.dt),
            original,
            tick: 0,
            logs,
            wrenches: Vec::with_capacity(n_ticks),
            torque_ratio,
            initial_joints,
            cfg: cfg.clone(),
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn agents(&self) -> &[RobotAgent] {
        &self.agents
    }

    pub fn agents_mut(&mut self) -> &mut [RobotAgent] {
        &mut self.agents
    }

    pub fn object(&self) -> &ObjectState {
        &self.object
    }

    pub fn plant(&self) -> &ObjectModel {
        &self.plant
    }

    pub fn tick(&self) -> usize {
        self.tick
    }

    pub fn is_finished(&self) -> bool {
        self.tick >= self.cfg.n_ticks()
    }

    fn apply_event(&mut self, e: &Event) {
        log::info!("tick {}: {:?}", self.tick, e);
        match e {
            Event::SetObjectMass { value, .. } => self.plant.mass = *value,
            Event::SetFriction { value, .. } => {
                self.plant.mu_linear = *value;
                self.plant.mu_rotational = *value;
            }
            Event::ScaleRobotCapability { robot, factor, .. } => {
                if let Some(k) = self.cfg.robot_index(robot) {
                    self.agents[k].scale_capability(*factor);
                }
            }
            Event::DisableRobot { robot, .. } => {
                if let Some(k) = self.cfg.robot_index(robot) {
                    self.agents[k].disable();
                }
            }
        }
    }

    /// Advances one tick.
    pub fn step(&mut self) -> Result<(), SimError> {
        let tick = self.tick;
        let dt = self.cfg.dt;
        let time = tick as f64 * dt;
        let numerical = |what: String| SimError::Numerical { tick, what };

        for e in self.events.due(tick) {
            self.apply_event(&e);
        }

        let world_offsets: Vec<Vector2<f64>> = self
            .offsets
            .iter()
            .map(|r| rotate(*r, self.object.orientation))
            .collect();
        let mut actions = Vec::with_capacity(self.agents.len());
        for (k, agent) in self.agents.iter_mut().enumerate() {
            let obs = Observation {
                tick,
                time,
                object_velocity: self.object.velocity,
                grasp_offset: world_offsets[k],
                grasp_position: self.object.position + world_offsets[k],
            };
            actions.push(
                agent
                    .act(&obs)
                    .map_err(|e| numerical(format!("robot {}: {e}", agent.id)))?,
            );
        }

        for (k, a) in actions.iter().enumerate() {
            if let Some(payload) = &a.broadcast {
                self.logs.bus.push(BusRow {
                    tick,
                    sender: self.agents[k].id.clone(),
                    payload_x: payload[0],
                    payload_y: payload[1],
                    payload_wz: payload[2],
                });
                self.bus.post(BroadcastMessage {
                    sender: k,
                    payload: payload.clone(),
                    tick,
                });
            }
        }
        let delivered = self.bus.deliver(tick);
        let inbox_sum = payload_sum(&delivered);

        let ref_mod = self
            .agents
            .iter()
            .find(|a| a.is_enabled())
            .unwrap_or(&self.agents[0])
            .reference_state()
            .clone();
        let ref_orig = self.original.state.clone();

        self.log_tick(time, &ref_orig, &ref_mod, &actions);

        for agent in &mut self.agents {
            agent
                .update(inbox_sum.as_ref(), dt)
                .map_err(|e| numerical(format!("robot {}: {e}", agent.id)))?;
        }

        let forces: Vec<DVector<f64>> = actions.iter().map(|a| a.applied.clone()).collect();
        let wrench = wrench_from_forces(&forces, &world_offsets).map_err(|e| numerical(e.to_string()))?;
        self.wrenches.push(wrench);
        self.object = step_object(&self.plant, &self.object, &wrench, dt);

        let n_cg = self.original.n_cg(self.object.velocity.z);
        let f_star = self
            .cfg
            .task
            .reference_force(time, &self.original, &n_cg)
            .map_err(|e| numerical(e.to_string()))?;
        self.original.step(&f_star, None, &n_cg, dt);

        let obj_norm = self.object.position.amax().max(self.object.velocity.amax());
        if !self.object.is_finite() || obj_norm > BLOWUP_LIMIT {
            return Err(numerical(format!("object state diverged (|x| = {obj_norm:.3e})")));
        }
        for agent in &self.agents {
            let m = agent.state_norm();
            if m > BLOWUP_LIMIT {
                return Err(numerical(format!("robot {} state diverged (|s| = {m:.3e})", agent.id)));
            }
        }
        self.tick += 1;
        Ok(())
    }

    fn log_tick(
        &mut self,
        time: f64,
        ref_orig: &DVector<f64>,
        ref_mod: &DVector<f64>,
        actions: &[super::agent::Action],
    ) {
        let o = &self.object;
        self.logs.object.push(ObjectRow {
            time,
            x: o.position.x,
            y: o.position.y,
            theta: o.orientation,
            vx: o.velocity.x,
            vy: o.velocity.y,
            wz: o.velocity.z,
            vx_ref: ref_orig[0],
            vy_ref: ref_orig[1],
            wz_ref: ref_orig[2],
            vx_ref_mod: ref_mod[0],
            vy_ref_mod: ref_mod[1],
            wz_ref_mod: ref_mod[2],
        });
        for (k, a) in actions.iter().enumerate() {
            self.logs.robots[k].1.push(RobotRow {
                time,
                fx_cmd: a.commanded[0],
                fy_cmd: a.commanded[1],
                fx_bar: a.applied[0],
                fy_bar: a.applied[1],
                dfx: a.deficiency[0],
                dfy: a.deficiency[1],
                fmax_x: a.f_max[0],
                fmax_y: a.f_max[1],
                saturated: a.saturated as u8,
            });
        }
        for (k, agent) in self.agents.iter().enumerate() {
            if let Some(r) = agent.torque_ratio() {
                self.torque_ratio[k].push(if agent.is_enabled() { r } else { 0.0 });
            }
        }
        if self.tick.is_multiple_of(self.cfg.gain_log_decimation) {
            for agent in &self.agents {
                for (name, m) in agent.gains().named() {
                    for c in 0..m.ncols() {
                        for r in 0..m.nrows() {
                            self.logs.gains.push(GainRow {
                                time,
                                robot_id: agent.id.clone(),
                                gain_name: name.to_string(),
                                row: r,
                                col: c,
                                value: m[(r, c)],
                            });
                        }
                    }
                }
                if let Some(vs) = agent.polytope_vertices() {
                    for (i, v) in vs.iter().enumerate() {
                        self.logs.polytopes.push(PolytopeRow {
                            time,
                            robot_id: agent.id.clone(),
                            vertex: i,
                            fx: v[0],
                            fy: v[1],
                        });
                    }
                }
            }
        }
        if self.tick.is_multiple_of(self.cfg.joint_log_decimation) {
            for agent in &self.agents {
                if let (Some(js), Some(tau), Some(model)) = (agent.joint_state(), agent.joint_torque(), agent.model()) {
                    for i in 0..js.angles.len() {
                        self.logs.joints.push(JointRow {
                            time,
                            robot_id: agent.id.clone(),
                            joint: i,
                            q: js.angles[i],
                            qd: js.velocities[i],
                            tau: tau[i],
                            tau_max: model.torque_limits[i],
                        });
                    }
                }
            }
        }
    }

    pub fn finish(self) -> Result<RunOutput, SimError> {
        let metrics = metrics_report(&self.logs, self.cfg.warmup)?;
        Ok(RunOutput {
            metrics,
            logs: self.logs,
            wrenches: self.wrenches,
            torque_ratio: self.torque_ratio,
            initial_joints: self.initial_joints,
            agents: self.agents,
            final_object: self.object,
        })
    }

    pub fn run_to_end(mut self) -> Result<RunOutput, SimError> {
        while !self.is_finished() {
            self.step()?;
        }
        self.finish()
    }
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutput, SimError> {
    Simulation::new(cfg)?.run_to_end()
}

/// Writes logs, `metrics.json` and the resolved scenario into `dir`.
pub fn write_outputs(dir: &Path, cfg: &ScenarioConfig, out: &RunOutput) -> Result<(), SimError> {
    std::fs::create_dir_all(dir)?;
    out.logs.write(dir)?;
    write_metrics(dir, &out.metrics)?;
    std::fs::write(dir.join("scenario.toml"), cfg.to_toml_string())?;
    Ok(())
}

pub fn write_metrics(dir: &Path, metrics: &RunMetrics) -> Result<(), SimError> {
    let json = serde_json::to_string_pretty(metrics).map_err(|e| SimError::Logs(e.to_string()))?;
    std::fs::write(dir.join("metrics.json"), json + "\n")?;
    Ok(())
}

/// Recomputes metrics from the logs in `dir`. The warm-up window comes from
/// `warmup` if given, else from a previous `metrics.json`, else 0.
pub fn report_from_dir(dir: &Path, warmup: Option<f64>) -> Result<RunMetrics, SimError> {
    let logs = RunLogs::read(dir)?;
    let warmup = match warmup {
        Some(w) => w,
        None => std::fs::read_to_string(dir.join("metrics.json"))
            .ok()
            .and_then(|s| serde_json::from_str::<serde_json::Value>(&s).ok())
            .and_then(|v| v.get("warmup").and_then(|w| w.as_f64()))
            .unwrap_or(0.0),
    };
    metrics_report(&logs, warmup)
}
