mod common;

use std::path::PathBuf;

use coman::object::{object_acceleration, step_object, wrench_from_forces, ObjectModel, ObjectState};
use coman::sim::{self, ControllerKind, Event, RunOutput, ScenarioConfig, SimError, Simulation};
use nalgebra::{DVector, Vector2, Vector3};

fn scenario(name: &str) -> ScenarioConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.toml"));
    ScenarioConfig::load(path).unwrap()
}

fn short_ability(duration: f64) -> ScenarioConfig {
    let mut cfg = scenario("ablation_ability");
    cfg.duration = duration;
    cfg
}

fn unlimited(mut cfg: ScenarioConfig) -> ScenarioConfig {
    for r in &mut cfg.robots {
        r.f_max = Some([1e6, 1e6]);
    }
    cfg
}

fn first_broadcast(out: &RunOutput) -> Option<usize> {
    out.logs.bus.first().map(|b| b.tick)
}

#[test]
fn object_decays_like_closed_form() {
    let model = ObjectModel {
        mass: 20.0,
        inertia: 20.0,
        mu_linear: 0.2,
        mu_rotational: 0.3,
        gravity: [0.0, 0.0],
    };
    let v0 = Vector3::new(0.3, -0.2, 0.5);
    let mut s = ObjectState {
        velocity: v0,
        ..ObjectState::at_rest(1.0, 2.0, 0.1)
    };
    let dt = 0.002;
    let n: i32 = 5000;
    for _ in 0..n {
        s = step_object(&model, &s, &Vector3::zeros(), dt);
    }
    let t = n as f64 * dt;
    let (kl, kr) = (model.mu_linear / model.mass, model.mu_rotational / model.inertia);
    let v = Vector3::new(v0.x * (-kl * t).exp(), v0.y * (-kl * t).exp(), v0.z * (-kr * t).exp());
    assert!((s.velocity - v).amax() < 1e-6, "{:.2e}", (s.velocity - v).amax());
    // positions advance with the updated velocity, so sum the geometric series
    let travel = |v0: f64, k: f64| {
        let r = 1.0 - k * dt;
        dt * v0 * r * (1.0 - r.powi(n)) / (1.0 - r)
    };
    assert!((s.position.x - 1.0 - travel(v0.x, kl)).abs() < 1e-10);
    assert!((s.position.y - 2.0 - travel(v0.y, kl)).abs() < 1e-10);
    assert!((s.orientation - 0.1 - travel(v0.z, kr)).abs() < 1e-10);
}

#[test]
fn repeated_runs_write_identical_logs() {
    let mut cfg = short_ability(8.0);
    cfg.velocity_noise = 1e-4;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = sim::run_scenario(&cfg).unwrap();
        sim::write_outputs(dir.path(), &cfg, &out).unwrap();
    }
    let mut names: Vec<_> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.iter().any(|n| n == "object.csv"));
    for n in names {
        let x = std::fs::read(a.path().join(&n)).unwrap();
        let y = std::fs::read(b.path().join(&n)).unwrap();
        assert!(x == y, "{n:?} differs between runs");
    }
}

#[test]
fn seed_changes_noisy_runs() {
    let mut cfg = short_ability(1.0);
    cfg.velocity_noise = 1e-3;
    let a = sim::run_scenario(&cfg).unwrap();
    cfg.seed += 1;
    let b = sim::run_scenario(&cfg).unwrap();
    assert_ne!(a.logs.robots, b.logs.robots);
}

#[test]
fn agents_ignore_each_others_gains_until_broadcast() {
    let cfg = short_ability(10.0);
    let run = |perturb: bool| {
        let mut s = Simulation::new(&cfg).unwrap();
        if perturb {
            let g = s.agents_mut()[1].gains_mut();
            g.rates.gamma_f *= 7.0;
            g.k_f *= 3.0;
        }
        s.run_to_end().unwrap()
    };
    let base = run(false);
    let other = run(true);
    let first = first_broadcast(&base).expect("scenario saturates");
    assert_eq!(first_broadcast(&other), Some(first));
    assert_eq!(base.logs.object[..=first], other.logs.object[..=first]);
    assert_eq!(base.logs.robots[0].1[..=first], other.logs.robots[0].1[..=first]);
    assert_eq!(base.logs.robots[2].1[..=first], other.logs.robots[2].1[..=first]);
    assert_ne!(base.logs.bus, other.logs.bus);
}

#[test]
fn silent_bus_without_saturation() {
    let cfg = unlimited(short_ability(20.0));
    let run = |perturb: bool| {
        let mut s = Simulation::new(&cfg).unwrap();
        if perturb {
            s.agents_mut()[0].gains_mut().rates.gamma_f *= 5.0;
        }
        s.run_to_end().unwrap()
    };
    let out = run(false);
    assert!(out.logs.bus.is_empty());
    for row in &out.logs.object {
        assert_eq!(
            [row.vx_ref, row.vy_ref, row.wz_ref],
            [row.vx_ref_mod, row.vy_ref_mod, row.wz_ref_mod]
        );
    }
    for (_, rows) in &out.logs.robots {
        assert!(rows.iter().all(|r| r.saturated == 0 && r.dfx == 0.0 && r.dfy == 0.0));
    }
    assert_eq!(out.logs, run(true).logs);
}

#[test]
fn unlimited_robots_make_both_controllers_agree() {
    let mut cfg = unlimited(short_ability(20.0));
    let aware = sim::run_scenario(&cfg).unwrap();
    cfg.controller = ControllerKind::AbilityAgnostic;
    let agnostic = sim::run_scenario(&cfg).unwrap();
    assert_eq!(aware.logs.object, agnostic.logs.object);
}

#[test]
fn events_take_effect_at_their_tick() {
    let cfg = short_ability(10.0);
    let mut with_event = cfg.clone();
    with_event.events = vec![Event::SetObjectMass { time: 5.0, value: 30.0 }];
    let base = sim::run_scenario(&cfg).unwrap();
    let ev = sim::run_scenario(&with_event).unwrap();
    let tick = 2500;
    assert_eq!(base.logs.object[..=tick], ev.logs.object[..=tick]);
    for k in 0..3 {
        assert_eq!(base.logs.robots[k].1[..=tick], ev.logs.robots[k].1[..=tick]);
    }
    assert_eq!(base.wrenches[..=tick], ev.wrenches[..=tick]);
    assert_ne!(base.logs.object[tick + 1], ev.logs.object[tick + 1]);
}

#[test]
fn disabled_robot_exerts_nothing() {
    let mut cfg = short_ability(4.0);
    cfg.events = vec![Event::DisableRobot {
        time: 2.0,
        robot: "C".into(),
    }];
    let out = sim::run_scenario(&cfg).unwrap();
    let rows = &out.logs.robots[2].1;
    assert!(rows[1000..].iter().all(|r| r.fx_bar == 0.0 && r.fy_bar == 0.0));
    assert!(out.logs.bus.iter().filter(|b| b.tick >= 1000).all(|b| b.sender != "C"));
}

fn check_accounting(cfg: &ScenarioConfig) {
    let out = sim::run_scenario(cfg).unwrap();
    let plant = cfg.object.model();
    let offsets: Vec<Vector2<f64>> = cfg
        .robots
        .iter()
        .map(|r| Vector2::new(r.grasp[0], r.grasp[1]))
        .collect();
    let n = out.logs.object.len();
    assert_eq!(out.wrenches.len(), n);
    for t in 0..n {
        let row = &out.logs.object[t];
        let forces: Vec<DVector<f64>> = out
            .logs
            .robots
            .iter()
            .map(|(_, rows)| DVector::from_column_slice(&[rows[t].fx_bar, rows[t].fy_bar]))
            .collect();
        let world: Vec<Vector2<f64>> = offsets.iter().map(|r| coman::object::rotate(*r, row.theta)).collect();
        let w = wrench_from_forces(&forces, &world).unwrap();
        assert!((w - out.wrenches[t]).amax() < 1e-12, "tick {t}");
        if t + 1 < n {
            let next = &out.logs.object[t + 1];
            let state = ObjectState {
                position: Vector2::new(row.x, row.y),
                orientation: row.theta,
                velocity: Vector3::new(row.vx, row.vy, row.wz),
            };
            let acc = object_acceleration(&plant, &state, &w);
            let fd = Vector3::new(next.vx - row.vx, next.vy - row.vy, next.wz - row.wz) / cfg.dt;
            assert!((acc - fd).amax() < 1e-9, "tick {t}: {:.2e}", (acc - fd).amax());
        }
    }
}

#[test]
fn applied_wrench_is_sum_of_logged_forces() {
    check_accounting(&short_ability(5.0));
}

#[test]
fn applied_wrench_is_sum_of_logged_forces_with_arms() {
    let mut cfg = scenario("ablation_da3c_manip");
    cfg.duration = 3.0;
    check_accounting(&cfg);
}

#[test]
fn delayed_bus_stays_stable() {
    let mut cfg = scenario("ablation_ability");
    cfg.bus_delay = 5;
    let out = sim::run_scenario(&cfg).unwrap();
    let first = first_broadcast(&out).unwrap();
    assert!(out.final_object.is_finite());
    assert!(out
        .logs
        .object
        .iter()
        .all(|r| r.vx.abs() < 5.0 && r.vy.abs() < 5.0 && r.wz.abs() < 5.0));
    // the modified reference does not move before the first delivery
    let row = &out.logs.object[first + 5];
    assert_eq!([row.vx_ref, row.vy_ref], [row.vx_ref_mod, row.vy_ref_mod]);
    assert!(out.metrics.mean_abs_error_modified[0] < 0.1 && out.metrics.mean_abs_error_modified[1] < 0.1);
}

#[test]
fn configs_without_robots_are_rejected() {
    let mut cfg = short_ability(1.0);
    cfg.robots.clear();
    assert!(matches!(cfg.validate(), Err(SimError::Validation(_))));
    assert!(matches!(Simulation::new(&cfg), Err(SimError::Validation(_))));
}

#[test]
fn bad_events_are_rejected() {
    let mut cfg = short_ability(1.0);
    cfg.events = vec![Event::DisableRobot {
        time: 0.5,
        robot: "Z".into(),
    }];
    assert!(cfg.validate().is_err());
    cfg.events = vec![Event::SetObjectMass { time: 0.5, value: -1.0 }];
    assert!(cfg.validate().is_err());
    cfg.events = vec![Event::SetFriction { time: 5.0, value: 0.1 }];
    assert!(cfg.validate().is_err(), "event after the end of the run");
}

#[test]
fn report_recomputes_written_metrics() {
    let cfg = short_ability(5.0);
    let out = sim::run_scenario(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    sim::write_outputs(dir.path(), &cfg, &out).unwrap();
    let m = sim::report_from_dir(dir.path(), None).unwrap();
    assert!((m.mean_abs_error_modified[0] - out.metrics.mean_abs_error_modified[0]).abs() < 1e-12);
    assert!((m.mean_abs_error_original[1] - out.metrics.mean_abs_error_original[1]).abs() < 1e-12);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("metrics.json")).unwrap()).unwrap();
    assert!(json.get("mean_abs_error_modified").is_some());
}

#[test]
fn scenario_survives_toml_roundtrip() {
    for name in [
        "ablation_ability",
        "ablation_da3c_manip",
        "ablation_manip",
        "adaptation_events",
    ] {
        let cfg = scenario(name);
        cfg.validate().unwrap();
        assert_eq!(
            ScenarioConfig::from_toml_str(&cfg.to_toml_string()).unwrap(),
            cfg,
            "{name}"
        );
    }
}
