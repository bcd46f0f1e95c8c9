//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod common;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use coman::adaptive::{is_hurwitz, lyapunov_solve};
use coman::capability::{force_polytope, max_force_along};
use coman::ellipsoid::{mandel_unvec, mandel_vec, spd_exp, spd_log, SpdEllipsoid};
use coman::kinematics::{forward_kinematics, jacobian, jacobian_partials, TaskSpace};
use coman::linalg;
use coman::manipulability::{torque_weights, wfme, wfme_jacobian};
use coman::object::{step_object, ObjectModel, ObjectState};
use coman::sim::{self, ControllerKind, RunOutput, ScenarioConfig, Simulation};
use common::*;
use nalgebra::{DMatrix, DVector, Vector3};
use rand::Rng;

const C1_MAX_ERROR: f64 = 0.02;
const C1_MAX_RUNTIME_S: f64 = 60.0;
const C2_MIN_RATIO: f64 = 2.0;
const C3_MAX_Y_RATIO: f64 = 0.75;
const C3_MAX_X_SPREAD: f64 = 0.20;
const C4_MIN_GAIN: f64 = 1.2;
const C5_TRANSIENT_S: f64 = 5.0;

const TOL_JACOBIAN: f64 = 1e-6;
const TOL_MANIP_JACOBIAN: f64 = 1e-4;
const TOL_LOG_EXP: f64 = 1e-9;
const TOL_MANDEL: f64 = 1e-12;
const TOL_BISECTION: f64 = 1e-9;
const TOL_LYAPUNOV: f64 = 1e-9;
const TOL_DECAY: f64 = 1e-6;

struct Verdict {
    pass: bool,
    detail: String,
}

type Check = fn() -> Result<Verdict, String>;

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn scenario(name: &str) -> ScenarioConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.toml"));
    ScenarioConfig::load(path).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn run(cfg: &ScenarioConfig) -> Result<RunOutput, String> {
    sim::run_scenario(cfg).map_err(|e| format!("{}: {e}", cfg.name))
}

fn criterion_1() -> Result<Verdict, String> {
    let cfg = scenario("ablation_ability");
    let started = Instant::now();
    let out = run(&cfg)?;
    let secs = started.elapsed().as_secs_f64();
    let e = out.metrics.mean_abs_error_modified;
    Ok(verdict(
        e[0] <= C1_MAX_ERROR && e[1] <= C1_MAX_ERROR && secs < C1_MAX_RUNTIME_S,
        format!(
            "error vs modified reference ({:.4}, {:.4}) m/s, limit {C1_MAX_ERROR}; {secs:.1} s wall",
            e[0], e[1]
        ),
    ))
}

fn criterion_2() -> Result<Verdict, String> {
    let mut cfg = scenario("ablation_ability");
    let aware = run(&cfg)?.metrics.mean_abs_error_modified;
    cfg.controller = ControllerKind::AbilityAgnostic;
    let agnostic = run(&cfg)?.metrics.mean_abs_error_original;
    let ratio = [agnostic[0] / aware[0], agnostic[1] / aware[1]];
    Ok(verdict(
        ratio[0] >= C2_MIN_RATIO && ratio[1] >= C2_MIN_RATIO,
        format!(
            "agnostic ({:.4}, {:.4}) vs aware ({:.4}, {:.4}) m/s, ratios ({:.1}, {:.1}), need {C2_MIN_RATIO}",
            agnostic[0], agnostic[1], aware[0], aware[1], ratio[0], ratio[1]
        ),
    ))
}

fn criterion_3() -> Result<Verdict, String> {
    let mut cfg = scenario("ablation_da3c_manip");
    cfg.manip_opt = true;
    let on = run(&cfg)?.metrics;
    cfg.manip_opt = false;
    let off = run(&cfg)?.metrics;
    let (a, b) = (on.mean_abs_error_original, off.mean_abs_error_original);
    let y_ratio = a[1] / b[1];
    let x_spread = (a[0] - b[0]).abs() / a[0].min(b[0]);
    Ok(verdict(
        y_ratio <= C3_MAX_Y_RATIO && x_spread <= C3_MAX_X_SPREAD,
        format!(
            "on ({:.4}, {:.4}) off ({:.4}, {:.4}) m/s: y ratio {y_ratio:.2} (max {C3_MAX_Y_RATIO}), x spread {:.0}% (max {:.0}%); vs modified reference on ({:.4}, {:.4}) off ({:.4}, {:.4})",
            a[0], a[1], b[0], b[1], x_spread * 100.0, C3_MAX_X_SPREAD * 100.0,
            on.mean_abs_error_modified[0], on.mean_abs_error_modified[1],
            off.mean_abs_error_modified[0], off.mean_abs_error_modified[1],
        ),
    ))
}

fn criterion_4() -> Result<Verdict, String> {
    let cfg = scenario("ablation_manip");
    let dir = cfg.task.motion_direction().ok_or("task has no motion direction")?;
    let d = DVector::from_column_slice(&[dir.x, dir.y]);
    let out = run(&cfg)?;
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, agent) in out.agents.iter().enumerate() {
        let model = agent.model().ok_or("robot without an arm")?;
        let q0 = out.initial_joints[k].as_ref().ok_or("missing initial joints")?;
        let q1 = &agent.joint_state().ok_or("missing joint state")?.angles;
        let zero = DVector::zeros(model.n_joints());
        let along = |q: &DVector<f64>| -> Result<f64, String> {
            let j = jacobian(model, q, TaskSpace::Translation).map_err(e2s)?;
            Ok(max_force_along(&j, &model.torque_limits, &zero, &d).map_err(e2s)?.f_max)
        };
        let (before, after) = (along(q0)?, along(q1)?);
        let gain = after / before;
        pass &= gain >= C4_MIN_GAIN;
        parts.push(format!("{} {before:.3}→{after:.3} N (×{gain:.2})", agent.id));
    }
    Ok(verdict(pass, format!("{}; need ×{C4_MIN_GAIN}", parts.join(", "))))
}

fn criterion_5() -> Result<Verdict, String> {
    let cfg = scenario("adaptation_events");
    let out = run(&cfg)?;
    let windows: Vec<(f64, f64)> = cfg
        .events
        .iter()
        .map(|e| (e.time(), e.time() + C5_TRANSIENT_S))
        .collect();
    let settled = |t: f64| !windows.iter().any(|&(a, b)| t >= a && t < b);

    let peak_v = out
        .logs
        .object
        .iter()
        .map(|r| r.vx.abs().max(r.vy.abs()).max(r.wz.abs()))
        .fold(0.0, f64::max);
    let bounded =
        out.final_object.is_finite() && peak_v < 10.0 && out.agents.iter().all(|a| a.state_norm().is_finite());

    let mut violations = 0usize;
    let mut torque_peak: f64 = 0.0;
    for (k, (_, rows)) in out.logs.robots.iter().enumerate() {
        for (t, r) in rows.iter().enumerate() {
            if !settled(r.time) {
                continue;
            }
            if r.fx_bar.abs() > r.fmax_x || r.fy_bar.abs() > r.fmax_y {
                violations += 1;
            }
            if let Some(ratio) = out.torque_ratio[k].get(t) {
                torque_peak = torque_peak.max(*ratio);
            }
        }
    }

    let last_event = cfg.events.iter().map(|e| e.time()).fold(0.0, f64::max);
    let late: Vec<_> = out.logs.object.iter().filter(|r| r.time >= last_event).collect();
    let deviation = late
        .iter()
        .map(|r| (r.vx_ref_mod - r.vx_ref).abs().max((r.vy_ref_mod - r.vy_ref).abs()))
        .sum::<f64>()
        / late.len().max(1) as f64;
    let late_tick = (last_event / cfg.dt).round() as usize;
    let late_payload = out
        .logs
        .bus
        .iter()
        .filter(|b| b.tick >= late_tick)
        .any(|b| b.payload_x != 0.0 || b.payload_y != 0.0 || b.payload_wz != 0.0);

    Ok(verdict(
        bounded && violations == 0 && deviation > 1e-3 && late_payload,
        format!(
            "peak |v| {peak_v:.3}, force-limit violations after transients {violations}, peak torque ratio {torque_peak:.3}, \
             mean |ref_mod − ref| after {last_event} s {deviation:.4} m/s, post-event payloads {late_payload}"
        ),
    ))
}

fn e2s(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn jacobian_oracles(r: &mut impl Rng) -> Result<(f64, f64), String> {
    let model = four_link();
    let w = torque_weights(&model.torque_limits).map_err(e2s)?;
    let h = 1e-6;
    let (mut worst_j, mut worst_m): (f64, f64) = (0.0, 0.0);
    let mut done = 0;
    while done < 30 {
        let q = random_angles(r, 4);
        let full = jacobian(&model, &q, TaskSpace::Full).map_err(e2s)?;
        let j = jacobian(&model, &q, TaskSpace::Translation).map_err(e2s)?;
        if linalg::sigma_min(&j) < 0.05 {
            continue;
        }
        let mf = wfme(&j, &w).map_err(e2s)?;
        let parts = jacobian_partials(&model, &q, TaskSpace::Translation).map_err(e2s)?;
        let mj = wfme_jacobian(&j, &parts, &w, &mf).map_err(e2s)?;
        for i in 0..4 {
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[i] += h;
            qm[i] -= h;
            let (p, m) = (
                forward_kinematics(&model, &qp).map_err(e2s)?,
                forward_kinematics(&model, &qm).map_err(e2s)?,
            );
            let fd = [
                (p.x - m.x) / (2.0 * h),
                (p.y - m.y) / (2.0 * h),
                (p.theta - m.theta) / (2.0 * h),
            ];
            for (row, v) in fd.iter().enumerate() {
                worst_j = worst_j.max((v - full[(row, i)]).abs());
            }
            let fp = wfme(&jacobian(&model, &qp, TaskSpace::Translation).map_err(e2s)?, &w).map_err(e2s)?;
            let fm = wfme(&jacobian(&model, &qm, TaskSpace::Translation).map_err(e2s)?, &w).map_err(e2s)?;
            let fd = (fp.matrix() - fm.matrix()) / (2.0 * h);
            worst_m = worst_m.max((&mj[i] - &fd).amax() / fd.amax().max(mf.matrix().amax() * 1e-3));
        }
        done += 1;
    }
    Ok((worst_j, worst_m))
}

fn criterion_6() -> Result<Verdict, String> {
    let mut r = rng(6);
    let mut fails = Vec::new();
    let mut check = |name: &str, ok: bool, value: f64| {
        if !ok {
            fails.push(format!("{name} ({value:.2e})"));
        }
    };

    let (ej, em) = jacobian_oracles(&mut r)?;
    check("jacobian", ej < TOL_JACOBIAN, ej);
    check("manipulability jacobian", em < TOL_MANIP_JACOBIAN, em);

    let mut worst: f64 = 0.0;
    let mut worst_mandel: f64 = 0.0;
    for d in 2..=3 {
        for _ in 0..50 {
            {
                let a = SpdEllipsoid::new(random_spd(&mut r, d)).map_err(e2s)?;
                let b = SpdEllipsoid::new(random_spd(&mut r, d)).map_err(e2s)?;
                let back = spd_exp(&a, &spd_log(&a, &b).map_err(e2s)?).map_err(e2s)?;
                worst = worst.max(rel_err(back.matrix(), b.matrix()));
            }
            let s = random_symmetric(&mut r, d);
            let v = mandel_vec(&s).map_err(e2s)?;
            let iso = (v.norm() - s.norm()).abs();
            let inv = (mandel_unvec(&v).map_err(e2s)? - &s).amax();
            worst_mandel = worst_mandel.max(iso).max(inv);
        }
    }
    check("log/exp roundtrip", worst < TOL_LOG_EXP, worst);
    check("mandel isometry", worst_mandel < TOL_MANDEL, worst_mandel);

    let model = four_link();
    let w = torque_weights(&model.torque_limits).map_err(e2s)?;
    let mut worst_bis: f64 = 0.0;
    let mut outside = 0usize;
    let mut inscribed = 0;
    while inscribed < 100 {
        let q = random_angles(&mut r, 4);
        let j = jacobian(&model, &q, TaskSpace::Translation).map_err(e2s)?;
        let bias = DVector::from_fn(4, |i, _| r.random_range(-0.3..0.3) * model.torque_limits[i]);
        let th: f64 = r.random_range(0.0..std::f64::consts::TAU);
        let dir = dv(&[th.cos(), th.sin()]);
        let got = max_force_along(&j, &model.torque_limits, &bias, &dir)
            .map_err(e2s)?
            .f_max;
        let fits = |a: f64| {
            (j.transpose() * (&dir * a) + &bias)
                .iter()
                .zip(&model.torque_limits)
                .all(|(t, m)| t.abs() <= *m)
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        while fits(hi) {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if fits(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        worst_bis = worst_bis.max((got - lo).abs() / (1.0 + lo));

        let Ok(mf) = wfme(&j, &w) else { continue };
        let polytope = force_polytope(&j, &model.torque_limits, &DVector::zeros(4)).map_err(e2s)?;
        let root = linalg::sym_fn(mf.matrix(), f64::sqrt);
        for k in 0..72 {
            let a = k as f64 * std::f64::consts::TAU / 72.0;
            if !polytope.contains(&(&root * dv(&[a.cos(), a.sin()])), 1e-9) {
                outside += 1;
            }
        }
        inscribed += 1;
    }
    check("max_force_along vs bisection", worst_bis < TOL_BISECTION, worst_bis);
    check("wfme inside polytope", outside == 0, outside as f64);

    let mut worst_lyap: f64 = 0.0;
    let mut n = 0;
    while n < 50 {
        let a = DMatrix::from_fn(3, 3, |_, _| r.random_range(-1.0..1.0)) - DMatrix::identity(3, 3) * 1.5;
        if !is_hurwitz(&a) {
            continue;
        }
        let q = random_spd(&mut r, 3);
        let p = lyapunov_solve(&a, &q).map_err(e2s)?;
        worst_lyap = worst_lyap.max((a.transpose() * &p + &p * &a + &q).amax() / (1.0 + p.amax()));
        n += 1;
    }
    check("lyapunov residual", worst_lyap < TOL_LYAPUNOV, worst_lyap);

    let plant = ObjectModel {
        mass: 20.0,
        inertia: 20.0,
        mu_linear: 0.2,
        mu_rotational: 0.2,
        gravity: [0.0, 0.0],
    };
    let v0 = Vector3::new(0.2, -0.1, 0.3);
    let mut s = ObjectState {
        velocity: v0,
        ..ObjectState::at_rest(0.0, 0.0, 0.0)
    };
    for _ in 0..5000 {
        s = step_object(&plant, &s, &Vector3::zeros(), 0.002);
    }
    let decay = (s.velocity - v0 * (-0.01f64 * 10.0).exp()).amax();
    check("object decay", decay < TOL_DECAY, decay);

    let mut cfg = scenario("ablation_ability");
    cfg.duration = 5.0;
    let a = run(&cfg)?;
    let b = run(&cfg)?;
    check("determinism", a.logs == b.logs, 0.0);

    Ok(verdict(
        fails.is_empty(),
        if fails.is_empty() {
            format!("jacobian {ej:.1e}, manip jacobian {em:.1e}, log/exp {worst:.1e}, mandel {worst_mandel:.1e}, bisection {worst_bis:.1e}, lyapunov {worst_lyap:.1e}, decay {decay:.1e}, wfme inscribed on 100 configs, determinism ok")
        } else {
            format!("failed: {}", fails.join(", "))
        },
    ))
}

fn criterion_7() -> Result<Verdict, String> {
    // Stands in for the excluded physical-contact comparison.
    let mut cfg = scenario("ablation_ability");
    cfg.duration = 10.0;
    let perturbed = |cfg: &ScenarioConfig| -> Result<RunOutput, String> {
        let mut s = Simulation::new(cfg).map_err(e2s)?;
        let g = s.agents_mut()[1].gains_mut();
        g.rates.gamma_f *= 7.0;
        g.k_f *= 3.0;
        s.run_to_end().map_err(|e| e.to_string())
    };
    let base = run(&cfg)?;
    let other = perturbed(&cfg)?;
    let first = base
        .logs
        .bus
        .first()
        .map(|b| b.tick)
        .ok_or("no broadcast in saturating run")?;
    let hygiene = base.logs.object[..=first] == other.logs.object[..=first]
        && base
            .logs
            .robots
            .iter()
            .zip(&other.logs.robots)
            .all(|(a, b)| a.1[..=first] == b.1[..=first]);

    for r in &mut cfg.robots {
        r.f_max = Some([1e6, 1e6]);
    }
    let quiet = run(&cfg)?;
    let silent = quiet.logs.bus.is_empty()
        && quiet
            .logs
            .object
            .iter()
            .all(|r| r.vx_ref == r.vx_ref_mod && r.vy_ref == r.vy_ref_mod);
    let loud = perturbed(&cfg)?;
    let others = |o: &RunOutput| {
        o.logs
            .gains
            .iter()
            .filter(|g| g.robot_id != "B")
            .cloned()
            .collect::<Vec<_>>()
    };
    let silent_invariant = silent
        && loud.logs.object == quiet.logs.object
        && loud.logs.robots == quiet.logs.robots
        && loud.logs.bus == quiet.logs.bus
        && others(&loud) == others(&quiet);
    Ok(verdict(
        hygiene && silent_invariant,
        format!(
            "excluded physical comparison; substitute checks: logs unchanged by another robot's gains through the first broadcast (tick {first}) {hygiene}, silent bus without saturation, unchanged by the same perturbation {silent_invariant}"
        ),
    ))
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, Check); 7] = [
        (6, "oracle suites", criterion_6),
        (1, "force-limited team tracks the modified reference", criterion_1),
        (2, "ability-aware beats ability-agnostic", criterion_2),
        (3, "null-space manipulability tracking reduces y error", criterion_3),
        (4, "null-space motion raises force capability", criterion_4),
        (5, "robust to parameter and robot events", criterion_5),
        (7, "decentralization", criterion_7),
    ];
    let mut all = true;
    let mut oracles_ok = true;
    for (id, title, f) in criteria {
        let v = if id != 6 && !oracles_ok {
            verdict(false, "not evaluated: oracle suites failed".into())
        } else {
            f().unwrap_or_else(|e| verdict(false, format!("error: {e}")))
        };
        if id == 6 {
            oracles_ok = v.pass;
        }
        all &= v.pass;
        println!("{} {id} {title}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
