//! Run metrics, computed from logs alone.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::logs::RunLogs;
use super::SimError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub warmup: f64,
    /// Number of object samples after the warm-up window.
    pub samples: usize,
    /// Mean `|ẋ_o − ẋ*|` per axis `(v_x, v_y, ω_z)`, modified reference.
    pub mean_abs_error_modified: [f64; 3],
    /// Same against the unmodified reference.
    pub mean_abs_error_original: [f64; 3],
    pub max_abs_error_modified: [f64; 3],
    pub max_abs_error_original: [f64; 3],
    /// Fraction of ticks each robot spent saturated.
    pub saturation_duty: BTreeMap<String, f64>,
    pub broadcast_count: usize,
    /// `∫ ‖F̄‖² dt` per robot.
    pub control_energy: BTreeMap<String, f64>,
    /// `max_t max_i |F̄_i| / F_max,i` per robot.
    pub peak_force_ratio: BTreeMap<String, f64>,
}

/// Aggregates logs into metrics, ignoring object samples before `warmup`.
pub fn metrics_report(logs: &RunLogs, warmup: f64) -> Result<RunMetrics, SimError> {
    let n = logs.object.len();
    if n < 2 {
        return Err(SimError::Logs("object log is empty or truncated".into()));
    }
    let dt = logs.object[1].time - logs.object[0].time;
    for (id, rows) in &logs.robots {
        if rows.len() != n {
            return Err(SimError::Logs(format!(
                "robot `{id}` log has {} rows but the object log has {n}",
                rows.len()
            )));
        }
    }
    let mut sum_mod = [0.0; 3];
    let mut sum_orig = [0.0; 3];
    let mut max_mod = [0.0f64; 3];
    let mut max_orig = [0.0f64; 3];
    let mut samples = 0usize;
    for r in logs.object.iter().filter(|r| r.time >= warmup) {
        let v = [r.vx, r.vy, r.wz];
        let m = [r.vx_ref_mod, r.vy_ref_mod, r.wz_ref_mod];
        let o = [r.vx_ref, r.vy_ref, r.wz_ref];
        for i in 0..3 {
            let em = (v[i] - m[i]).abs();
            let eo = (v[i] - o[i]).abs();
            sum_mod[i] += em;
            sum_orig[i] += eo;
            max_mod[i] = max_mod[i].max(em);
            max_orig[i] = max_orig[i].max(eo);
        }
        samples += 1;
    }
    if samples == 0 {
        return Err(SimError::Logs(format!("no samples after warm-up {warmup} s")));
    }
    let mean = |s: [f64; 3]| s.map(|x| x / samples as f64);

    let mut saturation_duty = BTreeMap::new();
    let mut control_energy = BTreeMap::new();
    let mut peak_force_ratio = BTreeMap::new();
    for (id, rows) in &logs.robots {
        let sat = rows.iter().filter(|r| r.saturated != 0).count();
        saturation_duty.insert(id.clone(), sat as f64 / rows.len() as f64);
        control_energy.insert(
            id.clone(),
            rows.iter().map(|r| (r.fx_bar.powi(2) + r.fy_bar.powi(2)) * dt).sum(),
        );
        let ratio = |f: f64, m: f64| if m > 0.0 { f.abs() / m } else { 0.0 };
        peak_force_ratio.insert(
            id.clone(),
            rows.iter()
                .map(|r| ratio(r.fx_bar, r.fmax_x).max(ratio(r.fy_bar, r.fmax_y)))
                .fold(0.0, f64::max),
        );
    }

    Ok(RunMetrics {
        warmup,
        samples,
        mean_abs_error_modified: mean(sum_mod),
        mean_abs_error_original: mean(sum_orig),
        max_abs_error_modified: max_mod,
        max_abs_error_original: max_orig,
        saturation_duty,
        broadcast_count: logs.bus.len(),
        control_energy,
        peak_force_ratio,
    })
}

impl RunMetrics {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let e = &self.mean_abs_error_modified;
        let o = &self.mean_abs_error_original;
        let _ = writeln!(s, "samples after {:.2} s warm-up: {}", self.warmup, self.samples);
        let _ = writeln!(
            s,
            "mean |error| vs modified reference: vx {:.5}  vy {:.5}  wz {:.5}",
            e[0], e[1], e[2]
        );
        let _ = writeln!(
            s,
            "mean |error| vs original reference: vx {:.5}  vy {:.5}  wz {:.5}",
            o[0], o[1], o[2]
        );
        let _ = writeln!(s, "broadcasts: {}", self.broadcast_count);
        for (id, duty) in &self.saturation_duty {
            let _ = writeln!(
                s,
                "robot {id}: saturated {:.1}% of ticks, energy {:.4} N²s, peak |F|/F_max {:.4}",
                duty * 100.0,
                self.control_energy[id],
                self.peak_force_ratio[id]
            );
        }
        s
    }
}
