//! Force capability under joint torque limits: the force polytope
//! `|Jᵀ F + b| ≤ τ_max` and exact maximum-force queries on it.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};

/// Tolerance for halfspace membership tests.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// `a · F ≤ b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    pub normal: DVector<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn slack(&self, f: &DVector<f64>) -> f64 {
        self.offset - self.normal.dot(f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForcePolytope {
    /// `2n` halfspaces; entries `2i` and `2i + 1` are the upper and lower
    /// bound of joint `i`.
    pub halfspaces: Vec<Halfspace>,
    vertices: Option<Vec<DVector<f64>>>,
}

impl ForcePolytope {
    pub fn dim(&self) -> usize {
        self.halfspaces.first().map_or(0, |h| h.normal.len())
    }

    pub fn contains(&self, f: &DVector<f64>, tol: f64) -> bool {
        self.halfspaces.iter().all(|h| h.slack(f) >= -tol)
    }

    /// Vertices in counter-clockwise order (2-D polytopes only).
    pub fn vertices(&mut self) -> Result<&[DVector<f64>]> {
        if self.vertices.is_none() {
            self.vertices = Some(enumerate_vertices_2d(&self.halfspaces)?);
        }
        Ok(self.vertices.as_deref().expect("just computed"))
    }
}

/// Builds the polytope `−τ_max − b ≤ Jᵀ F ≤ τ_max − b`.
pub fn force_polytope(j: &DMatrix<f64>, tau_max: &[f64], bias: &DVector<f64>) -> Result<ForcePolytope> {
    let n = j.ncols();
    check_len("torque limits", n, tau_max.len())?;
    check_len("bias torque", n, bias.len())?;
    check_feasible(tau_max, bias)?;
    let mut halfspaces = Vec::with_capacity(2 * n);
    for i in 0..n {
        let c = j.column(i).into_owned();
        halfspaces.push(Halfspace {
            normal: c.clone(),
            offset: tau_max[i] - bias[i],
        });
        halfspaces.push(Halfspace {
            normal: -c,
            offset: tau_max[i] + bias[i],
        });
    }
    Ok(ForcePolytope {
        halfspaces,
        vertices: None,
    })
}

fn check_feasible(tau_max: &[f64], bias: &DVector<f64>) -> Result<()> {
    for (i, (t, b)) in tau_max.iter().zip(bias.iter()).enumerate() {
        if b.abs() >= *t {
            return Err(Error::InfeasiblePolytope {
                joint: i,
                bias: *b,
                limit: *t,
            });
        }
    }
    Ok(())
}

fn enumerate_vertices_2d(halfspaces: &[Halfspace]) -> Result<Vec<DVector<f64>>> {
    if halfspaces.first().map_or(0, |h| h.normal.len()) != 2 {
        return Err(Error::InvalidParameter(
            "vertex enumeration is implemented for 2-D polytopes".into(),
        ));
    }
    let mut pts: Vec<DVector<f64>> = Vec::new();
    for (a, ha) in halfspaces.iter().enumerate() {
        for hb in &halfspaces[a + 1..] {
            let det = ha.normal[0] * hb.normal[1] - ha.normal[1] * hb.normal[0];
            if det.abs() < 1e-14 {
                continue;
            }
            let x = (ha.offset * hb.normal[1] - ha.normal[1] * hb.offset) / det;
            let y = (ha.normal[0] * hb.offset - ha.offset * hb.normal[0]) / det;
            let p = DVector::from_column_slice(&[x, y]);
            let scale = p.amax().max(1.0);
            if halfspaces.iter().all(|h| h.slack(&p) >= -FEASIBILITY_TOL * scale)
                && !pts.iter().any(|q| (q - &p).amax() < 1e-9 * scale)
            {
                pts.push(p);
            }
        }
    }
    if pts.len() < 3 {
        return Err(Error::InvalidParameter("polytope is unbounded or degenerate".into()));
    }
    let n = pts.len() as f64;
    let cx = pts.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = pts.iter().map(|p| p[1]).sum::<f64>() / n;
    pts.sort_by(|p, q| (p[1] - cy).atan2(p[0] - cx).total_cmp(&(q[1] - cy).atan2(q[0] - cx)));
    Ok(pts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapabilityResult {
    pub f_max: f64,
    /// `f_max` times the query direction.
    pub force: DVector<f64>,
    /// Joints whose torque bound is tight at `force`.
    pub active_constraints: Vec<usize>,
}

/// Largest `α ≥ 0` with `|Jᵀ(α d) + b| ≤ τ_max`, by ray–box intersection in
/// joint-torque space.
pub fn max_force_along(
    j: &DMatrix<f64>,
    tau_max: &[f64],
    bias: &DVector<f64>,
    direction: &DVector<f64>,
) -> Result<CapabilityResult> {
    let n = j.ncols();
    check_len("torque limits", n, tau_max.len())?;
    check_len("bias torque", n, bias.len())?;
    check_len("direction", j.nrows(), direction.len())?;
    if (direction.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter("direction must be a unit vector".into()));
    }
    check_feasible(tau_max, bias)?;
    let g = j.transpose() * direction;
    let gscale = g.amax();
    let mut bounds = Vec::with_capacity(n);
    for i in 0..n {
        if g[i].abs() <= 1e-14 * gscale.max(1e-300) || g[i] == 0.0 {
            continue;
        }
        let alpha = if g[i] > 0.0 {
            (tau_max[i] - bias[i]) / g[i]
        } else {
            (tau_max[i] + bias[i]) / -g[i]
        };
        bounds.push((i, alpha));
    }
    let f_max = bounds.iter().map(|&(_, a)| a).fold(f64::INFINITY, f64::min);
    if !f_max.is_finite() {
        return Err(Error::UnboundedRay);
    }
    let active_constraints = bounds
        .iter()
        .filter(|&&(_, a)| a - f_max <= FEASIBILITY_TOL * f_max.max(1.0))
        .map(|&(i, _)| i)
        .collect();
    Ok(CapabilityResult {
        f_max,
        force: direction * f_max,
        active_constraints,
    })
}

/// Per-axis force bound `F_kmax` such that the symmetric box `±F_kmax` lies
/// inside the polytope.
///
/// Each entry starts as the smaller of the two one-sided extents along that
/// axis; if the resulting box still pokes out of some slab, the whole box is
/// shrunk uniformly until it fits.
pub fn f_kmax_vector(j: &DMatrix<f64>, tau_max: &[f64], bias: &DVector<f64>) -> Result<DVector<f64>> {
    let d = j.nrows();
    let mut extents = DVector::zeros(d);
    for axis in 0..d {
        let mut e = DVector::zeros(d);
        e[axis] = 1.0;
        let pos = max_force_along(j, tau_max, bias, &e)?.f_max;
        let neg = max_force_along(j, tau_max, bias, &(-e))?.f_max;
        extents[axis] = pos.min(neg);
    }
    // box corners reach |c_i|·extents on slab i; it must fit within τ_i − |b_i|
    let mut shrink: f64 = 1.0;
    for i in 0..j.ncols() {
        let reach: f64 = j.column(i).iter().zip(extents.iter()).map(|(c, e)| c.abs() * e).sum();
        if reach > 0.0 {
            shrink = shrink.min((tau_max[i] - bias[i].abs()) / reach);
        }
    }
    Ok(extents * shrink)
}
