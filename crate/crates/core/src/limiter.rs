//! Two-step bound-preserving scaling limiter.

use crate::basis::{CellPoly, DgBasis};
use crate::domains::{Constraint, InvariantBox};
use crate::error::LimiterError;
use crate::model::{PressureLaw, State};

/// Threshold used when the limiter pulls nodes into the box.
pub const EPS_CAP: f64 = 1e-12;

/// Relative amount by which a cell average may sit outside its box (round-off)
/// before the box is widened instead of reporting an error.
pub const AVERAGE_TOLERANCE: f64 = 1e-8;

/// Scaling factors applied to one cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitOutcome {
    pub theta_rho: f64,
    pub theta_z: f64,
    pub theta_all: f64,
    /// The cell average sat outside the box by round-off and the box was widened.
    pub widened: bool,
}

impl LimitOutcome {
    pub fn is_identity(&self) -> bool {
        self.theta_rho == 1.0 && self.theta_z == 1.0 && self.theta_all == 1.0
    }
}

/// Largest `theta` in `[0, 1]` with `H(u_bar + theta (u_hat - u_bar)) >= eps`
/// when `H` is affine with values `h_bar`, `h_hat` at the end points.
pub fn theta_linear(h_bar: f64, h_hat: f64, eps: f64) -> f64 {
    if h_hat >= eps {
        return 1.0;
    }
    ((h_bar - eps) / (h_bar - h_hat)).clamp(0.0, 1.0)
}

/// Same for the velocity constraint `H = y - rho (v_min + p)`, which is concave
/// but not affine. Newton from `theta = 1` with a bisection safeguard; the
/// returned value always satisfies the inequality.
pub fn theta_velocity(law: &PressureLaw, v_min: f64, u_bar: State, u_hat: State, eps: f64) -> f64 {
    let d = u_hat - u_bar;
    let at = |t: f64| u_bar + d * t;
    let g = |t: f64| {
        let u = at(t);
        if u.rho > 0.0 && u.z > 0.0 {
            u.y - u.rho * (v_min + law.pressure_rc(u.rho, u.z / u.rho)) - eps
        } else {
            f64::NEG_INFINITY
        }
    };
    let dg = |t: f64| {
        let u = at(t);
        let c = u.z / u.rho;
        let p = law.pressure_rc(u.rho, c);
        let (p_rho, p_z) = if law.gamma == 0.0 {
            (law.v_ref / u.rho, 0.0)
        } else {
            ((law.gamma - law.kappa) * p / u.rho, law.kappa * p / u.z)
        };
        d.y - (v_min + p + u.rho * p_rho) * d.rho - u.rho * p_z * d.z
    };
    if g(1.0) >= 0.0 {
        return 1.0;
    }
    let scale = u_bar.y.abs() + (u_bar.rho * v_min).abs() + eps.abs() + 1e-300;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut t = 1.0;
    for _ in 0..50 {
        let gt = g(t);
        if gt >= 0.0 {
            lo = t;
            if gt <= 1e-13 * scale {
                return t;
            }
        } else {
            hi = t;
        }
        if hi - lo <= 1e-16 {
            break;
        }
        let slope = dg(t);
        let mut next = t - gt / slope;
        if gt.is_finite() && slope.is_finite() && (next - t).abs() <= 1e-15 && gt < 0.0 {
            // Converged onto the root from the infeasible side; step just past it.
            next = t - 2.0 * (gt / slope).abs() - 1e-16;
        }
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        t = next;
    }
    lo
}

fn scale_modes(cell: &mut CellPoly, theta: f64, component: Option<usize>) {
    for m in cell.modes.iter_mut().skip(1) {
        match component {
            Some(c) => *m.component_mut(c) *= theta,
            None => *m *= theta,
        }
    }
}

/// Widens `bx` so that it holds `u_bar` when `u_bar` is outside only by
/// round-off; an error otherwise.
fn admit_average(law: &PressureLaw, bx: &mut InvariantBox, u_bar: State) -> Result<bool, LimiterError> {
    let mut widened = false;
    for c in [Constraint::Density, Constraint::Marker] {
        let v = bx.h_value(c, law, u_bar);
        if !(v > 0.0) {
            return Err(LimiterError::AverageOutside { constraint: c, value: v, threshold: 0.0 });
        }
    }
    let q = match law.primitives(u_bar) {
        Ok(q) => q,
        Err(_) => return Err(LimiterError::AverageOutside { constraint: Constraint::Density, value: u_bar.rho, threshold: 0.0 }),
    };
    let checks = [
        (Constraint::WMin, q.w - bx.w_min),
        (Constraint::WMax, bx.w_max - q.w),
        (Constraint::CMin, q.c - bx.c_min),
        (Constraint::CMax, bx.c_max - q.c),
        (Constraint::VMin, q.v - bx.v_min),
    ];
    for (c, slack) in checks {
        if slack >= 0.0 {
            continue;
        }
        let tol = AVERAGE_TOLERANCE * bx.scale(c);
        if slack < -tol || slack.is_nan() {
            return Err(LimiterError::AverageOutside { constraint: c, value: slack, threshold: -tol });
        }
        let margin = 10.0 * 1e-12 * bx.scale(c);
        match c {
            Constraint::WMin => bx.w_min = q.w - margin,
            Constraint::WMax => bx.w_max = q.w + margin,
            Constraint::CMin => bx.c_min = q.c - margin,
            Constraint::CMax => bx.c_max = q.c + margin,
            Constraint::VMin => bx.v_min = q.v - margin,
            _ => {}
        }
        widened = true;
    }
    Ok(widened)
}

/// Limits one cell in place against `bx`. The box may be widened by
/// round-off amounts so that it holds the cell average.
pub fn limit_cell(
    law: &PressureLaw,
    basis: &DgBasis,
    bx: &mut InvariantBox,
    cell: &mut CellPoly,
) -> Result<LimitOutcome, LimiterError> {
    let u_bar = cell.average();
    let widened = admit_average(law, bx, u_bar)?;
    // Gauss nodes are included so the volume flux never sees a non-physical state.
    let nodes = cell.limiter_values(basis);

    // Step 1: positivity of rho and z, each component on its own.
    let eps1 = EPS_CAP.min(u_bar.rho);
    let eps2 = EPS_CAP.min(u_bar.z);
    let theta_rho = nodes.iter().map(|u| theta_linear(u_bar.rho, u.rho, eps1)).fold(1.0, f64::min);
    let theta_z = nodes.iter().map(|u| theta_linear(u_bar.z, u.z, eps2)).fold(1.0, f64::min);
    if theta_rho < 1.0 {
        scale_modes(cell, theta_rho, Some(0));
    }
    if theta_z < 1.0 {
        scale_modes(cell, theta_z, Some(2));
    }
    let nodes = if theta_rho < 1.0 || theta_z < 1.0 { cell.limiter_values(basis) } else { nodes };

    // Step 2: marker bounds and the velocity bound on the whole vector.
    // These constraints are density-weighted slacks, so the threshold is
    // density-weighted too; an absolute one would exceed the average's own
    // value near vacuum and flatten the cell.
    let eps_weighted = |h_bar: f64| (EPS_CAP * u_bar.rho).min(h_bar);
    let mut theta_all: f64 = 1.0;
    for c in [Constraint::WMin, Constraint::WMax, Constraint::CMin, Constraint::CMax] {
        let h_bar = bx.h_value(c, law, u_bar);
        let eps = eps_weighted(h_bar);
        for &u in &nodes {
            theta_all = theta_all.min(theta_linear(h_bar, bx.h_value(c, law, u), eps));
        }
    }
    let h_bar = bx.h_value(Constraint::VMin, law, u_bar);
    let eps7 = eps_weighted(h_bar);
    for &u in &nodes {
        if bx.h_value(Constraint::VMin, law, u) < eps7 {
            theta_all = theta_all.min(theta_velocity(law, bx.v_min, u_bar, u, eps7));
        }
    }
    if theta_all < 1.0 {
        scale_modes(cell, theta_all, None);
    }
    Ok(LimitOutcome { theta_rho, theta_z, theta_all, widened })
}
