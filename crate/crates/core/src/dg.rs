//! Semi-discrete DG operator with the Lax-Friedrichs flux.

use crate::basis::{DgBasis, Mesh, Solution};
use crate::error::ModelError;
use crate::model::{PressureLaw, State};

/// Condition at one end of a road.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EndCondition {
    /// Prescribed exterior state.
    Fixed(State),
    /// Exterior state copied from the interior trace.
    Outflow,
    /// Ghost state from a coupling condition together with the interface
    /// flux that replaces the Lax-Friedrichs flux at this end.
    Ghost { state: State, flux: State },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundaryCondition {
    Periodic,
    Ends { left: EndCondition, right: EndCondition },
}

impl BoundaryCondition {
    pub fn fixed(left: State, right: State) -> Self {
        BoundaryCondition::Ends { left: EndCondition::Fixed(left), right: EndCondition::Fixed(right) }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, BoundaryCondition::Periodic)
    }

    /// Exterior traces for the current solution.
    pub fn exterior(&self, sol: &Solution) -> Exterior {
        let first = sol.cells[0].left_trace();
        let last = sol.cells[sol.len() - 1].right_trace();
        match *self {
            BoundaryCondition::Periodic => Exterior { left: last, right: first, left_flux: None, right_flux: None, periodic: true },
            BoundaryCondition::Ends { left, right } => {
                let side = |e: EndCondition, interior: State| match e {
                    EndCondition::Fixed(u) => (u, None),
                    EndCondition::Outflow => (interior, None),
                    EndCondition::Ghost { state, flux } => (state, Some(flux)),
                };
                let (l, lf) = side(left, first);
                let (r, rf) = side(right, last);
                Exterior { left: l, right: r, left_flux: lf, right_flux: rf, periodic: false }
            }
        }
    }
}

/// States just outside both ends and optional prescribed end fluxes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Exterior {
    pub left: State,
    pub right: State,
    pub left_flux: Option<State>,
    pub right_flux: Option<State>,
    pub periodic: bool,
}

/// One-sided traces at the `N + 1` interfaces; `minus[i]` and `plus[i]` are
/// the values left and right of `x_left + i dx`.
#[derive(Clone, Debug, PartialEq)]
pub struct Traces {
    pub minus: Vec<State>,
    pub plus: Vec<State>,
}

impl Traces {
    pub fn new(sol: &Solution, ext: &Exterior) -> Self {
        let n = sol.len();
        let mut minus = Vec::with_capacity(n + 1);
        let mut plus = Vec::with_capacity(n + 1);
        minus.push(ext.left);
        for c in &sol.cells {
            plus.push(c.left_trace());
            minus.push(c.right_trace());
        }
        plus.push(ext.right);
        Traces { minus, plus }
    }

    pub fn interfaces(&self) -> usize {
        self.minus.len()
    }
}

/// `(F(u_l) + F(u_r) - alpha (u_r - u_l)) / 2`.
pub fn lf_flux(law: &PressureLaw, ul: State, ur: State, alpha: f64) -> Result<State, ModelError> {
    Ok((law.flux(ul)? + law.flux(ur)? - (ur - ul) * alpha) * 0.5)
}

/// Largest `v + |rho p_rho + z p_z|` over all traces.
pub fn max_alpha_bar(law: &PressureLaw, traces: &Traces) -> Result<f64, ModelError> {
    let mut a: f64 = 0.0;
    for (&m, &p) in traces.minus.iter().zip(&traces.plus) {
        a = a.max(law.alpha_bar(m)?).max(law.alpha_bar(p)?);
    }
    Ok(a)
}

/// Interface fluxes, with prescribed end fluxes taking precedence.
pub fn interface_fluxes(law: &PressureLaw, traces: &Traces, ext: &Exterior, alpha: f64) -> Result<Vec<State>, ModelError> {
    let n = traces.interfaces();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let f = match (i, ext.left_flux, ext.right_flux) {
            (0, Some(f), _) => f,
            (i, _, Some(f)) if i == n - 1 => f,
            _ => lf_flux(law, traces.minus[i], traces.plus[i], alpha)?,
        };
        out.push(f);
    }
    Ok(out)
}

/// Evaluates the DG right-hand side `L(U_h)` into `out`.
pub fn apply_operator(
    law: &PressureLaw,
    basis: &DgBasis,
    mesh: &Mesh,
    sol: &Solution,
    fluxes: &[State],
    out: &mut Solution,
) -> Result<(), ModelError> {
    let dx = mesh.dx();
    let k = basis.degree;
    for (j, cell) in sol.cells.iter().enumerate() {
        let rhs = &mut out.cells[j].modes;
        for m in rhs.iter_mut() {
            *m = State::ZERO;
        }
        for (q, row) in basis.phi_gauss.iter().enumerate() {
            let f = law.flux(cell.eval_row(row))? * basis.gauss.weights[q];
            for l in 1..=k {
                rhs[l] += f * basis.dphi_gauss[q][l];
            }
        }
        let (fl, fr) = (fluxes[j], fluxes[j + 1]);
        for (l, m) in rhs.iter_mut().enumerate() {
            let edge = if l % 2 == 0 { fl - fr } else { -fl - fr };
            *m = (*m + edge) * ((2 * l + 1) as f64 / dx);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::project;

    #[test]
    fn lf_flux_is_consistent() {
        let law = PressureLaw::standard(1.0, 1.0).unwrap();
        let u = State::from_markers(0.4, 1.5, 1.0);
        let f = lf_flux(&law, u, u, 3.0).unwrap();
        assert!((f - law.flux(u).unwrap()).max_abs() < 1e-15);
    }

    #[test]
    fn constant_state_has_zero_residual() {
        let law = PressureLaw::standard(0.9, 2.0).unwrap();
        let mesh = Mesh::new(0.0, 1.0, 12);
        let basis = DgBasis::new(2);
        let u = State::from_markers(0.3, 1.2, 1.1);
        let sol = project(&mesh, 2, 4, |_| u);
        let bc = BoundaryCondition::Periodic;
        let ext = bc.exterior(&sol);
        let tr = Traces::new(&sol, &ext);
        let fl = interface_fluxes(&law, &tr, &ext, 2.0).unwrap();
        let mut out = Solution::zeros(12, 2);
        apply_operator(&law, &basis, &mesh, &sol, &fl, &mut out).unwrap();
        for c in &out.cells {
            for m in &c.modes {
                assert!(m.max_abs() < 1e-13);
            }
        }
    }

    #[test]
    fn cell_average_update_is_flux_difference() {
        let law = PressureLaw::standard(1.0, 1.0).unwrap();
        let mesh = Mesh::new(0.0, 1.0, 8);
        let basis = DgBasis::new(2);
        let sol = project(&mesh, 2, 6, |x| State::from_markers(0.3 + 0.2 * (6.0 * x).sin(), 1.5, 1.0 + 0.1 * x));
        let ext = BoundaryCondition::Periodic.exterior(&sol);
        let tr = Traces::new(&sol, &ext);
        let fl = interface_fluxes(&law, &tr, &ext, 2.5).unwrap();
        let mut out = Solution::zeros(8, 2);
        apply_operator(&law, &basis, &mesh, &sol, &fl, &mut out).unwrap();
        for j in 0..8 {
            let expect = (fl[j] - fl[j + 1]) / mesh.dx();
            assert!((out.cells[j].modes[0] - expect).max_abs() < 1e-12);
        }
        // Periodic flux form conserves the total.
        let total = out.total(&mesh);
        assert!(total.max_abs() < 1e-13);
    }

    #[test]
    fn prescribed_end_fluxes_are_used() {
        let law = PressureLaw::standard(1.0, 1.0).unwrap();
        let sol = project(&Mesh::new(0.0, 1.0, 4), 2, 4, |_| State::from_markers(0.5, 1.0, 1.0));
        let g = State::new(0.1, 0.2, 0.3);
        let bc = BoundaryCondition::Ends {
            left: EndCondition::Ghost { state: State::from_markers(0.2, 1.0, 1.0), flux: g },
            right: EndCondition::Outflow,
        };
        let ext = bc.exterior(&sol);
        let tr = Traces::new(&sol, &ext);
        let fl = interface_fluxes(&law, &tr, &ext, 2.0).unwrap();
        assert_eq!(fl[0], g);
        assert!((fl[4] - law.flux(State::from_markers(0.5, 1.0, 1.0)).unwrap()).max_abs() < 1e-15);
    }
}
