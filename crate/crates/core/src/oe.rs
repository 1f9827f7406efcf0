//! Oscillation-eliminating damping: scale-invariant jump indicators and the
//! closed-form exponential decay of the higher modes.

use crate::basis::{DgBasis, Mesh, Solution};
use crate::dg::Exterior;
use crate::error::ModelError;
use crate::model::{PressureLaw, State};

/// Damping data for one application of the filter.
#[derive(Clone, Debug, PartialEq)]
pub struct DampingProfile {
    /// Spectral radius of the flux Jacobian per cell.
    pub theta: Vec<f64>,
    /// `sigma[j][i]` for `i = 0..=k`, maximized over the three components.
    pub sigma: Vec<Vec<f64>>,
}

impl DampingProfile {
    /// Factor applied to mode `i` of cell `j`.
    pub fn factor(&self, j: usize, i: usize, tau: f64, dx: f64) -> f64 {
        let partial: f64 = self.sigma[j][..=i].iter().sum();
        (-tau * self.theta[j] / dx * partial).exp()
    }
}

/// Jump indicators `sigma_j^i` of one scalar component (0 = rho, 1 = y, 2 = z).
///
/// Jumps of `d^i u / dx^i` come straight from the modal coefficients. Outside
/// a non-periodic domain the exterior state is a constant with vanishing
/// derivatives.
pub fn sigma_coeffs(basis: &DgBasis, sol: &Solution, component: usize, ext: &Exterior) -> Vec<Vec<f64>> {
    let n = sol.len();
    let k = basis.degree;
    let coef = |j: usize, l: usize| sol.cells[j].modes[l].component(component);
    // Derivative of order `d` at the right / left end of cell `j`, in units
    // where the factor dx^d of the indicator has been absorbed: dx^d (2/dx)^d = 2^d.
    let end_value = |j: usize, d: usize, right: bool| {
        let table = if right { &basis.deriv_right[d] } else { &basis.deriv_left[d] };
        (0..=k).map(|l| coef(j, l) * table[l]).sum::<f64>() * (2.0f64).powi(d as i32)
    };
    let ghost = |u: State| u.component(component);

    // jumps[i][d] at interface i (x_left + i dx).
    let mut jumps = vec![vec![0.0; k + 1]; n + 1];
    for (i, jump) in jumps.iter_mut().enumerate() {
        for (d, jd) in jump.iter_mut().enumerate() {
            let minus = if i > 0 {
                end_value(i - 1, d, true)
            } else if ext.periodic {
                end_value(n - 1, d, true)
            } else if d == 0 {
                ghost(ext.left)
            } else {
                0.0
            };
            let plus = if i < n {
                end_value(i, d, false)
            } else if ext.periodic {
                end_value(0, d, false)
            } else if d == 0 {
                ghost(ext.right)
            } else {
                0.0
            };
            *jd = (plus - minus).abs();
        }
    }

    // Deviation from the domain mean, sampled at the end points and the
    // quadrature nodes of every cell.
    let mean = sol.cells.iter().map(|c| coef_of(c.modes[0], component)).sum::<f64>() / n as f64;
    let mut dev: f64 = 0.0;
    let mut size: f64 = mean.abs();
    for c in &sol.cells {
        let mut visit = |v: f64| {
            dev = dev.max((v - mean).abs());
            size = size.max(v.abs());
        };
        visit(coef_of(c.right_trace(), component));
        visit(coef_of(c.left_trace(), component));
        for row in basis.phi_gauss.iter().chain(&basis.phi_lobatto) {
            visit(coef_of(c.eval_row(row), component));
        }
    }
    if !(dev > 1e-14 * size) {
        return vec![vec![0.0; k + 1]; n];
    }

    let mut factorial = 1.0;
    let weights: Vec<f64> = (0..=k)
        .map(|i| {
            if i > 0 {
                factorial *= i as f64;
            }
            (2 * i + 1) as f64 / ((2 * k).max(2) as f64 - 1.0) / factorial / (2.0 * dev)
        })
        .collect();
    (0..n).map(|j| (0..=k).map(|i| weights[i] * (jumps[j][i] + jumps[j + 1][i])).collect()).collect()
}

fn coef_of(u: State, component: usize) -> f64 {
    u.component(component)
}

/// Builds the damping profile. `theta_states` are the cell averages at which
/// the spectral radius is evaluated.
pub fn damping_profile(
    law: &PressureLaw,
    basis: &DgBasis,
    sol: &Solution,
    ext: &Exterior,
    theta_states: &[State],
) -> Result<DampingProfile, ModelError> {
    let per_component: Vec<_> = (0..3).map(|c| sigma_coeffs(basis, sol, c, ext)).collect();
    let sigma = (0..sol.len())
        .map(|j| {
            (0..=basis.degree)
                .map(|i| per_component[0][j][i].max(per_component[1][j][i]).max(per_component[2][j][i]))
                .collect()
        })
        .collect();
    let theta = theta_states.iter().map(|&u| law.spectral_radius(u)).collect::<Result<_, _>>()?;
    Ok(DampingProfile { theta, sigma })
}

/// Multiplies mode `i >= 1` of each cell by its damping factor. Mode 0 is
/// never written.
pub fn apply_oe(sol: &mut Solution, profile: &DampingProfile, tau: f64, mesh: &Mesh) {
    let dx = mesh.dx();
    for (j, cell) in sol.cells.iter_mut().enumerate() {
        let mut partial = profile.sigma[j][0];
        for i in 1..cell.modes.len() {
            partial += profile.sigma[j][i];
            let f = (-tau * profile.theta[j] / dx * partial).exp();
            cell.modes[i] *= f;
        }
    }
}
