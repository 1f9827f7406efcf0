//! Randomized checks of the invariant regions, the damping step and the
//! limiter. Each check returns the first counterexample, if any.
//!
//! Shared by this crate's property tests and the CLI acceptance target.

#![allow(dead_code)]

use arz_core::basis::{CellPoly, DgBasis, Mesh, Solution};
use arz_core::dg::{BoundaryCondition, Exterior};
use arz_core::domains::{gql_certificate, glf_average, h_gap, lf_split, update_global_box, Constraint};
use arz_core::limiter::{limit_cell, theta_linear, theta_velocity};
use arz_core::oe::{apply_oe, sigma_coeffs, DampingProfile};
use arz_core::{InvariantBox, PressureLaw, SBound, State};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRng, TestRunner};

pub const GAMMAS: [f64; 3] = [0.0, 1.0, 2.0];
pub const TOL: f64 = 1e-12;

const OMEGA1: [Constraint; 6] =
    [Constraint::Density, Constraint::Marker, Constraint::WMin, Constraint::WMax, Constraint::CMin, Constraint::CMax];
const OMEGA2: [Constraint; 3] = [Constraint::Density, Constraint::Marker, Constraint::VMin];

/// Runs `test` on `cases` draws of `strategy` with a fixed seed.
pub fn check<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    let config = Config { cases, failure_persistence: None, max_global_rejects: cases, ..Config::default() };
    let rng = TestRng::deterministic_rng(config.rng_algorithm);
    let mut runner = TestRunner::new_with_rng(config, rng);
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

/// Density, velocity and `c` of a physical state.
fn prim() -> impl Strategy<Value = (f64, f64, f64)> {
    (-4.0..1.0f64, 0.0..3.0f64, 0.5..1.5f64).prop_map(|(lr, v, c)| (10f64.powf(lr), v, c))
}

fn law(gamma: f64, v_ref: f64) -> PressureLaw {
    PressureLaw::standard(v_ref, gamma).unwrap()
}

fn state(law: &PressureLaw, (rho, v, c): (f64, f64, f64)) -> State {
    law.from_primitives(rho, v, c).unwrap()
}

/// Smallest box holding `states`, padded by `pad` on each side.
fn hull(law: &PressureLaw, states: &[State], pad: f64) -> InvariantBox {
    let mut bx = InvariantBox::EMPTY;
    for &u in states {
        bx.include(law, u).unwrap();
    }
    bx.widened(pad)
}

fn dot(a: State, b: State) -> f64 {
    a.rho * b.rho + a.y * b.y + a.z * b.z
}

fn in_omega0(u: State) -> bool {
    u.rho > 0.0 && u.z > 0.0
}

fn holds(law: &PressureLaw, bx: &InvariantBox, u: State, only: &[Constraint], tol: f64) -> bool {
    !bx.violations(law, u, tol).iter().any(|c| only.contains(c))
}

pub fn convexity(gamma: f64, cases: u32) -> Result<(), String> {
    check(cases, (0.1..2.0f64, prim(), prim(), 0.0..=1.0f64, 0.0..0.1f64), |(v_ref, a, b, theta, pad)| {
        let law = law(gamma, v_ref);
        let (ua, ub) = (state(&law, a), state(&law, b));
        let bx = hull(&law, &[ua, ub], pad);
        let mix = ua * theta + ub * (1.0 - theta);
        prop_assert!(in_omega0(mix), "{mix:?} outside Omega_0");
        prop_assert!(holds(&law, &bx, mix, &OMEGA1, TOL), "{mix:?} outside Omega_1 of {bx:?}");
        prop_assert!(holds(&law, &bx, mix, &OMEGA2, TOL), "{mix:?} outside Omega_2 of {bx:?}");
        prop_assert!(bx.contains(&law, mix, TOL), "{:?}", bx.violations(&law, mix, TOL));
        Ok(())
    })
}

pub fn gap_nonnegative(gamma: f64, cases: u32) -> Result<(), String> {
    check(cases, (0.1..2.0f64, prim(), prim()), |(v_ref, a, b)| {
        let law = law(gamma, v_ref);
        let (us, u) = (state(&law, a), state(&law, b));
        let h = h_gap(&law, us.rho, us.z, u.rho, u.z).unwrap();
        let scale = u.rho * law.pressure(u.rho, u.z).unwrap().abs() + us.rho * law.pressure(us.rho, us.z).unwrap().abs() + u.rho * v_ref;
        prop_assert!(h >= -TOL * scale, "h = {h}");
        Ok(())
    })
}

/// Members of the velocity region have non-negative slack for every witness;
/// a state below `v_min` is caught by its own witness.
pub fn certificate(gamma: f64, cases: u32) -> Result<(), String> {
    check(cases, (0.1..2.0f64, prim(), prim(), 0.0..3.0f64), |(v_ref, a, b, v_min)| {
        let law = law(gamma, v_ref);
        let (u, witness) = (state(&law, a), state(&law, b));
        let v = law.velocity(u).unwrap();
        let p = |s: State| law.pressure(s.rho, s.z).unwrap().abs();
        let scale = u.rho * (v.abs() + v_min + p(u) + p(witness) + v_ref);
        if v >= v_min {
            let (n, s) = gql_certificate(&law, v_min, witness).unwrap();
            prop_assert!(dot(u, n) + s >= -TOL * scale, "witness slack {}", dot(u, n) + s);
        } else {
            let (n, s) = gql_certificate(&law, v_min, u).unwrap();
            prop_assert!(dot(u, n) + s < 0.0 || (v - v_min).abs() * u.rho <= TOL * scale);
        }
        Ok(())
    })
}

pub fn nesting(gamma: f64, cases: u32) -> Result<(), String> {
    check(cases, (prim(), prim(), prim(), 0.0..1e-6f64), |(a, b, ext, eps)| {
        let law = law(gamma, 0.7);
        let bx = hull(&law, &[state(&law, a), state(&law, b)], 1e-9);
        let e = state(&law, ext);
        let grown = update_global_box(&law, &bx, &[e], eps).unwrap();
        prop_assert!(bx.within(&grown));
        prop_assert!(grown.contains(&law, e, 0.0));
        let again = update_global_box(&law, &grown, &[e], eps).unwrap();
        prop_assert!(grown.within(&again));
        Ok(())
    })
}

/// `U +- F(U)/a` with `a = v (1 + u)` stays in the marker region.
pub fn lf_splitting(gamma: f64, cases: u32) -> Result<(), String> {
    check(cases, (0.1..2.0f64, prim(), 1e-6..=10.0f64), |(v_ref, a, u)| {
        let law = law(gamma, v_ref);
        let s = state(&law, a);
        let v = law.velocity(s).unwrap();
        prop_assume!(v > 0.0);
        let bx = hull(&law, &[s], 0.0);
        let (plus, minus) = lf_split(&law, s, v * (1.0 + u)).unwrap();
        // U - F/a cancels to a factor u/(1+u) of U, which costs that much
        // relative accuracy in the markers.
        let tol = TOL * (1.0 + 1.0 / u);
        for half in [plus, minus] {
            prop_assert!(in_omega0(half), "{half:?}");
            prop_assert!(holds(&law, &bx, half, &OMEGA1, tol), "{half:?}: {:?}", bx.violations(&law, half, tol));
        }
        prop_assert!(((plus + minus) * 0.5 - s).max_abs() <= 1e-15 * s.max_abs());
        Ok(())
    })
}

/// The generalized Lax-Friedrichs state with `a = alpha_max (1 + 1e-9)` lies
/// in every box holding both states.
pub fn generalized_lf(gamma: f64, bound: SBound, cases: u32) -> Result<(), String> {
    check(cases, (0.1..2.0f64, prim(), prim()), |(v_ref, a, b)| {
        let law = law(gamma, v_ref).with_s_bound(bound);
        let (uh, uc) = (state(&law, a), state(&law, b));
        let bx = hull(&law, &[uh, uc], 0.0);
        let alpha = law.alpha_max(uh, uc).unwrap() * (1.0 + 1e-9);
        let mid = glf_average(&law, uh, uc, alpha).unwrap();
        prop_assert!(in_omega0(mid), "{mid:?}");
        prop_assert!(bx.contains(&law, mid, TOL), "{mid:?}: {:?} in {bx:?}", bx.violations(&law, mid, TOL));
        Ok(())
    })
}

fn any_state() -> impl Strategy<Value = State> {
    (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64).prop_map(|(a, b, c)| State::new(a, b, c))
}

fn solution() -> impl Strategy<Value = Solution> {
    prop::collection::vec(prop::collection::vec(any_state(), 3), 3..24)
        .prop_map(|cells| Solution { cells: cells.into_iter().map(|modes| CellPoly { modes }).collect() })
}

fn exterior(periodic: bool, sol: &Solution, left: State, right: State) -> Exterior {
    if periodic {
        BoundaryCondition::Periodic.exterior(sol)
    } else {
        BoundaryCondition::fixed(left, right).exterior(sol)
    }
}

fn profile(basis: &DgBasis, sol: &Solution, ext: &Exterior, theta: f64) -> DampingProfile {
    let per: Vec<_> = (0..3).map(|c| sigma_coeffs(basis, sol, c, ext)).collect();
    let sigma = (0..sol.len())
        .map(|j| (0..=basis.degree).map(|i| per[0][j][i].max(per[1][j][i]).max(per[2][j][i])).collect())
        .collect();
    DampingProfile { theta: vec![theta; sol.len()], sigma }
}

pub fn oe_preserves_averages(cases: u32) -> Result<(), String> {
    check(cases, (solution(), any::<bool>(), any_state(), any_state(), 0.0..1.0f64, 0.0..10.0f64), |(sol, periodic, l, r, tau, theta)| {
        let b = DgBasis::new(2);
        let mesh = Mesh::new(0.0, 1.0, sol.len());
        let prof = profile(&b, &sol, &exterior(periodic, &sol, l, r), theta);
        let mut out = sol.clone();
        apply_oe(&mut out, &prof, tau, &mesh);
        for (a, o) in out.cells.iter().zip(&sol.cells) {
            prop_assert_eq!(a.modes[0], o.modes[0]);
        }
        Ok(())
    })
}

/// Indicators of `u` and `10^6 u` (or `10^-6 u`) agree to round-off.
pub fn oe_scale_invariance(cases: u32) -> Result<(), String> {
    check(cases, (solution(), any::<bool>(), any_state(), any_state(), any::<bool>(), 0usize..3), |(sol, periodic, l, r, up, comp)| {
        let b = DgBasis::new(2);
        let ext = exterior(periodic, &sol, l, r);
        let s = if up { 1e6 } else { 1e-6 };
        let mut big = sol.clone();
        for c in &mut big.cells {
            for m in &mut c.modes {
                *m *= s;
            }
        }
        let ext2 = Exterior { left: ext.left * s, right: ext.right * s, ..ext };
        let base = sigma_coeffs(&b, &sol, comp, &ext);
        let other = sigma_coeffs(&b, &big, comp, &ext2);
        let top = base.iter().flatten().fold(0.0f64, |m, &v| m.max(v));
        for (x, y) in base.iter().flatten().zip(other.iter().flatten()) {
            prop_assert!((x - y).abs() <= 1e-13 * top, "{} vs {}", x, y);
        }
        Ok(())
    })
}

/// Damping by `t1` then `t2` equals damping by `t1 + t2`.
pub fn oe_semigroup(cases: u32) -> Result<(), String> {
    check(cases, (solution(), any_state(), any_state(), 0.0..0.5f64, 0.0..0.5f64, 0.0..10.0f64), |(sol, l, r, t1, t2, theta)| {
        let b = DgBasis::new(2);
        let mesh = Mesh::new(0.0, 1.0, sol.len());
        let prof = profile(&b, &sol, &exterior(false, &sol, l, r), theta);
        let mut once = sol.clone();
        apply_oe(&mut once, &prof, t1 + t2, &mesh);
        let mut twice = sol.clone();
        apply_oe(&mut twice, &prof, t1, &mesh);
        apply_oe(&mut twice, &prof, t2, &mesh);
        for ((a, c), o) in once.cells.iter().zip(&twice.cells).zip(&sol.cells) {
            for i in 1..a.modes.len() {
                let d = (a.modes[i] - c.modes[i]).max_abs();
                prop_assert!(d <= 1e-14 * o.modes[i].max_abs(), "mode {}: {:?} vs {:?}", i, a.modes[i], c.modes[i]);
            }
        }
        Ok(())
    })
}

fn bisect(f: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if f(m) >= 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    lo
}

/// Exponent, `v_ref` and the average `(rho, v, c)`, plus room around it for a box.
fn cell_setup() -> impl Strategy<Value = (f64, f64, (f64, f64, f64), [f64; 5])> {
    (0usize..3, 0.1..2.0f64, (-3.0..1.0f64, 0.1..3.0f64, 0.5..1.5f64), prop::array::uniform5(0.0..0.5f64))
        .prop_map(|(g, v_ref, (lr, v, c), room)| (GAMMAS[g], v_ref, (10f64.powf(lr), v, c), room))
}

fn make_box(law: &PressureLaw, avg: State, room: [f64; 5]) -> InvariantBox {
    let q = law.primitives(avg).unwrap();
    InvariantBox {
        w_min: q.w - room[0] * q.w.abs(),
        w_max: q.w + room[1] * q.w.abs(),
        c_min: q.c * (1.0 - room[2]),
        c_max: q.c * (1.0 + room[3]),
        v_min: (q.v * (1.0 - 2.0 * room[4])).max(0.0),
    }
}

/// Random cells with feasible averages and large higher modes: after limiting
/// the average is unchanged and every limiter node satisfies every constraint.
/// Returns the number of cells that started infeasible.
pub fn limiter_feasibility(cases: u32) -> Result<usize, String> {
    let infeasible = std::cell::Cell::new(0usize);
    let modes = (prop::array::uniform3(-3.0..3.0f64), prop::array::uniform3(-3.0..3.0f64));
    check(cases, (cell_setup(), modes), |((gamma, v_ref, (rho, v, c), room), (m1, m2))| {
        let law = law(gamma, v_ref);
        let b = DgBasis::new(2);
        let avg = law.from_primitives(rho, v, c).unwrap();
        let mut bx = make_box(&law, avg, room);
        let mode = |m: [f64; 3]| State::new(m[0] * avg.rho, m[1] * avg.y.abs().max(avg.rho), m[2] * avg.z);
        let mut cell = CellPoly { modes: vec![avg, mode(m1), mode(m2)] };
        if cell.limiter_values(&b).iter().any(|&u| !bx.contains(&law, u, 0.0)) {
            infeasible.set(infeasible.get() + 1);
        }
        limit_cell(&law, &b, &mut bx, &mut cell).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(cell.modes[0], avg);
        for u in cell.limiter_values(&b) {
            prop_assert!(u.rho > 0.0 && u.z > 0.0, "{:?}", u);
            for c in Constraint::ALL {
                let h = bx.h_value(c, &law, u);
                let scale = u.rho * bx.scale(c) + u.y.abs() + u.z.abs();
                prop_assert!(h >= -1e-13 * scale, "{}: {} at {:?}", c, h, u);
            }
        }
        Ok(())
    })?;
    Ok(infeasible.get())
}

pub fn theta_linear_roots(cases: u32) -> Result<(), String> {
    check(cases, (1e-6..10.0f64, -10.0..10.0f64, 0.0..1.0f64), |(h_bar, h_hat, eps_rel)| {
        let eps = (1e-12f64).min(eps_rel * h_bar);
        let t = theta_linear(h_bar, h_hat, eps);
        let oracle = if h_hat >= eps { 1.0 } else { bisect(|s| h_bar + s * (h_hat - h_bar) - eps) };
        prop_assert!((t - oracle).abs() <= 1e-13, "{} vs {}", t, oracle);
        Ok(())
    })
}

pub fn theta_velocity_roots(cases: u32) -> Result<(), String> {
    check(cases, (cell_setup(), (-3.0..1.0f64, -3.0..3.0f64, 0.3..2.0f64), 0.0..1.0f64), |((gamma, v_ref, (rho, v, c), _), hat, frac)| {
        let law = law(gamma, v_ref);
        let u_bar = law.from_primitives(rho, v, c).unwrap();
        let v_min = v * frac;
        let r = 10f64.powf(hat.0);
        let u_hat = State::new(r, r * hat.1, r * hat.2);
        let eps = 1e-12 * rho;
        let h = |u: State| {
            if u.rho > 0.0 && u.z > 0.0 {
                u.y - u.rho * (v_min + law.pressure_rc(u.rho, u.z / u.rho)) - eps
            } else {
                f64::NEG_INFINITY
            }
        };
        prop_assume!(h(u_bar) >= 0.0);
        let t = theta_velocity(&law, v_min, u_bar, u_hat, eps);
        let at = |s: f64| u_bar + (u_hat - u_bar) * s;
        prop_assert!(h(at(t)) >= 0.0);
        if h(u_hat) < 0.0 {
            // Concavity makes the feasible set an interval starting at 0.
            let oracle = bisect(|s| h(at(s)));
            prop_assert!((t - oracle).abs() <= 1e-13, "{} vs {}", t, oracle);
        } else {
            prop_assert_eq!(t, 1.0);
        }
        Ok(())
    })
}
