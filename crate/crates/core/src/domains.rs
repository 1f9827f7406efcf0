//! Invariant regions of the ARZ system: constraint boxes, the `h` gap
//! function, the geometric quasilinear certificate and Lax-Friedrichs type
//! splittings, plus the global and local box estimators.

use std::fmt;

use crate::error::ModelError;
use crate::model::{PressureLaw, State};

/// One scalar constraint of the invariant region.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Constraint {
    Density,
    Marker,
    WMin,
    WMax,
    CMin,
    CMax,
    VMin,
}

impl Constraint {
    pub const ALL: [Constraint; 7] = [
        Constraint::Density,
        Constraint::Marker,
        Constraint::WMin,
        Constraint::WMax,
        Constraint::CMin,
        Constraint::CMax,
        Constraint::VMin,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Constraint::Density => "rho>0",
            Constraint::Marker => "z>0",
            Constraint::WMin => "w>=w_min",
            Constraint::WMax => "w<=w_max",
            Constraint::CMin => "c>=c_min",
            Constraint::CMax => "c<=c_max",
            Constraint::VMin => "v>=v_min",
        }
    }

    pub fn from_label(s: &str) -> Option<Constraint> {
        Constraint::ALL.into_iter().find(|c| c.label() == s)
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Box `[w_min, w_max] x [c_min, c_max]` in the markers together with the
/// lower velocity bound. Positivity of `rho` and `z` is implied.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvariantBox {
    pub w_min: f64,
    pub w_max: f64,
    pub c_min: f64,
    pub c_max: f64,
    pub v_min: f64,
}

/// Per-constraint slacks in the units of the constrained quantity, in the
/// order of [`Constraint::ALL`]. Undefined entries (e.g. `w` at `rho <= 0`)
/// are NaN.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Slacks(pub [f64; 7]);

impl Slacks {
    pub fn get(&self, c: Constraint) -> f64 {
        self.0[c.index()]
    }

    /// Constraints whose slack is below `-tol * scale` or undefined.
    pub fn violated(&self, bx: &InvariantBox, tol: f64) -> Vec<Constraint> {
        Constraint::ALL
            .into_iter()
            .filter(|&c| {
                let s = self.get(c);
                !(s >= -tol * bx.scale(c))
            })
            .collect()
    }
}

impl InvariantBox {
    /// A box containing nothing, ready to be grown with [`InvariantBox::include`].
    pub const EMPTY: InvariantBox = InvariantBox {
        w_min: f64::INFINITY,
        w_max: f64::NEG_INFINITY,
        c_min: f64::INFINITY,
        c_max: f64::NEG_INFINITY,
        v_min: f64::INFINITY,
    };

    /// Magnitude used to turn absolute tolerances into relative ones.
    pub fn scale(&self, c: Constraint) -> f64 {
        let b = match c {
            Constraint::Density | Constraint::Marker => 0.0,
            Constraint::WMin => self.w_min,
            Constraint::WMax => self.w_max,
            Constraint::CMin => self.c_min,
            Constraint::CMax => self.c_max,
            Constraint::VMin => self.v_min,
        };
        b.abs().max(1.0)
    }

    pub fn is_empty(&self) -> bool {
        !(self.w_min <= self.w_max && self.c_min <= self.c_max)
    }

    /// Grows the box so that it contains the physical state `u`.
    pub fn include(&mut self, law: &PressureLaw, u: State) -> Result<(), ModelError> {
        let q = law.primitives(u)?;
        self.w_min = self.w_min.min(q.w);
        self.w_max = self.w_max.max(q.w);
        self.c_min = self.c_min.min(q.c);
        self.c_max = self.c_max.max(q.c);
        self.v_min = self.v_min.min(q.v);
        Ok(())
    }

    /// Widens every bound outward by `eps` and clamps `v_min` at zero.
    pub fn widened(&self, eps: f64) -> InvariantBox {
        InvariantBox {
            w_min: self.w_min - eps,
            w_max: self.w_max + eps,
            c_min: self.c_min - eps,
            c_max: self.c_max + eps,
            v_min: (self.v_min - eps).max(0.0),
        }
    }

    /// Relaxation by `sqrt(dx)` times the magnitude of each bound.
    pub fn relaxed(&self, dx: f64) -> InvariantBox {
        let r = dx.sqrt();
        InvariantBox {
            w_min: self.w_min - r * self.w_min.abs(),
            w_max: self.w_max + r * self.w_max.abs(),
            c_min: self.c_min - r * self.c_min.abs(),
            c_max: self.c_max + r * self.c_max.abs(),
            v_min: self.v_min - r * self.v_min.abs(),
        }
    }

    pub fn intersect(&self, o: &InvariantBox) -> InvariantBox {
        InvariantBox {
            w_min: self.w_min.max(o.w_min),
            w_max: self.w_max.min(o.w_max),
            c_min: self.c_min.max(o.c_min),
            c_max: self.c_max.min(o.c_max),
            v_min: self.v_min.max(o.v_min),
        }
    }

    /// Smallest box containing both.
    pub fn hull(&self, o: &InvariantBox) -> InvariantBox {
        InvariantBox {
            w_min: self.w_min.min(o.w_min),
            w_max: self.w_max.max(o.w_max),
            c_min: self.c_min.min(o.c_min),
            c_max: self.c_max.max(o.c_max),
            v_min: self.v_min.min(o.v_min),
        }
    }

    /// True when `self` lies inside `o`.
    pub fn within(&self, o: &InvariantBox) -> bool {
        self.w_min >= o.w_min && self.w_max <= o.w_max && self.c_min >= o.c_min && self.c_max <= o.c_max && self.v_min >= o.v_min
    }

    pub fn slacks(&self, law: &PressureLaw, u: State) -> Slacks {
        let mut s = [f64::NAN; 7];
        s[0] = if u.rho.is_finite() { u.rho } else { f64::NAN };
        s[1] = if u.z.is_finite() { u.z } else { f64::NAN };
        if let Ok(q) = law.primitives(u) {
            s[2] = q.w - self.w_min;
            s[3] = self.w_max - q.w;
            s[4] = q.c - self.c_min;
            s[5] = self.c_max - q.c;
            s[6] = q.v - self.v_min;
        }
        // Positivity has to be strict.
        if s[0] == 0.0 {
            s[0] = f64::NAN;
        }
        if s[1] == 0.0 {
            s[1] = f64::NAN;
        }
        Slacks(s)
    }

    pub fn violations(&self, law: &PressureLaw, u: State, tol: f64) -> Vec<Constraint> {
        self.slacks(law, u).violated(self, tol)
    }

    pub fn contains(&self, law: &PressureLaw, u: State, tol: f64) -> bool {
        self.violations(law, u, tol).is_empty()
    }

    /// State in `Omega_1`: positive and inside the marker box.
    pub fn in_omega1(&self, law: &PressureLaw, u: State) -> bool {
        let s = self.slacks(law, u);
        s.0[..6].iter().all(|&x| x >= 0.0)
    }

    /// State in `Omega_2`: positive with `v >= v_min`.
    pub fn in_omega2(&self, law: &PressureLaw, u: State) -> bool {
        let s = self.slacks(law, u);
        s.0[0] >= 0.0 && s.0[1] >= 0.0 && s.0[6] >= 0.0
    }

    /// Constraint written as a function that is concave in the conserved
    /// variables: `rho`, `z`, `y - rho w_min`, `rho w_max - y`,
    /// `z - rho c_min`, `rho c_max - z`, `y - rho (v_min + p)`.
    /// The last one is `-inf` outside the positive region.
    pub fn h_value(&self, c: Constraint, law: &PressureLaw, u: State) -> f64 {
        match c {
            Constraint::Density => u.rho,
            Constraint::Marker => u.z,
            Constraint::WMin => u.y - u.rho * self.w_min,
            Constraint::WMax => u.rho * self.w_max - u.y,
            Constraint::CMin => u.z - u.rho * self.c_min,
            Constraint::CMax => u.rho * self.c_max - u.z,
            Constraint::VMin => {
                if u.rho > 0.0 && u.z > 0.0 {
                    u.y - u.rho * (self.v_min + law.pressure_rc(u.rho, u.z / u.rho))
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }
}

/// Global box estimated from samples of the data: extreme markers widened by
/// `eps0`, `v_min = max(min v - eps0, 0)`.
pub fn estimate_global_box<I>(law: &PressureLaw, samples: I, eps0: f64) -> Result<InvariantBox, ModelError>
where
    I: IntoIterator<Item = State>,
{
    let mut bx = InvariantBox::EMPTY;
    for u in samples {
        bx.include(law, u)?;
    }
    if bx.is_empty() {
        return Err(ModelError::InvalidParameter("no samples for the global box".into()));
    }
    Ok(bx.widened(eps0))
}

/// Monotone update of a running global box with boundary states.
pub fn update_global_box(law: &PressureLaw, bx: &InvariantBox, exterior: &[State], eps0: f64) -> Result<InvariantBox, ModelError> {
    let mut grown = InvariantBox::EMPTY;
    for &u in exterior {
        grown.include(law, u)?;
    }
    if grown.is_empty() {
        return Ok(*bx);
    }
    Ok(bx.hull(&grown.widened(eps0)))
}

/// `h(rho*, z*; rho, z) = rho [p(rho,z) - p(rho*,z*)] + rho* [(rho*-rho) p_rho(rho*,z*) + (z*-z) p_z(rho*,z*)]`,
/// non-negative on the positive quadrant.
pub fn h_gap(law: &PressureLaw, rho_s: f64, z_s: f64, rho: f64, z: f64) -> Result<f64, ModelError> {
    let p = law.pressure(rho, z)?;
    let ps = law.pressure(rho_s, z_s)?;
    let d = law.pressure_derivs(rho_s, z_s)?;
    Ok(rho * (p - ps) + rho_s * ((rho_s - rho) * d.p_rho + (z_s - z) * d.p_z))
}

/// `eta(U) = rho (v_min + p(rho, z))`; the velocity constraint reads `y >= eta(U)`.
pub fn eta(law: &PressureLaw, v_min: f64, u: State) -> Result<f64, ModelError> {
    Ok(u.rho * (v_min + law.pressure(u.rho, u.z)?))
}

/// Normal `n*` and offset `s*` of the supporting half-space at `u_star`:
/// `U . n* + s* = rho (v - v_min) + h(rho*, z*; rho, z)`.
pub fn gql_certificate(law: &PressureLaw, v_min: f64, u_star: State) -> Result<(State, f64), ModelError> {
    let p = law.pressure(u_star.rho, u_star.z)?;
    let d = law.pressure_derivs(u_star.rho, u_star.z)?;
    let n = State::new(-(v_min + p + u_star.rho * d.p_rho), 1.0, -u_star.rho * d.p_z);
    let s = u_star.rho * u_star.rho * d.p_rho + u_star.rho * u_star.z * d.p_z;
    Ok((n, s))
}

/// Generalized Lax-Friedrichs state `(U_hat + F(U_hat)/a + U_check - F(U_check)/a) / 2`.
pub fn glf_average(law: &PressureLaw, u_hat: State, u_check: State, alpha: f64) -> Result<State, ModelError> {
    let fh = law.flux(u_hat)?;
    let fc = law.flux(u_check)?;
    Ok((u_hat + fh / alpha + u_check - fc / alpha) * 0.5)
}

/// `(U + F(U)/a, U - F(U)/a)`.
pub fn lf_split(law: &PressureLaw, u: State, alpha: f64) -> Result<(State, State), ModelError> {
    let f = law.flux(u)? / alpha;
    Ok((u + f, u - f))
}

/// Min and max over `[-1/2, 1/2]` of the cubic interpolating `f` at
/// `-1/2, -1/6, 1/6, 1/2`.
pub fn cubic_extrema(f: [f64; 4]) -> (f64, f64) {
    // Newton forward differences in s = 3 xi + 3/2, nodes at s = 0, 1, 2, 3.
    let d1 = f[1] - f[0];
    let d2 = f[2] - 2.0 * f[1] + f[0];
    let d3 = f[3] - 3.0 * f[2] + 3.0 * f[1] - f[0];
    let a1 = d1 - d2 / 2.0 + d3 / 3.0;
    let a2 = d2 / 2.0 - d3 / 2.0;
    let a3 = d3 / 6.0;
    let eval = |s: f64| f[0] + s * (a1 + s * (a2 + s * a3));
    let mut lo = f[0].min(f[3]);
    let mut hi = f[0].max(f[3]);
    let mut visit = |s: f64| {
        if s > 0.0 && s < 3.0 {
            let v = eval(s);
            lo = lo.min(v);
            hi = hi.max(v);
        }
    };
    // Roots of a1 + 2 a2 s + 3 a3 s^2.
    let (qa, qb, qc) = (3.0 * a3, 2.0 * a2, a1);
    let scale = qa.abs().max(qb.abs()).max(qc.abs());
    if scale == 0.0 {
        return (lo, hi);
    }
    if qa.abs() <= 1e-14 * scale {
        if qb != 0.0 {
            visit(-qc / qb);
        }
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            let q = -0.5 * (qb + qb.signum() * sq);
            if q != 0.0 {
                visit(q / qa);
                visit(qc / q);
            } else {
                visit(0.0);
            }
        }
    }
    (lo, hi)
}

/// Candidate box of one cell before intersection with the global box:
/// extremes of `v`, `w`, `c` over the given point states and over the cubic
/// interpolants through `cubic_nodes` (values at `x_{j-1/2}`, `x_{j-1/6}`,
/// `x_{j+1/6}`, `x_{j+1/2}`), relaxed by `sqrt(dx)`. Non-physical states are
/// skipped; the cubic is skipped unless all four nodes are physical.
pub fn local_candidate_box(law: &PressureLaw, points: &[State], cubic_nodes: [State; 4], dx: f64) -> InvariantBox {
    let mut bx = InvariantBox::EMPTY;
    for &u in points {
        let _ = bx.include(law, u);
    }
    let prims: Vec<_> = cubic_nodes.iter().filter_map(|&u| law.primitives(u).ok()).collect();
    if prims.len() == 4 {
        let (vlo, _) = cubic_extrema([prims[0].v, prims[1].v, prims[2].v, prims[3].v]);
        let (wlo, whi) = cubic_extrema([prims[0].w, prims[1].w, prims[2].w, prims[3].w]);
        let (clo, chi) = cubic_extrema([prims[0].c, prims[1].c, prims[2].c, prims[3].c]);
        bx.v_min = bx.v_min.min(vlo);
        bx.w_min = bx.w_min.min(wlo);
        bx.w_max = bx.w_max.max(whi);
        bx.c_min = bx.c_min.min(clo);
        bx.c_max = bx.c_max.max(chi);
    }
    bx.relaxed(dx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h_gap_closed_form_for_log_pressure() {
        let law = PressureLaw::standard(0.7, 0.0).unwrap();
        for &(rs, r) in &[(0.3, 0.8), (0.9, 0.01), (0.5, 0.5)] {
            let closed = 0.7 * (r * f64::ln(r) - r * f64::ln(rs) + rs - r);
            let h = h_gap(&law, rs, 0.4, r, 0.2).unwrap();
            assert!((h - closed).abs() < 1e-14, "{h} vs {closed}");
            assert!(h >= 0.0);
        }
    }

    #[test]
    fn cubic_extrema_against_dense_sampling() {
        let cases = [[0.0, 1.0, -1.0, 0.5], [1.0, 1.0, 1.0, 1.0], [0.0, 1.0, 2.0, 3.0], [2.0, -3.0, 5.0, 0.1], [0.0, 1.0, 1.0, 0.0]];
        let nodes = [-0.5, -1.0 / 6.0, 1.0 / 6.0, 0.5];
        for f in cases {
            let lagrange = |x: f64| {
                (0..4)
                    .map(|i| {
                        let mut l = f[i];
                        for m in 0..4 {
                            if m != i {
                                l *= (x - nodes[m]) / (nodes[i] - nodes[m]);
                            }
                        }
                        l
                    })
                    .sum::<f64>()
            };
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for i in 0..=200_000 {
                let v = lagrange(-0.5 + i as f64 / 200_000.0);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            let (clo, chi) = cubic_extrema(f);
            assert!((clo - lo).abs() < 1e-9 && (chi - hi).abs() < 1e-9, "{f:?}: {clo} {chi} vs {lo} {hi}");
        }
    }

    #[test]
    fn box_operations() {
        let a = InvariantBox { w_min: 0.0, w_max: 2.0, c_min: 1.0, c_max: 1.5, v_min: 0.1 };
        let b = InvariantBox { w_min: 1.0, w_max: 3.0, c_min: 0.5, c_max: 1.2, v_min: 0.0 };
        let i = a.intersect(&b);
        assert_eq!(i, InvariantBox { w_min: 1.0, w_max: 2.0, c_min: 1.0, c_max: 1.2, v_min: 0.1 });
        assert!(i.within(&a) && i.within(&b));
        assert!(a.within(&a.hull(&b)) && b.within(&a.hull(&b)));
        assert!(a.within(&a.relaxed(0.01)));
        assert!(InvariantBox::EMPTY.is_empty());
    }

    #[test]
    fn nan_state_violates_everything() {
        let law = PressureLaw::standard(1.0, 1.0).unwrap();
        let bx = InvariantBox { w_min: 0.0, w_max: 2.0, c_min: 1.0, c_max: 1.5, v_min: 0.1 };
        let nan = bx.violations(&law, State::new(f64::NAN, 1.0, 1.0), 1e-12);
        assert_eq!(nan.len(), 6);
        assert!(!nan.contains(&Constraint::Marker));
        let neg = bx.violations(&law, State::new(-0.1, 0.1, 0.1), 1e-12);
        assert!(neg.contains(&Constraint::Density) && neg.contains(&Constraint::VMin));
        assert!(!neg.contains(&Constraint::Marker));
    }

    #[test]
    fn global_box_is_monotone_under_updates() {
        let law = PressureLaw::standard(1.0, 1.0).unwrap();
        let samples = [State::from_markers(0.5, 1.0, 1.0), State::from_markers(0.2, 1.2, 1.1)];
        let bx = estimate_global_box(&law, samples, 1e-9).unwrap();
        assert!(bx.contains(&law, samples[0], 0.0) && bx.contains(&law, samples[1], 0.0));
        let ext = [State::from_markers(0.9, 3.0, 0.8)];
        let grown = update_global_box(&law, &bx, &ext, 1e-9).unwrap();
        assert!(bx.within(&grown));
        assert!(grown.contains(&law, ext[0], 0.0));
        assert_eq!(update_global_box(&law, &grown, &ext, 1e-9).unwrap(), grown);
    }
}
