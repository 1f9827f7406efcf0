//! Conserved state, pressure laws and the ARZ flux.

use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use crate::error::ModelError;

/// Conserved variables `(rho, y, z)` with `y = rho*w` and `z = rho*c`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct State {
    pub rho: f64,
    pub y: f64,
    pub z: f64,
}

impl State {
    pub const ZERO: State = State { rho: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(rho: f64, y: f64, z: f64) -> Self {
        State { rho, y, z }
    }

    /// Builds the conserved state from density, Lagrangian marker `w` and
    /// auxiliary marker `c`.
    pub fn from_markers(rho: f64, w: f64, c: f64) -> Self {
        State { rho, y: rho * w, z: rho * c }
    }

    pub fn component(&self, i: usize) -> f64 {
        match i {
            0 => self.rho,
            1 => self.y,
            2 => self.z,
            _ => panic!("state component {i} out of range"),
        }
    }

    pub fn component_mut(&mut self, i: usize) -> &mut f64 {
        match i {
            0 => &mut self.rho,
            1 => &mut self.y,
            2 => &mut self.z,
            _ => panic!("state component {i} out of range"),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.rho.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn max_abs(&self) -> f64 {
        self.rho.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn w(&self) -> f64 {
        self.y / self.rho
    }

    pub fn c(&self) -> f64 {
        self.z / self.rho
    }
}

impl Add for State {
    type Output = State;
    fn add(self, o: State) -> State {
        State::new(self.rho + o.rho, self.y + o.y, self.z + o.z)
    }
}

impl Sub for State {
    type Output = State;
    fn sub(self, o: State) -> State {
        State::new(self.rho - o.rho, self.y - o.y, self.z - o.z)
    }
}

impl Neg for State {
    type Output = State;
    fn neg(self) -> State {
        State::new(-self.rho, -self.y, -self.z)
    }
}

impl Mul<f64> for State {
    type Output = State;
    fn mul(self, s: f64) -> State {
        State::new(self.rho * s, self.y * s, self.z * s)
    }
}

impl Mul<State> for f64 {
    type Output = State;
    fn mul(self, u: State) -> State {
        u * self
    }
}

impl Div<f64> for State {
    type Output = State;
    fn div(self, s: f64) -> State {
        State::new(self.rho / s, self.y / s, self.z / s)
    }
}

impl AddAssign for State {
    fn add_assign(&mut self, o: State) {
        self.rho += o.rho;
        self.y += o.y;
        self.z += o.z;
    }
}

impl SubAssign for State {
    fn sub_assign(&mut self, o: State) {
        self.rho -= o.rho;
        self.y -= o.y;
        self.z -= o.z;
    }
}

impl MulAssign<f64> for State {
    fn mul_assign(&mut self, s: f64) {
        self.rho *= s;
        self.y *= s;
        self.z *= s;
    }
}

/// Velocity-type quantities derived from a state in the physical region.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Primitives {
    pub rho: f64,
    pub v: f64,
    pub w: f64,
    pub c: f64,
    pub p: f64,
}

/// Partial derivatives of the pressure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PressureDerivs {
    pub p_rho: f64,
    pub p_z: f64,
}

/// Which closed-form majorant of `s = rho^2 p_rho + rho z p_z` over a box
/// is used inside [`PressureLaw::alpha_max`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SBound {
    /// `v_ref * z_max^kappa * rho_min^(gamma - kappa)`; only a majorant when
    /// `rho_min <= 1`.
    #[default]
    Loose,
    /// `v_ref * z_max^kappa * rho_min^(gamma - kappa + 1)`, the exact
    /// supremum over the box.
    Tight,
}

/// Pressure law `p(rho, z)`: `(v_ref/gamma) z^kappa rho^(gamma-kappa)` for
/// `gamma > 0`, `v_ref ln(rho)` for `gamma = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PressureLaw {
    pub v_ref: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub s_bound: SBound,
}

impl PressureLaw {
    pub fn new(v_ref: f64, gamma: f64, kappa: f64) -> Result<Self, ModelError> {
        if !(v_ref > 0.0 && v_ref.is_finite()) {
            return Err(ModelError::InvalidParameter(format!("v_ref must be positive, got {v_ref}")));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(ModelError::InvalidParameter(format!("gamma must be >= 0, got {gamma}")));
        }
        if gamma > 0.0 && !(kappa >= gamma + 1.0) {
            return Err(ModelError::InvalidParameter(format!(
                "kappa must be >= gamma + 1 (gamma = {gamma}, kappa = {kappa})"
            )));
        }
        Ok(PressureLaw { v_ref, gamma, kappa, s_bound: SBound::Loose })
    }

    /// `kappa = gamma + 1`, the usual choice.
    pub fn standard(v_ref: f64, gamma: f64) -> Result<Self, ModelError> {
        Self::new(v_ref, gamma, gamma + 1.0)
    }

    pub fn with_s_bound(mut self, s_bound: SBound) -> Self {
        self.s_bound = s_bound;
        self
    }

    fn check(&self, rho: f64, z: f64) -> Result<(), ModelError> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(ModelError::NonPositiveDensity(rho));
        }
        if !(z > 0.0) || !z.is_finite() {
            return Err(ModelError::NonPositiveMarker(z));
        }
        Ok(())
    }

    /// Pressure as a function of `rho` and the marker `c = z/rho`.
    #[inline]
    pub fn pressure_rc(&self, rho: f64, c: f64) -> f64 {
        if self.gamma == 0.0 {
            self.v_ref * rho.ln()
        } else {
            self.v_ref / self.gamma * c.powf(self.kappa) * rho.powf(self.gamma)
        }
    }

    pub fn pressure(&self, rho: f64, z: f64) -> Result<f64, ModelError> {
        self.check(rho, z)?;
        Ok(self.pressure_rc(rho, z / rho))
    }

    pub fn pressure_derivs(&self, rho: f64, z: f64) -> Result<PressureDerivs, ModelError> {
        self.check(rho, z)?;
        if self.gamma == 0.0 {
            return Ok(PressureDerivs { p_rho: self.v_ref / rho, p_z: 0.0 });
        }
        let p = self.pressure_rc(rho, z / rho);
        Ok(PressureDerivs { p_rho: (self.gamma - self.kappa) * p / rho, p_z: self.kappa * p / z })
    }

    /// `rho p_rho + z p_z`, which equals `rho` times the derivative of the
    /// pressure along a ray of fixed `c`.
    #[inline]
    pub fn elasticity_rc(&self, rho: f64, c: f64) -> f64 {
        if self.gamma == 0.0 {
            self.v_ref
        } else {
            self.gamma * self.pressure_rc(rho, c)
        }
    }

    pub fn primitives(&self, u: State) -> Result<Primitives, ModelError> {
        self.check(u.rho, u.z)?;
        if !u.y.is_finite() {
            return Err(ModelError::NonFinite);
        }
        let w = u.y / u.rho;
        let c = u.z / u.rho;
        let p = self.pressure_rc(u.rho, c);
        Ok(Primitives { rho: u.rho, v: w - p, w, c, p })
    }

    pub fn from_primitives(&self, rho: f64, v: f64, c: f64) -> Result<State, ModelError> {
        self.check(rho, c * rho)?;
        let w = v + self.pressure_rc(rho, c);
        Ok(State::from_markers(rho, w, c))
    }

    pub fn velocity(&self, u: State) -> Result<f64, ModelError> {
        Ok(self.primitives(u)?.v)
    }

    /// `F(U) = v U`.
    pub fn flux(&self, u: State) -> Result<State, ModelError> {
        Ok(u * self.primitives(u)?.v)
    }

    /// Eigenvalues `(lambda_1, lambda_2, lambda_3)`; the last two coincide with `v`.
    pub fn eigen_speeds(&self, u: State) -> Result<(f64, f64, f64), ModelError> {
        let q = self.primitives(u)?;
        let l1 = q.v - self.elasticity_rc(q.rho, q.c);
        Ok((l1, q.v, q.v))
    }

    /// Spectral radius of the flux Jacobian.
    pub fn spectral_radius(&self, u: State) -> Result<f64, ModelError> {
        let (l1, l2, _) = self.eigen_speeds(u)?;
        Ok(l1.abs().max(l2.abs()))
    }

    /// `v + |rho p_rho + z p_z|`.
    pub fn alpha_bar(&self, u: State) -> Result<f64, ModelError> {
        let q = self.primitives(u)?;
        Ok(q.v + self.elasticity_rc(q.rho, q.c).abs())
    }

    /// `s = rho^2 p_rho + rho z p_z`.
    pub fn s_value(&self, rho: f64, z: f64) -> Result<f64, ModelError> {
        self.check(rho, z)?;
        Ok(rho * self.elasticity_rc(rho, z / rho))
    }

    /// Closed-form majorant of `s` over `[rho_lo, rho_hi] x [z_lo, z_hi]`.
    pub fn s_bar(&self, rho_lo: f64, rho_hi: f64, z_hi: f64) -> f64 {
        if self.gamma == 0.0 {
            return self.v_ref * rho_hi;
        }
        let exponent = match self.s_bound {
            SBound::Loose => self.gamma - self.kappa,
            SBound::Tight => self.gamma - self.kappa + 1.0,
        };
        self.v_ref * z_hi.powf(self.kappa) * rho_lo.powf(exponent)
    }

    /// Viscosity coefficient that makes the generalized Lax-Friedrichs state of
    /// `(u_hat, u_check)` admissible for every invariant box containing both.
    pub fn alpha_max(&self, u_hat: State, u_check: State) -> Result<f64, ModelError> {
        let qh = self.primitives(u_hat)?;
        let qc = self.primitives(u_check)?;
        let alpha_std = (qh.v + self.elasticity_rc(qh.rho, qh.c).abs())
            .max(qc.v + self.elasticity_rc(qc.rho, qc.c).abs());
        let (rho_lo, rho_hi, z_hi) = glf_density_range(u_hat, qh.v, u_check, qc.v, alpha_std);
        if !(rho_lo > 0.0) {
            return Err(ModelError::NonPositiveDensity(rho_lo));
        }
        let s_bar = self.s_bar(rho_lo, rho_hi, z_hi);
        Ok(alpha_std
            .max(qh.v.abs() + s_bar / qh.rho)
            .max(qc.v.abs() + s_bar / qc.rho))
    }

    /// `Q(rho) = rho (w - p(rho, c rho))` for fixed markers.
    #[inline]
    pub fn flow_rate(&self, rho: f64, w: f64, c: f64) -> f64 {
        if rho <= 0.0 {
            return 0.0;
        }
        rho * (w - self.pressure_rc(rho, c))
    }

    /// `lambda_1` along the ray of fixed markers `(w, c)`; this is `dQ/drho`.
    #[inline]
    pub fn lambda1_rc(&self, rho: f64, w: f64, c: f64) -> f64 {
        w - self.pressure_rc(rho, c) - self.elasticity_rc(rho, c)
    }

    /// Density at which `lambda_1(rho; w, c) = target`. `lambda_1` is strictly
    /// decreasing in `rho`; returns 0 when it stays below `target` for all
    /// densities.
    pub fn rho_at_lambda1(&self, w: f64, c: f64, target: f64) -> f64 {
        if self.gamma == 0.0 {
            ((w - target - self.v_ref) / self.v_ref).exp()
        } else if w <= target {
            0.0
        } else {
            let g = self.gamma;
            ((w - target) * g / ((g + 1.0) * self.v_ref * c.powf(self.kappa))).powf(1.0 / g)
        }
    }
}

/// Extreme densities and `z` of the two intermediate states used in the
/// speed bound: `(rho_lo, rho_hi, z_hi)`.
fn glf_density_range(uh: State, vh: f64, uc: State, vc: f64, alpha_std: f64) -> (f64, f64, f64) {
    let r1 = 0.5 * (uh.rho + uc.rho);
    let r2 = r1 + (uh.rho * vh - uc.rho * vc) / (2.0 * alpha_std);
    let z1 = 0.5 * (uh.z + uc.z);
    let z2 = z1 + (uh.z * vh - uc.z * vc) / (2.0 * alpha_std);
    (r1.min(r2), r1.max(r2), z1.max(z2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laws() -> Vec<PressureLaw> {
        vec![
            PressureLaw::standard(0.9, 0.0).unwrap(),
            PressureLaw::standard(1.0, 1.0).unwrap(),
            PressureLaw::standard(0.5, 2.0).unwrap(),
            PressureLaw::new(1.0, 1.0, 3.5).unwrap(),
        ]
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(PressureLaw::new(0.0, 1.0, 2.0).is_err());
        assert!(PressureLaw::new(1.0, -1.0, 2.0).is_err());
        assert!(PressureLaw::new(1.0, 2.0, 2.5).is_err());
        assert!(PressureLaw::new(1.0, 0.0, 0.0).is_ok());
    }

    #[test]
    fn rejects_non_physical_states() {
        let law = PressureLaw::standard(1.0, 1.0).unwrap();
        assert!(law.primitives(State::new(0.0, 1.0, 1.0)).is_err());
        assert!(law.primitives(State::new(0.5, 1.0, -1.0)).is_err());
        assert!(law.flux(State::new(f64::NAN, 1.0, 1.0)).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for law in laws() {
            for &(rho, z) in &[(0.3, 0.4), (0.8, 0.5), (0.05, 0.07)] {
                let d = law.pressure_derivs(rho, z).unwrap();
                let h = 1e-6;
                let pr = (law.pressure(rho + h, z).unwrap() - law.pressure(rho - h, z).unwrap()) / (2.0 * h);
                let pz = (law.pressure(rho, z + h).unwrap() - law.pressure(rho, z - h).unwrap()) / (2.0 * h);
                assert!((d.p_rho - pr).abs() < 1e-6 * (1.0 + pr.abs()), "{law:?}");
                assert!((d.p_z - pz).abs() < 1e-6 * (1.0 + pz.abs()), "{law:?}");
            }
        }
    }

    #[test]
    fn eigenvalues_of_numerical_jacobian() {
        // The Jacobian of F has eigenvalues v - (rho p_rho + z p_z) and v (double).
        for law in laws() {
            let u = State::from_markers(0.4, 1.7, 1.1);
            let h = 1e-7;
            let mut jac = [[0.0; 3]; 3];
            for k in 0..3 {
                let mut up = u;
                let mut um = u;
                *up.component_mut(k) += h;
                *um.component_mut(k) -= h;
                let fp = law.flux(up).unwrap();
                let fm = law.flux(um).unwrap();
                for i in 0..3 {
                    jac[i][k] = (fp.component(i) - fm.component(i)) / (2.0 * h);
                }
            }
            let (l1, l2, _) = law.eigen_speeds(u).unwrap();
            let trace = jac[0][0] + jac[1][1] + jac[2][2];
            assert!((trace - (l1 + 2.0 * l2)).abs() < 1e-5, "{law:?}");
            // (J - v I) has rank one, so det(J - l1 I) vanishes as well.
            let det = |l: f64| {
                let m = |i: usize, k: usize| jac[i][k] - if i == k { l } else { 0.0 };
                m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
                    + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
            };
            assert!(det(l1).abs() < 1e-5);
            assert!(det(l2).abs() < 1e-5);
        }
    }

    #[test]
    fn lambda1_inverse() {
        for law in laws() {
            let (w, c) = (2.0, 1.2);
            for &target in &[-1.0, 0.0, 0.5] {
                let rho = law.rho_at_lambda1(w, c, target);
                assert!((law.lambda1_rc(rho, w, c) - target).abs() < 1e-10, "{law:?}");
            }
        }
    }

    #[test]
    fn flux_is_velocity_times_state() {
        let law = PressureLaw::standard(0.01, 0.0).unwrap();
        let u = law.from_primitives(0.5, 0.15, 1.0).unwrap();
        let f = law.flux(u).unwrap();
        assert!((f.rho - 0.075).abs() < 1e-15);
        assert!((law.velocity(u).unwrap() - 0.15).abs() < 1e-15);
    }
}
