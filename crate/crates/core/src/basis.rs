//! Uniform meshes, quadrature rules, the Legendre modal basis and piecewise
//! polynomial solutions.

use crate::model::State;

/// Uniform partition of `[x_left, x_left + length]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mesh {
    pub x_left: f64,
    pub length: f64,
    pub cells: usize,
}

impl Mesh {
    pub fn new(x_left: f64, length: f64, cells: usize) -> Self {
        assert!(cells > 0 && length > 0.0, "mesh needs cells > 0 and length > 0");
        Mesh { x_left, length, cells }
    }

    pub fn dx(&self) -> f64 {
        self.length / self.cells as f64
    }

    pub fn x_right(&self) -> f64 {
        self.x_left + self.length
    }

    pub fn center(&self, j: usize) -> f64 {
        self.x_left + (j as f64 + 0.5) * self.dx()
    }

    /// Physical coordinate of the local coordinate `xi` in `[-1/2, 1/2]` of cell `j`.
    pub fn point(&self, j: usize, xi: f64) -> f64 {
        self.center(j) + xi * self.dx()
    }

    /// Cell index and local coordinate of `x`; points outside are clamped to
    /// the end cells.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let s = (x - self.x_left) / self.dx();
        let j = (s.floor().max(0.0) as usize).min(self.cells - 1);
        (j, s - j as f64 - 0.5)
    }
}

/// Quadrature on the reference cell `[-1/2, 1/2]`; weights sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct Quadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    /// `n`-point Gauss-Legendre rule.
    pub fn gauss(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre_with_derivative(n, t);
                let step = p / dp;
                t -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre_with_derivative(n, t);
            nodes[n - 1 - i] = 0.5 * t;
            weights[n - 1 - i] = 1.0 / ((1.0 - t * t) * dp * dp);
        }
        Quadrature { nodes, weights }
    }

    /// `n`-point Gauss-Lobatto rule, `n >= 2`; includes both end points.
    pub fn lobatto(n: usize) -> Self {
        assert!(n >= 2);
        let m = n - 1;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        nodes[0] = -0.5;
        nodes[m] = 0.5;
        // Interior nodes are the roots of P'_m, found by Newton with P''_m from
        // the Legendre equation.
        for i in 1..m {
            let mut t = -(std::f64::consts::PI * i as f64 / m as f64).cos();
            for _ in 0..100 {
                let (p, dp) = legendre_with_derivative(m, t);
                let ddp = (2.0 * t * dp - (m * (m + 1)) as f64 * p) / (1.0 - t * t);
                let step = dp / ddp;
                t -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = 0.5 * t;
        }
        for i in 0..n {
            let (p, _) = legendre_with_derivative(m, 2.0 * nodes[i]);
            weights[i] = 1.0 / ((n * m) as f64 * p * p);
        }
        Quadrature { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integral over `[-1/2, 1/2]`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// `P_n(t)` and `P_n'(t)` on `[-1, 1]`.
pub fn legendre_with_derivative(n: usize, t: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, t);
    let (mut d0, mut d1) = (0.0, 1.0);
    if n == 0 {
        return (1.0, 0.0);
    }
    for l in 1..n {
        let lf = l as f64;
        let p2 = ((2.0 * lf + 1.0) * t * p1 - lf * p0) / (lf + 1.0);
        let d2 = d0 + (2.0 * lf + 1.0) * p1;
        p0 = p1;
        p1 = p2;
        d0 = d1;
        d1 = d2;
    }
    (p1, d1)
}

/// `P_0(t), ..., P_n(t)`.
pub fn legendre_values(n: usize, t: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n >= 1 {
        out.push(t);
    }
    for l in 1..n {
        let lf = l as f64;
        out.push(((2.0 * lf + 1.0) * t * out[l] - lf * out[l - 1]) / (lf + 1.0));
    }
    out
}

/// `i`-th derivative of `P_l` at `t = 1`: `(l+i)! / (2^i i! (l-i)!)`.
pub fn legendre_derivative_at_one(l: usize, i: usize) -> f64 {
    if i > l {
        return 0.0;
    }
    let mut v = 1.0;
    for m in (l - i + 1)..=(l + i) {
        v *= m as f64;
    }
    for m in 1..=i {
        v /= 2.0 * m as f64;
    }
    v
}

/// Tabulated basis data for degree `k`. Basis functions are
/// `phi_l(xi) = P_l(2 xi)`, so `phi_l = 1` at the right end and `(-1)^l` at
/// the left end.
#[derive(Clone, Debug)]
pub struct DgBasis {
    pub degree: usize,
    /// `(k+1)`-point Gauss rule for volume integrals.
    pub gauss: Quadrature,
    /// Gauss-Lobatto rule used by the limiter; `ceil((k+3)/2)` points.
    pub lobatto: Quadrature,
    pub phi_gauss: Vec<Vec<f64>>,
    /// `d phi_l / d xi` at the Gauss nodes.
    pub dphi_gauss: Vec<Vec<f64>>,
    pub phi_lobatto: Vec<Vec<f64>>,
    /// Basis values at `xi = -1/6` and `xi = 1/6`.
    pub phi_sixths: [Vec<f64>; 2],
    /// `deriv_right[i][l] = P_l^{(i)}(1)`.
    pub deriv_right: Vec<Vec<f64>>,
    /// `deriv_left[i][l] = P_l^{(i)}(-1)`.
    pub deriv_left: Vec<Vec<f64>>,
}

impl DgBasis {
    pub fn new(degree: usize) -> Self {
        let gauss = Quadrature::gauss(degree + 1);
        let lobatto = Quadrature::lobatto((degree + 4) / 2);
        let table = |xi: f64| legendre_values(degree, 2.0 * xi);
        let phi_gauss = gauss.nodes.iter().map(|&x| table(x)).collect();
        let dphi_gauss = gauss
            .nodes
            .iter()
            .map(|&x| (0..=degree).map(|l| 2.0 * legendre_with_derivative(l, 2.0 * x).1).collect())
            .collect();
        let phi_lobatto = lobatto.nodes.iter().map(|&x| table(x)).collect();
        let phi_sixths = [table(-1.0 / 6.0), table(1.0 / 6.0)];
        let deriv_right: Vec<Vec<f64>> =
            (0..=degree).map(|i| (0..=degree).map(|l| legendre_derivative_at_one(l, i)).collect()).collect();
        let deriv_left = (0..=degree)
            .map(|i| (0..=degree).map(|l| if (l + i) % 2 == 0 { 1.0 } else { -1.0 } * deriv_right[i][l]).collect())
            .collect();
        DgBasis { degree, gauss, lobatto, phi_gauss, dphi_gauss, phi_lobatto, phi_sixths, deriv_right, deriv_left }
    }

    pub fn modes(&self) -> usize {
        self.degree + 1
    }

    /// Weight of each end point in the Gauss-Lobatto rule (`1/6` for three points).
    pub fn omega1(&self) -> f64 {
        self.lobatto.weights[0]
    }
}

/// Polynomial on one cell in modal form.
#[derive(Clone, Debug, PartialEq)]
pub struct CellPoly {
    pub modes: Vec<State>,
}

impl CellPoly {
    pub fn constant(u: State, degree: usize) -> Self {
        let mut modes = vec![State::ZERO; degree + 1];
        modes[0] = u;
        CellPoly { modes }
    }

    pub fn average(&self) -> State {
        self.modes[0]
    }

    /// Value given a row of tabulated basis values.
    #[inline]
    pub fn eval_row(&self, row: &[f64]) -> State {
        let mut u = self.modes[0] * row[0];
        for l in 1..self.modes.len() {
            u += self.modes[l] * row[l];
        }
        u
    }

    pub fn eval(&self, xi: f64) -> State {
        self.eval_row(&legendre_values(self.modes.len() - 1, 2.0 * xi))
    }

    pub fn right_trace(&self) -> State {
        self.modes.iter().fold(State::ZERO, |acc, &m| acc + m)
    }

    pub fn left_trace(&self) -> State {
        self.modes.iter().enumerate().fold(State::ZERO, |acc, (l, &m)| if l % 2 == 0 { acc + m } else { acc - m })
    }

    /// Values at the Gauss-Lobatto nodes.
    pub fn lobatto_values(&self, basis: &DgBasis) -> Vec<State> {
        basis.phi_lobatto.iter().map(|row| self.eval_row(row)).collect()
    }

    /// Values at the Gauss-Lobatto nodes followed by the Gauss nodes where
    /// the volume flux is evaluated.
    pub fn limiter_values(&self, basis: &DgBasis) -> Vec<State> {
        basis.phi_lobatto.iter().chain(&basis.phi_gauss).map(|row| self.eval_row(row)).collect()
    }
}

/// Piecewise polynomial solution on one mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub cells: Vec<CellPoly>,
}

impl Solution {
    pub fn zeros(cells: usize, degree: usize) -> Self {
        Solution { cells: vec![CellPoly::constant(State::ZERO, degree); cells] }
    }

    pub fn degree(&self) -> usize {
        self.cells[0].modes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn averages(&self) -> Vec<State> {
        self.cells.iter().map(CellPoly::average).collect()
    }

    /// Sum of `dx` times the cell averages.
    pub fn total(&self, mesh: &Mesh) -> State {
        self.cells.iter().fold(State::ZERO, |acc, c| acc + c.average()) * mesh.dx()
    }

    pub fn eval(&self, mesh: &Mesh, x: f64) -> State {
        let (j, xi) = mesh.locate(x);
        self.cells[j].eval(xi)
    }

    /// `self = a * self + b * other`, mode by mode.
    pub fn axpby(&mut self, a: f64, b: f64, other: &Solution) {
        for (c, o) in self.cells.iter_mut().zip(&other.cells) {
            for (m, &om) in c.modes.iter_mut().zip(&o.modes) {
                *m = *m * a + om * b;
            }
        }
    }
}

/// L2 projection of `f` onto piecewise polynomials of degree `degree`,
/// integrating with `points` Gauss nodes per cell.
pub fn project(mesh: &Mesh, degree: usize, points: usize, f: impl Fn(f64) -> State) -> Solution {
    let q = Quadrature::gauss(points.max(degree + 1));
    let rows: Vec<Vec<f64>> = q.nodes.iter().map(|&x| legendre_values(degree, 2.0 * x)).collect();
    let cells = (0..mesh.cells)
        .map(|j| {
            let mut modes = vec![State::ZERO; degree + 1];
            for (qi, &xi) in q.nodes.iter().enumerate() {
                let u = f(mesh.point(j, xi));
                for l in 0..=degree {
                    modes[l] += u * (q.weights[qi] * rows[qi][l]);
                }
            }
            for (l, m) in modes.iter_mut().enumerate() {
                *m *= (2 * l + 1) as f64;
            }
            CellPoly { modes }
        })
        .collect();
    Solution { cells }
}
