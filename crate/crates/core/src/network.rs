//! Road networks: junction coupling (demand-proportional and fixed-priority
//! rules), ghost states at road ends, and the coupling used by the stepper.

use crate::dg::{EndCondition, Exterior};
use crate::error::SolverError;
use crate::model::{PressureLaw, State};
use crate::stepper::{Coupling, Segment};

/// Density of the ghost used for a zero flux.
pub const VACUUM_DENSITY: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CouplingRule {
    /// Priorities proportional to the incoming demands.
    DemandProportional,
    /// Fixed priority vector; each road keeps its own pressure law.
    FixedPriority,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Junction {
    pub name: String,
    pub incoming: Vec<usize>,
    pub outgoing: Vec<usize>,
    /// `distribution[j][i]`: share of incoming road `i` that turns into outgoing road `j`.
    pub distribution: Vec<Vec<f64>>,
    /// Priority of each incoming road (used by [`CouplingRule::FixedPriority`]).
    pub priorities: Vec<f64>,
    pub rule: CouplingRule,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RoadEnd {
    Junction(usize),
    Boundary(EndCondition),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Road {
    pub name: String,
    pub upstream: RoadEnd,
    pub downstream: RoadEnd,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub roads: Vec<Road>,
    pub junctions: Vec<Junction>,
}

impl Network {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |j: &Junction, reason: String| SolverError::Junction { junction: j.name.clone(), reason };
        for (ji, j) in self.junctions.iter().enumerate() {
            if j.incoming.is_empty() || j.outgoing.is_empty() {
                return Err(bad(j, "needs at least one incoming and one outgoing road".into()));
            }
            if j.distribution.len() != j.outgoing.len() || j.distribution.iter().any(|r| r.len() != j.incoming.len()) {
                return Err(bad(j, "distribution matrix has the wrong shape".into()));
            }
            for i in 0..j.incoming.len() {
                let col: f64 = j.distribution.iter().map(|r| r[i]).sum();
                if (col - 1.0).abs() > 1e-12 || j.distribution.iter().any(|r| !(0.0..=1.0).contains(&r[i])) {
                    return Err(bad(j, format!("distribution column {i} must lie in [0,1] and sum to 1")));
                }
            }
            if j.rule == CouplingRule::FixedPriority {
                let s: f64 = j.priorities.iter().sum();
                if j.priorities.len() != j.incoming.len() || j.priorities.iter().any(|&b| b < 0.0) || (s - 1.0).abs() > 1e-12 {
                    return Err(bad(j, "priorities must be non-negative and sum to 1".into()));
                }
            }
            for &r in &j.incoming {
                if self.roads.get(r).map(|road| road.downstream) != Some(RoadEnd::Junction(ji)) {
                    return Err(bad(j, format!("incoming road {r} does not end here")));
                }
            }
            for &r in &j.outgoing {
                if self.roads.get(r).map(|road| road.upstream) != Some(RoadEnd::Junction(ji)) {
                    return Err(bad(j, format!("outgoing road {r} does not start here")));
                }
            }
        }
        for (ri, r) in self.roads.iter().enumerate() {
            for (end, upstream) in [(r.upstream, true), (r.downstream, false)] {
                if let RoadEnd::Junction(j) = end {
                    let jn = self.junctions.get(j).ok_or_else(|| SolverError::Config(format!("road {} refers to missing junction {j}", r.name)))?;
                    let listed = if upstream { jn.outgoing.contains(&ri) } else { jn.incoming.contains(&ri) };
                    if !listed {
                        return Err(bad(jn, format!("road {} is not listed", r.name)));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Density maximizing `Q(rho) = rho (w - p(rho, c rho))` at frozen markers.
pub fn critical_density(law: &PressureLaw, w: f64, c: f64) -> f64 {
    law.rho_at_lambda1(w, c, 0.0)
}

/// Sending capacity of an incoming road end.
pub fn demand(law: &PressureLaw, u: State) -> Result<f64, SolverError> {
    let q = law.primitives(u)?;
    let rho = q.rho.min(critical_density(law, q.w, q.c));
    Ok(law.flow_rate(rho, q.w, q.c).max(0.0))
}

/// Receiving capacity of an outgoing road end.
pub fn supply(law: &PressureLaw, u: State) -> Result<f64, SolverError> {
    let q = law.primitives(u)?;
    let rho = q.rho.max(critical_density(law, q.w, q.c));
    Ok(law.flow_rate(rho, q.w, q.c).max(0.0))
}

/// Which monotone branch of the flow-density diagram a ghost sits on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// Below the critical density (entry of an outgoing road).
    Free,
    /// Above the critical density (exit of an incoming road).
    Congested,
}

/// State with markers `(w, c)` whose physical flux `rho v` equals `q`.
/// Returns the state and whether a root existed (otherwise the argmax state).
pub fn ghost_from_flux(law: &PressureLaw, q: f64, w: f64, c: f64, branch: Branch) -> (State, bool) {
    if q <= 0.0 {
        return (State::from_markers(VACUUM_DENSITY, w, c), true);
    }
    let rc = critical_density(law, w, c);
    let qmax = law.flow_rate(rc, w, c);
    if !(rc > 0.0) || q >= qmax {
        return (State::from_markers(rc.max(VACUUM_DENSITY), w, c), q <= qmax * (1.0 + 1e-12));
    }
    let f = |r: f64| law.flow_rate(r, w, c) - q;
    let rho = match branch {
        Branch::Free => bracketed_root(f, 0.0, rc, true),
        Branch::Congested => {
            let mut hi = 2.0 * rc;
            while f(hi) > 0.0 && hi < 1e12 {
                hi *= 2.0;
            }
            bracketed_root(f, rc, hi, false)
        }
    };
    (State::from_markers(rho, w, c), true)
}

/// Root of a function that is monotone on `[lo, hi]` and changes sign there;
/// `increasing` gives the direction. Bisection to full precision.
fn bracketed_root(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, increasing: bool) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if (v < 0.0) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Throughput-maximizing allocation of incoming flows `q_i` with
/// `q_i <= demand_i`, `sum_i a_ji q_i <= supply_j`, growing all unsaturated
/// flows in proportion to their priorities until a demand or supply binds.
pub fn allocate(demand: &[f64], supply: &[f64], distribution: &[Vec<f64>], priorities: &[f64]) -> Vec<f64> {
    let m = demand.len();
    let mut q = vec![0.0; m];
    let mut room: Vec<f64> = supply.to_vec();
    let mut active: Vec<bool> = (0..m).map(|i| demand[i] > 0.0 && priorities[i] > 0.0).collect();
    for _ in 0..(m + supply.len() + 1) {
        if !active.iter().any(|&a| a) {
            break;
        }
        let rate: Vec<f64> = distribution.iter().map(|row| (0..m).filter(|&i| active[i]).map(|i| row[i] * priorities[i]).sum()).collect();
        let mut t = f64::INFINITY;
        for i in (0..m).filter(|&i| active[i]) {
            t = t.min((demand[i] - q[i]) / priorities[i]);
        }
        for (j, &r) in rate.iter().enumerate() {
            if r > 0.0 {
                t = t.min(room[j].max(0.0) / r);
            }
        }
        for i in (0..m).filter(|&i| active[i]) {
            q[i] = (q[i] + priorities[i] * t).min(demand[i]);
        }
        for (j, &r) in rate.iter().enumerate() {
            room[j] -= r * t;
        }
        for i in 0..m {
            if active[i] && demand[i] - q[i] <= 1e-15 * demand[i] {
                active[i] = false;
            }
        }
        for (j, row) in distribution.iter().enumerate() {
            if room[j] <= 1e-15 * supply[j].max(f64::MIN_POSITIVE) {
                for i in 0..m {
                    if row[i] > 0.0 {
                        active[i] = false;
                    }
                }
            }
        }
    }
    q
}

/// Ghost right of an incoming road's exit, keeping the interior markers and
/// making the Lax-Friedrichs flux equal `q (1, w, c)`.
fn exit_ghost(law: &PressureLaw, interior: State, q: f64, alpha: f64) -> Option<State> {
    let p = law.primitives(interior).ok()?;
    let b = p.rho * (p.v + alpha) - 2.0 * q;
    if !(b > 0.0) {
        return None;
    }
    // rho (alpha - v(rho)) = b on the branch where alpha > lambda_1.
    let g = |r: f64| r * (alpha - p.w + law.pressure_rc(r, p.c)) - b;
    let lo = law.rho_at_lambda1(p.w, p.c, alpha).min(1e300);
    let mut hi = lo.max(p.rho).max(1e-300) * 2.0;
    while g(hi) < 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return None;
        }
    }
    let rho = bracketed_root(g, lo, hi, true);
    Some(State::from_markers(rho, p.w, p.c))
}

/// Ghost left of an outgoing road's entry making the Lax-Friedrichs flux
/// equal `flux`; markers follow from the flux.
fn entry_ghost(law: &PressureLaw, interior: State, flux: State, alpha: f64) -> Option<State> {
    let p = law.primitives(interior).ok()?;
    let r = flux * 2.0 + interior * (alpha - p.v);
    if !(r.rho > 0.0 && r.z > 0.0) {
        return None;
    }
    let (w, c) = (r.y / r.rho, r.z / r.rho);
    // rho (alpha + v(rho)) = r.rho on the branch where alpha + lambda_1 > 0.
    let f = |x: f64| x * (alpha + w - law.pressure_rc(x, c)) - r.rho;
    let peak = law.rho_at_lambda1(w, c, -alpha);
    if !(peak > 0.0) || f(peak) < 0.0 {
        return None;
    }
    let rho = bracketed_root(f, 0.0, peak, true);
    Some(State::from_markers(rho, w, c))
}

/// Outcome of coupling one junction for one stage.
#[derive(Clone, Debug, PartialEq)]
pub struct JunctionResolution {
    /// `flows[j][i]`: flux from incoming road `i` to outgoing road `j`.
    pub flows: Vec<Vec<f64>>,
    pub incoming_flux: Vec<State>,
    pub outgoing_flux: Vec<State>,
    pub incoming_ghost: Vec<State>,
    pub outgoing_ghost: Vec<State>,
    /// Supplies were reduced because a ghost could not realize the flux.
    pub throttled: bool,
}

/// Couples one junction. Incoming flows carry their own markers, outgoing
/// fluxes are the flow-weighted mixtures, and ghosts reproduce every end
/// flux through the Lax-Friedrichs flux with coefficient `alpha`.
pub fn resolve_junction(
    junction: &Junction,
    in_laws: &[PressureLaw],
    in_traces: &[State],
    out_laws: &[PressureLaw],
    out_traces: &[State],
    alpha: f64,
) -> Result<JunctionResolution, SolverError> {
    let m = in_traces.len();
    let n = out_traces.len();
    let err = |reason: String| SolverError::Junction { junction: junction.name.clone(), reason };
    let mut d = Vec::with_capacity(m);
    let mut markers = Vec::with_capacity(m);
    for i in 0..m {
        let p = in_laws[i].primitives(in_traces[i])?;
        // Keep the exit ghost realizable: q < rho (v + alpha) / 2.
        let cap = 0.5 * p.rho * (p.v + alpha) * (1.0 - 1e-9);
        d.push(demand(&in_laws[i], in_traces[i])?.min(cap.max(0.0)));
        markers.push((p.w, p.c));
    }
    let mut s: Vec<f64> = (0..n).map(|j| supply(&out_laws[j], out_traces[j])).collect::<Result<_, _>>()?;
    let priorities: Vec<f64> = match junction.rule {
        CouplingRule::FixedPriority => junction.priorities.clone(),
        CouplingRule::DemandProportional => {
            let total: f64 = d.iter().sum();
            if total > 0.0 {
                d.iter().map(|x| x / total).collect()
            } else {
                vec![0.0; m]
            }
        }
    };
    let mut throttled = false;
    for _round in 0..20 {
        let q = allocate(&d, &s, &junction.distribution, &priorities);
        let flows: Vec<Vec<f64>> = junction.distribution.iter().map(|row| (0..m).map(|i| row[i] * q[i]).collect()).collect();
        let incoming_flux: Vec<State> = (0..m).map(|i| State::from_markers(q[i], markers[i].0, markers[i].1)).collect();
        let outgoing_flux: Vec<State> = flows
            .iter()
            .map(|row| (0..m).fold(State::ZERO, |acc, i| acc + State::from_markers(row[i], markers[i].0, markers[i].1)))
            .collect();
        let mut incoming_ghost = Vec::with_capacity(m);
        for i in 0..m {
            let g = exit_ghost(&in_laws[i], in_traces[i], q[i], alpha).ok_or_else(|| err(format!("no exit ghost for incoming road {i}")))?;
            incoming_ghost.push(g);
        }
        let mut outgoing_ghost = Vec::with_capacity(n);
        let mut retry = false;
        for j in 0..n {
            match entry_ghost(&out_laws[j], out_traces[j], outgoing_flux[j], alpha) {
                Some(g) => outgoing_ghost.push(g),
                None => {
                    // Largest fraction of the current flux this entry can take.
                    let (mut lo, mut hi) = (0.0, 1.0);
                    for _ in 0..60 {
                        let mid = 0.5 * (lo + hi);
                        if entry_ghost(&out_laws[j], out_traces[j], outgoing_flux[j] * mid, alpha).is_some() {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    s[j] = outgoing_flux[j].rho * lo * 0.999;
                    retry = true;
                    throttled = true;
                    outgoing_ghost.push(State::ZERO);
                }
            }
        }
        if !retry {
            return Ok(JunctionResolution { flows, incoming_flux, outgoing_flux, incoming_ghost, outgoing_ghost, throttled });
        }
    }
    Err(err("supply throttling did not converge".into()))
}

/// Coupling of a road network for the stepper. Segment `r` is road `r`.
#[derive(Clone, Debug)]
pub struct NetworkCoupling {
    pub network: Network,
    /// Resolutions of the last call, one per junction.
    pub last: Vec<JunctionResolution>,
    pub throttle_events: usize,
}

impl NetworkCoupling {
    pub fn new(network: Network) -> Result<Self, SolverError> {
        network.validate()?;
        Ok(NetworkCoupling { network, last: Vec::new(), throttle_events: 0 })
    }
}

impl Coupling for NetworkCoupling {
    fn uses_alpha(&self) -> bool {
        !self.network.junctions.is_empty()
    }

    fn exteriors(&mut self, segments: &[Segment], alpha: f64, _time: f64) -> Result<Vec<Exterior>, SolverError> {
        let mut exts: Vec<Exterior> = segments.iter().map(|s| s.bc.exterior(&s.solution)).collect();
        for (r, road) in self.network.roads.iter().enumerate() {
            let sol = &segments[r].solution;
            for (end, left) in [(road.upstream, true), (road.downstream, false)] {
                if let RoadEnd::Boundary(e) = end {
                    let interior = if left { sol.cells[0].left_trace() } else { sol.cells[sol.len() - 1].right_trace() };
                    let (state, flux) = match e {
                        EndCondition::Fixed(u) => (u, None),
                        EndCondition::Outflow => (interior, None),
                        EndCondition::Ghost { state, flux } => (state, Some(flux)),
                    };
                    if left {
                        exts[r].left = state;
                        exts[r].left_flux = flux;
                    } else {
                        exts[r].right = state;
                        exts[r].right_flux = flux;
                    }
                    exts[r].periodic = false;
                }
            }
        }
        if alpha <= 0.0 {
            // First pass: only a speed estimate is needed; use interior traces.
            for (r, road) in self.network.roads.iter().enumerate() {
                let sol = &segments[r].solution;
                if let RoadEnd::Junction(_) = road.upstream {
                    exts[r].left = sol.cells[0].left_trace();
                    exts[r].left_flux = None;
                }
                if let RoadEnd::Junction(_) = road.downstream {
                    exts[r].right = sol.cells[sol.len() - 1].right_trace();
                    exts[r].right_flux = None;
                }
                exts[r].periodic = false;
            }
            return Ok(exts);
        }
        self.last.clear();
        for jn in &self.network.junctions {
            let in_laws: Vec<_> = jn.incoming.iter().map(|&r| segments[r].law).collect();
            let out_laws: Vec<_> = jn.outgoing.iter().map(|&r| segments[r].law).collect();
            let in_tr: Vec<_> = jn.incoming.iter().map(|&r| segments[r].solution.cells[segments[r].solution.len() - 1].right_trace()).collect();
            let out_tr: Vec<_> = jn.outgoing.iter().map(|&r| segments[r].solution.cells[0].left_trace()).collect();
            let res = resolve_junction(jn, &in_laws, &in_tr, &out_laws, &out_tr, alpha)?;
            self.throttle_events += res.throttled as usize;
            for (k, &r) in jn.incoming.iter().enumerate() {
                exts[r].right = res.incoming_ghost[k];
                exts[r].right_flux = Some(res.incoming_flux[k]);
                exts[r].periodic = false;
            }
            for (k, &r) in jn.outgoing.iter().enumerate() {
                exts[r].left = res.outgoing_ghost[k];
                exts[r].left_flux = Some(res.outgoing_flux[k]);
                exts[r].periodic = false;
            }
            self.last.push(res);
        }
        Ok(exts)
    }
}
