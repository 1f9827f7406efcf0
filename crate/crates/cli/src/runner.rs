//! Scenario execution, error norms, conservation accounting and reports.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use arz_core::basis::Quadrature;
use arz_core::network::{NetworkCoupling, RoadEnd};
use arz_core::stepper::{Coupling, Uncoupled};
use arz_core::{BoundaryCondition, Constraint, EndCondition, Exterior, Mesh, PressureLaw, Segment, Simulation, SolverError, State, StepConfig};
use serde::Serialize;

use crate::netfile::{parse_network, ParsedNetwork, Speed};
use crate::scenario::{cosine_density, Ends, Initial, Resolved, ScenarioConfig, Setup, COSINE_SPEED};

/// Column layout of solution dumps (version 1).
pub const CSV_HEADER: [&str; 9] = ["road_id", "cell_index", "x", "rho", "y", "z", "v", "w", "c"];

/// Exterior data of every scenario kind.
pub enum ScenarioCoupling {
    Plain,
    /// Translating cosine profile imposed at both ends of one road.
    Exact { law: PressureLaw, x_left: f64, x_right: f64 },
    Network(NetworkCoupling),
}

pub fn cosine_state(law: &PressureLaw, x: f64) -> State {
    law.from_primitives(cosine_density(x), COSINE_SPEED, 1.0).expect("positive density")
}

impl Coupling for ScenarioCoupling {
    fn uses_alpha(&self) -> bool {
        match self {
            ScenarioCoupling::Network(n) => n.uses_alpha(),
            _ => false,
        }
    }

    fn exteriors(&mut self, segments: &[Segment], alpha: f64, time: f64) -> Result<Vec<Exterior>, SolverError> {
        match self {
            ScenarioCoupling::Plain => Uncoupled.exteriors(segments, alpha, time),
            ScenarioCoupling::Exact { law, x_left, x_right } => {
                let mut e = segments[0].bc.exterior(&segments[0].solution);
                e.left = cosine_state(law, *x_left - COSINE_SPEED * time);
                e.right = cosine_state(law, *x_right - COSINE_SPEED * time);
                Ok(vec![e])
            }
            ScenarioCoupling::Network(n) => n.exteriors(segments, alpha, time),
        }
    }
}

/// Which ends of a road are external boundaries (not junction ends).
#[derive(Clone, Copy, Debug)]
struct Openings {
    left: bool,
    right: bool,
}

/// A built scenario ready to run.
pub struct Prepared {
    pub names: Vec<String>,
    pub simulation: Simulation<ScenarioCoupling>,
    pub gamma: f64,
    pub kappa: f64,
    pub t_end: f64,
    openings: Vec<Openings>,
    cosine: bool,
}

fn step_config(cfg: &ScenarioConfig, r: &Resolved) -> StepConfig {
    StepConfig { cfl: cfg.cfl, mode: r.mode, speed: r.speed, retry: cfg.retry, enforce_w_max: cfg.enforce_w_max, ..StepConfig::default() }
}

/// Rejects initial data that leave the physical states somewhere on a fine grid.
fn check_profile(name: &str, mesh: &Mesh, f: &dyn Fn(f64) -> State, law: &PressureLaw) -> Result<()> {
    let n = 1000 * mesh.cells;
    for i in 0..=n {
        let x = mesh.x_left + mesh.length * i as f64 / n as f64;
        let u = f(x);
        law.primitives(u).map_err(|e| anyhow!("road {name}: initial data not admissible at x = {x}: {e}"))?;
    }
    Ok(())
}

pub fn prepare(cfg: &ScenarioConfig) -> Result<Prepared> {
    let r = cfg.resolve()?;
    let step = step_config(cfg, &r);
    match &r.scenario.setup {
        Setup::Road { x_left, length, initial, ends } => {
            let law = PressureLaw::new(r.v_ref, r.gamma, r.kappa)?;
            let cells = ((r.cells as f64) * length).round().max(1.0) as usize;
            let mesh = Mesh::new(*x_left, *length, cells);
            let f: Box<dyn Fn(f64) -> State> = match initial {
                Initial::Cosine => Box::new(move |x| cosine_state(&law, x)),
                Initial::Piecewise { breaks, states } => {
                    let states: Vec<State> =
                        states.iter().map(|p| law.from_primitives(p[0], p[1], p[2])).collect::<Result<_, _>>().context("constant states")?;
                    let breaks = breaks.clone();
                    Box::new(move |x| states[breaks.iter().position(|&b| x < b).unwrap_or(breaks.len())])
                }
            };
            let (bc, coupling) = match ends {
                Ends::Periodic => (BoundaryCondition::Periodic, ScenarioCoupling::Plain),
                Ends::Outflow => (BoundaryCondition::Ends { left: EndCondition::Outflow, right: EndCondition::Outflow }, ScenarioCoupling::Plain),
                Ends::Exact => (
                    BoundaryCondition::fixed(f(mesh.x_left), f(mesh.x_right())),
                    ScenarioCoupling::Exact { law, x_left: mesh.x_left, x_right: mesh.x_right() },
                ),
            };
            let seg = Segment::new(law, mesh, bc, &step, &f)?;
            let open = !matches!(ends, Ends::Periodic);
            Ok(Prepared {
                names: vec!["1".into()],
                simulation: Simulation::new(vec![seg], coupling, step),
                gamma: r.gamma,
                kappa: r.kappa,
                t_end: r.t_end,
                openings: vec![Openings { left: open, right: open }],
                cosine: matches!(initial, Initial::Cosine),
            })
        }
        Setup::Network { source } => {
            let text = match &cfg.network_file {
                Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
                None => source.to_string(),
            };
            let net = parse_network(&text)?;
            prepare_network(cfg, &r, step, net)
        }
    }
}

fn prepare_network(cfg: &ScenarioConfig, r: &Resolved, step: StepConfig, mut net: ParsedNetwork) -> Result<Prepared> {
    let gamma = cfg.gamma.or(net.gamma).unwrap_or(r.gamma);
    let kappa = cfg.kappa.or(net.kappa).unwrap_or(gamma + 1.0);
    let mut segments = Vec::with_capacity(net.roads.len());
    let mut openings = Vec::with_capacity(net.roads.len());
    for (i, road) in net.roads.iter().enumerate() {
        let v_ref = cfg.v_ref.or(road.v_ref).unwrap_or(r.v_ref);
        let law = PressureLaw::new(v_ref, gamma, kappa).with_context(|| format!("road {}", road.name))?;
        let cells = ((r.cells as f64) * road.length).round().max(1.0) as usize;
        let mesh = Mesh::new(0.0, road.length, cells);
        let f = |x: f64| {
            let rho = road.rho.eval(x);
            let c = road.c.eval(x);
            match &road.speed {
                Speed::W(w) => State::from_markers(rho, w.eval(x), c),
                Speed::V(v) => law.from_primitives(rho, v.eval(x), c).unwrap_or(State::new(f64::NAN, f64::NAN, f64::NAN)),
            }
        };
        check_profile(&road.name, &mesh, &f, &law)?;
        let left = match road.inflow {
            Some(p) => EndCondition::Fixed(law.from_primitives(p.rho, p.v, p.c).with_context(|| format!("inflow of road {}", road.name))?),
            None => EndCondition::Outflow,
        };
        let bc = if road.periodic { BoundaryCondition::Periodic } else { BoundaryCondition::Ends { left, right: EndCondition::Outflow } };
        let topo = &mut net.network.roads[i];
        if let RoadEnd::Boundary(_) = topo.upstream {
            topo.upstream = RoadEnd::Boundary(left);
        }
        openings.push(Openings {
            left: !road.periodic && matches!(topo.upstream, RoadEnd::Boundary(_)),
            right: !road.periodic && matches!(topo.downstream, RoadEnd::Boundary(_)),
        });
        segments.push(Segment::new(law, mesh, bc, &step, f).with_context(|| format!("road {}", road.name))?);
    }
    let coupling = if net.network.junctions.is_empty() { ScenarioCoupling::Plain } else { ScenarioCoupling::Network(NetworkCoupling::new(net.network)?) };
    Ok(Prepared {
        names: net.roads.iter().map(|r| r.name.clone()).collect(),
        simulation: Simulation::new(segments, coupling, step),
        gamma,
        kappa,
        t_end: r.t_end,
        openings,
        cosine: false,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Completed,
    /// Some node left the invariant region (non-limiting modes) or a
    /// non-physical state broke a flux evaluation.
    Failed,
    Error,
}

#[derive(Clone, Debug, Serialize)]
pub struct Breakdown {
    pub time: f64,
    pub step: usize,
    pub constraint: String,
}

/// First departure from the invariant region.
#[derive(Clone, Debug, Serialize)]
pub struct Failure {
    pub road: String,
    pub time: f64,
    pub step: usize,
    /// Constraints violated in the failing step.
    pub constraints: Vec<String>,
    /// First time each constraint was violated anywhere in the network.
    pub first_time: BTreeMap<String, f64>,
    pub breakdown: Option<Breakdown>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct BpSummary {
    /// Limiter nodes outside their box after limiting.
    pub violations: usize,
    /// Most negative relative slack per constraint (0 when never negative).
    pub worst_slack: BTreeMap<String, f64>,
    pub limited_cells: usize,
    pub limiter_calls: usize,
    pub widened_boxes: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Conservation {
    pub initial: [f64; 3],
    #[serde(rename = "final")]
    pub final_: [f64; 3],
    /// Time-integrated flux through external road ends (junction ends excluded).
    pub boundary_inflow: [f64; 3],
    /// `final - initial - boundary_inflow`.
    pub drift: [f64; 3],
    /// `|drift|` over the larger of `|initial|` and `|final|`.
    pub relative: [f64; 3],
}

#[derive(Clone, Debug, Serialize)]
pub struct BoxReport {
    pub w_min: f64,
    pub w_max: f64,
    pub c_min: f64,
    pub c_max: f64,
    pub v_min: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RoadReport {
    pub id: String,
    pub cells: usize,
    pub dx: f64,
    pub v_ref: f64,
    pub min_rho: f64,
    /// Largest velocity at the Gauss-Lobatto nodes.
    pub max_v: f64,
    /// Total variation of the cell-average velocity.
    pub tv_v: f64,
    /// Velocity ceiling implied by `w <= w_max`: `w_max`, less `v_ref ln(min rho)` when `gamma = 0`.
    pub v_ceiling: f64,
    pub global_box: BoxReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub title: String,
    pub config: ScenarioConfig,
    pub gamma: f64,
    pub kappa: f64,
    pub t_end: f64,
    pub csv_layout: u32,
    pub status: Status,
    pub time_reached: f64,
    pub steps: usize,
    pub retries: usize,
    pub max_alpha: f64,
    pub l1_error: Option<f64>,
    pub bp: BpSummary,
    pub failure: Option<Failure>,
    pub error: Option<String>,
    pub conservation: Conservation,
    pub roads: Vec<RoadReport>,
    pub junction_throttles: usize,
    pub wall_seconds: f64,
}

pub struct RunOutcome {
    pub report: RunReport,
    pub names: Vec<String>,
    pub segments: Vec<Segment>,
}

fn arr(u: State) -> [f64; 3] {
    [u.rho, u.y, u.z]
}

/// L1 distance of the density to the translated cosine profile.
pub fn cosine_l1_error(seg: &Segment, t: f64) -> f64 {
    let q = Quadrature::gauss(8);
    let m = &seg.mesh;
    seg.solution
        .cells
        .iter()
        .enumerate()
        .map(|(j, c)| m.dx() * q.integrate(|xi| (c.eval(xi).rho - cosine_density(m.point(j, xi) - COSINE_SPEED * t)).abs()))
        .sum()
}

fn road_report(name: &str, seg: &Segment, basis: &arz_core::DgBasis) -> RoadReport {
    let law = &seg.law;
    let mut max_v = f64::NEG_INFINITY;
    let mut min_rho = f64::INFINITY;
    for cell in &seg.solution.cells {
        for u in cell.lobatto_values(basis) {
            min_rho = min_rho.min(u.rho);
            if let Ok(p) = law.primitives(u) {
                max_v = max_v.max(p.v);
            }
        }
    }
    let vs: Vec<f64> = seg.solution.averages().iter().map(|&u| law.velocity(u).unwrap_or(f64::NAN)).collect();
    let tv_v = vs.windows(2).map(|p| (p[1] - p[0]).abs()).sum();
    let b = seg.global_box;
    let v_ceiling = if law.gamma == 0.0 { b.w_max - law.v_ref * min_rho.ln() } else { b.w_max };
    RoadReport {
        id: name.into(),
        cells: seg.mesh.cells,
        dx: seg.mesh.dx(),
        v_ref: law.v_ref,
        min_rho,
        max_v,
        tv_v,
        v_ceiling,
        global_box: BoxReport { w_min: b.w_min, w_max: b.w_max, c_min: b.c_min, c_max: b.c_max, v_min: b.v_min },
    }
}

/// Runs a prepared scenario to its end time or first breakdown.
pub fn execute(cfg: &ScenarioConfig, mut p: Prepared) -> RunOutcome {
    let start = Instant::now();
    let sim = &mut p.simulation;
    let initial: State = sim.segments.iter().fold(State::ZERO, |acc, s| acc + s.solution.total(&s.mesh));
    let mut error = None;
    while sim.time < p.t_end {
        if let Err(e) = sim.step(p.t_end) {
            error = Some(e);
            break;
        }
    }
    let mut final_ = State::ZERO;
    let mut inflow = State::ZERO;
    let mut bp = BpSummary::default();
    let mut worst = [0.0_f64; 7];
    let mut first_time: [Option<f64>; 7] = [None; 7];
    let mut failure: Option<Failure> = None;
    for (k, seg) in sim.segments.iter().enumerate() {
        final_ += seg.solution.total(&seg.mesh);
        let d = &seg.diagnostics;
        if p.openings[k].left {
            inflow += d.left_flux;
        }
        if p.openings[k].right {
            inflow -= d.right_flux;
        }
        bp.violations += d.bp_violations;
        bp.limited_cells += d.limited_cells;
        bp.limiter_calls += d.limiter_calls;
        bp.widened_boxes += d.widened_boxes;
        for c in 0..7 {
            worst[c] = worst[c].min(d.worst_slack[c]);
            if let Some(t) = d.first_time[c] {
                first_time[c] = Some(first_time[c].map_or(t, |s: f64| s.min(t)));
            }
        }
        if let Some(v) = &d.first_violation {
            if failure.as_ref().is_none_or(|f| v.step < f.step) {
                failure = Some(Failure {
                    road: p.names[k].clone(),
                    time: v.time,
                    step: v.step,
                    constraints: v.constraints.iter().map(|c| c.label().to_string()).collect(),
                    first_time: BTreeMap::new(),
                    breakdown: None,
                });
            }
        }
    }
    bp.worst_slack = Constraint::ALL.iter().map(|c| (c.label().to_string(), worst[c.index()])).collect();
    let mut status = Status::Completed;
    let mut message = None;
    match &error {
        Some(SolverError::Breakdown { time, step, constraint }) => {
            let b = Breakdown { time: *time, step: *step, constraint: constraint.label().into() };
            match failure.as_mut() {
                Some(f) => f.breakdown = Some(b),
                None => {
                    failure = Some(Failure {
                        road: String::new(),
                        time: *time,
                        step: *step,
                        constraints: vec![constraint.label().into()],
                        first_time: BTreeMap::new(),
                        breakdown: Some(b),
                    })
                }
            }
            message = error.as_ref().map(|e| e.to_string());
        }
        Some(e) => {
            status = Status::Error;
            message = Some(e.to_string());
        }
        None => {}
    }
    if let Some(f) = failure.as_mut() {
        f.first_time = Constraint::ALL.iter().filter_map(|c| first_time[c.index()].map(|t| (c.label().to_string(), t))).collect();
        if status == Status::Completed {
            status = Status::Failed;
        }
    }
    let drift = final_ - initial - inflow;
    let rel = |i: usize| drift.component(i).abs() / initial.component(i).abs().max(final_.component(i).abs()).max(f64::MIN_POSITIVE);
    let l1_error = (p.cosine && status != Status::Error).then(|| cosine_l1_error(&sim.segments[0], sim.time));
    let roads = sim.segments.iter().zip(&p.names).map(|(s, n)| road_report(n, s, &sim.basis)).collect();
    let resolved = cfg.resolve().expect("resolved before preparing");
    let junction_throttles = match &sim.coupling {
        ScenarioCoupling::Network(n) => n.throttle_events,
        _ => 0,
    };
    let report = RunReport {
        scenario: resolved.scenario.id.into(),
        title: resolved.scenario.title.into(),
        config: cfg.clone(),
        gamma: p.gamma,
        kappa: p.kappa,
        t_end: p.t_end,
        csv_layout: 1,
        status,
        time_reached: sim.time,
        steps: sim.steps,
        retries: sim.retries,
        max_alpha: sim.max_alpha,
        l1_error,
        bp,
        failure,
        error: message,
        conservation: Conservation {
            initial: arr(initial),
            final_: arr(final_),
            boundary_inflow: arr(inflow),
            drift: arr(drift),
            relative: [rel(0), rel(1), rel(2)],
        },
        roads,
        junction_throttles,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    RunOutcome { report, names: p.names, segments: std::mem::take(&mut p.simulation.segments) }
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutcome> {
    let p = prepare(cfg)?;
    Ok(execute(cfg, p))
}

/// Cell averages of every road as CSV rows.
pub fn write_csv<W: Write>(out: W, names: &[String], segments: &[Segment]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for (name, seg) in names.iter().zip(segments) {
        for (j, cell) in seg.solution.cells.iter().enumerate() {
            let u = cell.average();
            let (v, wm, c) = match seg.law.primitives(u) {
                Ok(p) => (p.v, p.w, p.c),
                Err(_) => (f64::NAN, f64::NAN, f64::NAN),
            };
            let x = seg.mesh.center(j);
            w.write_record([name.clone(), j.to_string(), x.to_string(), u.rho.to_string(), u.y.to_string(), u.z.to_string(), v.to_string(), wm.to_string(), c.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`.
pub fn save(dir: &Path, stem: &str, outcome: &RunOutcome) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let file = std::fs::File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?;
    write_csv(std::io::BufWriter::new(file), &outcome.names, &outcome.segments)?;
    let json_path = dir.join(format!("{stem}.json"));
    std::fs::write(&json_path, serde_json::to_string_pretty(&outcome.report)? + "\n").with_context(|| format!("writing {}", json_path.display()))?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub cells: usize,
    pub dx: f64,
    pub l1_error: f64,
    /// `log2(e_{N/2} / e_N)` against the previous row.
    pub order: Option<f64>,
    pub steps: usize,
    pub status: Status,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceTable {
    pub scenario: String,
    pub gamma: f64,
    pub mode: String,
    pub t_end: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Mean of the last three orders.
    pub average_order_last3: Option<f64>,
}

pub fn orders(errors: &[f64], cells: &[usize]) -> Vec<Option<f64>> {
    (0..errors.len())
        .map(|i| (i > 0).then(|| (errors[i - 1] / errors[i]).ln() / (cells[i] as f64 / cells[i - 1] as f64).ln()))
        .collect()
}

/// L1 density errors of the smooth test on each mesh, run in parallel.
pub fn convergence_study(base: &ScenarioConfig, cells: &[usize]) -> Result<ConvergenceTable> {
    use rayon::prelude::*;
    let r = base.resolve()?;
    let outcomes: Vec<RunReport> = cells
        .par_iter()
        .map(|&n| run_scenario(&ScenarioConfig { cells: Some(n), ..base.clone() }).map(|o| o.report))
        .collect::<Result<_>>()?;
    let mut errors = Vec::with_capacity(cells.len());
    for o in &outcomes {
        match o.l1_error {
            Some(e) => errors.push(e),
            None => bail!("scenario {} has no exact solution", o.scenario),
        }
    }
    let ord = orders(&errors, cells);
    let rows: Vec<ConvergenceRow> = outcomes
        .iter()
        .zip(cells)
        .zip(&ord)
        .map(|((o, &n), &order)| ConvergenceRow { cells: n, dx: o.roads[0].dx, l1_error: o.l1_error.unwrap_or(f64::NAN), order, steps: o.steps, status: o.status.clone() })
        .collect();
    let last: Vec<f64> = ord.iter().rev().take(3).flatten().copied().collect();
    let average_order_last3 = (last.len() == 3).then(|| last.iter().sum::<f64>() / 3.0);
    Ok(ConvergenceTable { scenario: r.scenario.id.into(), gamma: r.gamma, mode: base.mode.clone(), t_end: r.t_end, rows, average_order_last3 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_of_cubic_decay() {
        let cells = [10, 20, 40];
        let errs: Vec<f64> = cells.iter().map(|&n| (n as f64).powi(-3)).collect();
        let o = orders(&errs, &cells);
        assert_eq!(o[0], None);
        assert!((o[1].unwrap() - 3.0).abs() < 1e-12 && (o[2].unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn projection_error_decays_at_third_order() {
        // A zero-length run leaves the projection, whose error is O(dx^3).
        let mut errs = Vec::new();
        let cells = [20, 40, 80];
        for &n in &cells {
            let cfg = ScenarioConfig::new("ex5_1").with_cells(n).with_mode(arz_core::Mode::PlainDg);
            let p = prepare(&cfg).unwrap();
            errs.push(cosine_l1_error(&p.simulation.segments[0], 0.0));
        }
        for o in orders(&errs, &cells).into_iter().flatten() {
            assert!(o > 2.8, "order {o}");
        }
    }
}
