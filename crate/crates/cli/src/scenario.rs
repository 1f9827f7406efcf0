//! Named experiments and the run configuration.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Result};
use arz_core::{Mode, SpeedRule};
use serde::{Deserialize, Serialize};

/// Density, velocity and drivers' property of a constant state.
pub type Prim = [f64; 3];

#[derive(Clone, Debug, PartialEq)]
pub enum Initial {
    /// `rho = 0.05 (1 + cos(pi x)) + 1e-8`, `v = 0.15`, `c = 1`, translating with speed 0.15.
    Cosine,
    /// `states[k]` holds for `x < breaks[k]`; the last state holds beyond.
    Piecewise { breaks: Vec<f64>, states: Vec<Prim> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ends {
    /// Exact solution imposed at both ends.
    Exact,
    Outflow,
    Periodic,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Setup {
    Road { x_left: f64, length: f64, initial: Initial, ends: Ends },
    Network { source: &'static str },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub id: &'static str,
    pub title: &'static str,
    /// Adiabatic exponents the experiment is run with; the first is the default.
    pub gammas: &'static [f64],
    pub t_end: f64,
    /// Cells per unit length.
    pub cells: usize,
    pub v_ref: f64,
    pub setup: Setup,
}

/// Speed of the translating profile of the smooth test.
pub const COSINE_SPEED: f64 = 0.15;

pub fn cosine_density(x: f64) -> f64 {
    0.05 * (1.0 + (std::f64::consts::PI * x).cos()) + 1e-8
}

fn riemann(x0: f64, left: Prim, right: Prim) -> Initial {
    Initial::Piecewise { breaks: vec![x0], states: vec![left, right] }
}

fn road(initial: Initial, ends: Ends) -> Setup {
    Setup::Road { x_left: 0.0, length: 1.0, initial, ends }
}

pub fn registry() -> Vec<Scenario> {
    let rp = |id, title, gammas, left, right| Scenario {
        id,
        title,
        gammas,
        t_end: 0.1,
        cells: 300,
        v_ref: 0.9,
        setup: road(riemann(0.65, left, right), Ends::Outflow),
    };
    let net = |id, title, gammas, t_end, v_ref, source| Scenario { id, title, gammas, t_end, cells: 150, v_ref, setup: Setup::Network { source } };
    vec![
        Scenario {
            id: "ex5_1",
            title: "smooth translating density, exact data at both ends",
            gammas: &[1.0, 0.0, 2.0],
            t_end: 0.05,
            cells: 80,
            v_ref: 0.01,
            setup: road(Initial::Cosine, Ends::Exact),
        },
        Scenario {
            id: "ex5_1_periodic",
            title: "smooth translating density on a periodic road of length 2",
            gammas: &[1.0],
            t_end: 0.05,
            cells: 80,
            v_ref: 0.01,
            setup: Setup::Road { x_left: 0.0, length: 2.0, initial: Initial::Cosine, ends: Ends::Periodic },
        },
        Scenario {
            id: "ex5_2",
            title: "Riemann problem with a shock and a contact",
            gammas: &[2.0],
            t_end: 0.4,
            cells: 300,
            v_ref: 0.9,
            setup: road(riemann(0.5, [0.8, 0.1, 1.0], [0.5, 0.2, 1.0]), Ends::Outflow),
        },
        rp("T1a", "near-stopped traffic ahead", &[0.0, 2.0], [0.5, 0.2, 1.0], [0.9, 2e-11, 1.0]),
        rp("T1b", "near-stopped traffic ahead, jump in c", &[1.0, 2.0], [0.5, 0.2, 1.1], [0.9, 2e-11, 0.9]),
        rp("T2a", "vacuum behind moderate traffic", &[0.0, 1.0, 2.0], [1e-12, 0.4, 1.0], [0.8, 0.1, 1.0]),
        rp("T2b", "vacuum with large speed behind traffic", &[0.0, 1.0, 2.0], [1e-12, 10.0, 1.0], [0.8, 0.5, 1.0]),
        rp("T3", "stopped traffic ahead of vacuum", &[0.0, 2.0], [0.8, 5e-12, 1.0], [1e-11, 0.25, 1.0]),
        Scenario {
            id: "ex5_4",
            title: "vacuum, traffic and a fast tail",
            gammas: &[0.0],
            t_end: 0.0305,
            cells: 300,
            v_ref: 0.9,
            setup: road(
                Initial::Piecewise { breaks: vec![0.25, 0.985], states: vec![[1e-12, 10.0, 1.0], [0.8, 0.5, 1.0], [0.5, 400.0, 1.0]] },
                Ends::Outflow,
            ),
        },
        net("ex5_5", "one-to-two diverge", &[1.0], 0.25, 1.0, include_str!("../networks/ex5_5.json")),
        net("ex5_6", "one-to-three diverge with vacuum blocks", &[0.0, 2.0], 0.1, 1.0, include_str!("../networks/ex5_6.json")),
        net("ex5_7_hb", "two-to-one merge, demand priorities", &[2.0], 0.1, 0.5, include_str!("../networks/ex5_7_hb.json")),
        net("ex5_7_ghmw", "two-to-one merge, fixed priorities", &[2.0], 0.1, 0.5, include_str!("../networks/ex5_7_ghmw.json")),
        net("ex5_8", "seven roads, three junctions", &[2.0], 0.25, 1.0, include_str!("../networks/ex5_8.json")),
        net("ex5_9", "48 roads on a 5x5 grid", &[1.0], 0.25, 1.0, include_str!("../networks/ex5_9.json")),
    ]
}

pub fn find(id: &str) -> Result<Scenario> {
    registry().into_iter().find(|s| s.id == id).ok_or_else(|| {
        let ids: Vec<_> = registry().iter().map(|s| s.id).collect();
        anyhow!("unknown scenario `{id}` (known: {})", ids.join(", "))
    })
}

/// Run configuration as read from JSON or the command line. Unset fields
/// take the scenario's defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub scenario: String,
    pub gamma: Option<f64>,
    /// Defaults to `gamma + 1`.
    pub kappa: Option<f64>,
    pub v_ref: Option<f64>,
    /// Cells per unit length.
    pub cells: Option<usize>,
    pub cfl: f64,
    pub mode: String,
    pub t_end: Option<f64>,
    /// Recorded in reports; the solver itself draws no random numbers.
    pub seed: u64,
    /// `certified` or `bound`.
    pub speed: String,
    pub enforce_w_max: bool,
    pub retry: bool,
    /// Network file replacing the scenario's built-in one.
    pub network_file: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            scenario: "ex5_1".into(),
            gamma: None,
            kappa: None,
            v_ref: None,
            cells: None,
            cfl: 0.08,
            mode: Mode::LocalBp.name().into(),
            t_end: None,
            seed: 0,
            speed: "certified".into(),
            enforce_w_max: true,
            retry: true,
            network_file: None,
        }
    }
}

impl ScenarioConfig {
    pub fn new(scenario: &str) -> Self {
        ScenarioConfig { scenario: scenario.into(), ..Default::default() }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = Some(gamma);
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode.name().into();
        self
    }

    pub fn with_cells(mut self, cells: usize) -> Self {
        self.cells = Some(cells);
        self
    }

    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = Some(t_end);
        self
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let scenario = find(&self.scenario)?;
        let gamma = self.gamma.unwrap_or(scenario.gammas[0]);
        let kappa = self.kappa.unwrap_or(gamma + 1.0);
        let mode = Mode::parse(&self.mode).ok_or_else(|| anyhow!("unknown mode `{}`", self.mode))?;
        let speed = match self.speed.as_str() {
            "certified" => SpeedRule::Certified,
            "bound" => SpeedRule::Bound,
            s => bail!("unknown speed rule `{s}` (certified or bound)"),
        };
        let cells = self.cells.unwrap_or(scenario.cells);
        let t_end = self.t_end.unwrap_or(scenario.t_end);
        if cells == 0 {
            bail!("cells must be positive");
        }
        if !(t_end > 0.0) || !(self.cfl > 0.0) {
            bail!("t_end and cfl must be positive");
        }
        let v_ref = self.v_ref.unwrap_or(scenario.v_ref);
        Ok(Resolved { scenario, gamma, kappa, v_ref, cells, t_end, mode, speed })
    }

    /// File-name stem identifying the run.
    pub fn stem(&self) -> String {
        let mut s = format!("{}_{}", self.scenario, self.mode);
        if let Some(g) = self.gamma {
            s += &format!("_g{g}");
        }
        if let Some(n) = self.cells {
            s += &format!("_n{n}");
        }
        if !self.enforce_w_max {
            s += "_nowmax";
        }
        s
    }
}

/// Configuration with every default filled in.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub scenario: Scenario,
    pub gamma: f64,
    pub kappa: f64,
    pub v_ref: f64,
    pub cells: usize,
    pub t_end: f64,
    pub mode: Mode,
    pub speed: SpeedRule,
}

/// Every experiment at every exponent it is reported with.
pub fn suite_entries() -> Vec<(&'static str, f64)> {
    registry().into_iter().flat_map(|s| s.gammas.iter().map(move |&g| (s.id, g))).collect()
}
