//! Network description files (JSON).
//!
//! ```json
//! {
//!   "description": "1 -> J -> 2, 3",
//!   "v_ref": 1.0,
//!   "roads": [
//!     {"id": "1", "rho": "0.1", "w": 1, "c": 1},
//!     {"id": "2", "rho": {"pieces": [{"on": [0.2, 0.4], "expr": "0.2"}], "else": "0.1"}, "w": 1},
//!     {"id": "3", "rho": "0.1", "v": "0.5", "inflow": {"rho": 0.1, "v": 0.5}}
//!   ],
//!   "junctions": [
//!     {"id": "J", "rule": "HB", "incoming": ["1"], "outgoing": ["2", "3"], "distribution": [[0.5], [0.5]]}
//!   ]
//! }
//! ```
//!
//! Each road carries `rho` and exactly one of `v` or `w`; `c` defaults to 1.
//! Profiles are formulas in the road coordinate `x` (`PI` is available) or
//! piecewise objects. `distribution[j][i]` is the share of incoming road `i`
//! that turns into outgoing road `j`; when omitted every incoming road splits
//! evenly. `rule` is `HB` (priorities from demand) or `GHMW` (fixed
//! `priorities`). Road ends that no junction claims are free outflow ends
//! unless an upstream `inflow` state is given. With no junctions each road
//! runs alone, and `"periodic": true` is allowed.

use std::collections::HashMap;
use std::fmt;

use arz_core::network::{CouplingRule, Junction, Network, Road, RoadEnd};
use arz_core::EndCondition;
use serde::{Deserialize, Serialize};

use crate::expr::{Profile, ProfileSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub notes: Vec<String>,
    #[serde(default)]
    pub v_ref: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub kappa: Option<f64>,
    pub roads: Vec<RoadSpec>,
    #[serde(default)]
    pub junctions: Vec<JunctionSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoadSpec {
    pub id: String,
    #[serde(default)]
    pub length: Option<f64>,
    pub rho: ProfileSpec,
    #[serde(default)]
    pub v: Option<ProfileSpec>,
    #[serde(default)]
    pub w: Option<ProfileSpec>,
    #[serde(default)]
    pub c: Option<ProfileSpec>,
    #[serde(default)]
    pub v_ref: Option<f64>,
    #[serde(default)]
    pub inflow: Option<Primitive>,
    #[serde(default)]
    pub periodic: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Primitive {
    pub rho: f64,
    pub v: f64,
    #[serde(default = "one")]
    pub c: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RuleSpec {
    #[serde(rename = "HB")]
    Hb,
    #[serde(rename = "GHMW")]
    Ghmw,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JunctionSpec {
    pub id: String,
    pub rule: RuleSpec,
    pub incoming: Vec<String>,
    pub outgoing: Vec<String>,
    #[serde(default)]
    pub distribution: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub priorities: Option<Vec<f64>>,
}

/// Schema or consistency problem, located by line (when known) and field path.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkFileError {
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub field: String,
    pub message: String,
}

impl fmt::Display for NetworkFileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "line {l}, column {c}")?,
            (Some(l), None) => write!(f, "line {l}")?,
            _ => f.write_str("network file")?,
        }
        if !self.field.is_empty() {
            write!(f, ", field `{}`", self.field)?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for NetworkFileError {}

/// Initial data and law parameters of one road.
#[derive(Clone, Debug)]
pub struct RoadSetup {
    pub name: String,
    pub length: f64,
    pub v_ref: Option<f64>,
    pub rho: Profile,
    pub speed: Speed,
    pub c: Profile,
    pub inflow: Option<Primitive>,
    pub periodic: bool,
}

/// Second initial profile: velocity or Lagrangian marker.
#[derive(Clone, Debug)]
pub enum Speed {
    V(Profile),
    W(Profile),
}

#[derive(Clone, Debug)]
pub struct ParsedNetwork {
    pub description: String,
    pub v_ref: Option<f64>,
    pub gamma: Option<f64>,
    pub kappa: Option<f64>,
    pub roads: Vec<RoadSetup>,
    /// Topology with every free end set to outflow; inflow ends are filled
    /// in once the road laws are known.
    pub network: Network,
}

/// 1-based line of the object whose `"id"` is `id`.
fn line_of_id(src: &str, id: &str) -> Option<usize> {
    let quoted = format!("\"{id}\"");
    src.lines().position(|l| l.find("\"id\"").is_some_and(|k| l[k + 4..].trim_start().trim_start_matches(':').trim_start().starts_with(&quoted))).map(|i| i + 1)
}

pub fn parse_network(src: &str) -> Result<ParsedNetwork, NetworkFileError> {
    let file: NetworkFile = serde_json::from_str(src).map_err(|e| NetworkFileError {
        line: Some(e.line()),
        column: Some(e.column()),
        field: String::new(),
        message: e.to_string(),
    })?;
    build(&file, src)
}

fn build(file: &NetworkFile, src: &str) -> Result<ParsedNetwork, NetworkFileError> {
    let err = |id: &str, field: String, message: String| NetworkFileError { line: line_of_id(src, id), column: None, field, message };
    if file.roads.is_empty() {
        return Err(NetworkFileError { line: None, column: None, field: "roads".into(), message: "at least one road is required".into() });
    }
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut roads = Vec::with_capacity(file.roads.len());
    for (r, spec) in file.roads.iter().enumerate() {
        let f = |name: &str| format!("roads[{r}].{name}");
        if index.insert(spec.id.as_str(), r).is_some() {
            return Err(err(&spec.id, f("id"), format!("duplicate road id `{}`", spec.id)));
        }
        let compile = |p: &ProfileSpec, name: &str| Profile::compile(p).map_err(|e| err(&spec.id, f(name), e.to_string()));
        let speed = match (&spec.v, &spec.w) {
            (Some(v), None) => Speed::V(compile(v, "v")?),
            (None, Some(w)) => Speed::W(compile(w, "w")?),
            _ => return Err(err(&spec.id, f("v"), "exactly one of `v` and `w` is required".into())),
        };
        let length = spec.length.unwrap_or(1.0);
        if !(length > 0.0 && length.is_finite()) {
            return Err(err(&spec.id, f("length"), format!("length must be positive, got {length}")));
        }
        if spec.periodic && !file.junctions.is_empty() {
            return Err(err(&spec.id, f("periodic"), "periodic roads are only allowed without junctions".into()));
        }
        if spec.periodic && spec.inflow.is_some() {
            return Err(err(&spec.id, f("inflow"), "a periodic road has no inflow end".into()));
        }
        roads.push(RoadSetup {
            name: spec.id.clone(),
            length,
            v_ref: spec.v_ref.or(file.v_ref),
            rho: compile(&spec.rho, "rho")?,
            speed,
            c: match &spec.c {
                Some(c) => compile(c, "c")?,
                None => Profile::compile(&ProfileSpec::Number(1.0)).expect("constant profile"),
            },
            inflow: spec.inflow,
            periodic: spec.periodic,
        });
    }

    let mut upstream = vec![RoadEnd::Boundary(EndCondition::Outflow); roads.len()];
    let mut downstream = vec![RoadEnd::Boundary(EndCondition::Outflow); roads.len()];
    let mut junctions = Vec::with_capacity(file.junctions.len());
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for (ji, spec) in file.junctions.iter().enumerate() {
        let f = |name: &str| format!("junctions[{ji}].{name}");
        if seen.insert(spec.id.as_str(), ji).is_some() {
            return Err(err(&spec.id, f("id"), format!("duplicate junction id `{}`", spec.id)));
        }
        if spec.incoming.is_empty() || spec.outgoing.is_empty() {
            return Err(err(&spec.id, f("incoming"), "a junction needs at least one incoming and one outgoing road".into()));
        }
        let lookup = |ids: &[String], name: &str| -> Result<Vec<usize>, NetworkFileError> {
            ids.iter().map(|id| index.get(id.as_str()).copied().ok_or_else(|| err(&spec.id, f(name), format!("unknown road `{id}`")))).collect()
        };
        let incoming = lookup(&spec.incoming, "incoming")?;
        let outgoing = lookup(&spec.outgoing, "outgoing")?;
        for &r in &incoming {
            if downstream[r] != RoadEnd::Boundary(EndCondition::Outflow) {
                return Err(err(&spec.id, f("incoming"), format!("road `{}` already ends at another junction", roads[r].name)));
            }
            downstream[r] = RoadEnd::Junction(ji);
        }
        for &r in &outgoing {
            if upstream[r] != RoadEnd::Boundary(EndCondition::Outflow) {
                return Err(err(&spec.id, f("outgoing"), format!("road `{}` already starts at another junction", roads[r].name)));
            }
            if roads[r].inflow.is_some() {
                return Err(err(&spec.id, f("outgoing"), format!("road `{}` has an inflow state but starts at a junction", roads[r].name)));
            }
            upstream[r] = RoadEnd::Junction(ji);
        }
        let (m, n) = (incoming.len(), outgoing.len());
        let distribution = match &spec.distribution {
            Some(a) => {
                if a.len() != n || a.iter().any(|row| row.len() != m) {
                    return Err(err(&spec.id, f("distribution"), format!("expected {n} rows (outgoing) of {m} entries (incoming)")));
                }
                for i in 0..m {
                    let col: f64 = a.iter().map(|row| row[i]).sum();
                    if a.iter().any(|row| !(0.0..=1.0).contains(&row[i])) {
                        return Err(err(&spec.id, f("distribution"), format!("column {i} has entries outside [0, 1]")));
                    }
                    if (col - 1.0).abs() > 1e-12 {
                        return Err(err(&spec.id, f("distribution"), format!("column {i} sums to {col}, not 1")));
                    }
                }
                a.clone()
            }
            None => vec![vec![1.0 / n as f64; m]; n],
        };
        let rule = match spec.rule {
            RuleSpec::Hb => CouplingRule::DemandProportional,
            RuleSpec::Ghmw => CouplingRule::FixedPriority,
        };
        let priorities = match (&spec.priorities, rule) {
            (Some(b), _) => {
                let s: f64 = b.iter().sum();
                if b.len() != m || b.iter().any(|&x| !(x >= 0.0)) || (s - 1.0).abs() > 1e-12 {
                    return Err(err(&spec.id, f("priorities"), format!("expected {m} non-negative priorities summing to 1")));
                }
                b.clone()
            }
            (None, CouplingRule::FixedPriority) if m == 1 => vec![1.0],
            (None, CouplingRule::FixedPriority) => return Err(err(&spec.id, f("priorities"), "GHMW junctions need `priorities`".into())),
            (None, CouplingRule::DemandProportional) => Vec::new(),
        };
        junctions.push(Junction { name: spec.id.clone(), incoming, outgoing, distribution, priorities, rule });
    }
    let network = Network {
        roads: roads.iter().enumerate().map(|(r, s)| Road { name: s.name.clone(), upstream: upstream[r], downstream: downstream[r] }).collect(),
        junctions,
    };
    network.validate().map_err(|e| NetworkFileError { line: None, column: None, field: "junctions".into(), message: e.to_string() })?;
    Ok(ParsedNetwork { description: file.description.clone(), v_ref: file.v_ref, gamma: file.gamma, kappa: file.kappa, roads, network })
}
