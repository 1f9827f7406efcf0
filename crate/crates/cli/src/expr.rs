//! Initial-data profiles: formulas in `x` and piecewise combinations of them.

use anyhow::{anyhow, bail, Result};
use exmex::prelude::*;
use exmex::{literal_matcher_from_pattern, FlatEx, FloatOpsFactory, MatchLiteral};
use serde::{Deserialize, Serialize};

// The default literal matcher does not accept exponents such as `1e-10`.
literal_matcher_from_pattern!(NumberLiteral, r"^(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?");

type FlatExpr = FlatEx<f64, FloatOpsFactory<f64>, NumberLiteral>;

/// Compiled formula in the single variable `x` (constants allowed).
#[derive(Clone, Debug)]
pub struct Formula {
    ex: FlatExpr,
    uses_x: bool,
}

impl Formula {
    pub fn parse(src: &str) -> Result<Self> {
        let ex = FlatExpr::parse(src).map_err(|e| anyhow!("cannot parse `{src}`: {e}"))?;
        let vars = ex.var_names();
        if vars.iter().any(|v| v != "x") {
            bail!("`{src}` uses variables {vars:?}; only `x` is allowed");
        }
        let uses_x = !vars.is_empty();
        let f = Formula { ex, uses_x };
        let probe = f.eval(0.5);
        if !probe.is_finite() {
            bail!("`{src}` is not finite at x = 0.5");
        }
        Ok(f)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let r = if self.uses_x { self.ex.eval(&[x]) } else { self.ex.eval(&[]) };
        r.unwrap_or(f64::NAN)
    }
}

/// One interval of a piecewise profile, closed on both sides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Piece {
    pub on: [f64; 2],
    pub expr: String,
}

/// Profile as written in a network file: a formula, or intervals with a fallback.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileSpec {
    Number(f64),
    Formula(String),
    Piecewise {
        pieces: Vec<Piece>,
        #[serde(rename = "else")]
        otherwise: String,
    },
}

#[derive(Clone, Debug)]
pub struct Profile {
    pieces: Vec<([f64; 2], Formula)>,
    otherwise: Formula,
}

impl Profile {
    pub fn compile(spec: &ProfileSpec) -> Result<Self> {
        match spec {
            ProfileSpec::Number(v) => Ok(Profile { pieces: Vec::new(), otherwise: Formula::parse(&format!("{v:e}"))? }),
            ProfileSpec::Formula(s) => Ok(Profile { pieces: Vec::new(), otherwise: Formula::parse(s)? }),
            ProfileSpec::Piecewise { pieces, otherwise } => {
                let mut out = Vec::with_capacity(pieces.len());
                for p in pieces {
                    if !(p.on[0] <= p.on[1]) {
                        bail!("interval [{}, {}] is empty", p.on[0], p.on[1]);
                    }
                    out.push((p.on, Formula::parse(&p.expr)?));
                }
                Ok(Profile { pieces: out, otherwise: Formula::parse(otherwise)? })
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        for (on, f) in &self.pieces {
            if x >= on[0] && x <= on[1] {
                return f.eval(x);
            }
        }
        self.otherwise.eval(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scientific_literals_and_constants() {
        let f = Formula::parse("0.1*(1+x*cos(25*PI*x))+1e-10").unwrap();
        let x: f64 = 0.3;
        let want = 0.1 * (1.0 + x * (25.0 * std::f64::consts::PI * x).cos()) + 1e-10;
        assert!((f.eval(x) - want).abs() < 1e-15);
        assert_eq!(Formula::parse("2.5E-3").unwrap().eval(7.0), 2.5e-3);
    }

    #[test]
    fn rejects_other_variables() {
        assert!(Formula::parse("x+y").is_err());
        assert!(Formula::parse("0.1*(").is_err());
    }

    #[test]
    fn piecewise_profile() {
        let spec: ProfileSpec =
            serde_json::from_str(r#"{"pieces": [{"on": [0.2, 0.4], "expr": "0.2"}, {"on": [0.6, 0.8], "expr": "0.2"}], "else": "0.1"}"#).unwrap();
        let p = Profile::compile(&spec).unwrap();
        assert_eq!(p.eval(0.3), 0.2);
        assert_eq!(p.eval(0.5), 0.1);
        assert_eq!(p.eval(0.7), 0.2);
        let n: ProfileSpec = serde_json::from_str("0.25").unwrap();
        assert_eq!(Profile::compile(&n).unwrap().eval(0.0), 0.25);
    }
}
