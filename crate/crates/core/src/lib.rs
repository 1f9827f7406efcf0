//! Discontinuous Galerkin solver for Aw-Rascle-Zhang traffic models with
//! oscillation-eliminating damping and a bound-preserving limiter, on single
//! roads and on road networks.

pub mod basis;
pub mod dg;
pub mod domains;
pub mod error;
pub mod limiter;
pub mod model;
pub mod network;
pub mod oe;
pub mod stepper;

pub use basis::{CellPoly, DgBasis, Mesh, Solution};
pub use dg::{BoundaryCondition, EndCondition, Exterior};
pub use domains::{Constraint, InvariantBox};
pub use error::{LimiterError, ModelError, SolverError};
pub use model::{PressureLaw, SBound, State};
pub use stepper::{Mode, Segment, Simulation, SpeedRule, StepConfig};
