use thiserror::Error;

use crate::domains::Constraint;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("non-positive density rho = {0}")]
    NonPositiveDensity(f64),
    #[error("non-positive marker z = {0}")]
    NonPositiveMarker(f64),
    #[error("non-finite state")]
    NonFinite,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl ModelError {
    /// The physical constraint a state-level error corresponds to.
    pub fn constraint(&self) -> Option<Constraint> {
        match self {
            ModelError::NonPositiveDensity(_) | ModelError::NonFinite => Some(Constraint::Density),
            ModelError::NonPositiveMarker(_) => Some(Constraint::Marker),
            ModelError::InvalidParameter(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LimiterError {
    #[error("cell average violates constraint {constraint} (H = {value:e}, threshold {threshold:e})")]
    AverageOutside { constraint: Constraint, value: f64, threshold: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Limiter(#[from] LimiterError),
    #[error("simulation failure at t = {time:e}: {constraint} violated at a flux evaluation point")]
    Breakdown { time: f64, step: usize, constraint: Constraint },
    #[error("time step collapsed: {0}")]
    TimeStep(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("junction {junction}: {reason}")]
    Junction { junction: String, reason: String },
}
