//! Fixtures shared by the benchmarks.

use arz_core::stepper::Uncoupled;
use arz_core::{BoundaryCondition, EndCondition, Mesh, Mode, PressureLaw, Segment, Simulation, State, StepConfig};

/// Riemann problem with a jump at 0.65 on `[0, 1]` and outflow ends:
/// traffic behind a nearly stopped queue.
pub fn riemann(mode: Mode, cells: usize, gamma: f64) -> Simulation<Uncoupled> {
    let law = PressureLaw::standard(0.9, gamma).expect("valid law");
    let cfg = StepConfig { mode, ..StepConfig::default() };
    let left = law.from_primitives(0.5, 0.2, 1.0).expect("physical");
    let right = law.from_primitives(0.9, 2e-11, 1.0).expect("physical");
    let bc = BoundaryCondition::Ends { left: EndCondition::Outflow, right: EndCondition::Outflow };
    let seg = Segment::new(law, Mesh::new(0.0, 1.0, cells), bc, &cfg, |x| if x < 0.65 { left } else { right }).expect("initial data");
    Simulation::single(seg, cfg)
}

/// Smooth state used by the per-cell kernels.
pub fn smooth_state(law: &PressureLaw, x: f64) -> State {
    law.from_primitives(0.3 + 0.2 * (6.0 * x).sin(), 0.4 + 0.1 * x, 1.0 + 0.1 * (3.0 * x).cos()).expect("physical")
}
