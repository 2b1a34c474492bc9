//! Fully implicit coupling of mechanical equilibrium and fluid flow.
//!
//! One global Newton iteration works on the unknown vector
//! (free nodal displacements, matrix pressures, fracture pressures); the
//! fracture jump unknowns are eliminated element-locally by the contact
//! return mapping, whose consistent sensitivities fill the off-diagonal
//! Jacobian blocks. Time integration is backward Euler with cut-and-retry
//! step control.

mod driver;
mod model;

pub use driver::{run, Schedule, StepLog};
pub use model::{
    AssembledSystem, CoupledModel, CoupledState, SolverSettings, StepOutcome,
};
