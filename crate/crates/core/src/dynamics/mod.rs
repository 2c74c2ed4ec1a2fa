//! Time evolution under piecewise-constant pulse schedules.

mod lindblad;
mod schedule;
mod unitary;

pub use lindblad::{evolve_lindblad, rehermitize, LindbladGenerator, LindbladSolver, HERMITIZATION_WARN};
pub use schedule::{run_schedule, RunOptions, Trajectory};
pub use unitary::{evolve_unitary, Propagator};
