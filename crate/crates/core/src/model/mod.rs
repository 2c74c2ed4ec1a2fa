//! Chain geometry, couplings, pulse Hamiltonians and schedule planning.

mod diagnostics;
mod geometry;
mod hamiltonian;
mod params;
mod schedule;

pub use diagnostics::{hierarchy_diagnostics, HierarchyReport, HIERARCHY_WARNING_THRESHOLD};
pub use geometry::{
    disordered_couplings, ideal_couplings, ideal_nnn, interaction_strength, ChainGeometry, CouplingTable, Vec3,
};
pub use hamiltonian::{
    build_pulse_hamiltonian, chain_couplings, frame_switch_phase, hamiltonian_with_detuning, FramePhase,
    HermitianOperator,
};
pub use params::{effective_rabi, ModelParams};
pub use schedule::{plan_route, PulseSchedule, PulseToken};

