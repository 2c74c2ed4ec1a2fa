//! Simulation of directional excitation and entanglement transport in
//! driven Rydberg chains with alternating spacings.
//!
//! Numerical routines are generic over `T: Real` (`f32` or `f64`); the
//! aliases below fix `T = f64`.

pub mod disorder;
pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod model;
pub mod observables;
pub mod optimize;
pub mod scalar;
pub mod units;

pub use error::{Error, Result};
pub use scalar::{Complex, Real};

pub type PureState = hilbert::PureState<f64>;
pub type DensityMatrix = hilbert::DensityMatrix<f64>;
pub type QuantumState = hilbert::QuantumState<f64>;
pub type ReducedTwoAtomState = hilbert::ReducedTwoAtomState<f64>;
pub type ChainGeometry = model::ChainGeometry<f64>;
pub type ModelParams = model::ModelParams<f64>;
pub type PulseSchedule = model::PulseSchedule<f64>;
pub type PulseToken = model::PulseToken<f64>;
pub type HermitianOperator = model::HermitianOperator<f64>;
pub type Trajectory = dynamics::Trajectory<f64>;
pub type RunOptions = dynamics::RunOptions<f64>;
pub type FidelityReport = observables::FidelityReport<f64>;
pub type DisorderSpec = disorder::DisorderSpec<f64>;
pub type DisorderEnsembleResult = disorder::DisorderEnsembleResult<f64>;
pub type ScanGrid = optimize::ScanGrid<f64>;
pub type OptimumReport = optimize::OptimumReport<f64>;
