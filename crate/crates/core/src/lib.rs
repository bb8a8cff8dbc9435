//! Models and a contention simulator for quantum-computer interconnects
//! that distribute purified EPR pairs over a mesh of teleporter nodes.

pub mod channel;
pub mod cli;
pub mod fidelity;
pub mod params;
pub mod purification;
pub mod simulator;
pub mod topology;
pub mod workloads;

pub use fidelity::{DistanceCells, Fidelity};
pub use params::{default_ion_trap, ErrorRates, OperationTimes, ParameterSet};
