//! Simulation and pulse-level compilation for qubit registers whose
//! two-qubit interactions are permanent and diagonal, and whose only control
//! is instantaneous one-qubit pulses.
//!
//! The pipeline:
//!
//! * [`device`] holds the coupling energies and splits general diagonal
//!   couplings into a ZZ strength plus one-qubit terms.
//! * [`state`] simulates free evolution interleaved with pulses.
//! * [`decouple`] builds randomized NOT trains that leave a single pair
//!   interacting, together with the phase compensation.
//! * [`synth`] turns repeated decoupled frames into a controlled-Z and CNOT.
//! * [`compiler`] parses circuits, routes them with SWAPs and lowers them to
//!   pulse schedules.
//! * [`metrics`] measures fidelities and runs Monte Carlo sweeps.
//!
//! Evolution always follows `exp(-iHt)` with ħ = 1.

pub mod cli;
pub mod compiler;
pub mod decouple;
pub mod device;
pub mod gate;
pub mod metrics;
pub mod rng;
pub mod schedule;
pub mod state;
pub mod synth;

pub type C64 = nalgebra::Complex<f64>;

pub use decouple::{DecouplingConfig, Mode};
pub use device::{CouplingSpec, DeviceModel, Energies};
pub use gate::Gate;
pub use rng::FrameSeed;
pub use schedule::{PulseEvent, PulseSchedule};
pub use state::StateVector;
