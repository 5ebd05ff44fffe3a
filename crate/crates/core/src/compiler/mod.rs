//! Circuit front end: parsing, SWAP routing and lowering to pulses.

mod circuit;
mod lower;
mod route;

pub use circuit::{parse_circuit, CircuitError, CircuitIR, Op};
pub use lower::{compile, lower, CompileError, Compiled};
pub use route::{route, shortest_path, RouteError, RoutedCircuit};
