use thiserror::Error;

use super::circuit::{CircuitError, CircuitIR, Op};
use super::route::{route, RouteError, RoutedCircuit};
use crate::decouple::{decoupled_zz_gate, DecoupleError, DecouplingConfig};
use crate::device::DeviceModel;
use crate::rng::FrameSeed;
use crate::schedule::{PulseEvent, PulseSchedule};
use crate::synth::{synthesize_cnot, SynthError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompileError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Route(#[from] RouteError),
    #[error("lowering operation {index} ({op}): {source}")]
    Synth {
        index: usize,
        op: String,
        source: SynthError,
    },
    #[error("lowering operation {index} ({op}): {source}")]
    Decouple {
        index: usize,
        op: String,
        source: DecoupleError,
    },
    #[error("operation {index} ({op}) acts on an uncoupled pair; route the circuit first")]
    Unrouted { index: usize, op: String },
}

#[derive(Debug, Clone)]
pub struct Compiled {
    pub schedule: PulseSchedule,
    pub routed: RoutedCircuit,
    /// Decoupled frames used; each draws from its own random streams.
    pub frames: u32,
}

/// Lays the routed circuit out sequentially: one-qubit operations become a
/// single pulse at the current end of the schedule, CNOT becomes the
/// synthesized `H·Π·H` sequence and `CPHASE θ` a decoupled frame of length
/// `θ/ΔE`. All qubits outside the active pair are decoupled during frames.
pub fn lower(
    routed: &RoutedCircuit,
    model: &DeviceModel,
    n_max: u64,
    config: &DecouplingConfig,
    trial: u64,
) -> Result<Compiled, CompileError> {
    let mut schedule = PulseSchedule::idle(0.0);
    let mut frame = 0u32;
    for (index, op) in routed.ir.ops.iter().enumerate() {
        let seed = FrameSeed { trial, frame };
        if let Some((q, gate)) = op.one_qubit_gate() {
            schedule.push(PulseEvent::new(schedule.duration, q, gate));
            continue;
        }
        let qs = op.qubits();
        if model.effective_zz(qs[0], qs[1]).unwrap_or(0.0) == 0.0 {
            return Err(CompileError::Unrouted {
                index,
                op: op.to_string(),
            });
        }
        let part = match *op {
            Op::Cnot { control, target } => {
                let (s, result) = synthesize_cnot(model, control, target, n_max, config, seed)
                    .map_err(|source| CompileError::Synth {
                        index,
                        op: op.to_string(),
                        source,
                    })?;
                frame += result.n as u32;
                s
            }
            Op::Cphase { theta, a, b } => {
                // the frame applies e^{-iφ}, so ask for φ = −θ
                let s = decoupled_zz_gate(model, a, b, -theta, config, seed).map_err(|source| {
                    CompileError::Decouple {
                        index,
                        op: op.to_string(),
                        source,
                    }
                })?;
                frame += 1;
                s
            }
            _ => unreachable!("one-qubit ops handled above"),
        };
        schedule.append(&part);
    }
    schedule.normalize();
    Ok(Compiled {
        schedule,
        routed: routed.clone(),
        frames: frame,
    })
}

/// Validate, route and lower.
pub fn compile(
    ir: &CircuitIR,
    model: &DeviceModel,
    n_max: u64,
    config: &DecouplingConfig,
    trial: u64,
) -> Result<Compiled, CompileError> {
    ir.validate()?;
    let routed = route(ir, model)?;
    lower(&routed, model, n_max, config, trial)
}
