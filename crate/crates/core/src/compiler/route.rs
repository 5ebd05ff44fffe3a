use std::collections::VecDeque;

use thiserror::Error;

use super::circuit::{CircuitIR, Op};
use crate::device::DeviceModel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RouteError {
    #[error("circuit needs {circuit} qubits but the device has {device}")]
    TooWide { circuit: usize, device: usize },
    #[error("qubits {0} and {1} are not connected on the coupling graph")]
    Disconnected(usize, usize),
}

/// Circuit whose two-qubit operations all act on coupled pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutedCircuit {
    pub ir: CircuitIR,
    pub swap_count: usize,
}

/// Breadth-first shortest path over pairs with nonzero `ΔE`. Neighbors are
/// visited in ascending order, so ties resolve toward lower indices.
pub fn shortest_path(model: &DeviceModel, from: usize, to: usize) -> Option<Vec<usize>> {
    let n = model.n_qubits();
    if from >= n || to >= n {
        return None;
    }
    let mut parent = vec![usize::MAX; n];
    parent[from] = from;
    let mut queue = VecDeque::from([from]);
    while let Some(v) = queue.pop_front() {
        if v == to {
            break;
        }
        for w in model.neighbors(v) {
            if parent[w] == usize::MAX {
                parent[w] = v;
                queue.push_back(w);
            }
        }
    }
    if parent[to] == usize::MAX {
        return None;
    }
    let mut path = vec![to];
    while *path.last().unwrap() != from {
        path.push(parent[*path.last().unwrap()]);
    }
    path.reverse();
    Some(path)
}

fn swap(a: usize, b: usize, out: &mut Vec<Op>) {
    out.push(Op::Cnot {
        control: a,
        target: b,
    });
    out.push(Op::Cnot {
        control: b,
        target: a,
    });
    out.push(Op::Cnot {
        control: a,
        target: b,
    });
}

/// Inserts SWAP chains (three CNOTs each) that carry the first operand of a
/// distant two-qubit operation next to the second, then undoes them. The
/// logical-to-physical mapping is the identity before and after every op.
pub fn route(ir: &CircuitIR, model: &DeviceModel) -> Result<RoutedCircuit, RouteError> {
    if ir.n_qubits > model.n_qubits() {
        return Err(RouteError::TooWide {
            circuit: ir.n_qubits,
            device: model.n_qubits(),
        });
    }
    let mut ops = Vec::with_capacity(ir.ops.len());
    let mut swap_count = 0;
    for op in &ir.ops {
        let (mover, fixed) = match *op {
            Op::Cnot { control, target } => (control, target),
            Op::Cphase { a, b, .. } => (a, b),
            _ => {
                ops.push(*op);
                continue;
            }
        };
        let path =
            shortest_path(model, mover, fixed).ok_or(RouteError::Disconnected(mover, fixed))?;
        // path = mover, v1, ..., v_{d-1}, fixed
        let hops = &path[..path.len() - 1];
        for w in hops.windows(2) {
            swap(w[0], w[1], &mut ops);
        }
        let near = *hops.last().unwrap();
        ops.push(match *op {
            Op::Cnot { .. } => Op::Cnot {
                control: near,
                target: fixed,
            },
            Op::Cphase { theta, .. } => Op::Cphase {
                theta,
                a: near,
                b: fixed,
            },
            _ => unreachable!(),
        });
        for w in hops.windows(2).rev() {
            swap(w[0], w[1], &mut ops);
        }
        swap_count += 2 * (hops.len() - 1);
    }
    Ok(RoutedCircuit {
        ir: CircuitIR {
            n_qubits: model.n_qubits(),
            ops,
        },
        swap_count,
    })
}
