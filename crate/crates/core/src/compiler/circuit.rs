use std::fmt;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::gate::Gate;
use crate::state::{StateError, StateVector};
use crate::C64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("operation {index}: {message}")]
    Invalid { index: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Op {
    H(usize),
    X(usize),
    Rz(f64, usize),
    Rx(f64, usize),
    Cnot {
        control: usize,
        target: usize,
    },
    /// `diag(1, 1, 1, e^{iθ})` on `(a, b)`.
    Cphase {
        theta: f64,
        a: usize,
        b: usize,
    },
}

impl Op {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Op::H(q) | Op::X(q) | Op::Rz(_, q) | Op::Rx(_, q) => vec![q],
            Op::Cnot { control, target } => vec![control, target],
            Op::Cphase { a, b, .. } => vec![a, b],
        }
    }

    pub fn one_qubit_gate(&self) -> Option<(usize, Gate)> {
        match *self {
            Op::H(q) => Some((q, Gate::H)),
            Op::X(q) => Some((q, Gate::X)),
            Op::Rz(t, q) => Some((q, Gate::Rz(t))),
            Op::Rx(t, q) => Some((q, Gate::Rx(t))),
            _ => None,
        }
    }

    /// Ideal action on a state vector.
    pub fn apply_ideal(&self, state: &mut StateVector) -> Result<(), StateError> {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        match *self {
            Op::Cnot { control, target } => {
                let m = [
                    [one, zero, zero, zero],
                    [zero, one, zero, zero],
                    [zero, zero, zero, one],
                    [zero, zero, one, zero],
                ];
                state.apply_two_qubit(control, target, &m)
            }
            Op::Cphase { theta, a, b } => {
                let mut m = [[zero; 4]; 4];
                for (i, row) in m.iter_mut().enumerate() {
                    row[i] = one;
                }
                m[3][3] = C64::from_polar(1.0, theta);
                state.apply_two_qubit(a, b, &m)
            }
            _ => {
                let (q, g) = self.one_qubit_gate().expect("one-qubit op");
                state.apply_one_qubit(q, &g)
            }
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Op::H(q) => write!(f, "H {q}"),
            Op::X(q) => write!(f, "X {q}"),
            Op::Rz(t, q) => write!(f, "RZ {t:?} {q}"),
            Op::Rx(t, q) => write!(f, "RX {t:?} {q}"),
            Op::Cnot { control, target } => write!(f, "CNOT {control} {target}"),
            Op::Cphase { theta, a, b } => write!(f, "CPHASE {theta:?} {a} {b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitIR {
    pub n_qubits: usize,
    pub ops: Vec<Op>,
}

impl CircuitIR {
    pub fn new(n_qubits: usize, ops: Vec<Op>) -> Result<Self, CircuitError> {
        let ir = CircuitIR { n_qubits, ops };
        ir.validate()?;
        Ok(ir)
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        for (index, op) in self.ops.iter().enumerate() {
            op_check(op, self.n_qubits)
                .map_err(|message| CircuitError::Invalid { index, message })?;
        }
        Ok(())
    }

    /// Ideal-gate simulation on a register of `n_qubits` (at least the
    /// circuit's own width) starting from `input`.
    pub fn simulate_ideal(&self, input: &StateVector) -> Result<StateVector, StateError> {
        let mut state = input.clone();
        for op in &self.ops {
            op.apply_ideal(&mut state)?;
        }
        Ok(state)
    }

    pub fn ideal_unitary(&self, n_qubits: usize) -> Result<DMatrix<C64>, StateError> {
        let dim = 1usize << n_qubits;
        let mut u = DMatrix::zeros(dim, dim);
        for c in 0..dim {
            let out = self.simulate_ideal(&StateVector::basis(n_qubits, c)?)?;
            for (r, a) in out.amplitudes().iter().enumerate() {
                u[(r, c)] = *a;
            }
        }
        Ok(u)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("qubits {}\n", self.n_qubits);
        for op in &self.ops {
            out.push_str(&format!("{op}\n"));
        }
        out
    }
}

fn op_check(op: &Op, n_qubits: usize) -> Result<(), String> {
    for q in op.qubits() {
        if q >= n_qubits {
            return Err(format!("qubit {q} out of range for {n_qubits} qubits"));
        }
    }
    let angle_ok = match *op {
        Op::Rz(t, _) | Op::Rx(t, _) | Op::Cphase { theta: t, .. } => t.is_finite(),
        _ => true,
    };
    if !angle_ok {
        return Err("angle must be finite".into());
    }
    let qs = op.qubits();
    if qs.len() == 2 && qs[0] == qs[1] {
        return Err("operands must differ".into());
    }
    Ok(())
}

/// Parses the line-based circuit format:
///
/// ```text
/// qubits 3
/// H 0            # comment
/// RZ 1.5707963267948966 2
/// CNOT 0 1
/// CPHASE 0.25 1 2
/// ```
pub fn parse_circuit(text: &str) -> Result<CircuitIR, CircuitError> {
    let mut n_qubits: Option<usize> = None;
    let mut ops = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |message: String| CircuitError::Parse { line, message };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let name = tokens[0].to_ascii_uppercase();
        let args = &tokens[1..];
        if name == "QUBITS" {
            if n_qubits.is_some() {
                return Err(err("repeated `qubits` header".into()));
            }
            if args.len() != 1 {
                return Err(err("`qubits` takes one argument".into()));
            }
            let n: usize = args[0]
                .parse()
                .map_err(|_| err(format!("bad qubit count {:?}", args[0])))?;
            if n == 0 {
                return Err(err("qubit count must be positive".into()));
            }
            n_qubits = Some(n);
            continue;
        }
        let n = n_qubits
            .ok_or_else(|| err("missing `qubits N` header before the first gate".into()))?;
        let (n_angles, n_operands) = match name.as_str() {
            "H" | "X" => (0, 1),
            "RZ" | "RX" => (1, 1),
            "CNOT" => (0, 2),
            "CPHASE" => (1, 2),
            _ => return Err(err(format!("unknown gate {:?}", tokens[0]))),
        };
        if args.len() != n_angles + n_operands {
            return Err(err(format!(
                "{name} takes {} arguments, got {}",
                n_angles + n_operands,
                args.len()
            )));
        }
        let angle = if n_angles == 1 {
            args[0]
                .parse::<f64>()
                .map_err(|_| err(format!("bad angle {:?}", args[0])))?
        } else {
            0.0
        };
        let qs = args[n_angles..]
            .iter()
            .map(|s| {
                s.parse::<usize>()
                    .map_err(|_| err(format!("bad qubit {s:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let op = match name.as_str() {
            "H" => Op::H(qs[0]),
            "X" => Op::X(qs[0]),
            "RZ" => Op::Rz(angle, qs[0]),
            "RX" => Op::Rx(angle, qs[0]),
            "CNOT" => Op::Cnot {
                control: qs[0],
                target: qs[1],
            },
            _ => Op::Cphase {
                theta: angle,
                a: qs[0],
                b: qs[1],
            },
        };
        op_check(&op, n).map_err(err)?;
        ops.push(op);
    }
    let n_qubits = n_qubits.ok_or(CircuitError::Parse {
        line: 0,
        message: "missing `qubits N` header".into(),
    })?;
    Ok(CircuitIR { n_qubits, ops })
}
