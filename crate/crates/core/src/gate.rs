//! Instantaneous one-qubit pulses.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use crate::C64;

pub type Matrix2 = [[C64; 2]; 2];

/// Unitarity tolerance on `‖G†G − I‖` (max-entry norm).
pub const UNITARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    /// Bit flip (NOT).
    X,
    H,
    /// `diag(e^{-iθ/2}, e^{iθ/2})`.
    Rz(f64),
    /// `exp(-iθX/2)`.
    Rx(f64),
    /// `diag(1, e^{iθ})`: phase on `|1⟩` only.
    Phase(f64),
    Matrix(Matrix2),
}

impl Gate {
    pub fn matrix(&self) -> Matrix2 {
        let zero = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        match *self {
            Gate::X => [[zero, one], [one, zero]],
            Gate::H => {
                let h = C64::new(FRAC_1_SQRT_2, 0.0);
                [[h, h], [h, -h]]
            }
            Gate::Rz(theta) => [
                [C64::from_polar(1.0, -theta / 2.0), zero],
                [zero, C64::from_polar(1.0, theta / 2.0)],
            ],
            Gate::Rx(theta) => {
                let c = C64::new((theta / 2.0).cos(), 0.0);
                let s = C64::new(0.0, -(theta / 2.0).sin());
                [[c, s], [s, c]]
            }
            Gate::Phase(theta) => [[one, zero], [zero, C64::from_polar(1.0, theta)]],
            Gate::Matrix(m) => m,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::X => "X",
            Gate::H => "H",
            Gate::Rz(_) => "RZ",
            Gate::Rx(_) => "RX",
            Gate::Phase(_) => "P",
            Gate::Matrix(_) => "U",
        }
    }

    /// True if the gate maps basis states to basis states.
    pub fn is_diagonal(&self) -> bool {
        matches!(self, Gate::Rz(_) | Gate::Phase(_))
    }

    /// Max-entry deviation of `G†G` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let m = self.matrix();
        let mut worst: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                let dot: C64 = (0..2).map(|i| m[i][r].conj() * m[i][c]).sum();
                let expect = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((dot - C64::new(expect, 0.0)).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_error() <= UNITARY_TOL
    }
}

impl fmt::Display for Gate {
    /// Debug text form: name followed by parameters with 17 significant digits.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::X | Gate::H => write!(f, "{}", self.name()),
            Gate::Rz(t) | Gate::Rx(t) | Gate::Phase(t) => write!(f, "{} {:.16e}", self.name(), t),
            Gate::Matrix(m) => {
                write!(f, "U")?;
                for z in m.iter().flatten() {
                    write!(f, " {:.16e} {:.16e}", z.re, z.im)?;
                }
                Ok(())
            }
        }
    }
}
