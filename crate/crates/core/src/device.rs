//! Fixed interaction model of the register.
//!
//! Every pair of qubits carries a permanent interaction that is diagonal in
//! the computational basis. A coupling is stored either as four diagonal
//! energies (form A) or as a single energy on `|11⟩` (form B). Energies are
//! angular frequencies with ħ = 1 and dimensionless time.
//!
//! Pairs are canonicalized to `(min, max)`. The four form-A energies are
//! ordered by the basis values `(a_min, a_max)`: `00, 01, 10, 11`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeviceError {
    #[error("device must have at least one qubit")]
    NoQubits,
    #[error("self-coupling on qubit {0}")]
    SelfCoupling(usize),
    #[error("duplicate pair ({0}, {1})")]
    DuplicatePair(usize, usize),
    #[error("qubit {qubit} out of range for a {n_qubits}-qubit device")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    #[error("non-finite energy on pair ({0}, {1})")]
    NonFiniteEnergy(usize, usize),
    #[error("coupling ({j}, {k}): form {form} expects {expected} energies, got {got}")]
    EnergyCount {
        j: usize,
        k: usize,
        form: String,
        expected: usize,
        got: usize,
    },
    #[error("coupling ({j}, {k}): unknown form {form:?} (expected \"A\" or \"B\")")]
    UnknownForm { j: usize, k: usize, form: String },
    #[error("reading {path}: {message}")]
    Io { path: String, message: String },
    #[error("parsing device file: {0}")]
    Parse(String),
}

/// Diagonal interaction energies of one pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Energies {
    /// Full diagonal `(E1, E2, E3, E4)` over `00, 01, 10, 11`.
    FormA([f64; 4]),
    /// Energy on `|11⟩` only.
    FormB(f64),
}

impl Energies {
    pub fn diagonal(&self) -> [f64; 4] {
        match *self {
            Energies::FormA(e) => e,
            Energies::FormB(e) => [0.0, 0.0, 0.0, e],
        }
    }

    fn is_finite(&self) -> bool {
        self.diagonal().iter().all(|e| e.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingSpec {
    pair: (usize, usize),
    energies: Energies,
}

impl CouplingSpec {
    /// Builds a coupling for the unordered pair `{j, k}`.
    ///
    /// `energies` are given in `(a_j, a_k)` order; when `j > k` the form-A
    /// entries for `01` and `10` are swapped so that storage is in canonical
    /// `(min, max)` order.
    pub fn new(j: usize, k: usize, energies: Energies) -> Self {
        let energies = match energies {
            Energies::FormA([e1, e2, e3, e4]) if j > k => Energies::FormA([e1, e3, e2, e4]),
            other => other,
        };
        CouplingSpec {
            pair: (j.min(k), j.max(k)),
            energies,
        }
    }

    pub fn form_b(j: usize, k: usize, energy: f64) -> Self {
        Self::new(j, k, Energies::FormB(energy))
    }

    pub fn form_a(j: usize, k: usize, energies: [f64; 4]) -> Self {
        Self::new(j, k, Energies::FormA(energies))
    }

    pub fn pair(&self) -> (usize, usize) {
        self.pair
    }

    pub fn energies(&self) -> Energies {
        self.energies
    }

    pub fn involves(&self, q: usize) -> bool {
        self.pair.0 == q || self.pair.1 == q
    }

    /// Diagonal energy for the basis values of the two qubits in canonical order.
    #[inline]
    pub fn energy(&self, a_lo: bool, a_hi: bool) -> f64 {
        self.energies.diagonal()[(a_lo as usize) << 1 | a_hi as usize]
    }

    /// Energy as a function of a full basis index (bit `q` is qubit `q`).
    #[inline]
    pub fn energy_at(&self, basis: usize) -> f64 {
        let (lo, hi) = self.pair;
        self.energy(basis >> lo & 1 == 1, basis >> hi & 1 == 1)
    }

    /// Diagonal in `(a_first, a_second)` order for either orientation of the pair.
    pub fn diagonal_for(&self, first: usize, second: usize) -> [f64; 4] {
        let [e1, e2, e3, e4] = self.energies.diagonal();
        if first < second {
            [e1, e2, e3, e4]
        } else {
            [e1, e3, e2, e4]
        }
    }

    pub fn reduced(&self) -> ReducedCoupling {
        reduce_form_a(self.energies.diagonal())
    }
}

/// Form-B strength plus the one-qubit and constant terms split off a form-A
/// diagonal. `local_j` belongs to the first qubit of the energy ordering,
/// `local_k` to the second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedCoupling {
    pub e_zz: f64,
    pub local_j: f64,
    pub local_k: f64,
    pub constant: f64,
}

impl ReducedCoupling {
    /// Diagonal over `00, 01, 10, 11` rebuilt from the reduced terms.
    pub fn diagonal(&self) -> [f64; 4] {
        let c = self.constant;
        [
            c,
            c + self.local_k,
            c + self.local_j,
            c + self.local_j + self.local_k + self.e_zz,
        ]
    }
}

/// Splits `diag(E1, E2, E3, E4)` into `ΔE·n_j·n_k + local_j·n_j + local_k·n_k + constant`.
pub fn reduce_form_a(e: [f64; 4]) -> ReducedCoupling {
    let [e1, e2, e3, e4] = e;
    ReducedCoupling {
        e_zz: e1 - e2 - e3 + e4,
        local_j: e3 - e1,
        local_k: e2 - e1,
        constant: e1,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceModel {
    n_qubits: usize,
    couplings: Vec<CouplingSpec>,
}

impl DeviceModel {
    /// Builds and validates a model.
    pub fn new(n_qubits: usize, couplings: Vec<CouplingSpec>) -> Result<Self, DeviceError> {
        validate_device(DeviceModel {
            n_qubits,
            couplings,
        })
    }

    /// Chain `0 - 1 - ... - (n-1)` with identical form-B links.
    pub fn chain(n_qubits: usize, energy: f64) -> Result<Self, DeviceError> {
        let couplings = (1..n_qubits)
            .map(|q| CouplingSpec::form_b(q - 1, q, energy))
            .collect();
        Self::new(n_qubits, couplings)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn couplings(&self) -> &[CouplingSpec] {
        &self.couplings
    }

    pub fn check_qubit(&self, q: usize) -> Result<(), DeviceError> {
        if q < self.n_qubits {
            Ok(())
        } else {
            Err(DeviceError::QubitOutOfRange {
                qubit: q,
                n_qubits: self.n_qubits,
            })
        }
    }

    pub fn coupling(&self, j: usize, k: usize) -> Option<&CouplingSpec> {
        let pair = (j.min(k), j.max(k));
        self.couplings.iter().find(|c| c.pair == pair)
    }

    /// `ΔE` of the `(j, k)` coupling, zero when the pair is uncoupled.
    pub fn effective_zz(&self, j: usize, k: usize) -> Result<f64, DeviceError> {
        self.check_qubit(j)?;
        self.check_qubit(k)?;
        Ok(self.coupling(j, k).map_or(0.0, |c| c.reduced().e_zz))
    }

    /// Qubits linked to `q` by a coupling with nonzero `ΔE`, ascending.
    pub fn neighbors(&self, q: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .couplings
            .iter()
            .filter(|c| c.involves(q) && c.reduced().e_zz != 0.0)
            .map(|c| if c.pair.0 == q { c.pair.1 } else { c.pair.0 })
            .collect();
        out.sort_unstable();
        out
    }

    /// Total interaction energy of a basis state.
    pub fn basis_energy(&self, basis: usize) -> f64 {
        self.couplings.iter().map(|c| c.energy_at(basis)).sum()
    }

    pub fn from_toml_str(text: &str) -> Result<Self, DeviceError> {
        let file: DeviceFile =
            toml::from_str(text).map_err(|e| DeviceError::Parse(e.to_string()))?;
        file.into_model()
    }

    pub fn from_path(path: &Path) -> Result<Self, DeviceError> {
        let text = std::fs::read_to_string(path).map_err(|e| DeviceError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_file(&self) -> DeviceFile {
        DeviceFile {
            n_qubits: self.n_qubits,
            couplings: self
                .couplings
                .iter()
                .map(|c| {
                    let (form, energies) = match c.energies {
                        Energies::FormA(e) => ("A", e.to_vec()),
                        Energies::FormB(e) => ("B", vec![e]),
                    };
                    CouplingEntry {
                        j: c.pair.0,
                        k: c.pair.1,
                        form: form.to_string(),
                        energies,
                    }
                })
                .collect(),
        }
    }
}

/// Checks every model invariant and hands the model back untouched.
pub fn validate_device(model: DeviceModel) -> Result<DeviceModel, DeviceError> {
    if model.n_qubits == 0 {
        return Err(DeviceError::NoQubits);
    }
    let mut seen = std::collections::HashSet::new();
    for c in &model.couplings {
        let (j, k) = c.pair;
        if j == k {
            return Err(DeviceError::SelfCoupling(j));
        }
        model.check_qubit(k)?;
        if !c.energies.is_finite() {
            return Err(DeviceError::NonFiniteEnergy(j, k));
        }
        if !seen.insert(c.pair) {
            return Err(DeviceError::DuplicatePair(j, k));
        }
    }
    Ok(model)
}

/// On-disk device description (TOML).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeviceFile {
    pub n_qubits: usize,
    #[serde(default)]
    pub couplings: Vec<CouplingEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingEntry {
    pub j: usize,
    pub k: usize,
    pub form: String,
    pub energies: Vec<f64>,
}

impl DeviceFile {
    pub fn into_model(self) -> Result<DeviceModel, DeviceError> {
        let mut couplings = Vec::with_capacity(self.couplings.len());
        for entry in self.couplings {
            let CouplingEntry {
                j,
                k,
                form,
                energies,
            } = entry;
            let expected = match form.as_str() {
                "A" => 4,
                "B" => 1,
                _ => return Err(DeviceError::UnknownForm { j, k, form }),
            };
            if energies.len() != expected {
                return Err(DeviceError::EnergyCount {
                    j,
                    k,
                    form,
                    expected,
                    got: energies.len(),
                });
            }
            let e = if expected == 4 {
                Energies::FormA([energies[0], energies[1], energies[2], energies[3]])
            } else {
                Energies::FormB(energies[0])
            };
            couplings.push(CouplingSpec::new(j, k, e));
        }
        DeviceModel::new(self.n_qubits, couplings)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("device file serializes")
    }
}
