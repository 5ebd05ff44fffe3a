//! Counter-based random streams.
//!
//! Every pulse train draws from its own ChaCha stream addressed by
//! `(master_seed, trial, frame, qubit)`, so a sample never depends on how
//! many other trains were generated before it or on which thread.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Position of a decoupled frame inside an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct FrameSeed {
    pub trial: u64,
    /// Index of the frame within one compiled program.
    pub frame: u32,
}

impl FrameSeed {
    pub fn trial(trial: u64) -> Self {
        FrameSeed { trial, frame: 0 }
    }

    pub fn with_frame(self, frame: u32) -> Self {
        FrameSeed { frame, ..self }
    }
}

pub fn stream(master_seed: u64, seed: FrameSeed, qubit: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&seed.trial.to_le_bytes());
    key[16..20].copy_from_slice(&seed.frame.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(qubit as u64);
    rng
}
