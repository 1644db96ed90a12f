//! Noise channel configuration.
//!
//! Three single-qubit channels, applied after every gate on each qubit the
//! gate touched (both qubits of a CNOT), in the fixed order bit-flip,
//! phase-flip, depolarizing:
//!
//! ```text
//! bit-flip:     ρ → (1−p)ρ + p XρX
//! phase-flip:   ρ → (1−p)ρ + p ZρZ
//! depolarizing: ρ → (1−p)ρ + p (I/2 ⊗ Tr_q ρ)
//! ```

use super::QuantumError;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    BitFlip,
    PhaseFlip,
    Depolarizing,
}

/// Per-gate channel probabilities. All zero means noiseless.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default)]
    pub bit_flip: f64,
    #[serde(default)]
    pub phase_flip: f64,
    #[serde(default)]
    pub depolarizing: f64,
}

impl NoiseSpec {
    pub fn off() -> Self {
        Self::default()
    }

    /// Single-channel constructor.
    pub fn only(kind: ChannelKind, p: f64) -> Self {
        let mut spec = Self::default();
        match kind {
            ChannelKind::BitFlip => spec.bit_flip = p,
            ChannelKind::PhaseFlip => spec.phase_flip = p,
            ChannelKind::Depolarizing => spec.depolarizing = p,
        }
        spec
    }

    pub fn is_off(&self) -> bool {
        self.bit_flip == 0.0 && self.phase_flip == 0.0 && self.depolarizing == 0.0
    }

    pub fn validate(&self) -> Result<(), QuantumError> {
        for p in [self.bit_flip, self.phase_flip, self.depolarizing] {
            if !(0.0..=1.0).contains(&p) {
                return Err(QuantumError::BadProbability { p });
            }
        }
        Ok(())
    }

    /// Channels to apply, in order, with their probabilities; zeros skipped.
    pub fn active(&self) -> impl Iterator<Item = (ChannelKind, f64)> {
        [
            (ChannelKind::BitFlip, self.bit_flip),
            (ChannelKind::PhaseFlip, self.phase_flip),
            (ChannelKind::Depolarizing, self.depolarizing),
        ]
        .into_iter()
        .filter(|&(_, p)| p > 0.0)
    }
}
