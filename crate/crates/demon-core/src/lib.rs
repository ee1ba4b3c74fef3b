//! Stroboscopic model of an autonomous dissipative feedback loop on a qutrit.
//!
//! One feedback round is the superoperator 𝓑 = 𝓐·𝑼: a coherent drive pulse
//! 𝑼 = conj(U)⊗U followed by the measurement–dissipation channel 𝓐 that a
//! resonant readout-and-reset stage implements with probability p_a per round.
//! Everything is represented in the column-stacking convention on a 3-level
//! system, so states are 9-vectors and channels are dense 9×9 matrices.
//!
//! On top of the map the crate computes two-point-measurement energy
//! statistics P_{j|i}, their exponential moments G(η) = ⟨e^{−η·ΔE}⟩, the
//! backward-process efficacy γ that closes the fluctuation relation
//! G(β) = γ, and the energy-extraction bound β⟨ΔE⟩ ≥ max(−ln γ, −⟨S⟩),
//! with −⟨S⟩ obtained from trajectory entropies.
//!
//! The crate is `no_std` (with `alloc`); the companion binary crate carries
//! all IO.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

#[cfg(feature = "std")]
extern crate std;

pub mod demon;
mod error;
pub mod fluctuation;
pub mod linops;
pub mod qutrit;
pub mod statistics;
pub mod trajectories;

pub use error::Error;
