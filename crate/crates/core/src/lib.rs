//! Simulation and verification toolkit for continuous-variable error-correcting codes.
//!
//! Conventions used throughout the crate:
//!
//! - Units are scaled so that `ħ = 1`, position `x` and momentum `p` are dimensionless and
//!   `[x̂, p̂] = i/2`. Momentum eigenstates are `|p⟩ = π^{-1/2} ∫dx e^{2ixp} |x⟩`.
//! - Each mode lives on a periodic grid of `N` points with spacing `dx = sqrt(π/N)`, which makes
//!   the discretized Fourier gate exactly unitary and gives the momentum grid the same spacing.
//! - Quadrature vectors are ordered `(x_0, .., x_{M-1}, p_0, .., p_{M-1})`.
//! - Modes are 0-indexed in the API. Human-readable reports (failure strings, CSV verdicts)
//!   additionally print 1-indexed wavepacket labels where noted.
//!
//! The crate is organised bottom-up:
//!
//! - [`circuit`]: the gate set (Fourier, generalised XOR and inverses) and its JSON format.
//! - [`grid`]: dense state-vector engine on the discretized position basis.
//! - [`symplectic`]: exact phase-space representation of circuits, nullifiers and the
//!   displacement-error correctability check.
//! - [`codes`]: the three built-in codes and closed-form encoded states.
//! - [`syndrome`]: syndrome circuits, finite-precision measurement, correction and QEC cycles.
//! - [`transpiler`]: qubit-to-CV circuit substitution and sign-assignment enumeration.
//! - [`experiment`]: config-driven Monte-Carlo sweeps with deterministic CSV output.

pub mod circuit;
pub mod codes;
mod error;
pub mod experiment;
pub mod grid;
pub mod symplectic;
pub mod syndrome;
pub mod transpiler;

pub use circuit::{Circuit, Gate};
pub use codes::CodeSpec;
pub use error::{Error, Result};
pub use grid::{GridSpec, MultiModeState};
pub use symplectic::{CorrectabilityReport, DisplacementError, Nullifier, SymplecticRep};
