//! Local gate compilation of the quadratic quantum Fourier transform (QQFT)
//! and dense single-particle simulation of Hamiltonian engineering built on
//! it.
//!
//! * [`circuit`] compiles the one-dimensional QQFT into nearest-neighbour
//!   gates: an analytic construction for `N = 2^n` and a Givens fallback for
//!   any other `N`.
//! * [`engine`] evaluates gate sequences as dense unitaries, optionally with
//!   multiplicative Gaussian noise on each gate's generator.
//! * [`protocol`] assembles `U = V e^{-i H_D T} V^dag` from momentum-space
//!   Bloch blocks and reads band energies back from its eigenphases.
//! * [`haldane`] and [`poincare`] are the two experiments: flat Chern bands
//!   with Bott/Chern invariants, and a 1+1D lattice with discrete Lorentz
//!   symmetry.

pub mod circuit;
pub mod engine;
pub mod error;
pub mod haldane;
pub mod linalg;
pub mod poincare;
pub mod protocol;
pub mod stats;

#[cfg(test)]
mod invariants;

pub use circuit::{
    build_generic_qqft, build_radix2_qqft, depth_formula, reorder_permutation, sequence_to_unitary,
    BitDecomposition, CircuitSequence, GateKind, GateSpec, Route,
};
pub use engine::{
    apply_noisy_inverse, apply_noisy_sequence, diagonal_momentum_evolution, gate_to_generator, tensor_product,
    Channel, HermitianGenerator, NoiseGranularity, NoiseModel, UnitaryMatrix,
};
pub use error::{Error, Result};
pub use haldane::{HaldaneParams, PhaseDiagram, SweepRow};
pub use linalg::{c64, CMat};
pub use poincare::{Dispersion, GreensRoute, LorentzLattice, ProbabilityTensor, SymmetryRow};
pub use protocol::{build_protocol_unitary, estimate_runtime, extract_spectrum, MomentumModel, SpectrumResult};

/// Crate version, embedded in experiment outputs.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
