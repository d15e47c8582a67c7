//! Quantum-walk input scheme for second-quantized many-boson Hamiltonians.
//!
//! The crate builds the light-front Hamiltonian of the two-dimensional φ⁴
//! theory in discretized light-cone quantization, rewrites it with squeezed
//! boson operators, and turns every monomial into controlled circuit modules
//! that block encode `H / (D·Ξ)` through a pair of quantum walk states.
//! Chebyshev polynomials of the block-encoded operator feed a
//! symmetry-adapted Krylov subspace diagonalization whose projected
//! generalized eigenvalue problem is solved classically.
//!
//! Module map:
//!
//! - [`fock`]: fixed-K Fock bases, parity sectors, qubit register layout.
//! - [`hamiltonian`]: squeezed monomials, dense oracle matrix, spectra,
//!   critical-coupling bisection.
//! - [`circuit`]: gate IR with multi-controlled gates, ripple adders.
//! - [`blockenc`]: per-mode circuit modules, walk unitary, Chebyshev circuits.
//! - [`simulator`]: dense and sparse statevector engines, Hadamard test.
//! - [`qksd`]: Krylov matrices, canonical orthogonalization, GEVP.

pub mod blockenc;
pub mod circuit;
mod error;
pub mod fock;
pub mod hamiltonian;
pub mod qksd;
pub mod simulator;

pub use error::{Error, Result};
