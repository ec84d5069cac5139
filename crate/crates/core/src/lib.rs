//! Digital quantum dynamics for exciton energy transfer.
//!
//! The crate covers the full desk-scale pipeline: Pauli-encoded Frenkel and
//! multi-exciton Hamiltonians, an exact reference propagator, McLachlan
//! variational time evolution with analytic or circuit-sampled gradients,
//! first-order Trotterization, depolarizing-noise simulation, and the
//! VQA/Trotter hybrid error-mitigation scheme.
//!
//! # Conventions
//!
//! One qubit-ordering convention is used everywhere: **qubit 1 is the leftmost
//! character** of a Pauli string or measurement bitstring and carries the
//! **most significant bit** of a basis index. A basis state |x1 x2 ... xL>
//! therefore has index m = x1*2^(L-1) + ... + xL*2^0, and excitonic site m
//! (0-based) maps onto basis index m. Sites and qubits are 0-based in code and
//! displayed 1-based.
//!
//! Energies are in eV, times in fs, with hbar = [`units::HBAR_EV_FS`];
//! dimensionless benchmarks pass `hbar = 1`.

pub mod analysis;
pub mod error;
pub mod exact;
pub mod hamiltonians;
pub mod linalg;
pub mod mitigation;
pub mod pauli;
pub mod sim;
pub mod trotter;
pub mod units;
pub mod vqa;

pub use analysis::PopulationSeries;
pub use error::{Error, Result};
pub use hamiltonians::{FrenkelSnapshot, HamiltonianSource, HamiltonianTrajectory};
pub use pauli::{PauliLetter, PauliString, PauliSum};
pub use sim::{Circuit, DensityMatrix, Gate, NoiseMode, NoiseModel, StateVector};
pub use vqa::{Ansatz, ParameterVector, VqaBackend, VqaConfig};
