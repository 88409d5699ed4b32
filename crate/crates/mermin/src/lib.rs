//! Analytical upper bounds for Mermin and MABK operator expectation values.
//!
//! For an n-qubit density matrix the library extracts the full Pauli
//! correlation tensor, reshapes its pure-correlation block into a small
//! rectangular matrix, and bounds the maximal operator expectation value by
//! `2*sqrt(2)` times the largest singular value of that matrix. A seeded
//! see-saw optimizer over measurement directions provides an independent
//! lower estimate, and the two together certify whether the bound is tight
//! for a given state.
//!
//! Modules:
//! * [`qstate`] — density matrices, Pauli correlation tensors, and the
//!   built-in state families (GHZ-symmetric, noisy GHZ, noisy W, ...).
//! * [`bounds`] — Mermin/MABK operator construction, tensor reshaping,
//!   singular spectra, the analytic bound, and tightness certificates.
//! * [`optimizer`] — the see-saw oracle, deterministic-strategy enumeration
//!   of classical bounds, and local grid refinement.
//! * [`entanglement`] — genuine multipartite concurrence for three-qubit
//!   X-states and the concurrence/bound relations.
//! * [`cli`] — the `mermin` command-line front end.

pub mod bounds;
pub mod cli;
pub mod entanglement;
pub mod linalg;
pub mod optimizer;
pub mod qstate;
