//! Statevector laboratory for concentration of measure in variational quantum
//! circuits.
//!
//! The crate simulates layered circuits `W(θ) U(x) |0…0⟩` exactly, samples
//! Haar-random states and unitaries, and measures how outputs and gradients
//! concentrate as the qubit count grows. Bounded-rank tensor-train maps supply
//! the two tensor-structured model families (a feature encoder and a parameter
//! hypernetwork), and the design diagnostics quantify how far a circuit
//! ensemble sits from a unitary 2-design.
//!
//! Conventions used throughout:
//!
//! * qubit 0 is the most significant bit of an amplitude index;
//! * rotations are `R_P(θ) = exp(-i θ P / 2)` for a Pauli axis `P`;
//! * all randomness flows from a [`SeedSpec`](ensemble::SeedSpec), so every
//!   experiment is reproducible bit for bit.
//!
//! The runnable programs under `examples/` walk through each capability; the
//! `vqc-lab` binary drives the full experiment suite.

pub mod circuit;
pub mod design;
pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod gradient;
pub mod linalg;
pub mod observable;
pub mod stats;
pub mod tensor;

pub use error::{Error, Result};
pub use linalg::{Bipartition, ComplexMatrix, StateVector, C64};
pub use observable::Observable;
