//! Exact simulation of the probe-qubit protocol that measures the sign change
//! (geometric phase π) of real electronic eigenstates transported around a
//! conical intersection, together with independent geometric-phase oracles and
//! the first-order vibronic secular problem.
//!
//! - [`numkit`]: dense complex matrices and Hermitian eigensolvers
//! - [`model`]: the two-state model, its evolution operator and vibronic systems
//! - [`circuit`]: protocol circuits, transpilation and OpenQASM 2.0
//! - [`engine`]: statevector simulation, probe readout and shot sampling
//! - [`berry`]: connection, gauge transforms and the discrete loop phase

pub mod berry;
pub mod circuit;
pub mod engine;
pub mod error;
pub mod model;
pub mod numkit;

pub use circuit::{Circuit, Gate, GateKind, MeasureBasis};
pub use engine::{
    DensityMatrix, PhaseRecord, ProtocolConfig, ProtocolOutcome, Readout, ShotCount, ShotResult, StateVector,
};
pub use error::{Error, Result};
pub use model::{ModelParams, VibronicSystem};
pub use numkit::{ComplexMatrix, ComplexVector, EigenDecomposition, C64};
