//! Simulation of heralded single-rail ↔ dual-rail teleportation and
//! entanglement swapping, with homodyne sampling and maximum-likelihood
//! quantum-state tomography.

pub mod config;
pub mod error;
pub mod fock;
pub mod homodyne;
pub mod io;
pub mod optics;
pub mod pipeline;
pub mod protocol;
pub mod qubit;
pub mod rates;
pub mod special;
pub mod tomography;

pub use config::Config;
pub use error::{Error, Result};
pub use fock::{DensityMatrix, ModeRegister, Occupation, PureState, QuantumChannel};
pub use optics::Order;
pub use qubit::{Polarisation, QubitSpec};
