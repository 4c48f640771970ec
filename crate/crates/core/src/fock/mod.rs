//! Truncated multimode Fock space: registers, sparse pure states, dense
//! density operators and Kraus channels.

mod channel;
mod density;
mod register;
mod state;

pub use channel::{loss_channel, loss_weight, QuantumChannel, TRACE_PRESERVATION_TOL};
pub use density::{
    annihilation_operator, embed_operator, max_modulus, number_operator, DensityMatrix, EIGENVALUE_FLOOR,
    HERMITIAN_TOL, TRACE_TOL,
};
pub use register::{ModeRegister, Occupation, MAX_CUTOFF};
pub use state::{PureState, NULL_PROBABILITY, PRUNE_THRESHOLD};

pub(crate) use density::hermitian_part;

/// Largest dense dimension we are willing to materialise.
pub const DENSE_LIMIT: usize = 4096;
