//! Byzantine multiple-access classical-quantum channels.
//!
//! Entropic quantities, max-min rate regions under a single adversarial
//! sender, symmetrizability checks, and a Monte Carlo simulator for
//! sequential POVM decoding.

pub mod adversarial;
pub mod capacity;
pub mod cq_channel;
pub mod entropic;
pub mod error;
pub mod qmatrix;
pub mod simulator;
pub mod states_povm;

pub use cq_channel::{AvcView, CqChannel, CqMacChannel, Frozen, InputDistribution};
pub use error::{Error, Result};
pub use states_povm::{DensityOperator, Outcome, Povm, QuantumChannel};
