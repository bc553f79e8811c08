pub mod cli;
pub mod entanglement;
pub mod error;
pub mod hamiltonian;
pub mod network;
pub mod oracle;
pub mod propagator;
pub mod spectral;
pub mod spin;

pub use error::{DsapError, Result};
