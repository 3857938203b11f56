//! Minor embedding of Ising and QUBO problems onto hardware graphs, with
//! chain-strength parameter setting and an exhaustive verification oracle.

pub mod cli;
pub mod embedding;
pub mod error;
pub mod model;
pub mod params;
pub mod solve;
pub mod transform;
pub mod wmis;

pub use error::{Error, Result};
