//! Simulation toolkit for coined discrete-time and continuous-time quantum
//! walks on small graphs: perfect state transfer, periodicity, high-amplitude
//! transfer, decoherence and systematic variant search.

pub mod canon;
pub mod coin;
pub mod ctqw;
pub mod decoherence;
pub mod dtqw;
pub mod error;
pub mod explorer;
pub mod graph;
pub mod linalg;

pub use error::{Error, Result};
