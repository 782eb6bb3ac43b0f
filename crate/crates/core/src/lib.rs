//! Semi-relaxed Gromov-Wasserstein solvers, graph dictionary learning and
//! graph tasks built on them.

pub mod bench;
pub mod cli;
pub mod dictionary;
pub mod error;
pub mod graph;
pub mod gw;
pub mod io;
pub mod kmeans;
pub mod oracle;
pub mod solvers;
pub mod tasks;

pub use error::{Error, Result};
