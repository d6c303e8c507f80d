//! Two-phase flow in heterogeneous porous media with a multiscale Robin
//! coupled pressure solver and reuse of its basis functions across time steps.

pub mod cli;
pub mod elliptic;
pub mod error;
pub mod fields;
pub mod grid;
pub mod linalg;
pub mod metrics;
pub mod mpm;
pub mod mrcm;
pub mod simulation;
pub mod transport;

pub use error::{Error, Result};
