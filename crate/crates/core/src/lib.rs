//! Open-system Mach-Zehnder interferometer: exact dephasing dynamics of a
//! photon's polarization coupled to its frequency on the arms and output
//! paths of the interferometer, information backflow, CP-divisibility of the
//! port-conditioned dynamics and estimation of in-interferometer path
//! differences from output-side memory effects.

pub mod analysis;
pub mod channels;
pub mod cli;
pub mod config;
pub mod error;
pub mod interferometer;
pub mod maps;
pub mod model;
pub mod oracle;

pub use error::{Error, Result};
