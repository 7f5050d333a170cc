//! Lorentz meridian surfaces in pseudo-Euclidean 4-space with neutral metric.

pub mod algebra;
pub mod cli;
pub mod curves;
pub mod error;
pub mod harness;
pub mod interp;
pub mod ode;
pub mod oracle;
pub mod profiles;
pub mod surface;

pub use error::{GeomError, Result};
