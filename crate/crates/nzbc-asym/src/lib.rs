//! Long-time asymptotics of the focusing NLS equation with a symmetric nonzero
//! background and one conjugate pair of discrete eigenvalues.

pub mod asymptotics;
pub mod classify;
pub mod cli;
pub mod config;
pub mod error;
pub mod modulation;
pub mod oracle;
pub mod phase;
pub mod quad;
pub mod selfcheck;
pub mod special;
pub mod spectral;
pub mod util;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
