//! Spectral efficiency of backward-retrieval atomic frequency comb (AFC)
//! photon-echo quantum memory burned into a Gaussian inhomogeneous line.
//!
//! Frequencies are detunings in units of the inhomogeneous FWHM `Δ_in`,
//! times are in units of `1/Δ_in`.

pub mod atlas;
pub mod bandwidth;
pub mod cli;
pub mod echosim;
pub mod error;
pub mod export;
pub mod grid;
pub mod medium;
pub mod response;
pub mod specfun;

pub use error::{Error, Result};
pub use grid::FrequencyGrid;
pub use medium::CombDesign;

/// Version stamp written into every artifact.
pub const VERSION: &str = concat!("afc-core ", env!("CARGO_PKG_VERSION"));
