//! Floquet fiber spectra, symbol calculus, gauge series and resonance
//! geometry for periodic pseudo-differential operators (−Δ)^m + Op(b).

pub mod error;
pub mod geom;
pub mod lattice;
pub mod linalg;
pub mod symbol;

pub use error::{Error, Result};
pub use geom::{IVec, Vecd};
pub use lattice::Lattice;
pub mod params;
pub mod resonance;
pub mod fiber;
pub mod gauge;
pub mod bandfn;
pub mod spectrum;
pub mod measure;
pub mod config;
pub mod report;
