//! Computational geometry of free groups: word and Green metrics,
//! translation-length spectra, growth rates, Manhattan curves, mean
//! distortion, dilations and Bowen averages of rational currents.

pub mod currents;
pub mod error;
pub mod group;
pub mod moduli;
pub mod potentials;
pub mod randwalk;
pub mod spectrum;
pub mod value;

pub use error::{Error, Result};
