//! Finitely supported random walks on F_r.

mod green;
mod measure;
mod walk;

pub use green::{green_function, green_metric, GreenConfig, GreenEstimate, GreenPotential, GreenTable};
pub use measure::{convolve, thickened_sphere, ConvolveConfig, FiniteMeasure, KahanSum};
pub use walk::{drift, entropy_over_drift, entropy_upper, sample_increments, sample_walk, DriftEstimate, RatioEstimate};
