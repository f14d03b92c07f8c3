//! Calibration toolkit for predicting scalar soil properties (e.g. organic
//! carbon content) from diffuse reflectance spectra.
//!
//! The pipeline: spike a laboratory calibration set with synthetic field-like
//! spectra (SMOTE for regression), pretreat all spectra (detector offset
//! correction, trimming, absorbance, SSA smoothing, max-normalization, first
//! derivative), fit PLS1 models over a component range, pick the component
//! count by AICc on leave-one-out cross-validation, and repeat the whole
//! thing under RNG variation to report median / quartile statistics.

pub mod benchmark;
pub mod config;
pub mod error;
pub mod montecarlo;
pub mod pca;
pub mod pls;
pub mod preprocess;
pub mod report;
pub mod selection;
pub mod smoter;
pub mod spectra;
pub mod ssa;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
