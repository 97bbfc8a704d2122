pub mod cli;
pub mod config;
pub mod error;
pub mod fields;
pub mod medium;
pub mod modes;
pub mod output;
pub mod polynomial;
pub mod scattering;
pub mod spectra;
pub mod units;

pub use error::{Result, RifError};
