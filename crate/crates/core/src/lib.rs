pub mod analysis;
pub mod banded;
pub mod collocation;
pub mod benchmarks;
pub mod bolza;
pub mod error;
pub mod fem;
pub mod mesh;
pub mod problem;
pub mod quadrature;
pub mod run;
pub mod scalar;
pub mod solver;
pub mod transcription;

pub use error::{Error, Result};
