//! Stable low-order parametric rational models from frequency-response data.

pub mod error;
pub mod linalg;
pub mod model;
pub mod vecfit;
pub mod coupled;
pub mod varpro;
pub mod compress;
pub mod multiparam;
pub mod bench;
pub mod metrics;
pub mod io;
pub mod cli;

pub use error::{Error, Result};
pub use linalg::C64;
pub use model::{
    BarycentricModel, BasisKind, CompressedParametricModel, FrequencyResponseDataset, ParametricBasis,
    ParametricModel, PoleResidueModel, SimoRealization,
};
