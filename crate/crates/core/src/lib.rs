//! Numerical laboratory for a weighted model space with two ends of different
//! large-scale dimension, glued through a compact center.
//!
//! The crate builds discrete models of the space, assembles weighted-graph
//! Laplacians (optionally with a potential), computes heat and Poisson kernels
//! both spectrally and through subordination quadrature, fits two-sided kernel
//! bounds with explicit constants, and provides the real-analysis toolkit
//! (maximal functions, dyadic decompositions, Whitney covers, weak-type
//! quasinorms) used to study operators built from the semigroup.

pub mod bounds;
pub mod calculus;
pub mod error;
pub mod geometry;
pub mod operator;
pub mod semigroup;
pub mod spectral;

pub use error::{Error, Result};
pub use geometry::{ManifoldModel, MeshMode, ModelParams, Region};
pub use operator::OperatorHandle;
pub use spectral::SpectralData;
