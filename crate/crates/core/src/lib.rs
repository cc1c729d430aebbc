//! Unsupervised domain adaptation by joint statistical and geometrical
//! alignment.
//!
//! A labeled source dataset and an unlabeled target dataset are mapped
//! into a shared low-dimensional embedding through two coupled linear (or
//! kernelized) projections. The projections maximize target variance and
//! source class separation while shrinking the marginal and
//! class-conditional divergence between domains and the gap between the
//! projections themselves; the optimum is the leading eigenspace of a
//! symmetric-definite pencil. Classification in the embedding is plain
//! 1-nearest-neighbor, with target pseudo labels refined over a few
//! passes.
//!
//! Module map:
//! - [`data`]: datasets, file formats, preprocessing, synthetic generator
//! - [`stats`]: scatter and divergence matrix builders (primal and kernel)
//! - [`geig`]: symmetric-definite generalized eigensolver
//! - [`kernel`]: kernel functions and Gram plumbing
//! - [`jgsa`]: objective assembly, the refinement loop, model application
//! - [`classify`]: 1-NN classification and embedding metrics

pub mod classify;
pub mod data;
pub mod error;
pub mod geig;
pub mod jgsa;
pub mod kernel;
pub mod stats;

pub use classify::{LabeledPrediction, NearestNeighbor, PseudoLabeler};
pub use data::{Dataset, FileFormat, SyntheticSpec};
pub use error::{Error, Result};
pub use geig::EigResult;
pub use jgsa::{Diagnostics, Domain, JgsaModel, JgsaParams, ProjectionPair, Regularizer};
pub use kernel::{Bandwidth, KernelSpec};
pub use stats::{MmdBlocks, ScatterSet};

/// Library version, echoed into experiment reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
