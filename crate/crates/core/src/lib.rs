//! Multiresolution match kernels (MMK) for video classification.
//!
//! A video is a set of local descriptors, each tagged with its normalized
//! `(x, y, t)` position. The video cuboid is split into a spatio-temporal
//! pyramid of voxels, and every voxel is summarized by the mean of an explicit
//! kernel feature map `phi(x) = G k_Z(x)`. Concatenating the (weighted) voxel
//! means yields a vector whose dot products reproduce the multiresolution
//! match kernel exactly, so a linear classifier can be trained on it.
//!
//! Modules:
//!
//! - [`pyramid`]: locations, voxel indexing and pyramid partitioning.
//! - [`descriptors`]: depth-frame ingestion, interest points, HOG and LBP.
//! - [`codebook`]: k-means dictionary and nearest-center quantization.
//! - [`matchkernel`]: RBF basis, whitening, feature maps, BoF and exact kernels.
//! - [`classify`]: one-vs-rest linear SVM and subject-wise evaluation.
//! - [`formats`]: binary and text persistence.
//! - [`pipeline`]: fold-aware feature extraction and evaluation.
//! - [`synth`]: synthetic order-sensitive gesture generator.

pub mod classify;
pub mod codebook;
pub mod descriptors;
mod error;
pub mod formats;
pub mod matchkernel;
pub mod pipeline;
pub mod pyramid;
pub mod synth;

pub use classify::{EvalReport, LinearModel, SvmParams};
pub use codebook::{Codebook, KMeansParams};
pub use error::{MmkError, Result};
pub use matchkernel::{BofHistogram, KernelBasis, VideoFeatureMap};
pub use pyramid::{
    LocatedDescriptor, Location, PyramidConfig, VideoDescriptorSet, VideoDims, VideoMeta,
};
