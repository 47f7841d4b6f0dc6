//! Multiscale low-frequency memory (MLFM) for small convolutional networks.
//!
//! The crate is organised bottom-up:
//!
//! * [`tensor`] holds a dense tensor type, a reverse-mode tape, the layer
//!   primitives used by the backbones, SGD and the checkpoint container.
//! * [`wavelet`] provides the filter-bank registry and the periodized 2-D DWT.
//! * [`lfmu`] implements the low-frequency memory unit.
//! * [`graph`] declares the backbones, attaches memory units and counts
//!   parameters and MACs.
//! * [`harness`] has synthetic datasets, training, metrics, SSIM and the
//!   ablation drivers.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below pin the two supported precisions.

pub mod error;
pub mod graph;
pub mod harness;
pub mod lfmu;
pub mod scalar;
pub mod tensor;
pub mod wavelet;

pub use error::{Error, Result};
pub use scalar::{DType, Scalar};
pub use tensor::{Gradients, Tape, Tensor};

pub type Tensor32 = Tensor<f32>;
pub type Tensor64 = Tensor<f64>;
pub type Tape32 = Tape<f32>;
pub type Tape64 = Tape<f64>;
pub type Graph32 = graph::Graph<f32>;
pub type Graph64 = graph::Graph<f64>;
