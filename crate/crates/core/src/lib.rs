//! Spectral detection of small anomalous subgraphs embedded in large random
//! graphs, built around the residuals matrix `B = A − E[A]`.
//!
//! Pipeline: sample or parse a graph ([`graph`], [`generators`]), build a
//! matrix-free residuals operator and its top eigenpairs ([`residuals`]),
//! compute detection statistics ([`detection`], [`spca`]) and aggregate
//! Monte Carlo trials into ROC metrics ([`harness`], [`roc`]). The
//! [`oracle`] module holds dense, exhaustive reference computations.

pub mod detection;
pub mod error;
pub mod generators;
pub mod graph;
pub mod harness;
pub mod lanczos;
pub mod linalg;
pub mod oracle;
pub mod par;
pub mod residuals;
pub mod rng;
pub mod roc;
pub mod spca;
pub mod verify;

pub use error::{Error, Result};
pub use graph::{Graph, Placement, VertexSubset};
pub use par::Execution;
pub use rng::RngSeed;
