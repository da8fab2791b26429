//! Basis-path machinery for fully-connected ReLU networks.
//!
//! ReLU networks are positively scale invariant: rescaling a hidden node's
//! incoming weights by c > 0 and its outgoing weights by 1/c leaves the
//! network function unchanged. Path values (products of weights along
//! input-to-output paths) are the natural invariant coordinates, and a small
//! group of basis paths determines all of them. This crate provides:
//!
//! - [`network`]: the ReLU MLP core (forward, path-form forward,
//!   backpropagation, checkpoints);
//! - [`pathspace`]: skeleton-weight selection, basis-path enumeration, and
//!   decomposition of arbitrary paths over the basis;
//! - [`measures`]: the basis-path norm, path norm, weight/spectral
//!   baselines, the capacity measure Phi and its generalization bound;
//! - [`regularizer`]: basis-path regularization and its per-weight
//!   gradients;
//! - [`trainer`]: seeded SGD with regularization, label corruption,
//!   evaluation;
//! - [`data`]: CSV/IDX ingestion and synthetic tasks;
//! - [`sweep`]: corruption/width/depth experiment sweeps with CSV output.
//!
//! The `parallel` feature (default on) dispatches sweep runs to a rayon
//! pool; disabling it yields a fully sequential build with identical
//! results.

pub mod data;
pub mod error;
pub mod measures;
pub mod network;
pub mod pathspace;
pub mod regularizer;
pub mod sweep;
pub mod testutil;
pub mod trainer;

pub use error::{Error, Result};
pub use network::{Network, NetworkSpec};
