//! Convolutional neural networks on graph signals, built from node-varying
//! graph filters instead of pooling.
//!
//! The crate provides:
//!
//! - [`graph`]: weighted undirected graphs, random connected graphs, shift
//!   operators (adjacency / Laplacian / normalized Laplacian), and a
//!   symmetric eigensolver for spectral verification.
//! - [`filters`]: node-invariant, node-varying, and hybrid (node-grouped)
//!   graph filters, the degree-based group construction, and the graph
//!   Fourier transform.
//! - [`model`]: layered models — graph-filter and fully-connected layers
//!   with ReLU, a linear readout — with hand-derived backpropagation,
//!   parameter counting, and a text model format.
//! - [`training`]: softmax cross-entropy, ADAM, the mini-batch training
//!   loop, and evaluation metrics.
//! - [`dataset`]: synthetic source-localization data and a labeled
//!   graph-signal file format.
//! - [`arch`]: the compact architecture grammar (`GL[T,B]`, `GC[T,F]`,
//!   `FC[k]`) used on the command line.
//! - [`experiment`]: seeded multi-realization experiment runs and sweeps
//!   with CSV output.
//!
//! Everything is deterministic given the seeds: one master seed fixes graph
//! topology, data, initialization, grouping, shuffling, and dropout.

pub mod arch;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod filters;
pub mod graph;
pub mod model;
pub mod seeds;
pub mod training;

pub use error::{Error, Result};
