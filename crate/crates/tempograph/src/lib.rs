//! Recurrent graph convolutional networks on discrete-time spatiotemporal
//! graph signals.
//!
//! The crate is organized around a small number of building blocks:
//!
//! - [`autodiff`] — dense 64-bit tensors with a reverse-mode tape, enough to
//!   make every model here end-to-end trainable on CPU.
//! - [`graph`] — sparse graphs, the normalized/spectral/random-walk operators
//!   consumed by the convolutions, and a Watts-Strogatz generator.
//! - [`signal`] — the three spatiotemporal signal containers (dynamic graph +
//!   temporal signal, dynamic graph + static signal, static graph + temporal
//!   signal) with redundancy-free storage and temporal train/test splitting.
//! - [`nn`] — ChebConv, diffusion convolution, the GConvGRU / GConvLSTM /
//!   DCRNN recurrent cells and the reference `RecurrentGcn` model.
//! - [`train`] — Adam plus the cumulative and incremental backpropagation
//!   regimes and test-set evaluation.
//! - [`data`] — the JSON dataset schema, loader, HTTP fetcher with cache and
//!   synthetic dataset generators.
//! - [`cli`] — the run configuration and command implementations behind the
//!   `tempograph` binary.
//!
//! See the `examples/` directory for one runnable example per capability:
//! `cargo run --release --example cumulative_training`, etc.

pub mod autodiff;
pub mod cli;
pub mod data;
pub mod graph;
pub mod nn;
pub mod signal;
pub mod train;

mod error;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Library version embedded into every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
