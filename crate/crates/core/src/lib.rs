//! Mutual-information feature selection for image datasets, posed as a QUBO.
//!
//! The pipeline runs in stages, one module each:
//!
//! * [`ingest`]: IDX loading, synthetic datasets, quantile binning.
//! * [`mi`]: plug-in importance (feature/label MI) and redundancy (feature/feature MI).
//! * [`qubo`]: model assembly with a k-of-n constraint, energies, Ising form, text format.
//! * [`sparsify`]: 2×2 max-importance subsampling, coupling thresholding, degree stats.
//! * [`solve`]: exhaustive, simulated annealing, tabu, partitioned search, penalty tuning.
//! * [`recon`]: transposed-convolution decoder, ridge baseline, baseline masks.
//! * [`harness`]: experiment configuration, the end-to-end pipeline and reports.

pub mod error;
pub mod harness;
pub mod ingest;
pub mod mi;
pub mod qubo;
pub mod recon;
pub mod solve;
pub mod sparsify;

mod rng;

pub use error::{Error, Result};
