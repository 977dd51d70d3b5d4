//! A desk-scale laboratory for difficulty-aware minibatch scheduling.
//!
//! The core idea under study: measure how hard each training sample currently
//! is for the model — from its evaluation loss and from the entropy of its
//! predictions under multiplicative feature-map noise — and then build each
//! epoch's minibatches so that per-batch difficulty totals are as even as
//! possible. Pairing the hardest samples with the easiest ("mixed-order"
//! pairing) minimizes the variance of batch difficulty sums exactly for batch
//! size two, and stratified snake dealing generalizes it to larger batches.
//!
//! The crate ships the pieces needed to exercise that mechanism end to end:
//!
//! - [`micronet`]: a tiny fully connected classifier with analytic gradients,
//!   a designated feature-map disturbance site, and plain SGD.
//! - [`assessor`]: per-sample loss/uncertainty measurement, rank-sum
//!   difficulty scores, and the four-quadrant sample categorization.
//! - [`scheduler`]: epoch-plan builders (mixed-order, anti-mixed-order,
//!   random, self-paced reweighting, hard-example oversampling), minibatch
//!   typing, plan variance, and an exhaustive pairing oracle.
//! - [`data`]: synthetic Gaussian-blob datasets with long-tailed class counts
//!   or symmetric label noise, plus CSV ingestion.
//! - [`harness`]: a seeded experiment driver with pivot-epoch switching,
//!   sampler comparison, update-efficacy probes, and CSV emission.
//!
//! Everything is `f64` and deterministic per seed: identical seeds reproduce
//! identical models, datasets, plans, and output files.

pub mod assessor;
pub mod data;
pub mod error;
pub mod harness;
pub mod micronet;
pub mod scheduler;
pub mod seed;

pub use error::{Error, Result};
