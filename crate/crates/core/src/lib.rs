//! Budgeted weak supervision.
//!
//! Pick a small, representative (facility location) or diverse (log
//! determinant) subset of an unlabeled feature pool, let an expert label it,
//! turn each labeled exemplar into a similarity-based labeling function, and
//! aggregate the labeling functions' votes with a generative label model to
//! label the rest of the pool.
//!
//! Modules, bottom-up:
//!
//! * [`data`]: feature, label and prediction files;
//! * [`similarity`]: Pearson/cosine similarity matrices;
//! * [`select`]: submodular objectives and greedy selection;
//! * [`lf`]: exemplar labeling functions;
//! * [`cage`]: the label model, its likelihood, gradient and training;
//! * [`pipeline`]: orchestration, evaluation and the synthetic harness.

pub mod cage;
pub mod config;
pub mod data;
pub mod error;
pub mod lf;
pub mod pipeline;
pub mod select;
pub mod similarity;

pub use error::{Error, Result};
