//! Sparse fused regression over high-cardinality categorical predictors.
//!
//! The estimator fits a linear (or logistic) model whose categorical level
//! coefficients are penalized both for being nonzero and for taking many
//! distinct values per predictor, so levels with similar effects collapse
//! into shared clusters. The crate provides:
//!
//! * an exact dynamic-programming solver for the univariate weighted
//!   segment problem ([`dp`]),
//! * a block coordinate descent solver for the full problem ([`bcd`]),
//! * exact machinery: an enumerative global solver, a row-generation loop
//!   with optimality certificates, and an LP model exporter ([`mip`]),
//! * a synthetic data generator, evaluation metrics, and a tuning /
//!   replication harness ([`datagen`], [`metrics`], [`harness`]),
//! * CSV / schema / coefficient file formats ([`io`]).

pub mod bcd;
pub mod clustering;
pub mod coefficients;
pub mod dataset;
pub mod datagen;
pub mod dp;
pub mod error;
pub mod harness;
pub mod io;
pub mod metrics;
pub mod mip;
pub mod objective;
pub(crate) mod parallel;
pub mod pwq;
pub mod schema;

pub(crate) mod linalg;

pub use coefficients::Coefficients;
pub use dataset::{Dataset, Task};
pub use error::{Error, Result};
pub use objective::{objective, Loss, PenaltyConfig};
pub use schema::CategoricalSchema;
