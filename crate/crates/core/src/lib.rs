//! Admissibility checks for transferring knowledge between two data domains.
//!
//! The crate measures how far apart two empirical samples are in the
//! Wasserstein sense, turns bootstrap replicates of that distance into the
//! safety parameters ε, η, γ, ξ and δ, and decides whether a transfer is
//! admissible:
//!
//! ```text
//! γ < min(ε − η, (δ − ξ)/2)      and     γ < min(ε − η, δ/2 − ξ)
//! ```
//!
//! Both thresholds are computed and the smaller one gates the verdict.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`metric`] | ground metric, exact and sliced `W_p` |
//! | [`estimation`] | quantiles, bootstrap, ε/η/γ/ξ/δ estimators |
//! | [`analogy`] | verdict, first-order statement checks, regularity audit |
//! | [`hoare`] | runtime checks of C1/C2 and the U-triples over state transformers |
//! | [`data_io`] | CSV ingestion, run config, seeded streams, generators, reports |
//! | [`pipeline`] | end-to-end runs backing the CLI |

pub mod analogy;
pub mod data_io;
pub mod error;
pub mod estimation;
pub mod hoare;
pub mod metric;
pub mod numeric;
pub mod pipeline;

pub use error::{Error, Result};
pub use metric::{EmpiricalSample, Estimator, LabeledSample, MetricConfig, Point};
