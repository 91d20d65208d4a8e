//! Decentralization analysis for weighted-consensus validator sets.
//!
//! Computes Gini, Nakamoto (liveness and safety) and (m, epsilon, delta)
//! metrics under linear stake weights and square-root stake weights (SRSW),
//! models quorum thresholds, top-M admission, epoch rewards and Sybil-split
//! incentives, and simulates reward compounding and proposer selection.

pub mod cli;
pub mod error;
pub mod fetch;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod report;
pub mod simulate;
pub mod srsw;

pub use error::{Error, Result};
pub use metrics::MetricsReport;
pub use model::{apply_weights, canonicalize, Validator, ValidatorSnapshot, WeightScheme, WeightedSet};
pub use srsw::EconParams;
