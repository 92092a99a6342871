//! Multidimensional matrix-profile anomaly detection.
//!
//! The pipeline z-normalizes each channel, computes per-channel sliding
//! window distances, aggregates them across channels (sorting before or
//! after the neighbor search), selects `k` nearest neighbors under an
//! exclusion zone, and reduces the resulting profile tensor to one score
//! per timestamp. [`detect`] runs all of it.

pub mod aggregate;
pub mod detector;
pub mod distance;
pub mod error;
pub mod io;
pub mod knn;
pub mod metrics;
pub mod oracle;
pub mod postprocess;
pub mod synth;

pub use detector::{
    detect, estimate_period, score, Budget, Detection, DetectorConfig, Threads, Window,
};
pub use error::{Error, Result};
pub use io::{
    read_csv, read_scores, write_csv, write_scores, zscore_normalize, ScoreVector, TimeSeries,
};
pub use knn::{build_profile, Aggregation, ProfileTensor};
pub use metrics::{evaluate, EvalReport, Metric};
