//! K-means on the embedding (or raw features), within-cluster dispersion and
//! gap-statistic selection of K.

use std::collections::BTreeMap;

mod gap;
mod kmeans;

pub use gap::{
    gap_statistic, one_standard_error_k, rank_k_candidates, GapEntry, GapResult, GapSettings,
    KCandidate, ReferenceMode, MIN_REFERENCES,
};
pub use kmeans::{kmeans_fit, within_dispersion, ClusterModel, MAX_ITERATIONS};

/// Cluster index per visit id.
pub type Assignments = BTreeMap<String, usize>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClusterError {
    #[error("k = {k} exceeds the number of points n = {n}")]
    KExceedsN { k: usize, n: usize },
    #[error("data has a zero-volume bounding box")]
    DegenerateData,
    #[error("within-cluster dispersion is zero at k = {k}; log W_k is undefined")]
    ZeroDispersion { k: usize },
    #[error("input contains non-finite coordinates")]
    NonFinite,
    #[error("{0}")]
    InvalidArgument(String),
}

/// Display label of a 0-based cluster index (`C1`, `C2`, ...).
pub fn cluster_label(cluster: usize) -> String {
    format!("C{}", cluster + 1)
}
