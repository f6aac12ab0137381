//! Visit-level dementia subtyping from CDR component scores.

pub mod clustering;
pub mod cohort;
pub mod comorbidity;
pub mod embedding;
pub mod fixtures;
pub mod ingestion;
pub mod metrics;
pub mod pipeline;
pub mod seed;
pub mod subtyping;
pub mod synthetic;
pub mod transitions;
