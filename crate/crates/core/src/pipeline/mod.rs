//! End-to-end orchestration: generate → ingest → embed → cluster →
//! characterize → transitions → comorbidity → report, each stage reading
//! the previous stages' files from one run directory.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{SecondsFormat, Utc};

mod config;
mod manifest;
mod report;
mod stages;

pub use config::{
    CharacterizeSection, ClusterSection, ClusterSpace, ComorbiditySection, EmbedSection,
    GenerateSection, IngestSection, InputSection, PipelineConfig, Preset, TransitionsSection,
};
pub use manifest::{file_digest, ChosenK, KProvenance, RunManifest, StageRecord, MANIFEST_FILE};
pub use report::{render_report, Report, ReportJson};
pub use stages::{
    choose_k, feature_matrix, read_assignments, read_embedding, write_fixture_run, RunContext,
    StageIo, SubtypeSummary,
};

use crate::clustering::ClusterError;
use crate::comorbidity::ComorbidityError;
use crate::embedding::EmbedError;
use crate::ingestion::IngestError;
use crate::seed::derive_seed;
use crate::subtyping::SubtypeError;
use crate::synthetic::GeneratorError;
use crate::transitions::TransitionError;

/// Artifact file names inside a run directory.
pub mod files {
    pub const COHORT: &str = "cohort.csv";
    pub const GROUND_TRUTH: &str = "ground_truth.json";
    pub const VALIDATION: &str = "validation.json";
    pub const MISSINGNESS: &str = "missingness.json";
    pub const COHORT_IMPUTED: &str = "cohort_imputed.csv";
    pub const EMBEDDING: &str = "embedding.csv";
    pub const EMBEDDING_META: &str = "embedding.json";
    pub const ASSIGNMENTS: &str = "assignments.csv";
    pub const GAP: &str = "gap.json";
    pub const SUBTYPES: &str = "subtypes.json";
    pub const COMPOSITION: &str = "composition.csv";
    pub const VIOLIN: &str = "violin_data.csv";
    pub const TRANSITIONS: &str = "transitions.csv";
    pub const MATRIX: &str = "matrix.csv";
    pub const SUBTYPE_MATRIX: &str = "subtype_matrix.csv";
    pub const GRAPH: &str = "progression_graph.json";
    pub const COMORBIDITY: &str = "comorbidity.csv";
    pub const COMORBIDITY_META: &str = "comorbidity.json";
    pub const REPORT_TEXT: &str = "report.txt";
    pub const REPORT_JSON: &str = "report.json";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Generate,
    Ingest,
    Embed,
    Cluster,
    Characterize,
    Transitions,
    Comorbidity,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Generate,
        Stage::Ingest,
        Stage::Embed,
        Stage::Cluster,
        Stage::Characterize,
        Stage::Transitions,
        Stage::Comorbidity,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Generate => "generate",
            Stage::Ingest => "ingest",
            Stage::Embed => "embed",
            Stage::Cluster => "cluster",
            Stage::Characterize => "characterize",
            Stage::Transitions => "transitions",
            Stage::Comorbidity => "comorbidity",
            Stage::Report => "report",
        }
    }

    /// Stage seed derived from the master seed and the stage name, so
    /// reconfiguring one stage never perturbs another's randomness.
    pub fn seed(self, master: u64) -> u64 {
        derive_seed(master, self.name())
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|stage| stage.name() == s)
            .ok_or_else(|| format!("unknown stage `{s}`"))
    }
}

/// Failure inside one stage.
#[derive(Debug, thiserror::Error)]
pub enum StageError {
    #[error("missing artifact {}", .0.display())]
    MissingArtifact(PathBuf),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Generate(#[from] GeneratorError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Subtype(#[from] SubtypeError),
    #[error(transparent)]
    Transition(#[from] TransitionError),
    #[error(transparent)]
    Comorbidity(#[from] ComorbidityError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Invalid(String),
}

impl StageError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        if source.kind() == std::io::ErrorKind::NotFound {
            StageError::MissingArtifact(path.to_path_buf())
        } else {
            StageError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error("input file not found: {}", .0.display())]
    MissingInput(PathBuf),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: StageError,
    },
}

impl PipelineError {
    /// 2 for configuration problems, 1 for stage failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::MissingInput(_) => 2,
            PipelineError::Stage { .. } => 1,
        }
    }
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Runs one stage and records its seed, timing and file digests in the
/// run directory's manifest.
pub fn run_stage(ctx: &RunContext, stage: Stage) -> Result<(), PipelineError> {
    let wrap = |source: StageError| PipelineError::Stage { stage, source };
    if stage == Stage::Ingest && !ctx.config.generates() {
        if let Some(input) = &ctx.config.input.cohort {
            if !input.exists() {
                return Err(PipelineError::MissingInput(input.clone()));
            }
        }
    }
    std::fs::create_dir_all(&ctx.out).map_err(|e| wrap(StageError::io(&ctx.out, e)))?;
    let mut manifest = RunManifest::load_or_new(&ctx.out, &ctx.config).map_err(wrap)?;
    let started_at = now();
    log::info!("stage {stage}: start");
    let io = stages::execute(ctx, stage).map_err(wrap)?;
    let digest_map = |paths: &[PathBuf]| -> Result<_, StageError> {
        paths
            .iter()
            .map(|p| {
                let key = p
                    .strip_prefix(&ctx.out)
                    .map(|rel| rel.display().to_string())
                    .unwrap_or_else(|_| p.display().to_string());
                Ok((key, file_digest(p)?))
            })
            .collect()
    };
    let record = StageRecord {
        seed: stage.seed(ctx.config.seed),
        started_at,
        finished_at: now(),
        inputs: digest_map(&io.inputs).map_err(wrap)?,
        outputs: digest_map(&io.outputs).map_err(wrap)?,
    };
    if let Some(k) = io.chosen_k {
        manifest.chosen_k = Some(k);
    }
    manifest.stages.insert(stage.name().to_string(), record);
    manifest.write(&ctx.out).map_err(wrap)?;
    log::info!("stage {stage}: done");
    Ok(())
}

/// Runs every stage in order; generation only when the config asks for it
/// or names no input cohort.
pub fn run_pipeline(ctx: &RunContext) -> Result<RunManifest, PipelineError> {
    ctx.config.check()?;
    if !ctx.config.generates() {
        if let Some(input) = &ctx.config.input.cohort {
            if !input.exists() {
                return Err(PipelineError::MissingInput(input.clone()));
            }
        }
    }
    // A fresh run starts a fresh manifest.
    let manifest_path = ctx.out.join(MANIFEST_FILE);
    if manifest_path.exists() {
        std::fs::remove_file(&manifest_path).map_err(|e| PipelineError::Stage {
            stage: Stage::Generate,
            source: StageError::io(&manifest_path, e),
        })?;
    }
    for stage in Stage::ALL {
        if stage == Stage::Generate && !ctx.config.generates() {
            continue;
        }
        run_stage(ctx, stage)?;
    }
    let text = std::fs::read_to_string(&manifest_path).map_err(|e| PipelineError::Stage {
        stage: Stage::Report,
        source: StageError::io(&manifest_path, e),
    })?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Stage {
        stage: Stage::Report,
        source: e.into(),
    })
}
