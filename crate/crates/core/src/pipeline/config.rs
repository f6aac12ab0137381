//! TOML run configuration. Unknown keys are rejected everywhere: a silently
//! ignored typo in a hyperparameter is the easiest way to lose
//! reproducibility.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::manifest::RunManifest;
use super::PipelineError;
use crate::clustering::{GapSettings, ReferenceMode};
use crate::cohort::CdrLevel;
use crate::embedding::EmbeddingConfig;
use crate::ingestion::{Feature, DEFAULT_WARN_RATE};
use crate::subtyping::DEFAULT_PURITY;
use crate::synthetic::GeneratorConfig;
use crate::transitions::{DEFAULT_LONG_THRESHOLD_DAYS, DEFAULT_MIN_WEIGHT};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Master seed; every stage derives its own seed from it.
    pub seed: u64,
    /// Run directory. Relative paths resolve against the config file.
    pub out: Option<PathBuf>,
    pub input: InputSection,
    pub generate: GenerateSection,
    pub ingest: IngestSection,
    pub embed: EmbedSection,
    pub cluster: ClusterSection,
    pub characterize: CharacterizeSection,
    pub transitions: TransitionsSection,
    pub comorbidity: ComorbiditySection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputSection {
    /// Canonical cohort CSV. When absent, the cohort is generated.
    pub cohort: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Sixteen subtypes, ~2,700 visits.
    #[default]
    Reference,
    /// Four well-separated subtypes, ~350 visits.
    Planted4,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateSection {
    pub enabled: bool,
    pub preset: Preset,
    pub patients: Option<usize>,
    pub jitter: Option<f64>,
    /// Overrides every feature's missingness rate.
    pub missing_rate: Option<f64>,
}

impl GenerateSection {
    pub fn generator_config(&self, seed: u64) -> GeneratorConfig {
        let mut config = match self.preset {
            Preset::Reference => GeneratorConfig::reference_default(seed),
            Preset::Planted4 => GeneratorConfig::planted_four(seed),
        };
        if let Some(patients) = self.patients {
            config.patients = patients;
        }
        if let Some(jitter) = self.jitter {
            config.jitter = jitter;
        }
        if let Some(rate) = self.missing_rate {
            config.missingness = Feature::all().into_iter().map(|f| (f, rate)).collect();
        }
        config
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestSection {
    /// Clustering features; these columns are median-imputed.
    pub features: Vec<Feature>,
    pub warn_missing_rate: f64,
}

impl Default for IngestSection {
    fn default() -> Self {
        IngestSection {
            features: Feature::cdr_components(),
            warn_missing_rate: DEFAULT_WARN_RATE,
        }
    }
}

/// t-SNE settings; the seed comes from the master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedSection {
    pub perplexity: f64,
    pub iterations: usize,
    pub exaggeration: f64,
    pub exaggeration_iterations: usize,
    pub learning_rate: f64,
    pub momentum_initial: f64,
    pub momentum_final: f64,
    pub momentum_switch: usize,
    pub standardize: bool,
}

impl Default for EmbedSection {
    fn default() -> Self {
        let d = EmbeddingConfig::default();
        EmbedSection {
            perplexity: d.perplexity,
            iterations: d.iterations,
            exaggeration: d.exaggeration,
            exaggeration_iterations: d.exaggeration_iterations,
            learning_rate: d.learning_rate,
            momentum_initial: d.momentum_initial,
            momentum_final: d.momentum_final,
            momentum_switch: d.momentum_switch,
            standardize: d.standardize,
        }
    }
}

impl EmbedSection {
    pub fn embedding_config(&self, seed: u64) -> EmbeddingConfig {
        EmbeddingConfig {
            perplexity: self.perplexity,
            iterations: self.iterations,
            exaggeration: self.exaggeration,
            exaggeration_iterations: self.exaggeration_iterations,
            learning_rate: self.learning_rate,
            momentum_initial: self.momentum_initial,
            momentum_final: self.momentum_final,
            momentum_switch: self.momentum_switch,
            standardize: self.standardize,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterSpace {
    #[default]
    Embedded,
    Raw,
}

impl FromStr for ClusterSpace {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "embedded" => Ok(ClusterSpace::Embedded),
            "raw" => Ok(ClusterSpace::Raw),
            other => Err(format!("unknown cluster space `{other}` (expected raw|embedded)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterSection {
    pub space: ClusterSpace,
    pub k_min: usize,
    pub k_max: usize,
    pub references: usize,
    pub reference_mode: ReferenceMode,
    pub restarts: usize,
    /// Manual K; when unset the top jump candidate is used.
    pub k: Option<usize>,
}

impl Default for ClusterSection {
    fn default() -> Self {
        let d = GapSettings::default();
        ClusterSection {
            space: ClusterSpace::Embedded,
            k_min: d.k_min,
            k_max: d.k_max,
            references: d.references,
            reference_mode: d.reference_mode,
            restarts: d.restarts,
            k: None,
        }
    }
}

impl ClusterSection {
    pub fn gap_settings(&self, seed: u64) -> GapSettings {
        GapSettings {
            k_min: self.k_min,
            k_max: self.k_max,
            references: self.references,
            reference_mode: self.reference_mode,
            restarts: self.restarts,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CharacterizeSection {
    pub purity: f64,
}

impl Default for CharacterizeSection {
    fn default() -> Self {
        CharacterizeSection {
            purity: DEFAULT_PURITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransitionsSection {
    pub long_threshold_days: i64,
    pub graph_source_cdr: CdrLevel,
    pub graph_target_cdr: CdrLevel,
    pub graph_min_weight: usize,
}

impl Default for TransitionsSection {
    fn default() -> Self {
        TransitionsSection {
            long_threshold_days: DEFAULT_LONG_THRESHOLD_DAYS,
            graph_source_cdr: CdrLevel::Questionable,
            graph_target_cdr: CdrLevel::Mild,
            graph_min_weight: DEFAULT_MIN_WEIGHT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComorbiditySection {
    pub top: usize,
    pub per_patient: bool,
}

impl Default for ComorbiditySection {
    fn default() -> Self {
        ComorbiditySection {
            top: 5,
            per_patient: false,
        }
    }
}

impl PipelineConfig {
    /// Reads a TOML config, or the config snapshot inside a `manifest.json`.
    /// Relative paths are resolved against the file's directory.
    pub fn load(path: &Path) -> Result<PipelineConfig, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut config = if path.extension().is_some_and(|e| e == "json") {
            let manifest: RunManifest = serde_json::from_str(&text)
                .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
            manifest.config
        } else {
            Self::from_toml(&text).map_err(|e| match e {
                PipelineError::Config(msg) => PipelineError::Config(format!("{}: {msg}", path.display())),
                other => other,
            })?
        };
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<PipelineConfig, PipelineError> {
        let config: PipelineConfig =
            toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        config.check()?;
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = self.input.cohort.as_mut() {
            resolve(p);
        }
        if let Some(p) = self.out.as_mut() {
            resolve(p);
        }
    }

    /// Whether the run starts by generating a synthetic cohort.
    pub fn generates(&self) -> bool {
        self.generate.enabled || self.input.cohort.is_none()
    }

    /// Checks cross-field constraints that serde cannot express.
    pub fn check(&self) -> Result<(), PipelineError> {
        let bad = |msg: String| Err(PipelineError::Config(msg));
        if self.ingest.features.is_empty() {
            return bad("ingest.features must not be empty".into());
        }
        if self.cluster.k_min == 0 || self.cluster.k_min >= self.cluster.k_max {
            return bad("cluster: need 1 <= k_min < k_max".into());
        }
        if self.cluster.restarts == 0 {
            return bad("cluster.restarts must be positive".into());
        }
        if self.cluster.k == Some(0) {
            return bad("cluster.k must be positive".into());
        }
        if !(self.characterize.purity > 0.5 && self.characterize.purity <= 1.0) {
            return bad("characterize.purity must lie in (0.5, 1]".into());
        }
        if self.comorbidity.top == 0 {
            return bad("comorbidity.top must be at least 1".into());
        }
        if self.transitions.long_threshold_days < 0 {
            return bad("transitions.long_threshold_days must be non-negative".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_toml_is_the_default() {
        assert_eq!(PipelineConfig::from_toml("").unwrap(), PipelineConfig::default());
    }

    #[test]
    fn unknown_keys_are_errors() {
        assert!(PipelineConfig::from_toml("[embed]\nperplexty = 30.0\n").is_err());
        assert!(PipelineConfig::from_toml("sed = 1\n").is_err());
    }

    #[test]
    fn sections_parse() {
        let config = PipelineConfig::from_toml(
            r#"
seed = 7
[generate]
enabled = true
preset = "planted4"
[ingest]
features = ["memory", "orientation"]
[cluster]
space = "raw"
k = 4
reference_mode = "pca_aligned"
[transitions]
graph_source_cdr = "0.5"
graph_target_cdr = "1"
"#,
        )
        .unwrap();
        assert_eq!(config.seed, 7);
        assert_eq!(config.generate.preset, Preset::Planted4);
        assert_eq!(config.cluster.space, ClusterSpace::Raw);
        assert_eq!(config.cluster.k, Some(4));
        assert_eq!(config.ingest.features.len(), 2);
        assert_eq!(config.transitions.graph_target_cdr, CdrLevel::Mild);
    }

    #[test]
    fn bad_ranges_are_rejected() {
        assert!(PipelineConfig::from_toml("[cluster]\nk_min = 5\nk_max = 3\n").is_err());
        assert!(PipelineConfig::from_toml("[characterize]\npurity = 0.3\n").is_err());
    }
}
