use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::config::{ClusterSpace, PipelineConfig};
use super::manifest::{ChosenK, KProvenance};
use super::report::render_report;
use super::{files, Stage, StageError};
use crate::clustering::{gap_statistic, kmeans_fit, Assignments, GapResult};
use crate::cohort::{validate_cohort, CdrLevel, Cohort};
use crate::comorbidity::{comorbidity_profile, top_diagnoses};
use crate::embedding::tsne_embed;
use crate::fixtures::reference_transition_fixture;
use crate::ingestion::{
    median_impute_with, parse_cohort, write_cohort_file, Feature, MissingnessSummary,
};
use crate::seed::derive_seed;
use crate::subtyping::{
    composition_rows, group_subtypes, inter_subtype_variability, intra_subtype_variability,
    profile_subtypes, severity_order, violin_rows, InterVariability,
    IntraVariability, SubtypeGrouping, SubtypeProfile,
};
use crate::synthetic::generate_cohort;
use crate::transitions::{
    extract_transitions, progression_graph, subtype_matrix,
    transition_matrix, write_transitions_csv,
};

/// Everything a stage needs: the resolved config and the run directory.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub config: PipelineConfig,
    pub out: PathBuf,
}

impl RunContext {
    pub fn new(config: PipelineConfig, out: impl Into<PathBuf>) -> Self {
        RunContext {
            config,
            out: out.into(),
        }
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.out.join(file)
    }

    fn seed(&self, stage: Stage) -> u64 {
        stage.seed(self.config.seed)
    }
}

/// Files a stage read and wrote, plus the K it settled on (cluster only).
#[derive(Debug, Clone, Default)]
pub struct StageIo {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub chosen_k: Option<ChosenK>,
}

/// Contents of `subtypes.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtypeSummary {
    pub purity: f64,
    pub profiles: Vec<SubtypeProfile>,
    pub severity_order: Vec<usize>,
    pub grouping: SubtypeGrouping,
    pub inter: Vec<InterVariability>,
    pub intra: Vec<IntraVariability>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GapReport {
    space: ClusterSpace,
    /// Absent when K was fixed manually and the statistic could not be
    /// computed.
    gap: Option<GapResult>,
    chosen_k: ChosenK,
    kmeans_seed: u64,
    inertia: f64,
    cluster_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EmbeddingMeta {
    visits: usize,
    features: Vec<Feature>,
    config: crate::embedding::EmbeddingConfig,
    initial_kl: f64,
    final_kl: f64,
    kl_trace: Vec<(usize, f64)>,
}

pub(super) fn execute(ctx: &RunContext, stage: Stage) -> Result<StageIo, StageError> {
    match stage {
        Stage::Generate => generate(ctx),
        Stage::Ingest => ingest(ctx),
        Stage::Embed => embed(ctx),
        Stage::Cluster => cluster(ctx),
        Stage::Characterize => characterize(ctx),
        Stage::Transitions => transitions(ctx),
        Stage::Comorbidity => comorbidity(ctx),
        Stage::Report => report(ctx),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), StageError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| StageError::io(path, e))
}

pub(super) fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, StageError> {
    let text = fs::read_to_string(path).map_err(|e| StageError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn create(path: &Path) -> Result<BufWriter<File>, StageError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| StageError::io(path, e))
}

pub(super) fn open(path: &Path) -> Result<File, StageError> {
    File::open(path).map_err(|e| StageError::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>, StageError> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(create(path)?))
}

fn load_cohort(path: &Path) -> Result<Cohort, StageError> {
    if !path.exists() {
        return Err(StageError::MissingArtifact(path.to_path_buf()));
    }
    Ok(parse_cohort(path)?)
}

/// Visit ids and the `visits × features` matrix in file order.
pub fn feature_matrix(cohort: &Cohort, features: &[Feature]) -> Result<(Vec<String>, Array2<f64>), StageError> {
    let mut x = Array2::zeros((cohort.len(), features.len()));
    for (i, visit) in cohort.visits.iter().enumerate() {
        for (j, feature) in features.iter().enumerate() {
            x[[i, j]] = feature.value(visit).ok_or_else(|| {
                StageError::Invalid(format!(
                    "visit `{}` is missing `{feature}`; impute before embedding or clustering",
                    visit.visit_id
                ))
            })?;
        }
    }
    Ok((cohort.visits.iter().map(|v| v.visit_id.clone()).collect(), x))
}

#[derive(Debug, Serialize, Deserialize)]
struct EmbeddingRow {
    visit_id: String,
    y1: f64,
    y2: f64,
}

/// Reads `embedding.csv` into visit ids and an `n × 2` matrix.
pub fn read_embedding(path: &Path) -> Result<(Vec<String>, Array2<f64>), StageError> {
    let mut reader = csv::Reader::from_reader(open(path)?);
    let rows: Vec<EmbeddingRow> = reader.deserialize().collect::<Result<_, _>>()?;
    let mut y = Array2::zeros((rows.len(), 2));
    for (i, row) in rows.iter().enumerate() {
        y[[i, 0]] = row.y1;
        y[[i, 1]] = row.y2;
    }
    Ok((rows.into_iter().map(|r| r.visit_id).collect(), y))
}

#[derive(Debug, Serialize, Deserialize)]
struct AssignmentRow {
    visit_id: String,
    cluster: usize,
}

/// Reads `assignments.csv`; ids are returned in file order.
pub fn read_assignments(path: &Path) -> Result<(Vec<String>, Assignments), StageError> {
    let mut reader = csv::Reader::from_reader(open(path)?);
    let rows: Vec<AssignmentRow> = reader.deserialize().collect::<Result<_, _>>()?;
    let ids = rows.iter().map(|r| r.visit_id.clone()).collect();
    Ok((ids, rows.into_iter().map(|r| (r.visit_id, r.cluster)).collect()))
}

fn write_assignments(path: &Path, ids: &[String], labels: &[usize]) -> Result<(), StageError> {
    let mut w = csv_writer(path)?;
    w.write_record(["visit_id", "cluster"])?;
    for (id, label) in ids.iter().zip(labels) {
        w.write_record([id.as_str(), &label.to_string()])?;
    }
    w.flush().map_err(|e| StageError::io(path, e))
}

/// Manual K wins; otherwise the top jump candidate, then the
/// one-standard-error K, then `k_min`.
pub fn choose_k(manual: Option<usize>, gap: Option<&GapResult>, k_min: usize) -> ChosenK {
    if let Some(k) = manual {
        return ChosenK { k, provenance: KProvenance::Manual };
    }
    if let Some(c) = gap.and_then(|g| g.candidates.first()) {
        return ChosenK { k: c.k, provenance: KProvenance::JumpCandidate };
    }
    if let Some(k) = gap.and_then(|g| g.one_se_k) {
        return ChosenK { k, provenance: KProvenance::OneStandardError };
    }
    ChosenK { k: k_min, provenance: KProvenance::Fallback }
}

fn generate(ctx: &RunContext) -> Result<StageIo, StageError> {
    let config = ctx.config.generate.generator_config(ctx.seed(Stage::Generate));
    let (cohort, truth) = generate_cohort(&config)?;
    let cohort_path = ctx.path(files::COHORT);
    let truth_path = ctx.path(files::GROUND_TRUTH);
    write_cohort_file(&cohort, &cohort_path)?;
    write_json(&truth_path, &truth)?;
    log::info!("generated {} visits for {} patients", cohort.len(), cohort.patient_count());
    Ok(StageIo {
        outputs: vec![cohort_path, truth_path],
        ..Default::default()
    })
}

fn ingest(ctx: &RunContext) -> Result<StageIo, StageError> {
    let input = match (&ctx.config.input.cohort, ctx.config.generates()) {
        (Some(path), false) => path.clone(),
        _ => ctx.path(files::COHORT),
    };
    let cohort = load_cohort(&input)?;
    let validation = validate_cohort(&cohort);
    if !validation.is_empty() {
        log::warn!("{} validation violations in {}", validation.violations.len(), input.display());
    }
    let missingness = MissingnessSummary::measure(&cohort, &Feature::all());
    let (imputed, _) = median_impute_with(&cohort, &ctx.config.ingest.features, ctx.config.ingest.warn_missing_rate)?;

    let outputs = vec![
        ctx.path(files::VALIDATION),
        ctx.path(files::MISSINGNESS),
        ctx.path(files::COHORT_IMPUTED),
    ];
    write_json(&outputs[0], &validation)?;
    write_json(&outputs[1], &missingness)?;
    write_cohort_file(&imputed, &outputs[2])?;
    Ok(StageIo {
        inputs: vec![input],
        outputs,
        chosen_k: None,
    })
}

fn embed(ctx: &RunContext) -> Result<StageIo, StageError> {
    let input = ctx.path(files::COHORT_IMPUTED);
    let cohort = load_cohort(&input)?;
    let features = &ctx.config.ingest.features;
    let (ids, x) = feature_matrix(&cohort, features)?;
    let config = ctx.config.embed.embedding_config(ctx.seed(Stage::Embed));
    let embedding = tsne_embed(&ids, x.view(), &config)?;
    log::info!("t-SNE KL {:.4} -> {:.4}", embedding.initial_kl, embedding.final_kl);

    let csv_path = ctx.path(files::EMBEDDING);
    let mut w = csv_writer(&csv_path)?;
    for p in &embedding.points {
        w.serialize(EmbeddingRow {
            visit_id: p.visit_id.clone(),
            y1: p.y[0],
            y2: p.y[1],
        })?;
    }
    if embedding.points.is_empty() {
        w.write_record(["visit_id", "y1", "y2"])?;
    }
    w.flush().map_err(|e| StageError::io(&csv_path, e))?;

    let meta_path = ctx.path(files::EMBEDDING_META);
    write_json(
        &meta_path,
        &EmbeddingMeta {
            visits: embedding.points.len(),
            features: features.clone(),
            config: embedding.config.clone(),
            initial_kl: embedding.initial_kl,
            final_kl: embedding.final_kl,
            kl_trace: embedding.kl_trace.clone(),
        },
    )?;
    Ok(StageIo {
        inputs: vec![input],
        outputs: vec![csv_path, meta_path],
        chosen_k: None,
    })
}

fn cluster(ctx: &RunContext) -> Result<StageIo, StageError> {
    let section = &ctx.config.cluster;
    let (input, (ids, points)) = match section.space {
        ClusterSpace::Embedded => {
            let path = ctx.path(files::EMBEDDING);
            let data = read_embedding(&path)?;
            (path, data)
        }
        ClusterSpace::Raw => {
            let path = ctx.path(files::COHORT_IMPUTED);
            let cohort = load_cohort(&path)?;
            (path, feature_matrix(&cohort, &ctx.config.ingest.features)?)
        }
    };
    let seed = ctx.seed(Stage::Cluster);
    // A manual K only needs the statistic for the record, so a degenerate
    // input (e.g. every cluster a single repeated point) is not fatal.
    let gap = match gap_statistic(points.view(), &section.gap_settings(derive_seed(seed, "gap"))) {
        Ok(gap) => Some(gap),
        Err(e) if section.k.is_some() => {
            log::warn!("gap statistic skipped: {e}");
            None
        }
        Err(e) => return Err(e.into()),
    };
    let chosen = choose_k(section.k, gap.as_ref(), section.k_min);
    let kmeans_seed = derive_seed(seed, "kmeans");
    let model = kmeans_fit(points.view(), chosen.k, section.restarts, kmeans_seed)?;
    log::info!("K = {} ({:?}), W = {:.4}", chosen.k, chosen.provenance, model.inertia);

    let assignments_path = ctx.path(files::ASSIGNMENTS);
    write_assignments(&assignments_path, &ids, &model.labels)?;
    let gap_path = ctx.path(files::GAP);
    write_json(
        &gap_path,
        &GapReport {
            space: section.space,
            gap,
            chosen_k: chosen,
            kmeans_seed,
            inertia: model.inertia,
            cluster_sizes: model.cluster_sizes(),
        },
    )?;
    Ok(StageIo {
        inputs: vec![input],
        outputs: vec![assignments_path, gap_path],
        chosen_k: Some(chosen),
    })
}

fn characterize(ctx: &RunContext) -> Result<StageIo, StageError> {
    let cohort_path = ctx.path(files::COHORT_IMPUTED);
    let assignments_path = ctx.path(files::ASSIGNMENTS);
    let cohort = load_cohort(&cohort_path)?;
    let (_, assignments) = read_assignments(&assignments_path)?;
    let purity = ctx.config.characterize.purity;
    let profiles = profile_subtypes(&cohort, &assignments, purity)?;
    let grouping = group_subtypes(&profiles, purity);
    let inter = CdrLevel::ALL
        .iter()
        .filter_map(|&level| inter_subtype_variability(&profiles, level).ok())
        .collect();
    let intra = profiles
        .iter()
        .map(intra_subtype_variability)
        .collect::<Result<_, _>>()?;
    let summary = SubtypeSummary {
        purity,
        severity_order: severity_order(&profiles),
        grouping,
        inter,
        intra,
        profiles,
    };

    let subtypes_path = ctx.path(files::SUBTYPES);
    write_json(&subtypes_path, &summary)?;

    let composition_path = ctx.path(files::COMPOSITION);
    let mut w = csv_writer(&composition_path)?;
    w.write_record(["cluster", "level", "count"])?;
    for (cluster, level, count) in composition_rows(&summary.profiles) {
        w.write_record([cluster.to_string(), level.to_string(), count.to_string()])?;
    }
    w.flush().map_err(|e| StageError::io(&composition_path, e))?;

    let violin_path = ctx.path(files::VIOLIN);
    let mut w = csv_writer(&violin_path)?;
    w.write_record(["cluster", "component", "level", "count"])?;
    for (cluster, component, level, count) in violin_rows(&summary.profiles) {
        w.write_record([
            cluster.to_string(),
            component.column().to_string(),
            level.to_string(),
            count.to_string(),
        ])?;
    }
    w.flush().map_err(|e| StageError::io(&violin_path, e))?;

    Ok(StageIo {
        inputs: vec![cohort_path, assignments_path],
        outputs: vec![subtypes_path, composition_path, violin_path],
        chosen_k: None,
    })
}

fn transitions(ctx: &RunContext) -> Result<StageIo, StageError> {
    let cohort_path = ctx.path(files::COHORT_IMPUTED);
    let assignments_path = ctx.path(files::ASSIGNMENTS);
    let subtypes_path = ctx.path(files::SUBTYPES);
    let cohort = load_cohort(&cohort_path)?;
    let (_, assignments) = read_assignments(&assignments_path)?;
    let summary: SubtypeSummary = read_json(&subtypes_path)?;
    let section = &ctx.config.transitions;

    let records = extract_transitions(&cohort, &assignments, &summary.grouping, section.long_threshold_days)?;
    let k = summary.profiles.iter().map(|p| p.cluster + 1).max().unwrap_or(0);
    let by_subtype = subtype_matrix(&records, k);
    let by_group = transition_matrix(&records, &summary.grouping);
    if by_subtype.aggregate(&summary.grouping)? != by_group {
        return Err(StageError::Invalid(
            "subtype-level counts do not aggregate to the group matrix".into(),
        ));
    }
    let graph = progression_graph(
        &records,
        &summary.profiles,
        section.graph_source_cdr,
        section.graph_target_cdr,
        section.graph_min_weight,
    );

    let outputs = vec![
        ctx.path(files::TRANSITIONS),
        ctx.path(files::MATRIX),
        ctx.path(files::SUBTYPE_MATRIX),
        ctx.path(files::GRAPH),
    ];
    write_transitions_csv(&records, create(&outputs[0])?)?;
    by_group.write_csv(create(&outputs[1])?)?;
    by_subtype.write_csv(create(&outputs[2])?)?;
    write_json(&outputs[3], &graph)?;
    Ok(StageIo {
        inputs: vec![cohort_path, assignments_path, subtypes_path],
        outputs,
        chosen_k: None,
    })
}

fn comorbidity(ctx: &RunContext) -> Result<StageIo, StageError> {
    let cohort_path = ctx.path(files::COHORT_IMPUTED);
    let assignments_path = ctx.path(files::ASSIGNMENTS);
    let cohort = load_cohort(&cohort_path)?;
    let (_, assignments) = read_assignments(&assignments_path)?;
    let section = &ctx.config.comorbidity;
    let top: Vec<String> = top_diagnoses(&cohort, section.top)
        .into_iter()
        .map(|d| d.code)
        .collect();
    let profile = comorbidity_profile(&cohort, &assignments, &top, section.per_patient)?;

    let csv_path = ctx.path(files::COMORBIDITY);
    profile.write_csv(create(&csv_path)?)?;
    let json_path = ctx.path(files::COMORBIDITY_META);
    write_json(&json_path, &profile)?;
    Ok(StageIo {
        inputs: vec![cohort_path, assignments_path],
        outputs: vec![csv_path, json_path],
        chosen_k: None,
    })
}

fn report(ctx: &RunContext) -> Result<StageIo, StageError> {
    let report = render_report(&ctx.out)?;
    let text_path = ctx.path(files::REPORT_TEXT);
    let json_path = ctx.path(files::REPORT_JSON);
    fs::write(&text_path, &report.text).map_err(|e| StageError::io(&text_path, e))?;
    write_json(&json_path, &report.json)?;
    Ok(StageIo {
        inputs: report.inputs,
        outputs: vec![text_path, json_path],
        chosen_k: None,
    })
}

/// Materializes the reference-matrix fixture as a run directory:
/// the imputed cohort, assignments, and the characterize and transitions
/// stage outputs under default settings.
pub fn write_fixture_run(dir: &Path) -> Result<(), StageError> {
    fs::create_dir_all(dir).map_err(|e| StageError::io(dir, e))?;
    let (cohort, assignments) = reference_transition_fixture();
    write_cohort_file(&cohort, dir.join(files::COHORT_IMPUTED))?;
    let ids: Vec<String> = cohort.visits.iter().map(|v| v.visit_id.clone()).collect();
    let labels: Vec<usize> = ids.iter().map(|id| assignments[id]).collect();
    write_assignments(&dir.join(files::ASSIGNMENTS), &ids, &labels)?;
    let ctx = RunContext::new(PipelineConfig::default(), dir);
    characterize(&ctx)?;
    transitions(&ctx)?;
    Ok(())
}
