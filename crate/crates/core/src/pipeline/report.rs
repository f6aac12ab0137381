//! Human-readable (text) and machine-readable (JSON) run summary.
//!
//! `subtypes.json` and `transitions.csv` are required; K selection, the
//! progression graph and comorbidity sections appear when their files do.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::manifest::ChosenK;
use super::stages::{open, read_json, SubtypeSummary};
use super::{files, StageError};
use crate::clustering::{cluster_label, GapResult, KCandidate};
use crate::cohort::CdrLevel;
use crate::comorbidity::ComorbidityProfile;
use crate::subtyping::{InterVariability, IntraVariability};
use crate::transitions::{read_transitions_csv, ProgressionGraph, TransitionClass, TransitionMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionRow {
    pub cluster: String,
    pub visits: usize,
    pub histogram: BTreeMap<CdrLevel, usize>,
    pub class: String,
    pub group: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub id: String,
    pub label: String,
    pub clusters: Vec<String>,
    pub visits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportJson {
    pub chosen_k: Option<ChosenK>,
    pub one_se_k: Option<usize>,
    pub candidates: Vec<KCandidate>,
    pub composition: Vec<CompositionRow>,
    pub groups: Vec<GroupRow>,
    pub inter: Vec<InterVariability>,
    pub intra: Vec<IntraVariability>,
    /// Group matrix recounted from `transitions.csv`.
    pub matrix: TransitionMatrix,
    pub transition_count: usize,
    pub classes: BTreeMap<String, usize>,
    pub stage_skips: usize,
    pub long_followups: usize,
    /// Whether `matrix.csv`, when present, equals the recount.
    pub matrix_file_agrees: Option<bool>,
    pub progression_graph: Option<ProgressionGraph>,
    pub comorbidity: Option<ComorbidityProfile>,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub text: String,
    pub json: ReportJson,
    /// Artifacts the report was built from.
    pub inputs: Vec<PathBuf>,
}

#[derive(Deserialize)]
struct GapFile {
    gap: Option<GapResult>,
    chosen_k: ChosenK,
}

fn optional<T: serde::de::DeserializeOwned>(path: &Path, inputs: &mut Vec<PathBuf>) -> Result<Option<T>, StageError> {
    if !path.exists() {
        return Ok(None);
    }
    inputs.push(path.to_path_buf());
    read_json(path).map(Some)
}

/// Builds the report from the artifacts in `dir` without writing anything.
pub fn render_report(dir: &Path) -> Result<Report, StageError> {
    let subtypes_path = dir.join(files::SUBTYPES);
    let transitions_path = dir.join(files::TRANSITIONS);
    let summary: SubtypeSummary = read_json(&subtypes_path)?;
    let records = read_transitions_csv(open(&transitions_path)?)?;
    let mut inputs = vec![subtypes_path, transitions_path];

    let gap: Option<GapFile> = optional(&dir.join(files::GAP), &mut inputs)?;
    let graph: Option<ProgressionGraph> = optional(&dir.join(files::GRAPH), &mut inputs)?;
    let comorbidity: Option<ComorbidityProfile> = optional(&dir.join(files::COMORBIDITY_META), &mut inputs)?;

    let grouping = &summary.grouping;
    let mut matrix = TransitionMatrix::zeros(grouping.labels());
    let mut classes: BTreeMap<String, usize> = ["progression", "stable", "regression"]
        .iter()
        .map(|c| (c.to_string(), 0))
        .collect();
    let (mut stage_skips, mut long_followups) = (0, 0);
    for r in &records {
        if r.source_group >= matrix.size() || r.target_group >= matrix.size() {
            return Err(StageError::Invalid(format!(
                "transition {} -> {} references an unknown group",
                r.source_visit, r.target_visit
            )));
        }
        matrix.counts[r.source_group][r.target_group] += 1;
        let class = match r.class {
            TransitionClass::Progression => "progression",
            TransitionClass::Stable => "stable",
            TransitionClass::Regression => "regression",
        };
        *classes.get_mut(class).expect("all classes present") += 1;
        stage_skips += usize::from(r.stage_skip);
        long_followups += usize::from(r.long_followup);
    }
    let matrix_path = dir.join(files::MATRIX);
    let matrix_file_agrees = if matrix_path.exists() {
        inputs.push(matrix_path.clone());
        Some(TransitionMatrix::read_csv(open(&matrix_path)?)? == matrix)
    } else {
        None
    };

    let profile_of = |c: usize| summary.profiles.iter().find(|p| p.cluster == c);
    let composition: Vec<CompositionRow> = summary
        .severity_order
        .iter()
        .filter_map(|&c| profile_of(c))
        .map(|p| CompositionRow {
            cluster: cluster_label(p.cluster),
            visits: p.visits,
            histogram: p.cdr_histogram.clone(),
            class: p.homogeneity.to_string(),
            group: grouping.group_of(p.cluster).map(|g| grouping.groups[g].id.clone()),
        })
        .collect();
    let groups: Vec<GroupRow> = grouping
        .groups
        .iter()
        .map(|g| GroupRow {
            id: g.id.clone(),
            label: g.label.clone(),
            clusters: g.clusters.iter().map(|&c| cluster_label(c)).collect(),
            visits: g.visits,
        })
        .collect();

    let json = ReportJson {
        chosen_k: gap.as_ref().map(|g| g.chosen_k),
        one_se_k: gap.as_ref().and_then(|g| g.gap.as_ref()?.one_se_k),
        candidates: gap
            .as_ref()
            .and_then(|g| g.gap.as_ref())
            .map(|g| g.candidates.clone())
            .unwrap_or_default(),
        composition,
        groups,
        inter: summary.inter.clone(),
        intra: summary.intra.clone(),
        transition_count: records.len(),
        matrix,
        classes,
        stage_skips,
        long_followups,
        matrix_file_agrees,
        progression_graph: graph,
        comorbidity,
    };
    let text = render_text(&json, gap.as_ref().and_then(|g| g.gap.as_ref()));
    Ok(Report { text, json, inputs })
}

fn render_text(r: &ReportJson, gap: Option<&GapResult>) -> String {
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "Dementia subtype report\n");

    let _ = writeln!(w, "== Number of subtypes ==");
    match (&r.chosen_k, gap) {
        (Some(chosen), Some(gap)) => {
            let _ = writeln!(w, "chosen K = {} ({:?})", chosen.k, chosen.provenance);
            let _ = writeln!(
                w,
                "one-standard-error K = {}",
                r.one_se_k.map_or("none".to_string(), |k| k.to_string())
            );
            let _ = writeln!(w, "{:>4} {:>10} {:>10} {:>10}", "k", "gap", "s_k", "log_w");
            for e in &gap.entries {
                let _ = writeln!(w, "{:>4} {:>10.4} {:>10.4} {:>10.4}", e.k, e.gap, e.s_k, e.log_w);
            }
            let candidates: Vec<String> = r
                .candidates
                .iter()
                .map(|c| format!("{} (jump {:.4})", c.k, c.jump))
                .collect();
            let _ = writeln!(
                w,
                "jump-ranked candidates: {}",
                if candidates.is_empty() { "none".to_string() } else { candidates.join(", ") }
            );
        }
        (Some(chosen), None) => {
            let _ = writeln!(w, "chosen K = {} ({:?}); gap statistic not computed", chosen.k, chosen.provenance);
        }
        _ => {
            let _ = writeln!(w, "not available (no {})", files::GAP);
        }
    }

    let _ = writeln!(w, "\n== Subtype composition (severity order) ==");
    let _ = writeln!(
        w,
        "{:<8} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6}  {:<6} class",
        "subtype", "visits", "0", "0.5", "1", "2", "3", "group"
    );
    for row in &r.composition {
        let h = |l: CdrLevel| row.histogram.get(&l).copied().unwrap_or(0);
        let _ = writeln!(
            w,
            "{:<8} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6}  {:<6} {}",
            row.cluster,
            row.visits,
            h(CdrLevel::None),
            h(CdrLevel::Questionable),
            h(CdrLevel::Mild),
            h(CdrLevel::Moderate),
            h(CdrLevel::Severe),
            row.group.as_deref().unwrap_or("-"),
            row.class
        );
    }

    let _ = writeln!(w, "\n== Subtype groups ==");
    for g in &r.groups {
        let _ = writeln!(w, "{:<4} {:<20} {:>6} visits  {}", g.id, g.label, g.visits, g.clusters.join(", "));
    }

    let _ = writeln!(w, "\n== Inter-subtype variability ==");
    if r.inter.is_empty() {
        let _ = writeln!(w, "no CDR level has two or more homogeneous subtypes");
    }
    for inter in &r.inter {
        let members: Vec<String> = inter.clusters.iter().map(|&c| cluster_label(c)).collect();
        let _ = writeln!(w, "CDR {} ({})", inter.level, members.join(", "));
        for s in &inter.components {
            let _ = writeln!(
                w,
                "  {:<14} range {:>4}  variance {:.4}",
                s.component.column(),
                s.range,
                s.variance
            );
        }
    }

    let _ = writeln!(w, "\n== Intra-subtype variability ==");
    for intra in &r.intra {
        let medians: Vec<String> = intra.medians.values().map(|m| m.to_string()).collect();
        let _ = writeln!(
            w,
            "{:<8} medians [{}]  range {}  intact {}",
            cluster_label(intra.cluster),
            medians.join(", "),
            intra.range,
            intra.intact.len()
        );
    }

    let _ = writeln!(w, "\n== Group transitions (rows: source, columns: target) ==");
    let _ = write!(w, "{:<8}", "from/to");
    for label in &r.matrix.labels {
        let _ = write!(w, "{label:>6}");
    }
    let _ = writeln!(w, "{:>8}", "total");
    for (label, row) in r.matrix.labels.iter().zip(&r.matrix.counts) {
        let _ = write!(w, "{label:<8}");
        for c in row {
            let _ = write!(w, "{c:>6}");
        }
        let _ = writeln!(w, "{:>8}", row.iter().sum::<usize>());
    }
    let _ = writeln!(w, "transitions: {}", r.transition_count);
    let _ = writeln!(
        w,
        "progression {}, stable {}, regression {}; stage skips {}; long follow-ups {}",
        r.classes["progression"], r.classes["stable"], r.classes["regression"], r.stage_skips, r.long_followups
    );
    if let Some(agrees) = r.matrix_file_agrees {
        let _ = writeln!(w, "{} agrees with recount: {}", files::MATRIX, if agrees { "yes" } else { "NO" });
    }

    let _ = writeln!(w, "\n== Progression graph ==");
    match &r.progression_graph {
        Some(g) => {
            let _ = writeln!(
                w,
                "CDR {} -> CDR {}, edges with weight >= {}",
                g.source_cdr, g.target_cdr, g.min_weight
            );
            for e in &g.edges {
                let _ = writeln!(w, "  {} -> {}  {}", cluster_label(e.source), cluster_label(e.target), e.weight);
            }
            if g.edges.is_empty() {
                let _ = writeln!(w, "  no edges at this threshold");
            }
        }
        None => {
            let _ = writeln!(w, "not available (no {})", files::GRAPH);
        }
    }

    let _ = writeln!(w, "\n== Comorbidity ==");
    match &r.comorbidity {
        Some(c) => {
            let unit = if c.per_patient { "patients" } else { "visits" };
            for d in &c.top {
                let _ = writeln!(
                    w,
                    "{:<8} {:>6} {unit} ({:.1}% of {} visits)",
                    d.code,
                    d.count,
                    100.0 * d.count as f64 / c.total_visits.max(1) as f64,
                    c.total_visits
                );
            }
            let _ = write!(w, "{:<8}", "subtype");
            for d in &c.top {
                let _ = write!(w, "{:>8}", d.code);
            }
            let _ = writeln!(w);
            for cluster in &c.clusters {
                let _ = write!(w, "{:<8}", cluster_label(cluster.cluster));
                for d in &c.top {
                    let _ = write!(w, "{:>8}", cluster.counts.get(&d.code).copied().unwrap_or(0));
                }
                let _ = writeln!(w);
            }
        }
        None => {
            let _ = writeln!(w, "not available (no {})", files::COMORBIDITY_META);
        }
    }
    out
}
