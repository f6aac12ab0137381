//! Longitudinal movement of patients between subtypes: consecutive-visit
//! transition records, group/subtype transition matrices, and the
//! thresholded progression graph.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{cluster_label, Assignments};
use crate::cohort::{CdrLevel, Cohort, Visit};
use crate::subtyping::{SubtypeGrouping, SubtypeProfile};

/// Follow-up intervals longer than this many days are flagged.
pub const DEFAULT_LONG_THRESHOLD_DAYS: i64 = 365;
/// Edges lighter than this are dropped from the progression graph.
pub const DEFAULT_MIN_WEIGHT: usize = 4;

#[derive(Debug, thiserror::Error)]
pub enum TransitionError {
    #[error("patient `{patient}` has two visits on {date}; transition order is ambiguous")]
    DuplicateDate { patient: String, date: NaiveDate },
    #[error("visit `{0}` has no cluster assignment")]
    UnassignedVisit(String),
    #[error("cluster {0} belongs to no subtype group")]
    UngroupedCluster(usize),
    #[error("group index {0} is not in the grouping")]
    UnknownGroup(usize),
    #[error("malformed matrix: {0}")]
    MalformedMatrix(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionClass {
    Progression,
    Stable,
    Regression,
}

/// One pair of consecutive visits of a patient.
///
/// Clusters and groups are 0-based indices; groups follow severity order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub patient_id: String,
    pub source_visit: String,
    pub target_visit: String,
    pub source_date: NaiveDate,
    pub target_date: NaiveDate,
    pub source_cluster: usize,
    pub target_cluster: usize,
    pub source_group: usize,
    pub target_group: usize,
    /// Global CDR recorded at each visit.
    pub source_cdr: CdrLevel,
    pub target_cdr: CdrLevel,
    pub interval_days: i64,
    pub class: TransitionClass,
    pub stage_skip: bool,
    pub long_followup: bool,
}

/// Outcome of [`classify_transition`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub class: TransitionClass,
    pub stage_skip: bool,
    pub long_followup: bool,
}

/// Classifies a move between two groups given by severity index.
///
/// A progression skips a stage when some other group's levels all lie
/// strictly between the source group's highest and the target group's
/// lowest level (e.g. 0.5 → 2/3 jumps over a CDR-1 group).
pub fn classify_transition(
    source_group: usize,
    target_group: usize,
    grouping: &SubtypeGrouping,
    interval_days: i64,
    long_threshold: i64,
) -> Result<Classification, TransitionError> {
    let groups = &grouping.groups;
    for g in [source_group, target_group] {
        if g >= groups.len() {
            return Err(TransitionError::UnknownGroup(g));
        }
    }
    let class = match target_group.cmp(&source_group) {
        std::cmp::Ordering::Greater => TransitionClass::Progression,
        std::cmp::Ordering::Equal => TransitionClass::Stable,
        std::cmp::Ordering::Less => TransitionClass::Regression,
    };
    let stage_skip = class == TransitionClass::Progression && {
        let low = groups[source_group].levels().into_iter().max();
        let high = groups[target_group].levels().into_iter().min();
        match (low, high) {
            (Some(low), Some(high)) => groups.iter().enumerate().any(|(i, g)| {
                let levels = g.levels();
                i != source_group
                    && i != target_group
                    && !levels.is_empty()
                    && levels.iter().all(|&l| l > low && l < high)
            }),
            _ => false,
        }
    };
    Ok(Classification {
        class,
        stage_skip,
        long_followup: interval_days > long_threshold,
    })
}

fn patient_records(
    patient: &str,
    visits: &[&Visit],
    assignments: &Assignments,
    grouping: &SubtypeGrouping,
    long_threshold: i64,
) -> Result<Vec<TransitionRecord>, TransitionError> {
    let locate = |v: &Visit| -> Result<(usize, usize), TransitionError> {
        let cluster = *assignments
            .get(&v.visit_id)
            .ok_or_else(|| TransitionError::UnassignedVisit(v.visit_id.clone()))?;
        let group = grouping
            .group_of(cluster)
            .ok_or(TransitionError::UngroupedCluster(cluster))?;
        Ok((cluster, group))
    };
    let mut records = Vec::with_capacity(visits.len().saturating_sub(1));
    for pair in visits.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if a.visit_date == b.visit_date {
            return Err(TransitionError::DuplicateDate {
                patient: patient.to_string(),
                date: a.visit_date,
            });
        }
        let (source_cluster, source_group) = locate(a)?;
        let (target_cluster, target_group) = locate(b)?;
        let interval_days = (b.visit_date - a.visit_date).num_days();
        let c = classify_transition(source_group, target_group, grouping, interval_days, long_threshold)?;
        records.push(TransitionRecord {
            patient_id: patient.to_string(),
            source_visit: a.visit_id.clone(),
            target_visit: b.visit_id.clone(),
            source_date: a.visit_date,
            target_date: b.visit_date,
            source_cluster,
            target_cluster,
            source_group,
            target_group,
            source_cdr: a.global_cdr,
            target_cdr: b.global_cdr,
            interval_days,
            class: c.class,
            stage_skip: c.stage_skip,
            long_followup: c.long_followup,
        });
    }
    Ok(records)
}

/// One record per consecutive visit pair of every patient, sorted by
/// patient id and source date. Single-visit patients contribute nothing.
pub fn extract_transitions(
    cohort: &Cohort,
    assignments: &Assignments,
    grouping: &SubtypeGrouping,
    long_threshold: i64,
) -> Result<Vec<TransitionRecord>, TransitionError> {
    let patients: Vec<(&str, Vec<&Visit>)> = cohort.by_patient().into_iter().collect();
    let per_patient: Vec<Vec<TransitionRecord>> = patients
        .par_iter()
        .map(|(patient, visits)| patient_records(patient, visits, assignments, grouping, long_threshold))
        .collect::<Result<_, _>>()?;
    let mut records: Vec<TransitionRecord> = per_patient.into_iter().flatten().collect();
    records.sort_by(|a, b| {
        a.patient_id
            .cmp(&b.patient_id)
            .then(a.source_date.cmp(&b.source_date))
    });
    Ok(records)
}

/// Square count matrix; rows are sources, columns targets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<usize>>,
}

impl TransitionMatrix {
    pub fn zeros(labels: Vec<String>) -> Self {
        let m = labels.len();
        TransitionMatrix {
            labels,
            counts: vec![vec![0; m]; m],
        }
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, from: usize, to: usize) -> usize {
        self.counts[from][to]
    }

    pub fn row(&self, from: usize) -> &[usize] {
        &self.counts[from]
    }

    pub fn row_sum(&self, from: usize) -> usize {
        self.counts[from].iter().sum()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    /// Collapses a subtype-level matrix onto groups.
    pub fn aggregate(&self, grouping: &SubtypeGrouping) -> Result<TransitionMatrix, TransitionError> {
        let mut out = TransitionMatrix::zeros(grouping.labels());
        for (i, row) in self.counts.iter().enumerate() {
            let gi = grouping.group_of(i).ok_or(TransitionError::UngroupedCluster(i))?;
            for (j, &count) in row.iter().enumerate() {
                if count == 0 {
                    continue;
                }
                let gj = grouping.group_of(j).ok_or(TransitionError::UngroupedCluster(j))?;
                out.counts[gi][gj] += count;
            }
        }
        Ok(out)
    }

    /// Writes the matrix with a `from/to` corner cell and label header.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), TransitionError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        let mut header = vec!["from/to".to_string()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        for (label, row) in self.labels.iter().zip(&self.counts) {
            let mut record = vec![label.clone()];
            record.extend(row.iter().map(|c| c.to_string()));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<TransitionMatrix, TransitionError> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let labels: Vec<String> = r.headers()?.iter().skip(1).map(str::to_string).collect();
        let mut counts = Vec::with_capacity(labels.len());
        for (i, record) in r.records().enumerate() {
            let record = record?;
            if record.get(0) != labels.get(i).map(String::as_str) {
                return Err(TransitionError::MalformedMatrix(format!("row {i} label mismatch")));
            }
            let row = record
                .iter()
                .skip(1)
                .map(|c| c.parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| TransitionError::MalformedMatrix(e.to_string()))?;
            if row.len() != labels.len() {
                return Err(TransitionError::MalformedMatrix(format!("row {i} has {} cells", row.len())));
            }
            counts.push(row);
        }
        if counts.len() != labels.len() {
            return Err(TransitionError::MalformedMatrix("matrix is not square".into()));
        }
        Ok(TransitionMatrix { labels, counts })
    }
}

/// Group-level transition counts in severity order.
pub fn transition_matrix(records: &[TransitionRecord], grouping: &SubtypeGrouping) -> TransitionMatrix {
    let mut matrix = TransitionMatrix::zeros(grouping.labels());
    for r in records {
        matrix.counts[r.source_group][r.target_group] += 1;
    }
    matrix
}

/// Subtype-level transition counts over clusters `0..k`.
pub fn subtype_matrix(records: &[TransitionRecord], k: usize) -> TransitionMatrix {
    let mut matrix = TransitionMatrix::zeros((0..k).map(cluster_label).collect());
    for r in records {
        matrix.counts[r.source_cluster][r.target_cluster] += 1;
    }
    matrix
}

pub fn write_transitions_csv<W: Write>(records: &[TransitionRecord], writer: W) -> Result<(), TransitionError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    if records.is_empty() {
        // serde only emits a header alongside the first row
        w.write_record(TRANSITIONS_HEADER)?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub const TRANSITIONS_HEADER: [&str; 15] = [
    "patient_id",
    "source_visit",
    "target_visit",
    "source_date",
    "target_date",
    "source_cluster",
    "target_cluster",
    "source_group",
    "target_group",
    "source_cdr",
    "target_cdr",
    "interval_days",
    "class",
    "stage_skip",
    "long_followup",
];

pub fn read_transitions_csv<R: Read>(reader: R) -> Result<Vec<TransitionRecord>, TransitionError> {
    let mut r = csv::Reader::from_reader(reader);
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub source: usize,
    pub target: usize,
    pub weight: usize,
}

/// Weighted directed subtype graph of transitions from one Global CDR level
/// to another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressionGraph {
    pub source_cdr: CdrLevel,
    pub target_cdr: CdrLevel,
    pub min_weight: usize,
    pub nodes: Vec<usize>,
    pub edges: Vec<GraphEdge>,
}

impl ProgressionGraph {
    pub fn edge(&self, source: usize, target: usize) -> Option<usize> {
        self.edges
            .iter()
            .find(|e| e.source == source && e.target == target)
            .map(|e| e.weight)
    }

    pub fn outgoing_weight(&self, source: usize) -> usize {
        self.edges.iter().filter(|e| e.source == source).map(|e| e.weight).sum()
    }
}

/// Builds the progression graph between subtypes carrying `source_cdr` and
/// subtypes carrying `target_cdr`.
///
/// A transition counts only when the source visit was rated `source_cdr`
/// and the target visit `target_cdr`, so a composite subtype contributes
/// just its visits at the relevant level. Edges below `min_weight` are
/// dropped; nodes are kept even if isolated.
pub fn progression_graph(
    records: &[TransitionRecord],
    profiles: &[SubtypeProfile],
    source_cdr: CdrLevel,
    target_cdr: CdrLevel,
    min_weight: usize,
) -> ProgressionGraph {
    let carries: HashMap<usize, (bool, bool)> = profiles
        .iter()
        .map(|p| {
            (
                p.cluster,
                (p.homogeneity.contains(source_cdr), p.homogeneity.contains(target_cdr)),
            )
        })
        .collect();
    let nodes: BTreeSet<usize> = carries
        .iter()
        .filter(|(_, &(s, t))| s || t)
        .map(|(&c, _)| c)
        .collect();

    let mut weights: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for r in records {
        let source_ok = carries.get(&r.source_cluster).is_some_and(|c| c.0);
        let target_ok = carries.get(&r.target_cluster).is_some_and(|c| c.1);
        if source_ok && target_ok && r.source_cdr == source_cdr && r.target_cdr == target_cdr {
            *weights.entry((r.source_cluster, r.target_cluster)).or_default() += 1;
        }
    }
    ProgressionGraph {
        source_cdr,
        target_cdr,
        min_weight,
        nodes: nodes.into_iter().collect(),
        edges: weights
            .into_iter()
            .filter(|&(_, w)| w >= min_weight)
            .map(|((source, target), weight)| GraphEdge { source, target, weight })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::tests::visit;
    use crate::subtyping::{Homogeneity, SubtypeGroup};
    use CdrLevel::*;

    /// Six groups shaped like the reference grouping: 0/0.5, 0.5, 0.5/1, 1,
    /// 1/2, 2/3, with cluster `i` in group `i`.
    fn six_groups() -> SubtypeGrouping {
        let signatures = [
            Homogeneity::Composite(None, Questionable),
            Homogeneity::Homogeneous(Questionable),
            Homogeneity::Composite(Questionable, Mild),
            Homogeneity::Homogeneous(Mild),
            Homogeneity::Composite(Mild, Moderate),
            Homogeneity::Composite(Moderate, Severe),
        ];
        SubtypeGrouping {
            purity: 0.9,
            groups: signatures
                .into_iter()
                .enumerate()
                .map(|(i, s)| SubtypeGroup {
                    id: format!("G{i}"),
                    label: s.to_string(),
                    signature: s,
                    clusters: vec![i],
                    visits: 1,
                    mean_global_cdr: i as f64,
                })
                .collect(),
        }
    }

    #[test]
    fn classification_examples() {
        let g = six_groups();
        let c = classify_transition(1, 3, &g, 100, 365).unwrap();
        assert_eq!(c.class, TransitionClass::Progression);
        assert!(!c.stage_skip);
        assert_eq!(classify_transition(4, 1, &g, 100, 365).unwrap().class, TransitionClass::Regression);
        assert_eq!(classify_transition(2, 2, &g, 100, 365).unwrap().class, TransitionClass::Stable);
        let c = classify_transition(1, 5, &g, 679, 365).unwrap();
        assert_eq!(c.class, TransitionClass::Progression);
        assert!(c.stage_skip);
        assert!(c.long_followup);
        assert!(!classify_transition(0, 5, &g, 184, 365).unwrap().long_followup);
        assert!(matches!(
            classify_transition(0, 9, &g, 1, 365),
            Err(TransitionError::UnknownGroup(9))
        ));
    }

    #[test]
    fn regression_never_skips() {
        let g = six_groups();
        assert!(!classify_transition(5, 1, &g, 10, 365).unwrap().stage_skip);
    }

    fn cohort_and_assignments(visits: &[(&str, &str, &str, usize)]) -> (Cohort, Assignments) {
        let cohort = Cohort::new(
            visits.iter().map(|&(id, p, d, _)| visit(id, p, d, Questionable)).collect(),
            "t",
        );
        let assignments = visits.iter().map(|&(id, _, _, c)| (id.to_string(), c)).collect();
        (cohort, assignments)
    }

    #[test]
    fn extraction_examples() {
        let (cohort, assignments) = cohort_and_assignments(&[
            ("A1", "A", "2015-01-01", 1),
            ("B2", "B", "2015-07-04", 3),
            ("B1", "B", "2015-01-01", 1),
            ("C1", "C", "2014-01-01", 0),
            ("C3", "C", "2016-01-01", 2),
            ("C2", "C", "2015-01-01", 1),
        ]);
        let records = extract_transitions(&cohort, &assignments, &six_groups(), 365).unwrap();
        assert_eq!(records.len(), 3);
        assert_eq!(records[0].patient_id, "B");
        assert_eq!(records[0].interval_days, 184);
        assert_eq!(records[1].target_visit, records[2].source_visit);
        assert_eq!(records[1].source_visit, "C1");
    }

    #[test]
    fn same_day_visits_are_rejected() {
        let (cohort, assignments) = cohort_and_assignments(&[
            ("X1", "X", "2015-01-01", 1),
            ("X2", "X", "2015-01-01", 2),
        ]);
        assert!(matches!(
            extract_transitions(&cohort, &assignments, &six_groups(), 365),
            Err(TransitionError::DuplicateDate { .. })
        ));
    }

    #[test]
    fn empty_matrix_is_zero_and_round_trips() {
        let g = six_groups();
        let m = transition_matrix(&[], &g);
        assert_eq!(m.total(), 0);
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("from/to,G0,G1"));
        assert_eq!(TransitionMatrix::read_csv(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn records_round_trip_through_csv() {
        let (cohort, assignments) = cohort_and_assignments(&[
            ("B1", "B", "2015-01-01", 1),
            ("B2", "B", "2015-07-04", 5),
        ]);
        let records = extract_transitions(&cohort, &assignments, &six_groups(), 365).unwrap();
        let mut buf = Vec::new();
        write_transitions_csv(&records, &mut buf).unwrap();
        assert_eq!(read_transitions_csv(buf.as_slice()).unwrap(), records);

        let mut empty = Vec::new();
        write_transitions_csv(&[], &mut empty).unwrap();
        assert!(read_transitions_csv(empty.as_slice()).unwrap().is_empty());
    }
}
