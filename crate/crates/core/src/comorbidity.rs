//! Most frequent diagnosis codes and their spread across subtypes.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::clustering::Assignments;
use crate::cohort::Cohort;

#[derive(Debug, thiserror::Error)]
pub enum ComorbidityError {
    #[error("diagnosis `{0}` never occurs in the cohort")]
    UnknownDiagnosis(String),
    #[error("visit `{0}` has no cluster assignment")]
    UnassignedVisit(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagnosisCount {
    pub code: String,
    pub count: usize,
}

/// The `n` codes mentioned by the most visits, ties broken by code.
pub fn top_diagnoses(cohort: &Cohort, n: usize) -> Vec<DiagnosisCount> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for visit in &cohort.visits {
        for code in &visit.diagnoses {
            *counts.entry(code).or_default() += 1;
        }
    }
    let mut ranked: Vec<DiagnosisCount> = counts
        .into_iter()
        .map(|(code, count)| DiagnosisCount {
            code: code.to_string(),
            count,
        })
        .collect();
    ranked.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.code.cmp(&b.code)));
    ranked.truncate(n);
    ranked
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterComorbidity {
    pub cluster: usize,
    /// Visits (or patients, when deduplicating) in the cluster.
    pub size: usize,
    pub counts: BTreeMap<String, usize>,
}

impl ClusterComorbidity {
    pub fn share(&self, code: &str) -> f64 {
        if self.size == 0 {
            return 0.0;
        }
        self.counts.get(code).copied().unwrap_or(0) as f64 / self.size as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComorbidityProfile {
    pub per_patient: bool,
    /// Cohort-wide count for each listed code, in the order given.
    pub top: Vec<DiagnosisCount>,
    /// Clusters in severity order (mean Global CDR, then index).
    pub clusters: Vec<ClusterComorbidity>,
    pub total_visits: usize,
}

impl ComorbidityProfile {
    /// `cluster,diagnosis,count` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), ComorbidityError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        w.write_record(["cluster", "diagnosis", "count"])?;
        for cluster in &self.clusters {
            for d in &self.top {
                let count = cluster.counts.get(&d.code).copied().unwrap_or(0);
                w.write_record([cluster.cluster.to_string(), d.code.clone(), count.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Counts each listed diagnosis within every cluster.
///
/// With `per_patient`, a patient is counted once per cluster however many
/// of their visits mention the code.
pub fn comorbidity_profile(
    cohort: &Cohort,
    assignments: &Assignments,
    top: &[String],
    per_patient: bool,
) -> Result<ComorbidityProfile, ComorbidityError> {
    struct Acc<'a> {
        visits: usize,
        cdr_sum: f64,
        members: BTreeSet<&'a str>,
        counts: BTreeMap<&'a str, BTreeSet<&'a str>>,
        visit_counts: BTreeMap<&'a str, usize>,
    }
    let wanted: BTreeSet<&str> = top.iter().map(String::as_str).collect();
    let mut clusters: HashMap<usize, Acc> = HashMap::new();
    let mut totals: HashMap<&str, BTreeSet<&str>> = HashMap::new();
    let mut total_visit_counts: HashMap<&str, usize> = HashMap::new();

    for visit in &cohort.visits {
        let cluster = *assignments
            .get(&visit.visit_id)
            .ok_or_else(|| ComorbidityError::UnassignedVisit(visit.visit_id.clone()))?;
        let acc = clusters.entry(cluster).or_insert_with(|| Acc {
            visits: 0,
            cdr_sum: 0.0,
            members: BTreeSet::new(),
            counts: BTreeMap::new(),
            visit_counts: BTreeMap::new(),
        });
        acc.visits += 1;
        acc.cdr_sum += visit.global_cdr.value();
        acc.members.insert(&visit.patient_id);
        for code in visit.diagnoses.iter().filter(|c| wanted.contains(c.as_str())) {
            acc.counts.entry(code).or_default().insert(&visit.patient_id);
            *acc.visit_counts.entry(code).or_default() += 1;
            totals.entry(code).or_default().insert(&visit.patient_id);
            *total_visit_counts.entry(code).or_default() += 1;
        }
    }

    let mut top_counts = Vec::with_capacity(top.len());
    for code in top {
        let count = if per_patient {
            totals.get(code.as_str()).map(BTreeSet::len)
        } else {
            total_visit_counts.get(code.as_str()).copied()
        }
        .ok_or_else(|| ComorbidityError::UnknownDiagnosis(code.clone()))?;
        top_counts.push(DiagnosisCount {
            code: code.clone(),
            count,
        });
    }

    let mut ordered: Vec<(usize, Acc)> = clusters.into_iter().collect();
    ordered.sort_by(|(ca, a), (cb, b)| {
        (a.cdr_sum / a.visits as f64)
            .total_cmp(&(b.cdr_sum / b.visits as f64))
            .then(ca.cmp(cb))
    });
    let clusters = ordered
        .into_iter()
        .map(|(cluster, acc)| ClusterComorbidity {
            cluster,
            size: if per_patient { acc.members.len() } else { acc.visits },
            counts: top
                .iter()
                .map(|code| {
                    let n = if per_patient {
                        acc.counts.get(code.as_str()).map_or(0, BTreeSet::len)
                    } else {
                        acc.visit_counts.get(code.as_str()).copied().unwrap_or(0)
                    };
                    (code.clone(), n)
                })
                .collect(),
        })
        .collect();

    Ok(ComorbidityProfile {
        per_patient,
        top: top_counts,
        clusters,
        total_visits: cohort.len(),
    })
}
