//! A hand-built cohort whose grouping and group transition counts equal a
//! reference memory-clinic analysis: 16 subtypes in six groups and 892
//! group-to-group transitions.
//!
//! Every transition comes from its own two-visit patient. Cluster indices
//! are 0-based, so cluster 9 is displayed as `C10`.

use chrono::{Days, NaiveDate};

use crate::clustering::Assignments;
use crate::cohort::{CdrComponents, CdrLevel, CognitiveScores, Cohort, Visit};
use crate::synthetic::{GeneratorConfig, REFERENCE_GROUP_TRANSITIONS};

/// Member clusters (0-based) of the six groups in severity order.
pub const GROUP_CLUSTERS: [&[usize]; 6] = [
    &[2],
    &[0, 5, 6, 8, 12, 13],
    &[9, 14, 15],
    &[7, 10],
    &[1, 3],
    &[4, 11],
];

/// Global CDR levels each group's visits alternate between.
const GROUP_LEVELS: [&[CdrLevel]; 6] = [
    &[CdrLevel::None, CdrLevel::Questionable],
    &[CdrLevel::Questionable],
    &[CdrLevel::Questionable, CdrLevel::Mild],
    &[CdrLevel::Mild],
    &[CdrLevel::Mild, CdrLevel::Moderate],
    &[CdrLevel::Moderate, CdrLevel::Severe],
];

/// `C10 → C15` transitions rated 0.5 then 1.
pub const C10_TO_C15_AT_MILD: usize = 4;
/// Interval of the single `G0 → G5` transition.
pub const G0_TO_G5_DAYS: u64 = 184;
/// Interval of the single `G1 → G5` transition.
pub const G1_TO_G5_DAYS: u64 = 679;

struct Builder {
    visits: Vec<Visit>,
    assignments: Assignments,
    components: Vec<[CdrLevel; 6]>,
    /// Per-cluster counter driving level alternation.
    level_turn: Vec<usize>,
}

impl Builder {
    fn visit(
        &mut self,
        patient: &str,
        suffix: usize,
        date: NaiveDate,
        cluster: usize,
        level: Option<CdrLevel>,
        group: usize,
    ) {
        let level = level.unwrap_or_else(|| {
            let levels = GROUP_LEVELS[group];
            let l = levels[self.level_turn[cluster] % levels.len()];
            self.level_turn[cluster] += 1;
            l
        });
        let visit_id = format!("{patient}-V{suffix}");
        self.assignments.insert(visit_id.clone(), cluster);
        self.visits.push(Visit {
            visit_id,
            patient_id: patient.to_string(),
            visit_date: date,
            global_cdr: level,
            components: CdrComponents::complete(self.components[cluster]),
            cognitive: CognitiveScores::default(),
            diagnoses: Default::default(),
        });
    }
}

/// The fixture cohort and its cluster assignments.
pub fn reference_transition_fixture() -> (Cohort, Assignments) {
    let planted = GeneratorConfig::reference_default(0).subtypes;
    let mut b = Builder {
        visits: Vec::new(),
        assignments: Assignments::new(),
        components: planted.iter().map(|s| s.components).collect(),
        level_turn: vec![0; 16],
    };
    let start = NaiveDate::from_ymd_opt(2013, 1, 1).expect("valid date");
    let mut patient = 0usize;

    for (gi, row) in REFERENCE_GROUP_TRANSITIONS.iter().enumerate() {
        for (gj, &count) in row.iter().enumerate() {
            for t in 0..count {
                patient += 1;
                let id = format!("F{patient:04}");
                let first = start + Days::new((patient as u64 * 7) % 900);
                let days = match (gi, gj) {
                    (0, 5) => G0_TO_G5_DAYS,
                    (1, 5) => G1_TO_G5_DAYS,
                    _ => 90 + (patient as u64 * 37) % 420,
                };
                let sources = GROUP_CLUSTERS[gi];
                let targets = GROUP_CLUSTERS[gj];
                let (source, target, levels) = if gi == 2 && gj == 2 && t < C10_TO_C15_AT_MILD {
                    (9, 14, (Some(CdrLevel::Questionable), Some(CdrLevel::Mild)))
                } else {
                    let source = sources[t % sources.len()];
                    let mut target = targets[(t / sources.len()) % targets.len()];
                    if (source, target) == (9, 14) {
                        target = 15;
                    }
                    (source, target, (None, None))
                };
                b.visit(&id, 1, first, source, levels.0, gi);
                b.visit(&id, 2, first + Days::new(days), target, levels.1, gj);
            }
        }
    }
    (Cohort::new(b.visits, "reference-transition-fixture"), b.assignments)
}
