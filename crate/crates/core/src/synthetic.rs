//! Synthetic cohorts with planted subtypes, transition propensities,
//! diagnosis prevalences and missingness.
//!
//! Real visit-level CDR data is private, so everything downstream is
//! exercised against these generators. The ground truth travels separately
//! from the cohort so ingestion never sees it.

use std::collections::BTreeMap;

use chrono::{Days, NaiveDate};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cohort::{
    CdrComponents, CdrLevel, CognitiveScores, CognitiveTest, Cohort, Component, Visit,
};
use crate::ingestion::Feature;
use crate::seed::{derive_indexed, rng_from};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeneratorError {
    #[error("invalid generator config: {field}: {reason}")]
    InvalidConfig { field: String, reason: String },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> GeneratorError {
    GeneratorError::InvalidConfig {
        field: field.into(),
        reason: reason.into(),
    }
}

/// One planted subtype.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSubtype {
    pub name: String,
    /// Component vector every visit starts from, in canonical order.
    pub components: [CdrLevel; 6],
    /// Global CDR levels and their relative frequencies.
    pub levels: Vec<(CdrLevel, f64)>,
    /// Index of the planted group this subtype belongs to.
    pub group: usize,
    /// Relative frequency of the subtype at a first visit.
    pub weight: f64,
}

/// Per-level mean and spread of a cognitive test score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreModel {
    pub test: CognitiveTest,
    /// Means for CDR 0, 0.5, 1, 2, 3.
    pub means: [f64; 5],
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub patients: usize,
    pub visits_min: usize,
    pub visits_max: usize,
    pub visits_mean: f64,
    pub subtypes: Vec<PlantedSubtype>,
    /// Row-stochastic (after normalization) subtype-to-subtype propensity.
    pub propensity: Vec<Vec<f64>>,
    /// Probability that a component moves one ordinal step.
    pub jitter: f64,
    /// Per-code prevalence for CDR 0, 0.5, 1, 2, 3.
    pub diagnoses: BTreeMap<String, [f64; 5]>,
    pub missingness: BTreeMap<Feature, f64>,
    pub scores: Vec<ScoreModel>,
    pub interval_mean_days: f64,
    pub interval_sd_days: f64,
    pub min_interval_days: u64,
    pub first_visit_from: NaiveDate,
    pub first_visit_span_days: u64,
    pub seed: u64,
}

/// Ground truth written next to a generated cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Planted subtype index of every visit.
    pub visits: BTreeMap<String, usize>,
    pub subtype_names: Vec<String>,
    /// Planted group of each subtype.
    pub groups: Vec<usize>,
    pub propensity: Vec<Vec<f64>>,
}

impl GroundTruth {
    /// Planted labels in the order of `ids`.
    pub fn labels_for(&self, ids: &[String]) -> Vec<usize> {
        ids.iter().map(|id| self.visits[id]).collect()
    }
}

const CODE_AD: &str = "G30.9";
const CODE_DEPRESSION: &str = "F32.9";
const CODE_MEMORY_LOSS: &str = "R41.3";
const CODE_PARKINSON: &str = "G20";
const CODE_SLEEP_APNEA: &str = "G47.33";

/// The five most common codes of the default presets, most frequent first
/// in a typical generated cohort.
pub const COMMON_DIAGNOSES: [&str; 5] = [
    CODE_MEMORY_LOSS,
    CODE_AD,
    CODE_DEPRESSION,
    CODE_SLEEP_APNEA,
    CODE_PARKINSON,
];

fn default_diagnoses() -> BTreeMap<String, [f64; 5]> {
    [
        (CODE_MEMORY_LOSS, [0.25, 0.40, 0.35, 0.30, 0.25]),
        (CODE_AD, [0.02, 0.15, 0.45, 0.55, 0.60]),
        (CODE_DEPRESSION, [0.12, 0.12, 0.10, 0.08, 0.06]),
        (CODE_SLEEP_APNEA, [0.10, 0.10, 0.08, 0.06, 0.04]),
        (CODE_PARKINSON, [0.04, 0.05, 0.06, 0.07, 0.07]),
        ("E03.9", [0.02, 0.02, 0.02, 0.02, 0.02]),
        ("E53.8", [0.015, 0.015, 0.015, 0.015, 0.015]),
    ]
    .into_iter()
    .map(|(c, p)| (c.to_string(), p))
    .collect()
}

/// Score models whose cohort-wide medians land near typical memory-clinic
/// values (MMSE ≈ 23, Boston Naming ≈ 14, Short Blessed ≈ 10, ...).
fn default_scores() -> Vec<ScoreModel> {
    use CognitiveTest::*;
    vec![
        ScoreModel { test: Mmse, means: [28.5, 25.0, 20.0, 14.0, 8.0], sd: 3.0 },
        ScoreModel { test: BostonNaming, means: [15.0, 14.0, 12.5, 10.0, 7.0], sd: 2.0 },
        ScoreModel { test: ShortBlessed, means: [2.0, 8.0, 14.0, 20.0, 24.0], sd: 4.0 },
        ScoreModel { test: VerbalFluency, means: [18.0, 14.0, 11.0, 8.0, 5.0], sd: 4.0 },
        ScoreModel { test: WordListRecall, means: [7.0, 4.0, 2.0, 1.0, 0.0], sd: 1.5 },
        ScoreModel { test: WordListMemory, means: [20.0, 15.0, 12.0, 9.0, 6.0], sd: 3.0 },
    ]
}

fn default_missingness(cdr_rate: f64, cognitive_rate: f64) -> BTreeMap<Feature, f64> {
    Feature::cdr_components()
        .into_iter()
        .map(|f| (f, cdr_rate))
        .chain(Feature::cognitive_tests().into_iter().map(|f| (f, cognitive_rate)))
        .collect()
}

fn lv(v: f64) -> CdrLevel {
    CdrLevel::from_value(v).expect("valid preset level")
}

fn comps(values: [f64; 6]) -> [CdrLevel; 6] {
    values.map(lv)
}

/// Group-level transition counts of a reference memory-clinic cohort,
/// six severity-ordered groups 0/0.5, 0.5, 0.5/1, 1, 1/2, 2/3.
pub const REFERENCE_GROUP_TRANSITIONS: [[usize; 6]; 6] = [
    [36, 15, 1, 0, 0, 1],
    [17, 170, 47, 55, 13, 1],
    [1, 19, 44, 66, 24, 10],
    [0, 5, 10, 74, 51, 20],
    [0, 2, 4, 9, 62, 45],
    [0, 0, 0, 1, 10, 79],
];

/// Spreads group-level rates over subtypes by size weight and scales each
/// subtype's progression mass by `pace` (1 = neutral).
fn subtype_propensity(
    subtypes: &[PlantedSubtype],
    group_rates: &[[usize; 6]; 6],
    pace: &[f64],
) -> Vec<Vec<f64>> {
    let mut group_weight = [0.0; 6];
    for s in subtypes {
        group_weight[s.group] += s.weight;
    }
    subtypes
        .iter()
        .zip(pace)
        .map(|(source, &pace)| {
            let rates = &group_rates[source.group];
            let row_total: usize = rates.iter().sum();
            let mut row: Vec<f64> = subtypes
                .iter()
                .map(|target| {
                    let mut p = rates[target.group] as f64 / row_total as f64 * target.weight
                        / group_weight[target.group];
                    if target.group > source.group {
                        p *= pace;
                    }
                    p
                })
                .collect();
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= total);
            row
        })
        .collect()
}

impl GeneratorConfig {
    /// Sixteen subtypes in six groups shaped after a reference memory-clinic
    /// analysis: about 1,850 patients and 2,700 visits.
    pub fn reference_default(seed: u64) -> Self {
        use CdrLevel::{Mild, Moderate, None, Questionable, Severe};
        let composite = |a, b| vec![(a, 0.6), (b, 0.4)];
        let one = |a| vec![(a, 1.0)];
        #[rustfmt::skip]
        #[allow(clippy::type_complexity)]
        let table: [(&str, [f64; 6], Vec<(CdrLevel, f64)>, usize, f64); 16] = [
            ("C1", [0.5, 0.5, 0.5, 0.5, 0.5, 0.0], one(Questionable), 1, 0.09),
            ("C2", [2.0, 2.0, 1.0, 1.0, 1.0, 1.0], composite(Mild, Moderate), 4, 0.05),
            ("C3", [0.0; 6], composite(None, Questionable), 0, 0.08),
            ("C4", [2.0, 1.0, 2.0, 2.0, 1.0, 1.0], composite(Moderate, Mild), 4, 0.04),
            ("C5", [3.0, 2.0, 2.0, 2.0, 2.0, 2.0], composite(Moderate, Severe), 5, 0.04),
            ("C6", [1.0, 0.5, 0.5, 0.5, 0.5, 0.0], one(Questionable), 1, 0.08),
            ("C7", [0.5, 0.0, 0.5, 0.5, 0.5, 0.0], one(Questionable), 1, 0.07),
            ("C8", [1.0, 1.0, 1.0, 1.0, 1.0, 0.0], one(Mild), 3, 0.07),
            ("C9", [0.5, 0.0, 0.0, 0.0, 0.0, 0.0], one(Questionable), 1, 0.08),
            ("C10", [1.0, 1.0, 0.5, 0.5, 0.5, 0.0], composite(Questionable, Mild), 2, 0.06),
            ("C11", [2.0, 1.0, 1.0, 1.0, 1.0, 0.0], one(Mild), 3, 0.05),
            ("C12", [3.0, 3.0, 3.0, 3.0, 3.0, 2.0], composite(Severe, Moderate), 5, 0.03),
            ("C13", [0.5, 0.5, 0.5, 0.5, 0.0, 0.0], one(Questionable), 1, 0.07),
            ("C14", [0.5, 0.5, 0.5, 0.0, 0.0, 0.0], one(Questionable), 1, 0.07),
            ("C15", [1.0, 0.5, 1.0, 1.0, 0.5, 0.0], composite(Questionable, Mild), 2, 0.06),
            ("C16", [1.0, 1.0, 1.0, 0.5, 1.0, 0.0], composite(Questionable, Mild), 2, 0.06),
        ];
        let subtypes: Vec<PlantedSubtype> = table
            .into_iter()
            .map(|(name, c, levels, group, weight)| PlantedSubtype {
                name: name.to_string(),
                components: comps(c),
                levels,
                group,
                weight,
            })
            .collect();
        // C13 is the planted high-progression subtype; C10 progresses a
        // little faster than its group, C7 slower.
        let mut pace = vec![1.0; 16];
        pace[9] = 2.5;
        pace[12] = 6.0;
        pace[6] = 0.4;
        let propensity = subtype_propensity(&subtypes, &REFERENCE_GROUP_TRANSITIONS, &pace);
        GeneratorConfig {
            patients: 1845,
            visits_min: 1,
            visits_max: 6,
            visits_mean: 2737.0 / 1845.0,
            subtypes,
            propensity,
            jitter: 0.02,
            diagnoses: default_diagnoses(),
            missingness: default_missingness(0.02, 0.08),
            scores: default_scores(),
            interval_mean_days: 400.0,
            interval_sd_days: 200.0,
            min_interval_days: 30,
            first_visit_from: NaiveDate::from_ymd_opt(2012, 6, 1).expect("valid date"),
            first_visit_span_days: 4 * 365,
            seed,
        }
    }

    /// Four subtypes far apart in component space (CDR 0, 0.5, 1 and 2/3),
    /// about 230 patients and 350 visits.
    pub fn planted_four(seed: u64) -> Self {
        use CdrLevel::{Mild, Moderate, None, Questionable, Severe};
        let subtypes = vec![
            PlantedSubtype {
                name: "A".into(),
                components: comps([0.0; 6]),
                levels: vec![(None, 1.0)],
                group: 0,
                weight: 0.25,
            },
            PlantedSubtype {
                name: "B".into(),
                components: comps([1.0, 0.5, 0.5, 0.5, 0.5, 0.0]),
                levels: vec![(Questionable, 1.0)],
                group: 1,
                weight: 0.25,
            },
            PlantedSubtype {
                name: "C".into(),
                components: comps([2.0, 1.0, 1.0, 1.0, 1.0, 1.0]),
                levels: vec![(Mild, 1.0)],
                group: 2,
                weight: 0.25,
            },
            PlantedSubtype {
                name: "D".into(),
                components: comps([3.0, 3.0, 3.0, 3.0, 2.0, 2.0]),
                levels: vec![(Moderate, 0.5), (Severe, 0.5)],
                group: 3,
                weight: 0.25,
            },
        ];
        let propensity = vec![
            vec![0.7, 0.2, 0.1, 0.0],
            vec![0.1, 0.6, 0.2, 0.1],
            vec![0.0, 0.1, 0.6, 0.3],
            vec![0.0, 0.0, 0.1, 0.9],
        ];
        GeneratorConfig {
            patients: 230,
            visits_mean: 1.5,
            subtypes,
            propensity,
            jitter: 0.0,
            missingness: default_missingness(0.0, 0.05),
            ..GeneratorConfig::reference_default(seed)
        }
    }

    pub fn validate(&self) -> Result<(), GeneratorError> {
        let k = self.subtypes.len();
        if k == 0 {
            return Err(invalid("subtypes", "at least one subtype is required"));
        }
        if self.visits_min == 0 || self.visits_min > self.visits_max {
            return Err(invalid("visits_min", "need 1 <= visits_min <= visits_max"));
        }
        if !(self.visits_mean >= self.visits_min as f64 && self.visits_mean <= self.visits_max as f64) {
            return Err(invalid("visits_mean", "must lie within [visits_min, visits_max]"));
        }
        for (i, s) in self.subtypes.iter().enumerate() {
            if !(s.weight >= 0.0 && s.weight.is_finite()) {
                return Err(invalid(format!("subtypes[{i}].weight"), "must be finite and non-negative"));
            }
            if s.levels.is_empty() || s.levels.iter().any(|&(_, w)| w.is_nan() || w < 0.0) || s.levels.iter().all(|&(_, w)| w == 0.0) {
                return Err(invalid(format!("subtypes[{i}].levels"), "need at least one positive level weight"));
            }
        }
        if self.subtypes.iter().all(|s| s.weight == 0.0) {
            return Err(invalid("subtypes", "all size weights are zero"));
        }
        if self.propensity.len() != k {
            return Err(invalid("propensity", format!("expected {k} rows")));
        }
        for (i, row) in self.propensity.iter().enumerate() {
            if row.len() != k {
                return Err(invalid(format!("propensity[{i}]"), format!("expected {k} columns")));
            }
            if row.iter().any(|&p| !(p >= 0.0 && p.is_finite())) || row.iter().sum::<f64>() <= 0.0 {
                return Err(invalid(format!("propensity[{i}]"), "entries must be non-negative with a positive sum"));
            }
        }
        if !(0.0..=1.0).contains(&self.jitter) {
            return Err(invalid("jitter", "must be a probability"));
        }
        for (code, p) in &self.diagnoses {
            if p.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(invalid(format!("diagnoses.{code}"), "prevalences must be probabilities"));
            }
        }
        for (feature, &rate) in &self.missingness {
            if !(0.0..=0.5).contains(&rate) {
                return Err(invalid(format!("missingness.{feature}"), "rate must lie in [0, 0.5]"));
            }
        }
        if !(self.interval_sd_days >= 0.0 && self.interval_mean_days > 0.0) {
            return Err(invalid("interval_mean_days", "mean must be positive and sd non-negative"));
        }
        if self.min_interval_days == 0 {
            return Err(invalid("min_interval_days", "visits of one patient need distinct dates"));
        }
        Ok(())
    }
}

fn jitter_level<R: Rng>(level: CdrLevel, p: f64, rng: &mut R) -> CdrLevel {
    if p == 0.0 || !rng.random_bool(p) {
        return level;
    }
    let up = rng.random_bool(0.5);
    level.step(up).or_else(|| level.step(!up)).unwrap_or(level)
}

fn visit_count<R: Rng>(config: &GeneratorConfig, rng: &mut R) -> usize {
    let extra_mean = config.visits_mean - config.visits_min as f64;
    let extra = if extra_mean > 0.0 {
        // Poisson draws are exact integers stored as f64.
        let poisson = Poisson::new(extra_mean).expect("positive mean");
        poisson.sample(rng) as usize
    } else {
        0
    };
    (config.visits_min + extra).min(config.visits_max)
}

struct Samplers {
    first: WeightedIndex<f64>,
    next: Vec<WeightedIndex<f64>>,
    levels: Vec<WeightedIndex<f64>>,
    interval: Normal<f64>,
}

fn patient_visits(
    config: &GeneratorConfig,
    samplers: &Samplers,
    patient: usize,
) -> Vec<(Visit, usize)> {
    let mut rng: ChaCha8Rng = rng_from(derive_indexed(config.seed, "synthetic-patient", patient as u64));
    let patient_id = format!("P{:05}", patient + 1);
    let count = visit_count(config, &mut rng);
    let mut date = config.first_visit_from
        + Days::new(rng.random_range(0..=config.first_visit_span_days));
    let mut subtype = samplers.first.sample(&mut rng);
    let mut out = Vec::with_capacity(count);

    for j in 0..count {
        if j > 0 {
            subtype = samplers.next[subtype].sample(&mut rng);
            let gap = samplers.interval.sample(&mut rng).round();
            let gap = (gap.max(0.0) as u64).max(config.min_interval_days);
            date = date + Days::new(gap);
        }
        let planted = &config.subtypes[subtype];
        let global_cdr = planted.levels[samplers.levels[subtype].sample(&mut rng)].0;
        let mut components = CdrComponents::default();
        for c in Component::ALL {
            components.set(c, Some(jitter_level(planted.components[c.index()], config.jitter, &mut rng)));
        }
        let mut cognitive = CognitiveScores::default();
        for model in &config.scores {
            let mean = model.means[global_cdr.rank()];
            let raw = Normal::new(mean, model.sd).expect("finite sd").sample(&mut rng).round().max(0.0);
            let capped = model.test.max_score().map_or(raw, |max| raw.min(max as f64));
            cognitive.set(model.test, Some(capped as u32));
        }
        let diagnoses = config
            .diagnoses
            .iter()
            .filter(|(_, p)| rng.random_bool(p[global_cdr.rank()]))
            .map(|(code, _)| code.clone())
            .collect();
        let mut visit = Visit {
            visit_id: format!("{patient_id}-V{}", j + 1),
            patient_id: patient_id.clone(),
            visit_date: date,
            global_cdr,
            components,
            cognitive,
            diagnoses,
        };
        // Missingness goes last so it never influences the planted values.
        for (&feature, &rate) in &config.missingness {
            if rate > 0.0 && rng.random_bool(rate) {
                match feature {
                    Feature::Cdr(c) => visit.components.set(c, None),
                    Feature::Cognitive(t) => visit.cognitive.set(t, None),
                }
            }
        }
        out.push((visit, subtype));
    }
    out
}

/// Generates a cohort and its planted ground truth. Identical configs give
/// identical cohorts regardless of thread count.
pub fn generate_cohort(config: &GeneratorConfig) -> Result<(Cohort, GroundTruth), GeneratorError> {
    config.validate()?;
    let samplers = Samplers {
        first: WeightedIndex::new(config.subtypes.iter().map(|s| s.weight))
            .map_err(|e| invalid("subtypes.weight", e.to_string()))?,
        next: config
            .propensity
            .iter()
            .enumerate()
            .map(|(i, row)| {
                WeightedIndex::new(row).map_err(|e| invalid(format!("propensity[{i}]"), e.to_string()))
            })
            .collect::<Result<_, _>>()?,
        levels: config
            .subtypes
            .iter()
            .enumerate()
            .map(|(i, s)| {
                WeightedIndex::new(s.levels.iter().map(|&(_, w)| w))
                    .map_err(|e| invalid(format!("subtypes[{i}].levels"), e.to_string()))
            })
            .collect::<Result<_, _>>()?,
        interval: Normal::new(config.interval_mean_days, config.interval_sd_days)
            .map_err(|e| invalid("interval_sd_days", e.to_string()))?,
    };

    let per_patient: Vec<Vec<(Visit, usize)>> = (0..config.patients)
        .into_par_iter()
        .map(|p| patient_visits(config, &samplers, p))
        .collect();

    let mut visits = Vec::new();
    let mut truth = BTreeMap::new();
    for (visit, subtype) in per_patient.into_iter().flatten() {
        truth.insert(visit.visit_id.clone(), subtype);
        visits.push(visit);
    }
    let ground_truth = GroundTruth {
        visits: truth,
        subtype_names: config.subtypes.iter().map(|s| s.name.clone()).collect(),
        groups: config.subtypes.iter().map(|s| s.group).collect(),
        propensity: config.propensity.clone(),
    };
    Ok((Cohort::new(visits, format!("synthetic(seed={})", config.seed)), ground_truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::validate_cohort;
    use crate::ingestion::{write_cohort, MissingnessSummary};

    fn small(seed: u64) -> GeneratorConfig {
        GeneratorConfig {
            patients: 200,
            ..GeneratorConfig::reference_default(seed)
        }
    }

    #[test]
    fn zero_patients_is_empty() {
        let config = GeneratorConfig {
            patients: 0,
            ..GeneratorConfig::planted_four(1)
        };
        let (cohort, truth) = generate_cohort(&config).unwrap();
        assert!(cohort.is_empty());
        assert!(truth.visits.is_empty());
    }

    #[test]
    fn same_seed_same_bytes() {
        let bytes = |seed| {
            let (cohort, _) = generate_cohort(&small(seed)).unwrap();
            let mut buf = Vec::new();
            write_cohort(&cohort, &mut buf).unwrap();
            buf
        };
        assert_eq!(bytes(4), bytes(4));
        assert_ne!(bytes(4), bytes(5));
    }

    #[test]
    fn generated_cohorts_validate() {
        let (cohort, _) = generate_cohort(&small(2)).unwrap();
        assert!(validate_cohort(&cohort).is_empty());
    }

    #[test]
    fn zero_jitter_reproduces_planted_vectors() {
        let config = GeneratorConfig {
            jitter: 0.0,
            missingness: BTreeMap::new(),
            ..small(3)
        };
        let (cohort, truth) = generate_cohort(&config).unwrap();
        for visit in &cohort.visits {
            let planted = &config.subtypes[truth.visits[&visit.visit_id]];
            assert_eq!(visit.components.levels(), Some(planted.components));
            assert!(planted.levels.iter().any(|&(l, _)| l == visit.global_cdr));
        }
    }

    #[test]
    fn missing_rate_concentrates() {
        let config = GeneratorConfig {
            patients: 500,
            missingness: default_missingness(0.05, 0.05),
            ..GeneratorConfig::reference_default(8)
        };
        let (cohort, _) = generate_cohort(&config).unwrap();
        let summary = MissingnessSummary::measure(&cohort, &Feature::all());
        for (feature, count) in &summary.features {
            assert!((0.03..=0.07).contains(&count.rate), "{feature}: {}", count.rate);
        }
    }

    #[test]
    fn reference_preset_matches_target_scale() {
        let (cohort, _) = generate_cohort(&GeneratorConfig::reference_default(1)).unwrap();
        assert_eq!(cohort.patient_count(), 1845);
        assert!((2500..=2950).contains(&cohort.len()), "{} visits", cohort.len());
    }

    #[test]
    fn propensity_rows_are_stochastic() {
        let config = GeneratorConfig::reference_default(0);
        for row in &config.propensity {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_configs_name_the_field() {
        let mut config = GeneratorConfig::planted_four(0);
        config.missingness.insert(Feature::Cdr(Component::Memory), 0.7);
        match generate_cohort(&config).unwrap_err() {
            GeneratorError::InvalidConfig { field, .. } => assert_eq!(field, "missingness.memory"),
        }
        let mut config = GeneratorConfig::planted_four(0);
        config.propensity[1][2] = -0.1;
        assert!(generate_cohort(&config).is_err());
    }
}
