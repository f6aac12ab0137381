//! Reading and writing the canonical cohort CSV, missingness reporting and
//! column-wise median imputation.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::cohort::{
    CdrComponents, CdrLevel, CognitiveScores, CognitiveTest, Cohort, Component, Visit,
};

/// Header of the canonical cohort file, in column order.
pub const COHORT_HEADER: [&str; 17] = [
    "visit_id",
    "patient_id",
    "visit_date",
    "global_cdr",
    "memory",
    "orientation",
    "judgment",
    "community",
    "home_hobbies",
    "personal_care",
    "mmse",
    "boston_naming",
    "short_blessed",
    "verbal_fluency",
    "word_list_recall",
    "word_list_memory",
    "diagnoses",
];

/// Default missing-rate above which imputation logs a warning.
pub const DEFAULT_WARN_RATE: f64 = 0.05;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("duplicate visit id `{0}`")]
    DuplicateVisitId(String),
    #[error("column `{0}` has no observed values to take a median of")]
    AllMissingColumn(Feature),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// A column that can be imputed or clustered on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Feature {
    Cdr(Component),
    Cognitive(CognitiveTest),
}

impl Feature {
    pub fn cdr_components() -> Vec<Feature> {
        Component::ALL.iter().map(|&c| Feature::Cdr(c)).collect()
    }

    pub fn cognitive_tests() -> Vec<Feature> {
        CognitiveTest::ALL
            .iter()
            .map(|&t| Feature::Cognitive(t))
            .collect()
    }

    pub fn all() -> Vec<Feature> {
        let mut all = Feature::cdr_components();
        all.extend(Feature::cognitive_tests());
        all
    }

    pub fn name(self) -> &'static str {
        match self {
            Feature::Cdr(c) => c.column(),
            Feature::Cognitive(t) => t.column(),
        }
    }

    /// Numeric value of this feature on a visit, if present.
    pub fn value(self, visit: &Visit) -> Option<f64> {
        match self {
            Feature::Cdr(c) => visit.components.get(c).map(CdrLevel::value),
            Feature::Cognitive(t) => visit.cognitive.get(t).map(f64::from),
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Feature {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Feature::all()
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| IngestError::UnknownFeature(s.to_string()))
    }
}

impl Serialize for Feature {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Feature {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// Lower-middle order statistic of an already sorted slice.
///
/// For an even count this is the smaller of the two middle values, which
/// keeps ordinal and integer medians on their native scale.
pub fn lower_median<T: Copy>(sorted: &[T]) -> Option<T> {
    if sorted.is_empty() {
        None
    } else {
        Some(sorted[(sorted.len() - 1) / 2])
    }
}

/// Order statistic at rank `floor((n - 1) * q)` of a sorted slice.
pub fn lower_quantile<T: Copy>(sorted: &[T], q: f64) -> Option<T> {
    if sorted.is_empty() {
        return None;
    }
    let rank = ((sorted.len() - 1) as f64 * q).floor() as usize;
    Some(sorted[rank.min(sorted.len() - 1)])
}

pub fn parse_cohort(path: impl AsRef<Path>) -> Result<Cohort, IngestError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut cohort = read_cohort(file)?;
    cohort.provenance = path.display().to_string();
    Ok(cohort)
}

/// Parses a canonical cohort CSV from any reader. Visits keep file order.
pub fn read_cohort<R: Read>(reader: R) -> Result<Cohort, IngestError> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = csv.records();

    let header = match records.next() {
        Some(row) => row?,
        None => {
            return Err(IngestError::MalformedRow {
                line: 1,
                reason: "missing header row".into(),
            })
        }
    };
    let found: Vec<&str> = header.iter().collect();
    if found != COHORT_HEADER {
        return Err(IngestError::MalformedRow {
            line: 1,
            reason: format!("unexpected header `{}`", found.join(",")),
        });
    }

    let mut visits = Vec::new();
    let mut seen = HashSet::new();
    for row in records {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() == 1 && row.get(0) == Some("") {
            continue;
        }
        let visit = parse_row(&row, line)?;
        if !seen.insert(visit.visit_id.clone()) {
            return Err(IngestError::DuplicateVisitId(visit.visit_id));
        }
        visits.push(visit);
    }
    Ok(Cohort::new(visits, "reader"))
}

fn parse_row(row: &csv::StringRecord, line: u64) -> Result<Visit, IngestError> {
    let malformed = |reason: String| IngestError::MalformedRow { line, reason };
    if row.len() != COHORT_HEADER.len() {
        return Err(malformed(format!(
            "expected {} columns, found {}",
            COHORT_HEADER.len(),
            row.len()
        )));
    }
    let field = |i: usize| row.get(i).unwrap_or("");

    let visit_id = field(0).to_string();
    let patient_id = field(1).to_string();
    if visit_id.is_empty() || patient_id.is_empty() {
        return Err(malformed("visit_id and patient_id are required".into()));
    }
    let visit_date = NaiveDate::parse_from_str(field(2), "%Y-%m-%d")
        .map_err(|e| malformed(format!("visit_date `{}`: {e}", field(2))))?;
    let global_cdr: CdrLevel = field(3)
        .parse()
        .map_err(|e| malformed(format!("global_cdr: {e}")))?;

    let mut components = CdrComponents::default();
    for (offset, component) in Component::ALL.into_iter().enumerate() {
        let raw = field(4 + offset);
        if raw.is_empty() {
            continue;
        }
        let level = raw
            .parse()
            .map_err(|e| malformed(format!("{component}: {e}")))?;
        components.set(component, Some(level));
    }

    let mut cognitive = CognitiveScores::default();
    for (offset, test) in CognitiveTest::ALL.into_iter().enumerate() {
        let raw = field(10 + offset);
        if raw.is_empty() {
            continue;
        }
        let score: u32 = raw
            .parse()
            .map_err(|_| malformed(format!("{test}: `{raw}` is not a non-negative integer")))?;
        if !test.in_range(score) {
            return Err(malformed(format!("{test}: {score} is out of range")));
        }
        cognitive.set(test, Some(score));
    }

    let diagnoses: BTreeSet<String> = field(16)
        .split(';')
        .map(str::trim)
        .filter(|code| !code.is_empty())
        .map(str::to_string)
        .collect();

    Ok(Visit {
        visit_id,
        patient_id,
        visit_date,
        global_cdr,
        components,
        cognitive,
        diagnoses,
    })
}

/// Writes the canonical CSV: UTF-8, LF line endings, empty strings for
/// missing values.
pub fn write_cohort<W: Write>(cohort: &Cohort, writer: W) -> Result<(), IngestError> {
    let mut csv = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    csv.write_record(COHORT_HEADER)?;
    for visit in &cohort.visits {
        let mut row: Vec<String> = Vec::with_capacity(COHORT_HEADER.len());
        row.push(visit.visit_id.clone());
        row.push(visit.patient_id.clone());
        row.push(visit.visit_date.format("%Y-%m-%d").to_string());
        row.push(visit.global_cdr.to_string());
        for level in visit.components.0 {
            row.push(level.map(|l| l.to_string()).unwrap_or_default());
        }
        for score in visit.cognitive.0 {
            row.push(score.map(|s| s.to_string()).unwrap_or_default());
        }
        row.push(
            visit
                .diagnoses
                .iter()
                .map(String::as_str)
                .collect::<Vec<_>>()
                .join(";"),
        );
        csv.write_record(&row)?;
    }
    csv.flush().map_err(|source| IngestError::Io {
        path: "<writer>".into(),
        source,
    })?;
    Ok(())
}

pub fn write_cohort_file(cohort: &Cohort, path: impl AsRef<Path>) -> Result<(), IngestError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    write_cohort(cohort, std::io::BufWriter::new(file))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MissingCount {
    pub missing: usize,
    pub rate: f64,
}

/// Per-feature missing counts over all visits, serialized as
/// `{feature: {missing, rate}}`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MissingnessSummary {
    pub features: BTreeMap<Feature, MissingCount>,
}

impl MissingnessSummary {
    pub fn measure(cohort: &Cohort, features: &[Feature]) -> Self {
        let total = cohort.len();
        let features = features
            .iter()
            .map(|&feature| {
                let missing = cohort
                    .visits
                    .iter()
                    .filter(|v| feature.value(v).is_none())
                    .count();
                let rate = if total == 0 {
                    0.0
                } else {
                    missing as f64 / total as f64
                };
                (feature, MissingCount { missing, rate })
            })
            .collect();
        MissingnessSummary { features }
    }

    pub fn total_missing(&self) -> usize {
        self.features.values().map(|m| m.missing).sum()
    }

    /// Features whose missing rate is strictly above `threshold`.
    pub fn exceeding(&self, threshold: f64) -> Vec<Feature> {
        self.features
            .iter()
            .filter(|(_, m)| m.rate > threshold)
            .map(|(&f, _)| f)
            .collect()
    }
}

/// Replaces every missing value in `features` with the column's
/// lower-middle median over observed values; observed cells are untouched.
pub fn median_impute(
    cohort: &Cohort,
    features: &[Feature],
) -> Result<(Cohort, MissingnessSummary), IngestError> {
    median_impute_with(cohort, features, DEFAULT_WARN_RATE)
}

pub fn median_impute_with(
    cohort: &Cohort,
    features: &[Feature],
    warn_rate: f64,
) -> Result<(Cohort, MissingnessSummary), IngestError> {
    let summary = MissingnessSummary::measure(cohort, features);
    for feature in summary.exceeding(warn_rate) {
        log::warn!(
            "{feature}: missing rate {:.3} exceeds {warn_rate}",
            summary.features[&feature].rate
        );
    }

    let mut imputed = cohort.clone();
    for &feature in features {
        let missing = summary.features[&feature].missing;
        if missing == 0 {
            continue;
        }
        match feature {
            Feature::Cdr(component) => {
                let mut observed: Vec<CdrLevel> = cohort
                    .visits
                    .iter()
                    .filter_map(|v| v.components.get(component))
                    .collect();
                observed.sort();
                let median =
                    lower_median(&observed).ok_or(IngestError::AllMissingColumn(feature))?;
                for visit in &mut imputed.visits {
                    if visit.components.get(component).is_none() {
                        visit.components.set(component, Some(median));
                    }
                }
            }
            Feature::Cognitive(test) => {
                let mut observed: Vec<u32> = cohort
                    .visits
                    .iter()
                    .filter_map(|v| v.cognitive.get(test))
                    .collect();
                observed.sort_unstable();
                let median =
                    lower_median(&observed).ok_or(IngestError::AllMissingColumn(feature))?;
                for visit in &mut imputed.visits {
                    if visit.cognitive.get(test).is_none() {
                        visit.cognitive.set(test, Some(median));
                    }
                }
            }
        }
    }
    Ok((imputed, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "visit_id,patient_id,visit_date,global_cdr,memory,orientation,judgment,community,home_hobbies,personal_care,mmse,boston_naming,short_blessed,verbal_fluency,word_list_recall,word_list_memory,diagnoses\n";

    fn parse(body: &str) -> Result<Cohort, IngestError> {
        read_cohort(format!("{HEADER}{body}").as_bytes())
    }

    #[test]
    fn three_rows_parse_in_file_order() {
        let cohort = parse(
            "V3,P1,2015-01-01,0.5,1,0.5,0.5,0.5,0.5,0,25,14,8,12,2,13,G30.9;R41.3\n\
             V1,P1,2015-07-04,1,1,1,1,1,1,0,,,,,,,\n\
             V2,P2,2016-02-29,0,0,0,0,0,0,0,30,15,0,20,8,22,\n",
        )
        .unwrap();
        let ids: Vec<&str> = cohort.visits.iter().map(|v| v.visit_id.as_str()).collect();
        assert_eq!(ids, ["V3", "V1", "V2"]);
        assert_eq!(cohort.visits[0].diagnoses.len(), 2);
        assert_eq!(cohort.visits[1].cognitive.get(CognitiveTest::Mmse), None);
    }

    #[test]
    fn forbidden_level_names_line_and_field() {
        let err = parse(
            "V1,P1,2015-01-01,0.5,0.5,0,0,0,0,0,,,,,,,\n\
             V2,P1,2015-02-01,0.5,1.5,0,0,0,0,0,,,,,,,\n",
        )
        .unwrap_err();
        match err {
            IngestError::MalformedRow { line, reason } => {
                assert_eq!(line, 3);
                assert!(reason.contains("memory"), "{reason}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_date_and_column_count() {
        let err = parse("V1,P1,2015-13-01,0.5,0.5,0,0,0,0,0,,,,,,,\n").unwrap_err();
        assert!(matches!(err, IngestError::MalformedRow { line: 2, .. }));
        let err = parse("V1,P1,2015-01-01,0.5\n").unwrap_err();
        assert!(matches!(err, IngestError::MalformedRow { line: 2, .. }));
    }

    #[test]
    fn duplicate_visit_id_aborts() {
        let err = parse(
            "V1,P1,2015-01-01,0.5,0.5,0,0,0,0,0,,,,,,,\n\
             V1,P2,2015-01-01,0.5,0.5,0,0,0,0,0,,,,,,,\n",
        )
        .unwrap_err();
        assert!(matches!(err, IngestError::DuplicateVisitId(id) if id == "V1"));
    }

    #[test]
    fn write_then_read_is_byte_identical() {
        let body = "V1,P1,2015-01-01,0.5,1,0.5,,0.5,0.5,0,25,14,8,12,2,13,G30.9;R41.3\n\
                    V2,P1,2015-07-04,1,1,1,1,1,1,0,,,,,,,\n";
        let cohort = parse(body).unwrap();
        let mut out = Vec::new();
        write_cohort(&cohort, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), format!("{HEADER}{body}"));
    }

    fn mmse_cohort(values: &[Option<u32>]) -> Cohort {
        let visits = values
            .iter()
            .enumerate()
            .map(|(i, &score)| {
                let mut cognitive = CognitiveScores::default();
                cognitive.set(CognitiveTest::Mmse, score);
                Visit {
                    visit_id: format!("V{i}"),
                    patient_id: format!("P{i}"),
                    visit_date: NaiveDate::from_ymd_opt(2015, 1, 1).unwrap(),
                    global_cdr: CdrLevel::Questionable,
                    components: CdrComponents::complete([CdrLevel::None; 6]),
                    cognitive,
                    diagnoses: BTreeSet::new(),
                }
            })
            .collect();
        Cohort::new(visits, "test")
    }

    #[test]
    fn mmse_quartile_triple_imputes_median() {
        let cohort = mmse_cohort(&[Some(19), Some(23), Some(27), None]);
        let feature = Feature::Cognitive(CognitiveTest::Mmse);
        let (imputed, summary) = median_impute(&cohort, &[feature]).unwrap();
        assert_eq!(imputed.visits[3].cognitive.get(CognitiveTest::Mmse), Some(23));
        assert_eq!(summary.features[&feature].missing, 1);
        assert_eq!(summary.features[&feature].rate, 0.25);
    }

    #[test]
    fn complete_cohort_is_unchanged() {
        let cohort = mmse_cohort(&[Some(19), Some(23)]);
        let mut features = Feature::cdr_components();
        features.push(Feature::Cognitive(CognitiveTest::Mmse));
        let (imputed, summary) = median_impute(&cohort, &features).unwrap();
        assert_eq!(imputed, cohort);
        assert_eq!(summary.total_missing(), 0);
    }

    #[test]
    fn even_ordinal_column_takes_lower_middle() {
        let levels = [
            Some(CdrLevel::None),
            Some(CdrLevel::Questionable),
            Some(CdrLevel::Mild),
            Some(CdrLevel::Moderate),
            None,
        ];
        let mut cohort = mmse_cohort(&[None; 5]);
        for (visit, level) in cohort.visits.iter_mut().zip(levels) {
            visit.components.set(Component::Memory, level);
        }
        let (imputed, _) = median_impute(&cohort, &[Feature::Cdr(Component::Memory)]).unwrap();
        assert_eq!(
            imputed.visits[4].components.get(Component::Memory),
            Some(CdrLevel::Questionable)
        );
    }

    #[test]
    fn all_missing_column_errors() {
        let cohort = mmse_cohort(&[None, None]);
        let err = median_impute(&cohort, &[Feature::Cognitive(CognitiveTest::Mmse)]).unwrap_err();
        assert!(matches!(err, IngestError::AllMissingColumn(_)));
    }

    #[test]
    fn summary_json_shape() {
        let cohort = mmse_cohort(&[Some(19), None]);
        let summary =
            MissingnessSummary::measure(&cohort, &[Feature::Cognitive(CognitiveTest::Mmse)]);
        let json = serde_json::to_string(&summary).unwrap();
        assert_eq!(json, r#"{"mmse":{"missing":1,"rate":0.5}}"#);
    }

    #[test]
    fn feature_names_round_trip() {
        for feature in Feature::all() {
            assert_eq!(feature.name().parse::<Feature>().unwrap(), feature);
        }
        assert!("age".parse::<Feature>().is_err());
    }

    #[test]
    fn quantiles_use_lower_rank() {
        let v = [1, 2, 3, 4];
        assert_eq!(lower_quantile(&v, 0.25), Some(1));
        assert_eq!(lower_quantile(&v, 0.5), Some(2));
        assert_eq!(lower_quantile(&v, 0.75), Some(3));
        assert_eq!(lower_median::<u32>(&[]), None);
    }
}
