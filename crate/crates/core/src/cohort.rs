//! Longitudinal visit data on the five-point CDR ordinal scale.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// One of the five Clinical Dementia Rating levels.
///
/// Variants are declared in severity order, so the derived `Ord` is the
/// clinical ordering `0 < 0.5 < 1 < 2 < 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CdrLevel {
    /// Cognitively normal.
    None,
    /// Very mild dementia.
    Questionable,
    /// Mild dementia.
    Mild,
    /// Moderate dementia.
    Moderate,
    /// Severe dementia.
    Severe,
}

impl CdrLevel {
    pub const ALL: [CdrLevel; 5] = [
        CdrLevel::None,
        CdrLevel::Questionable,
        CdrLevel::Mild,
        CdrLevel::Moderate,
        CdrLevel::Severe,
    ];

    /// Numeric view used for distances and means.
    pub fn value(self) -> f64 {
        match self {
            CdrLevel::None => 0.0,
            CdrLevel::Questionable => 0.5,
            CdrLevel::Mild => 1.0,
            CdrLevel::Moderate => 2.0,
            CdrLevel::Severe => 3.0,
        }
    }

    /// Position on the scale, 0 through 4.
    pub fn rank(self) -> usize {
        self as usize
    }

    pub fn from_rank(rank: usize) -> Option<CdrLevel> {
        CdrLevel::ALL.get(rank).copied()
    }

    /// Exact inverse of [`CdrLevel::value`]; anything off the scale is `None`.
    pub fn from_value(value: f64) -> Option<CdrLevel> {
        CdrLevel::ALL.iter().copied().find(|l| l.value() == value)
    }

    /// The neighbouring level one step up or down, if any.
    pub fn step(self, up: bool) -> Option<CdrLevel> {
        let rank = self.rank();
        if up {
            CdrLevel::from_rank(rank + 1)
        } else {
            rank.checked_sub(1).and_then(CdrLevel::from_rank)
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CdrLevel::None => "0",
            CdrLevel::Questionable => "0.5",
            CdrLevel::Mild => "1",
            CdrLevel::Moderate => "2",
            CdrLevel::Severe => "3",
        }
    }
}

impl fmt::Display for CdrLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("`{0}` is not a CDR level (expected one of 0, 0.5, 1, 2, 3)")]
pub struct InvalidCdrLevel(pub String);

impl FromStr for CdrLevel {
    type Err = InvalidCdrLevel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "0" | "0.0" => Ok(CdrLevel::None),
            "0.5" | ".5" => Ok(CdrLevel::Questionable),
            "1" | "1.0" => Ok(CdrLevel::Mild),
            "2" | "2.0" => Ok(CdrLevel::Moderate),
            "3" | "3.0" => Ok(CdrLevel::Severe),
            other => Err(InvalidCdrLevel(other.to_string())),
        }
    }
}

impl Serialize for CdrLevel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for CdrLevel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// Compares two levels by clinical severity.
pub fn severity_compare(a: CdrLevel, b: CdrLevel) -> Ordering {
    a.cmp(&b)
}

/// The six CDR domains, in canonical column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Memory,
    Orientation,
    Judgment,
    Community,
    HomeHobbies,
    PersonalCare,
}

impl Component {
    pub const ALL: [Component; 6] = [
        Component::Memory,
        Component::Orientation,
        Component::Judgment,
        Component::Community,
        Component::HomeHobbies,
        Component::PersonalCare,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Column name in the canonical cohort file.
    pub fn column(self) -> &'static str {
        match self {
            Component::Memory => "memory",
            Component::Orientation => "orientation",
            Component::Judgment => "judgment",
            Component::Community => "community",
            Component::HomeHobbies => "home_hobbies",
            Component::PersonalCare => "personal_care",
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

/// The six CDR component scores of one visit; any may be missing before
/// imputation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct CdrComponents(pub [Option<CdrLevel>; 6]);

impl CdrComponents {
    pub fn complete(levels: [CdrLevel; 6]) -> Self {
        CdrComponents(levels.map(Some))
    }

    pub fn get(&self, component: Component) -> Option<CdrLevel> {
        self.0[component.index()]
    }

    pub fn set(&mut self, component: Component, level: Option<CdrLevel>) {
        self.0[component.index()] = level;
    }

    /// All six levels, or `None` if any is missing.
    pub fn levels(&self) -> Option<[CdrLevel; 6]> {
        let mut out = [CdrLevel::None; 6];
        for (slot, level) in out.iter_mut().zip(self.0) {
            *slot = level?;
        }
        Some(out)
    }

    pub fn is_complete(&self) -> bool {
        self.0.iter().all(Option::is_some)
    }
}

/// Standardized cognitive instruments recorded alongside the CDR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CognitiveTest {
    Mmse,
    BostonNaming,
    ShortBlessed,
    VerbalFluency,
    WordListRecall,
    WordListMemory,
}

impl CognitiveTest {
    pub const ALL: [CognitiveTest; 6] = [
        CognitiveTest::Mmse,
        CognitiveTest::BostonNaming,
        CognitiveTest::ShortBlessed,
        CognitiveTest::VerbalFluency,
        CognitiveTest::WordListRecall,
        CognitiveTest::WordListMemory,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn column(self) -> &'static str {
        match self {
            CognitiveTest::Mmse => "mmse",
            CognitiveTest::BostonNaming => "boston_naming",
            CognitiveTest::ShortBlessed => "short_blessed",
            CognitiveTest::VerbalFluency => "verbal_fluency",
            CognitiveTest::WordListRecall => "word_list_recall",
            CognitiveTest::WordListMemory => "word_list_memory",
        }
    }

    /// Inclusive upper bound of the instrument, where one exists.
    pub fn max_score(self) -> Option<u32> {
        match self {
            CognitiveTest::Mmse => Some(30),
            CognitiveTest::BostonNaming => Some(15),
            CognitiveTest::ShortBlessed => Some(28),
            _ => None,
        }
    }

    pub fn in_range(self, score: u32) -> bool {
        self.max_score().is_none_or(|max| score <= max)
    }
}

impl fmt::Display for CognitiveTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct CognitiveScores(pub [Option<u32>; 6]);

impl CognitiveScores {
    pub fn get(&self, test: CognitiveTest) -> Option<u32> {
        self.0[test.index()]
    }

    pub fn set(&mut self, test: CognitiveTest, score: Option<u32>) {
        self.0[test.index()] = score;
    }
}

/// One clinic encounter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Visit {
    pub visit_id: String,
    pub patient_id: String,
    pub visit_date: NaiveDate,
    pub global_cdr: CdrLevel,
    pub components: CdrComponents,
    pub cognitive: CognitiveScores,
    pub diagnoses: BTreeSet<String>,
}

/// An ordered collection of visits plus a free-text source tag.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Cohort {
    pub visits: Vec<Visit>,
    pub provenance: String,
}

impl Cohort {
    pub fn new(visits: Vec<Visit>, provenance: impl Into<String>) -> Self {
        Cohort {
            visits,
            provenance: provenance.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.visits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.visits.is_empty()
    }

    /// Visits grouped by patient, each group sorted by date (then visit id).
    /// Patients are keyed in lexicographic order.
    pub fn by_patient(&self) -> BTreeMap<&str, Vec<&Visit>> {
        let mut map: BTreeMap<&str, Vec<&Visit>> = BTreeMap::new();
        for visit in &self.visits {
            map.entry(visit.patient_id.as_str()).or_default().push(visit);
        }
        for visits in map.values_mut() {
            visits.sort_by(|a, b| {
                a.visit_date
                    .cmp(&b.visit_date)
                    .then_with(|| a.visit_id.cmp(&b.visit_id))
            });
        }
        map
    }

    /// One patient's visits in date order.
    pub fn patient_visits(&self, patient_id: &str) -> Vec<&Visit> {
        self.by_patient().remove(patient_id).unwrap_or_default()
    }

    pub fn patient_count(&self) -> usize {
        self.visits
            .iter()
            .map(|v| v.patient_id.as_str())
            .collect::<HashSet<_>>()
            .len()
    }

    pub fn visit(&self, visit_id: &str) -> Option<&Visit> {
        self.visits.iter().find(|v| v.visit_id == visit_id)
    }
}

/// Which invariant a visit violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    DuplicateVisitId,
    DuplicatePatientDate,
    EmptyIdentifier,
    CognitiveOutOfRange,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub visit_id: String,
    pub rule: Rule,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every visit against the cohort invariants. Violations are data,
/// not errors; the cohort is never modified.
pub fn validate_cohort(cohort: &Cohort) -> ValidationReport {
    let mut violations = Vec::new();
    let mut ids: HashSet<&str> = HashSet::new();
    let mut days: HashMap<(&str, NaiveDate), &str> = HashMap::new();

    for visit in &cohort.visits {
        if visit.visit_id.trim().is_empty() || visit.patient_id.trim().is_empty() {
            violations.push(Violation {
                visit_id: visit.visit_id.clone(),
                rule: Rule::EmptyIdentifier,
                detail: "visit_id and patient_id must be non-empty".into(),
            });
        }
        if !ids.insert(visit.visit_id.as_str()) {
            violations.push(Violation {
                visit_id: visit.visit_id.clone(),
                rule: Rule::DuplicateVisitId,
                detail: format!("visit id `{}` appears more than once", visit.visit_id),
            });
        }
        let key = (visit.patient_id.as_str(), visit.visit_date);
        if let Some(first) = days.get(&key) {
            violations.push(Violation {
                visit_id: visit.visit_id.clone(),
                rule: Rule::DuplicatePatientDate,
                detail: format!(
                    "patient `{}` already has visit `{first}` on {}",
                    visit.patient_id, visit.visit_date
                ),
            });
        } else {
            days.insert(key, visit.visit_id.as_str());
        }
        for test in CognitiveTest::ALL {
            if let Some(score) = visit.cognitive.get(test) {
                if !test.in_range(score) {
                    violations.push(Violation {
                        visit_id: visit.visit_id.clone(),
                        rule: Rule::CognitiveOutOfRange,
                        detail: format!(
                            "{test} = {score} exceeds maximum {}",
                            test.max_score().unwrap_or_default()
                        ),
                    });
                }
            }
        }
    }
    ValidationReport { violations }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn visit(id: &str, patient: &str, date: &str, cdr: CdrLevel) -> Visit {
        Visit {
            visit_id: id.into(),
            patient_id: patient.into(),
            visit_date: date.parse().unwrap(),
            global_cdr: cdr,
            components: CdrComponents::complete([cdr; 6]),
            cognitive: CognitiveScores::default(),
            diagnoses: BTreeSet::new(),
        }
    }

    #[test]
    fn well_formed_visit_validates_clean() {
        let cohort = Cohort::new(
            vec![visit("V1", "P1", "2015-01-01", CdrLevel::Questionable)],
            "test",
        );
        assert!(validate_cohort(&cohort).is_empty());
    }

    #[test]
    fn off_scale_level_is_unrepresentable() {
        assert!("1.5".parse::<CdrLevel>().is_err());
        assert_eq!(CdrLevel::from_value(1.5), None);
        assert_eq!(CdrLevel::from_value(0.5), Some(CdrLevel::Questionable));
    }

    #[test]
    fn duplicate_patient_date_is_one_violation() {
        let cohort = Cohort::new(
            vec![
                visit("V1", "P1", "2015-01-01", CdrLevel::None),
                visit("V2", "P1", "2015-01-01", CdrLevel::None),
            ],
            "test",
        );
        let report = validate_cohort(&cohort);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].rule, Rule::DuplicatePatientDate);
        assert_eq!(report.violations[0].visit_id, "V2");
    }

    #[test]
    fn duplicate_visit_id_and_range() {
        let mut a = visit("V1", "P1", "2015-01-01", CdrLevel::None);
        a.cognitive.set(CognitiveTest::Mmse, Some(31));
        let b = visit("V1", "P2", "2015-01-01", CdrLevel::None);
        let report = validate_cohort(&Cohort::new(vec![a, b], "test"));
        let rules: Vec<Rule> = report.violations.iter().map(|v| v.rule).collect();
        assert_eq!(rules, vec![Rule::CognitiveOutOfRange, Rule::DuplicateVisitId]);
    }

    #[test]
    fn severity_examples() {
        use CdrLevel::*;
        assert_eq!(severity_compare(Questionable, Mild), Ordering::Less);
        assert_eq!(severity_compare(Moderate, Moderate), Ordering::Equal);
        assert_eq!(severity_compare(Severe, None), Ordering::Greater);
    }

    #[test]
    fn severity_is_a_total_order_over_all_triples() {
        for a in CdrLevel::ALL {
            for b in CdrLevel::ALL {
                let ab = severity_compare(a, b);
                assert_eq!(ab, severity_compare(b, a).reverse());
                assert_eq!(ab == Ordering::Equal, a == b);
                assert_eq!(ab, a.value().partial_cmp(&b.value()).unwrap());
                for c in CdrLevel::ALL {
                    if ab != Ordering::Greater && severity_compare(b, c) != Ordering::Greater {
                        assert_ne!(severity_compare(a, c), Ordering::Greater);
                    }
                }
            }
        }
    }

    #[test]
    fn patient_visits_sorted_by_date() {
        let cohort = Cohort::new(
            vec![
                visit("V2", "P1", "2016-03-01", CdrLevel::Mild),
                visit("V1", "P1", "2015-01-01", CdrLevel::None),
                visit("V3", "P2", "2014-01-01", CdrLevel::None),
            ],
            "test",
        );
        let ids: Vec<&str> = cohort
            .patient_visits("P1")
            .iter()
            .map(|v| v.visit_id.as_str())
            .collect();
        assert_eq!(ids, ["V1", "V2"]);
        assert_eq!(cohort.patient_count(), 2);
    }

    #[test]
    fn level_steps() {
        assert_eq!(CdrLevel::None.step(false), None);
        assert_eq!(CdrLevel::Questionable.step(true), Some(CdrLevel::Mild));
        assert_eq!(CdrLevel::Severe.step(true), None);
    }
}
