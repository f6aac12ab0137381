//! Characterization of clusters as dementia subtypes: Global CDR
//! composition, homogeneous/composite classification, component profiles,
//! inter- and intra-subtype variability, and severity-ordered grouping.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::clustering::{cluster_label, Assignments};
use crate::cohort::{CdrLevel, Cohort, Component};

/// Default share of visits a level (or pair of levels) must cover.
pub const DEFAULT_PURITY: f64 = 0.9;

/// Visit count per Global CDR level; all five levels are always present.
pub type CdrHistogram = BTreeMap<CdrLevel, usize>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SubtypeError {
    #[error("assigned visit `{0}` is not in the cohort")]
    UnknownVisit(String),
    #[error("need at least 2 subtypes homogeneous at CDR {level}, found {found}")]
    InsufficientSubtypes { level: CdrLevel, found: usize },
    #[error("subtype profile is empty")]
    EmptyProfile,
}

fn empty_histogram() -> CdrHistogram {
    CdrLevel::ALL.iter().map(|&l| (l, 0)).collect()
}

/// How many Global CDR levels a subtype spans.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "class", content = "levels", rename_all = "snake_case")]
pub enum Homogeneity {
    Homogeneous(CdrLevel),
    /// Two levels, lower first.
    Composite(CdrLevel, CdrLevel),
    /// Every level holding at least `1 − purity` of the visits.
    Mixed(Vec<CdrLevel>),
}

impl Homogeneity {
    pub fn levels(&self) -> Vec<CdrLevel> {
        match self {
            Homogeneity::Homogeneous(l) => vec![*l],
            Homogeneity::Composite(a, b) => vec![*a, *b],
            Homogeneity::Mixed(levels) => levels.clone(),
        }
    }

    pub fn contains(&self, level: CdrLevel) -> bool {
        self.levels().contains(&level)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Homogeneity::Homogeneous(_) => "Homogenous",
            Homogeneity::Composite(..) => "Composite",
            Homogeneity::Mixed(_) => "Mixed",
        }
    }
}

impl fmt::Display for Homogeneity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let levels: Vec<&str> = self.levels().iter().map(|l| l.as_str()).collect();
        write!(f, "{} {}", levels.join("/"), self.kind())
    }
}

/// Classifies a Global CDR histogram at the given purity.
pub fn classify_homogeneity(histogram: &CdrHistogram, purity: f64) -> Homogeneity {
    let total: usize = histogram.values().sum();
    let mut ranked: Vec<(CdrLevel, usize)> = histogram
        .iter()
        .map(|(&l, &c)| (l, c))
        .filter(|&(_, c)| c > 0)
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    if total == 0 || ranked.is_empty() {
        return Homogeneity::Mixed(Vec::new());
    }
    let share = |count: usize| count as f64 / total as f64;
    if share(ranked[0].1) >= purity {
        return Homogeneity::Homogeneous(ranked[0].0);
    }
    if ranked.len() >= 2 && share(ranked[0].1 + ranked[1].1) >= purity {
        let (a, b) = (ranked[0].0, ranked[1].0);
        return Homogeneity::Composite(a.min(b), a.max(b));
    }
    let mut levels: Vec<CdrLevel> = ranked
        .iter()
        .filter(|&&(_, c)| share(c) >= 1.0 - purity)
        .map(|&(l, _)| l)
        .collect();
    levels.sort();
    Homogeneity::Mixed(levels)
}

/// Distribution of one CDR component within a subtype.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentDistribution {
    pub counts: CdrHistogram,
    pub median: Option<CdrLevel>,
    pub q1: Option<CdrLevel>,
    pub q3: Option<CdrLevel>,
}

impl ComponentDistribution {
    fn from_counts(counts: CdrHistogram) -> Self {
        let total: usize = counts.values().sum();
        let at_rank = |q: f64| -> Option<CdrLevel> {
            if total == 0 {
                return None;
            }
            let rank = ((total - 1) as f64 * q).floor() as usize;
            let mut seen = 0;
            for (&level, &count) in &counts {
                seen += count;
                if seen > rank {
                    return Some(level);
                }
            }
            None
        };
        ComponentDistribution {
            median: at_rank(0.5),
            q1: at_rank(0.25),
            q3: at_rank(0.75),
            counts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtypeProfile {
    pub cluster: usize,
    pub visits: usize,
    pub cdr_histogram: CdrHistogram,
    pub homogeneity: Homogeneity,
    pub components: BTreeMap<Component, ComponentDistribution>,
    pub mean_global_cdr: f64,
}

impl SubtypeProfile {
    pub fn label(&self) -> String {
        cluster_label(self.cluster)
    }

    pub fn median(&self, component: Component) -> Option<CdrLevel> {
        self.components.get(&component).and_then(|d| d.median)
    }
}

/// Profiles every cluster in `assignments`, ordered by cluster index.
///
/// Only assigned visits are counted; missing component values are skipped
/// in the component distributions.
pub fn profile_subtypes(
    cohort: &Cohort,
    assignments: &Assignments,
    purity: f64,
) -> Result<Vec<SubtypeProfile>, SubtypeError> {
    let index: HashMap<&str, usize> = cohort
        .visits
        .iter()
        .enumerate()
        .map(|(i, v)| (v.visit_id.as_str(), i))
        .collect();

    struct Acc {
        histogram: CdrHistogram,
        components: Vec<CdrHistogram>,
        cdr_sum: f64,
        visits: usize,
    }
    let mut clusters: BTreeMap<usize, Acc> = BTreeMap::new();
    for (visit_id, &cluster) in assignments {
        let visit = index
            .get(visit_id.as_str())
            .map(|&i| &cohort.visits[i])
            .ok_or_else(|| SubtypeError::UnknownVisit(visit_id.clone()))?;
        let acc = clusters.entry(cluster).or_insert_with(|| Acc {
            histogram: empty_histogram(),
            components: vec![empty_histogram(); 6],
            cdr_sum: 0.0,
            visits: 0,
        });
        *acc.histogram.get_mut(&visit.global_cdr).expect("all levels") += 1;
        acc.cdr_sum += visit.global_cdr.value();
        acc.visits += 1;
        for component in Component::ALL {
            if let Some(level) = visit.components.get(component) {
                *acc.components[component.index()]
                    .get_mut(&level)
                    .expect("all levels") += 1;
            }
        }
    }

    Ok(clusters
        .into_iter()
        .map(|(cluster, acc)| SubtypeProfile {
            cluster,
            visits: acc.visits,
            homogeneity: classify_homogeneity(&acc.histogram, purity),
            cdr_histogram: acc.histogram,
            components: Component::ALL
                .iter()
                .zip(acc.components)
                .map(|(&c, counts)| (c, ComponentDistribution::from_counts(counts)))
                .collect(),
            mean_global_cdr: acc.cdr_sum / acc.visits as f64,
        })
        .collect())
}

/// Cluster indices ordered by increasing mean Global CDR, ties by index.
pub fn severity_order(profiles: &[SubtypeProfile]) -> Vec<usize> {
    let mut order: Vec<&SubtypeProfile> = profiles.iter().collect();
    order.sort_by(|a, b| {
        a.mean_global_cdr
            .total_cmp(&b.mean_global_cdr)
            .then(a.cluster.cmp(&b.cluster))
    });
    order.into_iter().map(|p| p.cluster).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpread {
    pub component: Component,
    /// `(cluster, median)` for every matching subtype.
    pub medians: Vec<(usize, CdrLevel)>,
    pub range: f64,
    /// Population variance of the numeric medians.
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterVariability {
    pub level: CdrLevel,
    pub clusters: Vec<usize>,
    pub components: Vec<ComponentSpread>,
}

/// Spread of each component's median across the subtypes homogeneous at
/// `level`.
pub fn inter_subtype_variability(
    profiles: &[SubtypeProfile],
    level: CdrLevel,
) -> Result<InterVariability, SubtypeError> {
    let matching: Vec<&SubtypeProfile> = profiles
        .iter()
        .filter(|p| p.homogeneity == Homogeneity::Homogeneous(level))
        .collect();
    if matching.len() < 2 {
        return Err(SubtypeError::InsufficientSubtypes {
            level,
            found: matching.len(),
        });
    }
    let components = Component::ALL
        .iter()
        .map(|&component| {
            let medians: Vec<(usize, CdrLevel)> = matching
                .iter()
                .filter_map(|p| p.median(component).map(|m| (p.cluster, m)))
                .collect();
            let values: Vec<f64> = medians.iter().map(|(_, m)| m.value()).collect();
            let (range, variance) = spread(&values);
            ComponentSpread {
                component,
                medians,
                range,
                variance,
            }
        })
        .collect();
    Ok(InterVariability {
        level,
        clusters: matching.iter().map(|p| p.cluster).collect(),
        components,
    })
}

fn spread(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
    (max - min, variance)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntraVariability {
    pub cluster: usize,
    pub medians: BTreeMap<Component, CdrLevel>,
    pub range: f64,
    /// Components with median 0.
    pub intact: Vec<Component>,
    pub impaired: Vec<Component>,
}

/// Spread of the six component medians within one subtype.
pub fn intra_subtype_variability(profile: &SubtypeProfile) -> Result<IntraVariability, SubtypeError> {
    if profile.visits == 0 {
        return Err(SubtypeError::EmptyProfile);
    }
    let medians: BTreeMap<Component, CdrLevel> = Component::ALL
        .iter()
        .filter_map(|&c| profile.median(c).map(|m| (c, m)))
        .collect();
    let values: Vec<f64> = medians.values().map(|m| m.value()).collect();
    let (range, _) = spread(&values);
    let (intact, impaired): (Vec<Component>, Vec<Component>) = medians
        .keys()
        .partition(|c| medians[c] == CdrLevel::None);
    Ok(IntraVariability {
        cluster: profile.cluster,
        medians,
        range,
        intact,
        impaired,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtypeGroup {
    /// `G0`, `G1`, ... in severity order.
    pub id: String,
    pub label: String,
    pub signature: Homogeneity,
    pub clusters: Vec<usize>,
    pub visits: usize,
    pub mean_global_cdr: f64,
}

impl SubtypeGroup {
    /// Global CDR levels that characterize the group.
    pub fn levels(&self) -> Vec<CdrLevel> {
        self.signature.levels()
    }
}

/// Severity-ordered partition of the subtypes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtypeGrouping {
    pub purity: f64,
    pub groups: Vec<SubtypeGroup>,
}

impl SubtypeGrouping {
    /// Severity index of the group containing `cluster`.
    pub fn group_of(&self, cluster: usize) -> Option<usize> {
        self.groups.iter().position(|g| g.clusters.contains(&cluster))
    }

    pub fn labels(&self) -> Vec<String> {
        self.groups.iter().map(|g| g.id.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

/// Groups subtypes that share a homogeneity signature (same level set and
/// class) and orders groups by visit-weighted mean Global CDR, ties by the
/// smallest member cluster index.
pub fn group_subtypes(profiles: &[SubtypeProfile], purity: f64) -> SubtypeGrouping {
    let mut by_signature: BTreeMap<Homogeneity, Vec<&SubtypeProfile>> = BTreeMap::new();
    for profile in profiles {
        by_signature
            .entry(classify_homogeneity(&profile.cdr_histogram, purity))
            .or_default()
            .push(profile);
    }
    let mut groups: Vec<SubtypeGroup> = by_signature
        .into_iter()
        .map(|(signature, members)| {
            let visits: usize = members.iter().map(|p| p.visits).sum();
            let cdr_sum: f64 = members
                .iter()
                .map(|p| p.mean_global_cdr * p.visits as f64)
                .sum();
            let mut clusters: Vec<usize> = members.iter().map(|p| p.cluster).collect();
            clusters.sort_unstable();
            SubtypeGroup {
                id: String::new(),
                label: signature.to_string(),
                signature,
                clusters,
                visits,
                mean_global_cdr: if visits == 0 { 0.0 } else { cdr_sum / visits as f64 },
            }
        })
        .collect();
    groups.sort_by(|a, b| {
        a.mean_global_cdr
            .total_cmp(&b.mean_global_cdr)
            .then(a.clusters[0].cmp(&b.clusters[0]))
    });
    for (i, group) in groups.iter_mut().enumerate() {
        group.id = format!("G{i}");
    }
    SubtypeGrouping { purity, groups }
}

/// `(cluster, level, count)` rows in severity order: the data behind a
/// stacked Global CDR composition chart.
pub fn composition_rows(profiles: &[SubtypeProfile]) -> Vec<(usize, CdrLevel, usize)> {
    let by_cluster: HashMap<usize, &SubtypeProfile> =
        profiles.iter().map(|p| (p.cluster, p)).collect();
    severity_order(profiles)
        .into_iter()
        .flat_map(|c| {
            by_cluster[&c]
                .cdr_histogram
                .iter()
                .map(move |(&l, &n)| (c, l, n))
        })
        .collect()
}

/// `(cluster, component, level, count)` rows: the data behind per-component
/// violin plots.
pub fn violin_rows(profiles: &[SubtypeProfile]) -> Vec<(usize, Component, CdrLevel, usize)> {
    let by_cluster: HashMap<usize, &SubtypeProfile> =
        profiles.iter().map(|p| (p.cluster, p)).collect();
    let mut rows = Vec::new();
    for c in severity_order(profiles) {
        for (&component, dist) in &by_cluster[&c].components {
            for (&level, &count) in &dist.counts {
                rows.push((c, component, level, count));
            }
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::tests::visit;
    use crate::cohort::CdrComponents;
    use CdrLevel::*;

    fn histogram(entries: &[(CdrLevel, usize)]) -> CdrHistogram {
        let mut h = empty_histogram();
        for &(l, c) in entries {
            h.insert(l, c);
        }
        h
    }

    #[test]
    fn homogeneity_examples() {
        assert_eq!(
            classify_homogeneity(&histogram(&[(Questionable, 100)]), 0.9),
            Homogeneity::Homogeneous(Questionable)
        );
        assert_eq!(
            classify_homogeneity(&histogram(&[(Questionable, 60), (Mild, 40)]), 0.9),
            Homogeneity::Composite(Questionable, Mild)
        );
        assert_eq!(
            classify_homogeneity(&histogram(&[(None, 34), (Mild, 33), (Moderate, 33)]), 0.9),
            Homogeneity::Mixed(vec![None, Mild, Moderate])
        );
    }

    #[test]
    fn labels_follow_group_table_style() {
        assert_eq!(Homogeneity::Homogeneous(Questionable).to_string(), "0.5 Homogenous");
        assert_eq!(Homogeneity::Composite(Questionable, Mild).to_string(), "0.5/1 Composite");
    }

    fn profile_of(cluster: usize, visits: &[(CdrLevel, [CdrLevel; 6])]) -> SubtypeProfile {
        let cohort = Cohort::new(
            visits
                .iter()
                .enumerate()
                .map(|(i, &(cdr, comps))| {
                    let mut v = visit(&format!("V{i}"), &format!("P{i}"), "2015-01-01", cdr);
                    v.components = CdrComponents::complete(comps);
                    v
                })
                .collect(),
            "test",
        );
        let assignments: Assignments = cohort
            .visits
            .iter()
            .map(|v| (v.visit_id.clone(), cluster))
            .collect();
        profile_subtypes(&cohort, &assignments, DEFAULT_PURITY)
            .unwrap()
            .remove(0)
    }

    #[test]
    fn consistent_memory_score_profile() {
        let p = profile_of(5, &[(Questionable, [Mild, Questionable, None, None, None, None]); 12]);
        assert_eq!(p.homogeneity, Homogeneity::Homogeneous(Questionable));
        assert_eq!(p.components[&Component::Memory].counts[&Mild], 12);
        assert_eq!(p.median(Component::Memory), Some(Mild));
        assert_eq!(p.visits, 12);
    }

    #[test]
    fn empty_assignments_give_no_profiles() {
        let cohort = Cohort::new(vec![visit("V1", "P1", "2015-01-01", None)], "t");
        assert!(profile_subtypes(&cohort, &Assignments::new(), 0.9).unwrap().is_empty());
    }

    #[test]
    fn unknown_visit_is_an_error() {
        let cohort = Cohort::default();
        let assignments: Assignments = [("V9".to_string(), 0)].into_iter().collect();
        assert_eq!(
            profile_subtypes(&cohort, &assignments, 0.9).unwrap_err(),
            SubtypeError::UnknownVisit("V9".into())
        );
    }

    #[test]
    fn inter_variability_examples() {
        let a = profile_of(0, &[(Questionable, [Questionable, Questionable, Questionable, None, None, None]); 4]);
        let b = profile_of(1, &[(Questionable, [Mild, None, Questionable, None, None, None]); 4]);
        let inter = inter_subtype_variability(&[a.clone(), b], Questionable).unwrap();
        let get = |c: Component| inter.components.iter().find(|s| s.component == c).unwrap();
        assert_eq!(get(Component::Memory).range, 0.5);
        assert_eq!(get(Component::PersonalCare).range, 0.0);
        assert_eq!(get(Component::Orientation).variance, 0.0625);
        assert_eq!(
            inter_subtype_variability(&[a], Questionable).unwrap_err(),
            SubtypeError::InsufficientSubtypes { level: Questionable, found: 1 }
        );
    }

    #[test]
    fn intra_variability_examples() {
        let p = profile_of(8, &[(Questionable, [Questionable, None, None, None, None, None]); 3]);
        let intra = intra_subtype_variability(&p).unwrap();
        assert_eq!(intra.range, 0.5);
        assert_eq!(intra.intact.len(), 5);
        assert_eq!(intra.impaired, vec![Component::Memory]);
        let flat = profile_of(2, &[(Mild, [Mild; 6]); 2]);
        assert_eq!(intra_subtype_variability(&flat).unwrap().range, 0.0);
    }

    #[test]
    fn quartiles_from_counts() {
        let d = ComponentDistribution::from_counts(histogram(&[(None, 1), (Questionable, 1), (Mild, 1), (Moderate, 1)]));
        assert_eq!(d.median, Some(Questionable));
        assert_eq!(d.q1, Some(None));
        assert_eq!(d.q3, Some(Mild));
    }

    #[test]
    fn single_subtype_is_one_group() {
        let p = profile_of(0, &[(Mild, [Mild; 6]); 3]);
        let grouping = group_subtypes(&[p], 0.9);
        assert_eq!(grouping.len(), 1);
        assert_eq!(grouping.groups[0].id, "G0");
        assert_eq!(grouping.groups[0].label, "1 Homogenous");
    }

    #[test]
    fn groups_ordered_by_severity() {
        let mut v = vec![(Mild, [Mild; 6]); 6];
        v.extend(vec![(Moderate, [Moderate; 6]); 4]);
        let composite = profile_of(0, &v);
        let mild = profile_of(1, &[(Questionable, [Questionable; 6]); 5]);
        let also_mild = profile_of(2, &[(Questionable, [None; 6]); 5]);
        let grouping = group_subtypes(&[composite, mild, also_mild], 0.9);
        assert_eq!(grouping.groups[0].clusters, vec![1, 2]);
        assert_eq!(grouping.groups[1].label, "1/2 Composite");
        assert_eq!(grouping.group_of(0), Some(1));
        assert_eq!(grouping.group_of(7), Option::None);
    }
}
