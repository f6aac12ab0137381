//! Gap statistic over a range of K, with the one-standard-error rule and a
//! first-difference "jump" ranking of candidate K values.
//!
//! For each k, `Gap(k) = mean_b log W*_kb − log W_k`, where `W*_kb` is the
//! dispersion of the b-th null reference set clustered into k groups.
//! Reference sets are uniform over the bounding box of the data, or over
//! the box of the principal-axis-rotated data rotated back. Every reference
//! set and every clustering draws from its own seed-derived stream, so the
//! result does not depend on execution order.

use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kmeans::kmeans_fit;
use super::ClusterError;
use crate::seed::{derive_indexed, rng_from};

/// Smallest admissible number of reference sets.
pub const MIN_REFERENCES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMode {
    #[default]
    BoundingBox,
    PcaAligned,
}

impl FromStr for ReferenceMode {
    type Err = ClusterError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bounding_box" => Ok(ReferenceMode::BoundingBox),
            "pca_aligned" => Ok(ReferenceMode::PcaAligned),
            other => Err(ClusterError::InvalidArgument(format!(
                "unknown reference mode `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSettings {
    pub k_min: usize,
    pub k_max: usize,
    pub references: usize,
    pub reference_mode: ReferenceMode,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for GapSettings {
    fn default() -> Self {
        GapSettings {
            k_min: 1,
            k_max: 10,
            references: 50,
            reference_mode: ReferenceMode::BoundingBox,
            restarts: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapEntry {
    pub k: usize,
    pub gap: f64,
    /// `log W_k` of the observed data.
    pub log_w: f64,
    /// `(1/B) Σ_b log W*_kb`.
    pub reference_log_w: f64,
    /// Standard deviation of `log W*_kb` over the B references.
    pub sd: f64,
    /// `sd · √(1 + 1/B)`.
    pub s_k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KCandidate {
    pub k: usize,
    /// `Gap(k) − Gap(k − 1)`.
    pub jump: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapResult {
    pub entries: Vec<GapEntry>,
    pub references: usize,
    pub reference_mode: ReferenceMode,
    pub restarts: usize,
    pub seed: u64,
    /// Jump-ranked candidates, largest first.
    pub candidates: Vec<KCandidate>,
    /// Smallest k with `Gap(k) ≥ Gap(k+1) − s_{k+1}`.
    pub one_se_k: Option<usize>,
}

impl GapResult {
    pub fn entry(&self, k: usize) -> Option<&GapEntry> {
        self.entries.iter().find(|e| e.k == k)
    }
}

/// Tibshirani's one-standard-error rule over consecutive entries.
pub fn one_standard_error_k(entries: &[GapEntry]) -> Option<usize> {
    entries
        .windows(2)
        .find(|w| w[0].gap >= w[1].gap - w[1].s_k)
        .map(|w| w[0].k)
}

/// Ranks k by the jump `Gap(k) − Gap(k−1)`: every k whose jump exceeds the
/// mean jump by at least one sample standard deviation, largest first.
pub fn rank_k_candidates(entries: &[GapEntry]) -> Vec<KCandidate> {
    let jumps: Vec<KCandidate> = entries
        .windows(2)
        .filter(|w| w[1].k == w[0].k + 1)
        .map(|w| KCandidate {
            k: w[1].k,
            jump: w[1].gap - w[0].gap,
        })
        .collect();
    if jumps.len() < 2 {
        return Vec::new();
    }
    let m = jumps.len() as f64;
    let mean = jumps.iter().map(|c| c.jump).sum::<f64>() / m;
    let sd = (jumps.iter().map(|c| (c.jump - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
    let mut ranked: Vec<KCandidate> = jumps
        .into_iter()
        .filter(|c| c.jump > mean && c.jump - mean >= sd)
        .collect();
    ranked.sort_by(|a, b| b.jump.total_cmp(&a.jump).then(a.k.cmp(&b.k)));
    ranked
}

/// Uniform reference sampler for one data set.
struct ReferenceBox {
    mean: Vec<f64>,
    /// Columns are the axes the box is aligned with (identity for the
    /// plain bounding box).
    rotation: DMatrix<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ReferenceBox {
    fn new(points: ArrayView2<f64>, mode: ReferenceMode) -> Result<Self, ClusterError> {
        let (n, d) = points.dim();
        let mut mean = vec![0.0; d];
        for row in points.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v / n as f64;
            }
        }
        let rotation = match mode {
            ReferenceMode::BoundingBox => DMatrix::identity(d, d),
            ReferenceMode::PcaAligned => {
                let mut cov = DMatrix::<f64>::zeros(d, d);
                for row in points.rows() {
                    for a in 0..d {
                        for b in 0..d {
                            cov[(a, b)] += (row[a] - mean[a]) * (row[b] - mean[b]);
                        }
                    }
                }
                SymmetricEigen::new(cov).eigenvectors
            }
        };
        let mut lower = vec![f64::INFINITY; d];
        let mut upper = vec![f64::NEG_INFINITY; d];
        for row in points.rows() {
            for axis in 0..d {
                let projected: f64 = (0..d)
                    .map(|a| (row[a] - mean[a]) * rotation[(a, axis)])
                    .sum();
                lower[axis] = lower[axis].min(projected);
                upper[axis] = upper[axis].max(projected);
            }
        }
        if lower.iter().zip(&upper).any(|(lo, hi)| hi - lo <= 0.0) {
            return Err(ClusterError::DegenerateData);
        }
        Ok(ReferenceBox {
            mean,
            rotation,
            lower,
            upper,
        })
    }

    fn sample(&self, n: usize, seed: u64) -> Array2<f64> {
        let d = self.mean.len();
        let mut rng = rng_from(seed);
        let mut out = Array2::zeros((n, d));
        let mut z = vec![0.0; d];
        for mut row in out.rows_mut() {
            for (axis, value) in z.iter_mut().enumerate() {
                *value = rng.random_range(self.lower[axis]..self.upper[axis]);
            }
            for a in 0..d {
                row[a] = self.mean[a]
                    + (0..d).map(|axis| self.rotation[(a, axis)] * z[axis]).sum::<f64>();
            }
        }
        out
    }
}

fn log_dispersion(points: ArrayView2<f64>, k: usize, restarts: usize, seed: u64) -> Result<f64, ClusterError> {
    let model = kmeans_fit(points, k, restarts, seed)?;
    if model.inertia <= 0.0 {
        return Err(ClusterError::ZeroDispersion { k });
    }
    Ok(model.inertia.ln())
}

pub fn gap_statistic(points: ArrayView2<f64>, settings: &GapSettings) -> Result<GapResult, ClusterError> {
    let n = points.nrows();
    let GapSettings {
        k_min,
        k_max,
        references,
        reference_mode,
        restarts,
        seed,
    } = *settings;
    if k_min == 0 || k_min > k_max || k_max > n {
        return Err(ClusterError::InvalidArgument(format!(
            "k range {k_min}..={k_max} must lie within 1..={n}"
        )));
    }
    if references < MIN_REFERENCES {
        return Err(ClusterError::InvalidArgument(format!(
            "at least {MIN_REFERENCES} reference sets are required, got {references}"
        )));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(ClusterError::NonFinite);
    }
    let sampler = ReferenceBox::new(points, reference_mode)?;
    let ks: Vec<usize> = (k_min..=k_max).collect();

    let observed: Vec<f64> = ks
        .par_iter()
        .map(|&k| log_dispersion(points, k, restarts, derive_indexed(seed, "gap-observed", k as u64)))
        .collect::<Result<_, _>>()?;

    // reference_logs[b][k index]
    let reference_logs: Vec<Vec<f64>> = (0..references)
        .into_par_iter()
        .map(|b| {
            let reference = sampler.sample(n, derive_indexed(seed, "gap-reference", b as u64));
            let stream = derive_indexed(seed, "gap-reference-fit", b as u64);
            ks.iter()
                .map(|&k| log_dispersion(reference.view(), k, restarts, derive_indexed(stream, "k", k as u64)))
                .collect::<Result<Vec<f64>, _>>()
        })
        .collect::<Result<_, _>>()?;

    let b = references as f64;
    let entries: Vec<GapEntry> = ks
        .iter()
        .enumerate()
        .map(|(idx, &k)| {
            let logs: Vec<f64> = reference_logs.iter().map(|r| r[idx]).collect();
            let mean = logs.iter().sum::<f64>() / b;
            let sd = (logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / b).sqrt();
            GapEntry {
                k,
                gap: mean - observed[idx],
                log_w: observed[idx],
                reference_log_w: mean,
                sd,
                s_k: sd * (1.0 + 1.0 / b).sqrt(),
            }
        })
        .collect();

    Ok(GapResult {
        candidates: rank_k_candidates(&entries),
        one_se_k: one_standard_error_k(&entries),
        entries,
        references,
        reference_mode,
        restarts,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entries(gaps: &[f64]) -> Vec<GapEntry> {
        gaps.iter()
            .enumerate()
            .map(|(i, &gap)| GapEntry {
                k: i + 1,
                gap,
                log_w: 0.0,
                reference_log_w: gap,
                sd: 0.1,
                s_k: 0.1,
            })
            .collect()
    }

    #[test]
    fn sole_jump_candidate() {
        let ranked = rank_k_candidates(&entries(&[1.0, 1.0, 3.0, 3.1]));
        assert_eq!(ranked.len(), 1);
        assert_eq!(ranked[0].k, 3);
        assert!((ranked[0].jump - 2.0).abs() < 1e-12);
    }

    #[test]
    fn constant_gap_has_no_candidates() {
        assert!(rank_k_candidates(&entries(&[2.0; 6])).is_empty());
    }

    #[test]
    fn one_se_rule() {
        // Gap(2)=2.0 >= Gap(3) - s_3 = 2.05 - 0.1
        assert_eq!(one_standard_error_k(&entries(&[0.5, 2.0, 2.05, 2.1])), Some(2));
        assert_eq!(one_standard_error_k(&entries(&[0.0, 1.0, 2.0])), None);
    }

    #[test]
    fn rejects_bad_arguments() {
        let x = Array2::from_shape_fn((20, 2), |(i, j)| (i + j) as f64 + (i % 3) as f64);
        let mut settings = GapSettings { k_max: 3, ..GapSettings::default() };
        settings.references = 5;
        assert!(matches!(gap_statistic(x.view(), &settings), Err(ClusterError::InvalidArgument(_))));
        settings.references = 10;
        settings.k_max = 21;
        assert!(gap_statistic(x.view(), &settings).is_err());
        let flat = Array2::from_shape_fn((20, 2), |(i, j)| if j == 0 { i as f64 } else { 1.0 });
        settings.k_max = 3;
        assert_eq!(gap_statistic(flat.view(), &settings).unwrap_err(), ClusterError::DegenerateData);
    }

    #[test]
    fn pca_reference_stays_in_rotated_box() {
        // Points along the diagonal: the aligned box is thin, the plain box is not.
        let x = Array2::from_shape_fn((50, 2), |(i, j)| i as f64 + if j == 1 { 0.1 * (i % 2) as f64 } else { 0.0 });
        let aligned = ReferenceBox::new(x.view(), ReferenceMode::PcaAligned).unwrap();
        let sample = aligned.sample(200, 3);
        for row in sample.rows() {
            assert!((row[0] - row[1]).abs() < 0.2, "{row}");
        }
        let plain = ReferenceBox::new(x.view(), ReferenceMode::BoundingBox).unwrap();
        let sample = plain.sample(200, 3);
        assert!(sample.rows().into_iter().any(|r| (r[0] - r[1]).abs() > 5.0));
    }
}
