//! Lloyd's K-means with k-means++ seeding and best-of-restarts selection.

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Assignments, ClusterError};
use crate::seed::{derive_indexed, rng_from};

/// Iteration cap of a single Lloyd run.
pub const MAX_ITERATIONS: usize = 300;

/// A fitted partition of `n` points into `k` non-empty clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    /// `k × d`, each row the mean of its cluster.
    pub centroids: Array2<f64>,
    /// Cluster index of each input row.
    pub labels: Vec<usize>,
    /// Pooled within-cluster sum of squares `W_k`.
    pub inertia: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Lloyd iterations of the winning restart.
    pub iterations: usize,
    /// `W_k` after every update step of the winning restart.
    pub inertia_trace: Vec<f64>,
}

impl ClusterModel {
    /// Pairs each label with its visit id. `ids` must follow row order.
    pub fn assignments(&self, ids: &[String]) -> Assignments {
        ids.iter().cloned().zip(self.labels.iter().copied()).collect()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &label in &self.labels {
            sizes[label] += 1;
        }
        sizes
    }
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Pooled within-cluster dispersion `Σ_r Σ_{i∈r} ‖x_i − μ_r‖²`, with each
/// `μ_r` recomputed as the mean of the points labelled `r`.
pub fn within_dispersion(labels: &[usize], points: ArrayView2<f64>) -> f64 {
    assert_eq!(labels.len(), points.nrows(), "one label per point");
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let d = points.ncols();
    let mut sums = vec![0.0; k * d];
    let mut counts = vec![0usize; k];
    for (row, &label) in points.rows().into_iter().zip(labels) {
        counts[label] += 1;
        for (s, v) in sums[label * d..(label + 1) * d].iter_mut().zip(row.iter()) {
            *s += v;
        }
    }
    let mut total = 0.0;
    for (row, &label) in points.rows().into_iter().zip(labels) {
        let c = counts[label] as f64;
        for (dim, v) in row.iter().enumerate() {
            let diff = v - sums[label * d + dim] / c;
            total += diff * diff;
        }
    }
    total
}

struct Run {
    centroids: Vec<f64>,
    labels: Vec<usize>,
    inertia: f64,
    iterations: usize,
    trace: Vec<f64>,
}

fn plus_plus_init<R: Rng>(data: &[f64], n: usize, d: usize, k: usize, rng: &mut R) -> Vec<f64> {
    let mut centroids = Vec::with_capacity(k * d);
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    centroids.extend_from_slice(&data[first * d..(first + 1) * d]);
    let mut nearest: Vec<f64> = (0..n)
        .map(|i| sq_dist(&data[i * d..(i + 1) * d], &centroids[..d]))
        .collect();

    for c in 1..k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in nearest.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc >= target {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or_else(|| {
                (0..n).rev().find(|&i| nearest[i] > 0.0).expect("positive mass")
            })
        } else {
            // Every remaining point coincides with a centroid.
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[pick] = true;
        centroids.extend_from_slice(&data[pick * d..(pick + 1) * d]);
        let centre = &centroids[c * d..(c + 1) * d];
        for (i, slot) in nearest.iter_mut().enumerate() {
            *slot = slot.min(sq_dist(&data[i * d..(i + 1) * d], centre));
        }
    }
    centroids
}

fn assign(data: &[f64], centroids: &[f64], d: usize, labels: &mut [usize]) -> bool {
    let k = centroids.len() / d;
    let mut changed = false;
    for (i, label) in labels.iter_mut().enumerate() {
        let point = &data[i * d..(i + 1) * d];
        let mut best = (f64::INFINITY, 0);
        for c in 0..k {
            let dist = sq_dist(point, &centroids[c * d..(c + 1) * d]);
            if dist < best.0 {
                best = (dist, c);
            }
        }
        if *label != best.1 {
            *label = best.1;
            changed = true;
        }
    }
    changed
}

/// Moves the point farthest from its centroid into each empty cluster.
fn repair_empty(data: &[f64], centroids: &mut [f64], d: usize, labels: &mut [usize]) {
    let k = centroids.len() / d;
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let mut far = (-1.0, usize::MAX);
        for (i, &l) in labels.iter().enumerate() {
            if counts[l] > 1 {
                let dist = sq_dist(&data[i * d..(i + 1) * d], &centroids[l * d..(l + 1) * d]);
                if dist > far.0 {
                    far = (dist, i);
                }
            }
        }
        let i = far.1;
        counts[labels[i]] -= 1;
        labels[i] = empty;
        counts[empty] = 1;
        centroids[empty * d..(empty + 1) * d].copy_from_slice(&data[i * d..(i + 1) * d]);
    }
}

fn update_means(data: &[f64], d: usize, labels: &[usize], centroids: &mut [f64]) {
    let k = centroids.len() / d;
    let mut counts = vec![0usize; k];
    centroids.iter_mut().for_each(|c| *c = 0.0);
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for dim in 0..d {
            centroids[l * d + dim] += data[i * d + dim];
        }
    }
    for c in 0..k {
        for dim in 0..d {
            centroids[c * d + dim] /= counts[c] as f64;
        }
    }
}

fn inertia(data: &[f64], centroids: &[f64], d: usize, labels: &[usize]) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| sq_dist(&data[i * d..(i + 1) * d], &centroids[l * d..(l + 1) * d]))
        .sum()
}

fn lloyd(data: &[f64], n: usize, d: usize, k: usize, seed: u64) -> Run {
    let mut rng = rng_from(seed);
    let mut centroids = plus_plus_init(data, n, d, k, &mut rng);
    let mut labels = vec![usize::MAX; n];
    let mut trace = Vec::new();
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        let changed = assign(data, &centroids, d, &mut labels);
        if !changed && iterations > 0 {
            break;
        }
        iterations += 1;
        repair_empty(data, &mut centroids, d, &mut labels);
        update_means(data, d, &labels, &mut centroids);
        trace.push(inertia(data, &centroids, d, &labels));
    }
    let inertia = *trace.last().expect("at least one update");
    Run {
        centroids,
        labels,
        inertia,
        iterations,
        trace,
    }
}

/// Fits K-means with `restarts` independent k-means++ initializations and
/// keeps the run with the smallest `W_k` (ties go to the earliest restart).
pub fn kmeans_fit(
    points: ArrayView2<f64>,
    k: usize,
    restarts: usize,
    seed: u64,
) -> Result<ClusterModel, ClusterError> {
    let n = points.nrows();
    let d = points.ncols();
    if k == 0 || restarts == 0 {
        return Err(ClusterError::InvalidArgument(
            "k and restarts must be positive".into(),
        ));
    }
    if k > n {
        return Err(ClusterError::KExceedsN { k, n });
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(ClusterError::NonFinite);
    }
    let data: Vec<f64> = points.iter().copied().collect();

    let runs: Vec<Run> = (0..restarts)
        .into_par_iter()
        .map(|r| lloyd(&data, n, d, k, derive_indexed(seed, "kmeans-restart", r as u64)))
        .collect();
    let best = runs
        .into_iter()
        .reduce(|best, run| if run.inertia < best.inertia { run } else { best })
        .expect("restarts > 0");

    Ok(ClusterModel {
        k,
        centroids: Array2::from_shape_vec((k, d), best.centroids).expect("k × d centroids"),
        labels: best.labels,
        inertia: best.inertia,
        restarts,
        seed,
        iterations: best.iterations,
        inertia_trace: best.trace,
    })
}
