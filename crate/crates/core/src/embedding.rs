//! Exact O(n²) t-SNE from the feature space to two dimensions.
//!
//! Conditional Gaussian affinities are calibrated per row by a bisection on
//! the bandwidth until the row entropy matches the target perplexity, then
//! symmetrized into a joint distribution `P`. The embedding minimizes
//! `KL(P ‖ Q)` where `Q` is the Student-t (one degree of freedom) joint over
//! the 2-D coordinates, using momentum gradient descent with per-coordinate
//! gains and early exaggeration.
//!
//! Row-level work runs on the rayon pool. Every reduction is a per-row
//! sequential sum followed by a sequential sum over rows, so results are
//! bit-identical for any thread count.

use std::collections::{HashMap, HashSet};

use ndarray::{Array2, ArrayView2};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::seed::{derive_indexed, derive_seed, rng_from};

/// Magnitude of the deterministic jitter applied to duplicated rows.
pub const DUPLICATE_JITTER: f64 = 1e-6;
/// Standard deviation of the Gaussian initial layout.
pub const INIT_STDDEV: f64 = 1e-4;
/// Entropy tolerance (nats) of the bandwidth search.
pub const ENTROPY_TOLERANCE: f64 = 1e-5;
/// Iteration cap of the bandwidth search.
pub const MAX_SEARCH_STEPS: usize = 64;

const MIN_GAIN: f64 = 0.01;
const KL_AUDIT_EVERY: usize = 50;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmbedError {
    #[error("t-SNE needs at least 4 points, got {0}")]
    TooFewPoints(usize),
    #[error("perplexity {perplexity} is too large for {n} points (max {max})")]
    PerplexityTooLarge { perplexity: f64, n: usize, max: f64 },
    #[error("row {0} is identical to every other row; bandwidth search is unbounded")]
    DegenerateRow(usize),
    #[error("row {0} contains a non-finite value")]
    NonFinite(usize),
    #[error("{ids} ids for {rows} rows")]
    LengthMismatch { ids: usize, rows: usize },
    #[error("duplicate visit id `{0}`")]
    DuplicateId(String),
    #[error("invalid embedding config: {0}")]
    InvalidConfig(String),
    #[error("coordinates became non-finite at iteration {iteration}")]
    NumericalDivergence { iteration: usize },
}

/// Optimizer settings. Defaults follow common exact t-SNE practice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub exaggeration: f64,
    pub exaggeration_iterations: usize,
    pub learning_rate: f64,
    pub momentum_initial: f64,
    pub momentum_final: f64,
    pub momentum_switch: usize,
    /// z-score each column before computing affinities.
    pub standardize: bool,
    pub seed: u64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            perplexity: 30.0,
            iterations: 1000,
            exaggeration: 12.0,
            exaggeration_iterations: 250,
            learning_rate: 200.0,
            momentum_initial: 0.5,
            momentum_final: 0.8,
            momentum_switch: 250,
            standardize: false,
            seed: 0,
        }
    }
}

impl EmbeddingConfig {
    pub fn validate(&self, n: usize) -> Result<(), EmbedError> {
        let bad = |msg: &str| Err(EmbedError::InvalidConfig(msg.to_string()));
        if !(self.perplexity.is_finite() && self.perplexity > 0.0) {
            return bad("perplexity must be positive");
        }
        if self.iterations == 0 {
            return bad("iterations must be positive");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(self.exaggeration.is_finite() && self.exaggeration > 0.0) {
            return bad("exaggeration must be positive");
        }
        for m in [self.momentum_initial, self.momentum_final] {
            if !(0.0..1.0).contains(&m) {
                return bad("momentum must lie in [0, 1)");
            }
        }
        check_perplexity(n, self.perplexity)
    }
}

/// Largest admissible perplexity for `n` points.
pub fn max_perplexity(n: usize) -> f64 {
    (n as f64 - 1.0) / 3.0
}

fn check_perplexity(n: usize, perplexity: f64) -> Result<(), EmbedError> {
    if n < 4 {
        return Err(EmbedError::TooFewPoints(n));
    }
    let max = max_perplexity(n);
    if perplexity > max {
        return Err(EmbedError::PerplexityTooLarge { perplexity, n, max });
    }
    Ok(())
}

/// Result of calibrating one row's conditional distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct RowAffinity {
    /// `p(j|i)` over the supplied neighbours, in input order.
    pub probabilities: Vec<f64>,
    /// Precision `1 / (2 sigma²)`.
    pub beta: f64,
    /// Achieved perplexity `exp(H)` with `H` in nats.
    pub perplexity: f64,
    pub steps: usize,
}

impl RowAffinity {
    pub fn sigma(&self) -> f64 {
        (0.5 / self.beta).sqrt()
    }
}

/// Calibrates `p(j|i) ∝ exp(-beta d_j)` over squared distances `d` to the
/// other points so that its perplexity matches `perplexity`.
///
/// Targets below the minimum attainable perplexity (e.g. < 1, or below the
/// number of tied nearest neighbours) saturate at the sharpest distribution
/// reachable within the step cap.
pub fn conditional_row(distances: &[f64], perplexity: f64) -> RowAffinity {
    let m = distances.len();
    assert!(m > 0, "a row needs at least one neighbour");
    let target = perplexity.ln();
    let d_min = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let shifted: Vec<f64> = distances.iter().map(|d| d - d_min).collect();

    let mut probabilities = vec![0.0; m];
    let entropy_at = |beta: f64, probs: &mut [f64]| -> f64 {
        let mut z = 0.0;
        for (p, &s) in probs.iter_mut().zip(&shifted) {
            *p = (-beta * s).exp();
            z += *p;
        }
        let mut weighted = 0.0;
        for (p, &s) in probs.iter_mut().zip(&shifted) {
            *p /= z;
            weighted += *p * s;
        }
        z.ln() + beta * weighted
    };

    // Start from the bandwidth of roughly the perplexity-th neighbour.
    let mut sorted: Vec<f64> = shifted.iter().copied().filter(|&s| s > 0.0).collect();
    if sorted.is_empty() {
        let h = entropy_at(1.0, &mut probabilities);
        return RowAffinity {
            probabilities,
            beta: 1.0,
            perplexity: h.exp(),
            steps: 0,
        };
    }
    sorted.sort_by(f64::total_cmp);
    let rank = (perplexity.ceil() as usize).clamp(1, sorted.len()) - 1;
    let mut beta = 1.0 / sorted[rank];
    let mut lo: Option<f64> = None;
    let mut hi: Option<f64> = None;

    let mut best = (f64::INFINITY, beta);
    let mut steps = 0;
    for step in 1..=MAX_SEARCH_STEPS {
        steps = step;
        let h = entropy_at(beta, &mut probabilities);
        let diff = h - target;
        if diff.abs() < best.0 {
            best = (diff.abs(), beta);
        }
        if diff.abs() < ENTROPY_TOLERANCE {
            break;
        }
        if diff > 0.0 {
            lo = Some(beta);
            beta = match hi {
                Some(h) => (beta * h).sqrt(),
                None => beta * 2.0,
            };
        } else {
            hi = Some(beta);
            beta = match lo {
                Some(l) => (beta * l).sqrt(),
                None => beta / 2.0,
            };
        }
    }
    let beta = best.1;
    let h = entropy_at(beta, &mut probabilities);
    RowAffinity {
        probabilities,
        beta,
        perplexity: h.exp(),
        steps,
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_rows(x: &ArrayView2<f64>) -> Result<(), EmbedError> {
    for (i, row) in x.rows().into_iter().enumerate() {
        if row.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite(i));
        }
    }
    Ok(())
}

/// Row-calibrated conditional affinities `p(j|i)` before symmetrization.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalAffinities {
    pub n: usize,
    /// Row-major `n × n`, zero diagonal; each row sums to one.
    pub p: Vec<f64>,
    pub betas: Vec<f64>,
    pub row_perplexities: Vec<f64>,
}

pub fn conditional_affinities(
    x: ArrayView2<f64>,
    perplexity: f64,
) -> Result<ConditionalAffinities, EmbedError> {
    let n = x.nrows();
    check_perplexity(n, perplexity)?;
    check_rows(&x)?;
    let rows: Vec<Vec<f64>> = x.rows().into_iter().map(|r| r.to_vec()).collect();

    let calibrated: Vec<Result<RowAffinity, EmbedError>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let distances: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| squared_distance(&rows[i], &rows[j]))
                .collect();
            if distances.iter().all(|&d| d == 0.0) {
                return Err(EmbedError::DegenerateRow(i));
            }
            Ok(conditional_row(&distances, perplexity))
        })
        .collect();

    let mut p = vec![0.0; n * n];
    let mut betas = Vec::with_capacity(n);
    let mut row_perplexities = Vec::with_capacity(n);
    for (i, row) in calibrated.into_iter().enumerate() {
        let row = row?;
        let mut others = row.probabilities.iter();
        for j in (0..n).filter(|&j| j != i) {
            p[i * n + j] = *others.next().expect("one probability per neighbour");
        }
        betas.push(row.beta);
        row_perplexities.push(row.perplexity);
    }
    Ok(ConditionalAffinities {
        n,
        p,
        betas,
        row_perplexities,
    })
}

/// Symmetric joint affinities `P = (P_cond + P_condᵀ) / 2n`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    pub n: usize,
    /// Row-major `n × n`.
    pub p: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub perplexity: f64,
    pub row_perplexities: Vec<f64>,
}

impl AffinityMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.n + j]
    }

    pub fn total(&self) -> f64 {
        row_sums(&self.p, self.n).iter().sum()
    }
}

pub fn compute_affinities(
    x: ArrayView2<f64>,
    perplexity: f64,
) -> Result<AffinityMatrix, EmbedError> {
    let conditional = conditional_affinities(x, perplexity)?;
    let n = conditional.n;
    let scale = 2.0 * n as f64;
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                p[i * n + j] = (conditional.p[i * n + j] + conditional.p[j * n + i]) / scale;
            }
        }
    }
    Ok(AffinityMatrix {
        n,
        p,
        sigmas: conditional
            .betas
            .iter()
            .map(|b| (0.5 / b).sqrt())
            .collect(),
        perplexity,
        row_perplexities: conditional.row_perplexities,
    })
}

fn row_sums(m: &[f64], n: usize) -> Vec<f64> {
    m.par_chunks(n.max(1)).map(|row| row.iter().sum()).collect()
}

/// Unnormalized Student-t kernel row sums `Σ_j (1 + ‖y_i − y_j‖²)⁻¹`.
fn kernel_row_sums(y: &[f64], n: usize) -> Vec<f64> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let (yi0, yi1) = (y[2 * i], y[2 * i + 1]);
            let mut sum = 0.0;
            for j in 0..n {
                if j != i {
                    let d0 = yi0 - y[2 * j];
                    let d1 = yi1 - y[2 * j + 1];
                    sum += 1.0 / (1.0 + d0 * d0 + d1 * d1);
                }
            }
            sum
        })
        .collect()
}

/// Student-t joint distribution `Q` over 2-D coordinates (row-major
/// `n × n`, zero diagonal).
pub fn student_t_joint(y: &[f64]) -> Vec<f64> {
    let n = y.len() / 2;
    let z: f64 = kernel_row_sums(y, n).iter().sum();
    let mut q = vec![0.0; n * n];
    q.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, row)| {
        for (j, slot) in row.iter_mut().enumerate() {
            if j != i {
                let d0 = y[2 * i] - y[2 * j];
                let d1 = y[2 * i + 1] - y[2 * j + 1];
                *slot = 1.0 / (1.0 + d0 * d0 + d1 * d1) / z;
            }
        }
    });
    q
}

/// `KL(P ‖ Q(y))` in nats, skipping zero entries of `P`.
pub fn kl_divergence(p: &[f64], y: &[f64]) -> f64 {
    let n = y.len() / 2;
    let z: f64 = kernel_row_sums(y, n).iter().sum();
    let per_row: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut sum = 0.0;
            for j in 0..n {
                let pij = p[i * n + j];
                if j != i && pij > 0.0 {
                    let d0 = y[2 * i] - y[2 * j];
                    let d1 = y[2 * i + 1] - y[2 * j + 1];
                    let qij = 1.0 / (1.0 + d0 * d0 + d1 * d1) / z;
                    sum += pij * (pij / qij).ln();
                }
            }
            sum
        })
        .collect();
    per_row.iter().sum()
}

/// Analytic gradient of `KL(exaggeration · P ‖ Q)` with respect to the
/// flattened coordinates:
/// `∂C/∂y_i = 4 Σ_j (e·p_ij − q_ij)(y_i − y_j)(1 + ‖y_i − y_j‖²)⁻¹`.
pub fn kl_gradient(p: &[f64], y: &[f64], exaggeration: f64) -> Vec<f64> {
    let n = y.len() / 2;
    // One pass per row gathers the attractive sum, the unnormalized
    // repulsive sum and the row's share of Z.
    let rows: Vec<[f64; 5]> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (yi0, yi1) = (y[2 * i], y[2 * i + 1]);
            let p_row = &p[i * n..(i + 1) * n];
            let mut acc = [0.0; 5];
            for j in (0..n).filter(|&j| j != i) {
                let d0 = yi0 - y[2 * j];
                let d1 = yi1 - y[2 * j + 1];
                let num = 1.0 / (1.0 + d0 * d0 + d1 * d1);
                let attract = p_row[j] * num;
                let repel = num * num;
                acc[0] += attract * d0;
                acc[1] += attract * d1;
                acc[2] += repel * d0;
                acc[3] += repel * d1;
                acc[4] += num;
            }
            acc
        })
        .collect();
    let z: f64 = rows.iter().map(|r| r[4]).sum();
    rows.iter()
        .flat_map(|r| {
            [
                4.0 * (exaggeration * r[0] - r[2] / z),
                4.0 * (exaggeration * r[1] - r[3] / z),
            ]
        })
        .collect()
}

/// Maps a 64-bit hash onto `[-1, 1)`.
fn unit_interval(hash: u64) -> f64 {
    ((hash >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
}

/// Adds deterministic jitter of at most `magnitude` per coordinate to every
/// row whose exact vector occurs more than once. The offset depends only
/// on the row's visit id.
pub fn jitter_duplicates(ids: &[String], x: ArrayView2<f64>, magnitude: f64) -> Array2<f64> {
    let mut out = x.to_owned();
    let key = |row: ndarray::ArrayView1<f64>| -> Vec<u64> { row.iter().map(|v| v.to_bits()).collect() };
    let mut counts: HashMap<Vec<u64>, usize> = HashMap::new();
    for row in x.rows() {
        *counts.entry(key(row)).or_default() += 1;
    }
    for (i, mut row) in out.rows_mut().into_iter().enumerate() {
        if counts[&key(x.row(i))] > 1 {
            for (dim, value) in row.iter_mut().enumerate() {
                *value += magnitude * unit_interval(derive_indexed(0, &ids[i], dim as u64));
            }
        }
    }
    out
}

/// Centres every column and scales it to unit variance; constant columns
/// are only centred.
pub fn standardize_columns(x: ArrayView2<f64>) -> Array2<f64> {
    let mut out = x.to_owned();
    let n = x.nrows() as f64;
    for mut column in out.columns_mut() {
        let mean = column.sum() / n;
        let var = column.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let sd = var.sqrt();
        for v in column.iter_mut() {
            *v -= mean;
            if sd > 0.0 {
                *v /= sd;
            }
        }
    }
    out
}

/// Initial coordinates `N(0, INIT_STDDEV²)`, each point drawn from a
/// stream keyed by its visit id and the seed.
pub fn initial_layout(ids: &[String], seed: u64) -> Vec<f64> {
    let mut y = Vec::with_capacity(2 * ids.len());
    for id in ids {
        let mut rng = rng_from(derive_seed(seed, id));
        for _ in 0..2 {
            let z: f64 = StandardNormal.sample(&mut rng);
            y.push(INIT_STDDEV * z);
        }
    }
    y
}

/// 2-D coordinates of one visit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedPoint {
    pub visit_id: String,
    pub y: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    /// Points in the caller's row order.
    pub points: Vec<EmbeddedPoint>,
    /// `KL(P ‖ Q)` of the initial layout, without exaggeration.
    pub initial_kl: f64,
    pub final_kl: f64,
    /// `(iteration, KL)` audited every 50 iterations.
    pub kl_trace: Vec<(usize, f64)>,
    pub config: EmbeddingConfig,
}

impl Embedding {
    pub fn coordinates(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.points.len(), 2));
        for (i, point) in self.points.iter().enumerate() {
            out[[i, 0]] = point.y[0];
            out[[i, 1]] = point.y[1];
        }
        out
    }
}

/// Embeds the rows of `x` (one per visit id) into two dimensions.
///
/// Rows are processed in visit-id order internally, so permuting the input
/// permutes the output identically.
pub fn tsne_embed(
    ids: &[String],
    x: ArrayView2<f64>,
    config: &EmbeddingConfig,
) -> Result<Embedding, EmbedError> {
    let n = x.nrows();
    if ids.len() != n {
        return Err(EmbedError::LengthMismatch {
            ids: ids.len(),
            rows: n,
        });
    }
    let mut unique = HashSet::with_capacity(n);
    for id in ids {
        if !unique.insert(id.as_str()) {
            return Err(EmbedError::DuplicateId(id.clone()));
        }
    }
    config.validate(n)?;
    check_rows(&x)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| ids[a].cmp(&ids[b]));
    let sorted_ids: Vec<String> = order.iter().map(|&i| ids[i].clone()).collect();
    let mut sorted = Array2::zeros((n, x.ncols()));
    for (row, &i) in order.iter().enumerate() {
        sorted.row_mut(row).assign(&x.row(i));
    }
    if config.standardize {
        sorted = standardize_columns(sorted.view());
    }
    let features = jitter_duplicates(&sorted_ids, sorted.view(), DUPLICATE_JITTER);

    let affinities = compute_affinities(features.view(), config.perplexity)?;
    let p = affinities.p;

    let mut y = initial_layout(&sorted_ids, config.seed);
    let initial_kl = kl_divergence(&p, &y);
    let mut update = vec![0.0; 2 * n];
    let mut gains: Vec<f64> = vec![1.0; 2 * n];
    let mut kl_trace = Vec::new();

    for iteration in 0..config.iterations {
        let exaggeration = if iteration < config.exaggeration_iterations {
            config.exaggeration
        } else {
            1.0
        };
        let momentum = if iteration < config.momentum_switch {
            config.momentum_initial
        } else {
            config.momentum_final
        };
        let grad = kl_gradient(&p, &y, exaggeration);
        for c in 0..2 * n {
            gains[c] = if (grad[c] > 0.0) != (update[c] > 0.0) {
                gains[c] + 0.2
            } else {
                gains[c] * 0.8
            }
            .max(MIN_GAIN);
            update[c] = momentum * update[c] - config.learning_rate * gains[c] * grad[c];
            y[c] += update[c];
        }
        for dim in 0..2 {
            let mean = y.iter().skip(dim).step_by(2).sum::<f64>() / n as f64;
            y.iter_mut().skip(dim).step_by(2).for_each(|v| *v -= mean);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::NumericalDivergence { iteration });
        }
        if (iteration + 1) % KL_AUDIT_EVERY == 0 {
            kl_trace.push((iteration + 1, kl_divergence(&p, &y)));
        }
    }
    let final_kl = kl_divergence(&p, &y);

    let mut points = vec![
        EmbeddedPoint {
            visit_id: String::new(),
            y: [0.0; 2],
        };
        n
    ];
    for (row, &i) in order.iter().enumerate() {
        points[i] = EmbeddedPoint {
            visit_id: sorted_ids[row].clone(),
            y: [y[2 * row], y[2 * row + 1]],
        };
    }
    Ok(Embedding {
        points,
        initial_kl,
        final_kl,
        kl_trace,
        config: config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    /// Scalar bisection over sigma, independent of the beta search above.
    fn sigma_oracle(d: &[f64], perplexity: f64) -> Vec<f64> {
        let target = perplexity.ln();
        let probs = |sigma: f64| -> Vec<f64> {
            let w: Vec<f64> = d.iter().map(|x| (-x / (2.0 * sigma * sigma)).exp()).collect();
            let z: f64 = w.iter().sum();
            w.iter().map(|v| v / z).collect()
        };
        let entropy = |p: &[f64]| -> f64 {
            p.iter()
                .filter(|&&v| v > 0.0)
                .map(|&v| -v * v.ln())
                .sum::<f64>()
        };
        let (mut lo, mut hi) = (1e-6_f64, 1e3_f64);
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if entropy(&probs(mid)) > target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        probs((lo * hi).sqrt())
    }

    #[test]
    fn collinear_nearest_neighbour_dominates() {
        // points at x = 0, 1, 10; row 0 sees squared distances 1 and 100.
        let row = conditional_row(&[1.0, 100.0], 1.0);
        assert!(row.probabilities[0] > 0.99, "{:?}", row.probabilities);
        let oracle = sigma_oracle(&[1.0, 100.0], 1.0);
        assert!(oracle[0] > 0.99);
        assert!((row.probabilities[0] - oracle[0]).abs() < 0.01);
    }

    #[test]
    fn row_search_matches_scalar_oracle() {
        let d = [0.3, 1.2, 2.0, 2.5, 4.0, 7.5, 9.0];
        let row = conditional_row(&d, 3.0);
        let oracle = sigma_oracle(&d, 3.0);
        for (a, b) in row.probabilities.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        }
        assert!((row.perplexity - 3.0).abs() < 1e-3);
    }

    #[test]
    fn square_corners_are_symmetric() {
        let x = array![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let aff = compute_affinities(x.view(), 1.0).unwrap();
        let edges = [(0, 1), (1, 2), (2, 3), (3, 0)];
        let first = aff.get(0, 1);
        for (i, j) in edges {
            assert!((aff.get(i, j) - first).abs() < 1e-12);
            assert!((aff.get(j, i) - first).abs() < 1e-12);
        }
        assert!((aff.total() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn too_few_points_and_large_perplexity_rejected() {
        let x = array![[0.0, 0.0], [1.0, 0.0]];
        assert_eq!(
            compute_affinities(x.view(), 1.0).unwrap_err(),
            EmbedError::TooFewPoints(2)
        );
        let x = Array2::from_shape_fn((10, 2), |(i, j)| (i * 3 + j) as f64);
        assert!(matches!(
            compute_affinities(x.view(), 3.5),
            Err(EmbedError::PerplexityTooLarge { .. })
        ));
    }

    #[test]
    fn identical_rows_are_degenerate_without_jitter() {
        let x = Array2::from_elem((5, 3), 1.0);
        assert_eq!(
            compute_affinities(x.view(), 1.0).unwrap_err(),
            EmbedError::DegenerateRow(0)
        );
        let ids: Vec<String> = (0..5).map(|i| format!("V{i}")).collect();
        let jittered = jitter_duplicates(&ids, x.view(), DUPLICATE_JITTER);
        assert!(compute_affinities(jittered.view(), 1.0).is_ok());
        for v in jittered.iter() {
            assert!((v - 1.0).abs() <= DUPLICATE_JITTER);
        }
    }

    #[test]
    fn jitter_leaves_unique_rows_alone() {
        let x = array![[0.0, 1.0], [0.0, 1.0], [2.0, 3.0]];
        let ids: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let out = jitter_duplicates(&ids, x.view(), DUPLICATE_JITTER);
        assert_eq!(out.row(2), x.row(2));
        assert_ne!(out.row(0), out.row(1));
    }

    #[test]
    fn standardize_gives_unit_variance() {
        let x = array![[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]];
        let z = standardize_columns(x.view());
        let var: f64 = z.column(0).iter().map(|v| v * v).sum::<f64>() / 3.0;
        assert!((var - 1.0).abs() < 1e-12);
        assert!(z.column(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn config_validation() {
        let mut config = EmbeddingConfig::default();
        assert!(config.validate(100).is_ok());
        assert!(config.validate(60).is_err());
        config.iterations = 0;
        assert!(matches!(
            config.validate(100),
            Err(EmbedError::InvalidConfig(_))
        ));
    }
}
