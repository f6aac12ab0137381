mod common;

use common::{axis_centres, blobs};
use dementia_subtypes::clustering::{gap_statistic, kmeans_fit, GapSettings};
use dementia_subtypes::embedding::{tsne_embed, EmbeddingConfig};
use dementia_subtypes::metrics::adjusted_rand_index;
use dementia_subtypes::seed::rng_from;
use ndarray::{Array2, Axis};
use rand::Rng;

fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("v{i:04}")).collect()
}

fn quick(perplexity: f64, seed: u64) -> EmbeddingConfig {
    EmbeddingConfig {
        perplexity,
        iterations: 500,
        seed,
        ..EmbeddingConfig::default()
    }
}

#[test]
fn two_far_blobs_are_recovered_after_embedding() {
    let (x, truth) = blobs(&[vec![0.0; 3], vec![20.0, 0.0, 0.0]], 50, 1.0, &mut rng_from(2));
    let e = tsne_embed(&ids(100), x.view(), &quick(15.0, 2)).unwrap();
    assert!(e.final_kl < e.initial_kl);
    let model = kmeans_fit(e.coordinates().view(), 2, 10, 2).unwrap();
    assert_eq!(adjusted_rand_index(&model.labels, &truth), 1.0);
}

#[test]
fn identical_rows_embed_without_structure() {
    let x = Array2::from_elem((4, 6), 1.0);
    let e = tsne_embed(&ids(4), x.view(), &quick(0.9, 1)).unwrap();
    let y = e.coordinates();
    let mut distances = Vec::new();
    for i in 0..4 {
        for j in i + 1..4 {
            distances.push((&y.row(i) - &y.row(j)).mapv(|v| v * v).sum().sqrt());
        }
    }
    let (lo, hi) = distances.iter().fold((f64::MAX, 0.0f64), |(lo, hi), &d| (lo.min(d), hi.max(d)));
    assert!(hi <= 10.0 * lo, "distances {distances:?}");
    // Four points cannot reproduce near-uniform affinities exactly in the
    // plane, so KL stays a little above zero.
    assert!(e.final_kl < 0.5 && e.final_kl <= e.initial_kl, "KL {} -> {}", e.initial_kl, e.final_kl);
}

#[test]
fn embedding_is_deterministic_and_follows_row_order() {
    let (x, _) = blobs(&axis_centres(3, 3, 6.0), 15, 1.0, &mut rng_from(5));
    let names = ids(x.nrows());
    let a = tsne_embed(&names, x.view(), &quick(8.0, 11)).unwrap();
    let b = tsne_embed(&names, x.view(), &quick(8.0, 11)).unwrap();
    assert_eq!(a.coordinates(), b.coordinates());

    // Reversing the rows (ids travel with them) reverses the output.
    let reversed = x.slice(ndarray::s![..;-1, ..]).to_owned();
    let reversed_ids: Vec<String> = names.iter().rev().cloned().collect();
    let c = tsne_embed(&reversed_ids, reversed.view(), &quick(8.0, 11)).unwrap();
    let mut back = c.coordinates();
    back.invert_axis(Axis(0));
    assert_eq!(back, a.coordinates());
}

#[test]
fn four_blobs_give_perfect_agreement_for_any_seed() {
    let (x, truth) = blobs(&axis_centres(4, 2, 10.0), 75, 1.0, &mut rng_from(9));
    let first = kmeans_fit(x.view(), 4, 10, 1).unwrap();
    assert_eq!(adjusted_rand_index(&first.labels, &truth), 1.0);
    for seed in 2..6 {
        let other = kmeans_fit(x.view(), 4, 10, seed).unwrap();
        assert_eq!(adjusted_rand_index(&first.labels, &other.labels), 1.0);
    }
}

#[test]
fn gap_statistic_finds_four_planted_blobs() {
    for seed in 0..4 {
        let (x, _) = blobs(&axis_centres(4, 2, 10.0), 40, 1.0, &mut rng_from(30 + seed));
        let settings = GapSettings { seed, ..GapSettings::default() };
        let result = gap_statistic(x.view(), &settings).unwrap();
        assert_eq!(result.one_se_k, Some(4), "seed {seed}");
        assert!(result.candidates.iter().any(|c| c.k == 4), "seed {seed}");
        assert!(result.entries.iter().all(|e| e.gap.is_finite() && e.s_k > 0.0));
    }
}

#[test]
fn gap_statistic_keeps_a_uniform_blob_whole() {
    let mut rng = rng_from(77);
    let x = Array2::from_shape_fn((150, 2), |_| rng.random_range(0.0..1.0));
    let settings = GapSettings { k_max: 6, seed: 3, ..GapSettings::default() };
    assert_eq!(gap_statistic(x.view(), &settings).unwrap().one_se_k, Some(1));
}
