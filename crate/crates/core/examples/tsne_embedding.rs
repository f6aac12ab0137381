//! Exact t-SNE of the CDR components of a four-subtype cohort, followed by
//! K-means on the 2-D map and agreement with the planted labels.

use dementia_subtypes::clustering::kmeans_fit;
use dementia_subtypes::embedding::{tsne_embed, EmbeddingConfig};
use dementia_subtypes::ingestion::{median_impute, Feature};
use dementia_subtypes::metrics::adjusted_rand_index;
use dementia_subtypes::pipeline::feature_matrix;
use dementia_subtypes::synthetic::{generate_cohort, GeneratorConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (cohort, truth) = generate_cohort(&GeneratorConfig::planted_four(3))?;
    let features = Feature::cdr_components();
    let (cohort, _) = median_impute(&cohort, &features)?;
    let (ids, x) = feature_matrix(&cohort, &features)?;

    let config = EmbeddingConfig {
        seed: 3,
        ..EmbeddingConfig::default()
    };
    let embedding = tsne_embed(&ids, x.view(), &config)?;
    println!("{} visits embedded", ids.len());
    println!("KL initial {:.4}", embedding.initial_kl);
    for (iteration, kl) in &embedding.kl_trace {
        if iteration % 250 == 0 {
            println!("KL @ {iteration:>4}  {kl:.4}");
        }
    }

    let model = kmeans_fit(embedding.coordinates().view(), 4, 10, 3)?;
    let ari = adjusted_rand_index(&model.labels, &truth.labels_for(&ids));
    println!("K-means (K=4) on the map vs planted subtypes: ARI = {ari:.4}");
    Ok(())
}
