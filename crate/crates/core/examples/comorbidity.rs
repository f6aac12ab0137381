//! Top diagnoses and their per-subtype counts, using the planted subtypes
//! of a synthetic cohort as the clustering.

use dementia_subtypes::clustering::cluster_label;
use dementia_subtypes::comorbidity::{comorbidity_profile, top_diagnoses};
use dementia_subtypes::synthetic::{generate_cohort, GeneratorConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (cohort, truth) = generate_cohort(&GeneratorConfig::reference_default(5))?;
    let top: Vec<String> = top_diagnoses(&cohort, 5).into_iter().map(|d| d.code).collect();
    let profile = comorbidity_profile(&cohort, &truth.visits, &top, false)?;

    for d in &profile.top {
        println!(
            "{:<7} {:>5} visits ({:.1}%)",
            d.code,
            d.count,
            100.0 * d.count as f64 / profile.total_visits as f64
        );
    }
    print!("\n{:<6}{:>7}", "", "visits");
    for code in &top {
        print!("{code:>8}");
    }
    println!();
    for c in &profile.clusters {
        print!("{:<6}{:>7}", cluster_label(c.cluster), c.size);
        for code in &top {
            print!("{:>7.0}%", 100.0 * c.share(code));
        }
        println!();
    }
    Ok(())
}
