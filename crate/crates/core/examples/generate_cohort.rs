//! Generates the 16-subtype synthetic cohort and writes it as canonical CSV.
//!
//!     cargo run --example generate_cohort -- [seed] [out.csv]

use std::collections::BTreeMap;

use dementia_subtypes::cohort::validate_cohort;
use dementia_subtypes::ingestion::write_cohort_file;
use dementia_subtypes::synthetic::{generate_cohort, GeneratorConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(7);
    let out = args
        .next()
        .unwrap_or_else(|| std::env::temp_dir().join("cohort.csv").display().to_string());

    let config = GeneratorConfig::reference_default(seed);
    let (cohort, truth) = generate_cohort(&config)?;
    write_cohort_file(&cohort, &out)?;

    println!(
        "{} visits from {} patients -> {out}",
        cohort.len(),
        cohort.patient_count()
    );
    println!("validation violations: {}", validate_cohort(&cohort).violations.len());

    let mut sizes: BTreeMap<&str, usize> = BTreeMap::new();
    for &subtype in truth.visits.values() {
        *sizes.entry(truth.subtype_names[subtype].as_str()).or_default() += 1;
    }
    for (i, name) in truth.subtype_names.iter().enumerate() {
        println!(
            "  {name:<4} group G{}  {:>4} visits",
            truth.groups[i],
            sizes.get(name.as_str()).copied().unwrap_or(0)
        );
    }
    Ok(())
}
