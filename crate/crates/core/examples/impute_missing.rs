//! Median imputation of the CDR component columns, with the lower-middle
//! rule for even counts.

use dementia_subtypes::ingestion::{median_impute, Feature, MissingnessSummary};
use dementia_subtypes::synthetic::{generate_cohort, GeneratorConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = GeneratorConfig {
        patients: 400,
        missingness: Feature::all().into_iter().map(|f| (f, 0.04)).collect(),
        ..GeneratorConfig::reference_default(11)
    };
    let (cohort, _) = generate_cohort(&config)?;

    let before = MissingnessSummary::measure(&cohort, &Feature::all());
    println!("{:<18} {:>8} {:>8}", "feature", "missing", "rate");
    for (feature, count) in &before.features {
        println!("{:<18} {:>8} {:>8.3}", feature.to_string(), count.missing, count.rate);
    }

    let features = Feature::cdr_components();
    let (imputed, summary) = median_impute(&cohort, &features)?;
    let after = MissingnessSummary::measure(&imputed, &features);
    println!(
        "\nimputed {} CDR component cells; {} remain missing",
        summary.total_missing(),
        after.total_missing()
    );

    let (again, _) = median_impute(&imputed, &features)?;
    println!("second pass changes nothing: {}", again == imputed);
    Ok(())
}
