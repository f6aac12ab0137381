//! Subtype profiles, homogeneity classes and severity-ordered groups for
//! the reference-matrix fixture.

use dementia_subtypes::clustering::cluster_label;
use dementia_subtypes::cohort::CdrLevel;
use dementia_subtypes::fixtures::reference_transition_fixture;
use dementia_subtypes::subtyping::{
    group_subtypes, inter_subtype_variability, intra_subtype_variability, profile_subtypes,
    severity_order, DEFAULT_PURITY,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (cohort, assignments) = reference_transition_fixture();
    let profiles = profile_subtypes(&cohort, &assignments, DEFAULT_PURITY)?;

    for c in severity_order(&profiles) {
        let p = profiles.iter().find(|p| p.cluster == c).expect("profiled");
        let intra = intra_subtype_variability(p)?;
        println!(
            "{:<4} {:>4} visits  {:<18} component range {}",
            cluster_label(c),
            p.visits,
            p.homogeneity.to_string(),
            intra.range
        );
    }

    let grouping = group_subtypes(&profiles, DEFAULT_PURITY);
    println!();
    for g in &grouping.groups {
        let members: Vec<String> = g.clusters.iter().map(|&c| cluster_label(c)).collect();
        println!("{}  {:<16} {}", g.id, g.label, members.join(", "));
    }

    let inter = inter_subtype_variability(&profiles, CdrLevel::Questionable)?;
    println!("\ncomponent ranges across the CDR 0.5 subtypes:");
    for s in &inter.components {
        println!("  {:<14} {}", s.component.column(), s.range);
    }
    Ok(())
}
