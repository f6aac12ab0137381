//! Transition records, the group transition matrix, classification and the
//! thresholded progression graph on the reference-matrix fixture.

use dementia_subtypes::clustering::cluster_label;
use dementia_subtypes::cohort::CdrLevel;
use dementia_subtypes::fixtures::reference_transition_fixture;
use dementia_subtypes::subtyping::{group_subtypes, profile_subtypes, DEFAULT_PURITY};
use dementia_subtypes::transitions::{
    extract_transitions, progression_graph, transition_matrix, TransitionClass,
    DEFAULT_LONG_THRESHOLD_DAYS, DEFAULT_MIN_WEIGHT,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (cohort, assignments) = reference_transition_fixture();
    let profiles = profile_subtypes(&cohort, &assignments, DEFAULT_PURITY)?;
    let grouping = group_subtypes(&profiles, DEFAULT_PURITY);
    let records = extract_transitions(&cohort, &assignments, &grouping, DEFAULT_LONG_THRESHOLD_DAYS)?;

    let matrix = transition_matrix(&records, &grouping);
    print!("{:<6}", "");
    for l in &matrix.labels {
        print!("{l:>5}");
    }
    println!();
    for (l, row) in matrix.labels.iter().zip(&matrix.counts) {
        print!("{l:<6}");
        for c in row {
            print!("{c:>5}");
        }
        println!();
    }

    let count = |class| records.iter().filter(|r| r.class == class).count();
    println!(
        "\n{} transitions: {} progression, {} stable, {} regression",
        records.len(),
        count(TransitionClass::Progression),
        count(TransitionClass::Stable),
        count(TransitionClass::Regression)
    );
    for r in records.iter().filter(|r| r.stage_skip) {
        println!(
            "stage skip {} -> {} after {} days (long follow-up: {})",
            grouping.groups[r.source_group].id,
            grouping.groups[r.target_group].id,
            r.interval_days,
            r.long_followup
        );
    }

    let graph = progression_graph(&records, &profiles, CdrLevel::Questionable, CdrLevel::Mild, DEFAULT_MIN_WEIGHT);
    println!("\nCDR 0.5 -> 1 edges with weight >= {}:", graph.min_weight);
    for e in &graph.edges {
        println!("  {} -> {}  {}", cluster_label(e.source), cluster_label(e.target), e.weight);
    }
    Ok(())
}
