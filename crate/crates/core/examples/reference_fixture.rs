//! Writes the reference-matrix fixture as a run directory (imputed cohort,
//! assignments, subtype and transition artifacts).
//!
//!     cargo run --example reference_fixture -- fixtures/reference_matrix

use std::path::PathBuf;

use dementia_subtypes::pipeline::{render_report, write_fixture_run};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("reference_matrix"));
    write_fixture_run(&dir)?;
    print!("{}", render_report(&dir)?.text);
    Ok(())
}
