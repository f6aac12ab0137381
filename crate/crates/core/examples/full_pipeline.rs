//! Runs every stage on the four-subtype config and prints the report.
//!
//!     cargo run --release --example full_pipeline -- [run-dir]

use std::path::PathBuf;

use dementia_subtypes::pipeline::{run_pipeline, PipelineConfig, RunContext};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("subtypes-planted4"));
    let config_path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/planted4.toml");
    let config = PipelineConfig::load(&config_path)?;

    let manifest = run_pipeline(&RunContext::new(config, &out))?;
    print!("{}", std::fs::read_to_string(out.join("report.txt"))?);
    println!("\nmanifest: {} stages, chosen K {:?}", manifest.stages.len(), manifest.chosen_k);
    Ok(())
}
