use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dementia_subtypes::pipeline::{
    run_pipeline, run_stage, ClusterSpace, PipelineConfig, PipelineError, RunContext, Stage,
};

/// Dementia subtyping pipeline over visit-level CDR data.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    /// TOML config (or a previous run's manifest.json).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Manual number of subtypes.
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Cluster the t-SNE embedding or the raw features.
    #[arg(long, global = true, value_parser = clap::value_parser!(ClusterSpace))]
    cluster_space: Option<ClusterSpace>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Write a synthetic cohort and its ground truth.
    Generate,
    /// Validate, summarize missingness and median-impute.
    Ingest,
    /// Exact t-SNE of the clustering features.
    Embed,
    /// Gap statistic and K-means.
    Cluster,
    /// Subtype profiles, homogeneity and groups.
    Characterize,
    /// Transition records, matrices and progression graph.
    Transitions,
    /// Top diagnoses per subtype.
    Comorbidity,
    /// Text and JSON summary of a run directory.
    Report,
    /// All stages in order.
    Run,
}

impl Command {
    fn stage(self) -> Option<Stage> {
        Some(match self {
            Command::Generate => Stage::Generate,
            Command::Ingest => Stage::Ingest,
            Command::Embed => Stage::Embed,
            Command::Cluster => Stage::Cluster,
            Command::Characterize => Stage::Characterize,
            Command::Transitions => Stage::Transitions,
            Command::Comorbidity => Stage::Comorbidity,
            Command::Report => Stage::Report,
            Command::Run => return None,
        })
    }
}

fn context(cli: &Cli) -> Result<RunContext, PipelineError> {
    let mut config = match &cli.config {
        Some(path) => {
            if !path.exists() {
                return Err(PipelineError::MissingInput(path.clone()));
            }
            PipelineConfig::load(path)?
        }
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(k) = cli.k {
        config.cluster.k = Some(k);
    }
    if let Some(space) = cli.cluster_space {
        config.cluster.space = space;
    }
    if let Some(out) = &cli.out {
        config.out = Some(out.clone());
    }
    config.check()?;
    let out = config.out.clone().unwrap_or_else(|| PathBuf::from("subtypes-run"));
    Ok(RunContext::new(config, out))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: cannot configure {threads} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = context(&cli).and_then(|ctx| {
        match cli.command.stage() {
            Some(stage) => run_stage(&ctx, stage)?,
            None => {
                run_pipeline(&ctx)?;
            }
        }
        if matches!(cli.command, Command::Report | Command::Run) {
            if let Ok(text) = std::fs::read_to_string(ctx.out.join("report.txt")) {
                print!("{text}");
            }
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
