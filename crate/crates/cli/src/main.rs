use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use echoflow_cli::stages::Pipeline;
use echoflow_cli::{CliError, Config};

/// Reconstructs per-country retweet and URL co-sharing networks from event
/// logs, detects stance-labeled communities, and quantifies polarization and
/// cross-border information flows. Stages communicate through files in the
/// output directory so the human labeling loop fits between `sample` and
/// `classify`.
#[derive(Parser)]
#[command(name = "echoflow", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Pipeline configuration file (key = value lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory holding all stage artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads for country/period parallelism (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    /// Override the config's root random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Restrict processing to one country code.
    #[arg(long, global = true)]
    country: Option<String>,

    /// Restrict processing to one named period.
    #[arg(long, global = true)]
    period: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, keyword-filter, and window the event log.
    Ingest,
    /// Geolocate users and select eligible countries.
    Geolocate,
    /// Build pruned giant-component RT and CO networks.
    BuildGraphs,
    /// Cluster every network and select partitions.
    Cluster,
    /// Emit labeling samples (round 1 or 2).
    Sample {
        #[arg(long, default_value_t = 1)]
        round: u8,
    },
    /// Classify community stances from label records.
    Classify,
    /// Compute polarization metrics (RWC, NMI).
    Metrics,
    /// Compute cross-border flow matrices.
    Flows,
    /// Compute per-cohort behavior and suspension statistics.
    Cohorts,
    /// Assemble figure-shaped report CSVs.
    Report,
    /// Generate a synthetic corpus with ground truth.
    Synth {
        /// Corpus specification file.
        #[arg(long)]
        spec: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.workers > 0 {
        // ignore failure when a pool already exists (e.g. repeated calls)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global();
    }
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => match &cli.command {
            // synth can run without a config; everything else needs one
            Command::Synth { .. } => Config::default(),
            _ => return Err(CliError::Config("--config is required".into())),
        },
    };
    if let Some(seed) = cli.seed {
        cfg.override_seed(seed);
    }
    let mut pipeline = Pipeline::new(cfg, cli.out);
    pipeline.country_filter = cli.country;
    pipeline.period_filter = cli.period;

    match cli.command {
        Command::Ingest => pipeline.stage_ingest(),
        Command::Geolocate => pipeline.stage_geolocate(),
        Command::BuildGraphs => pipeline.stage_build_graphs(),
        Command::Cluster => pipeline.stage_cluster(),
        Command::Sample { round } => pipeline.stage_sample(round),
        Command::Classify => pipeline.stage_classify(),
        Command::Metrics => pipeline.stage_metrics(),
        Command::Flows => pipeline.stage_flows(),
        Command::Cohorts => pipeline.stage_cohorts(),
        Command::Report => pipeline.stage_report(),
        Command::Synth { spec } => pipeline.stage_synth(&spec),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("echoflow: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
