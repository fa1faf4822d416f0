//! Command-line front end for the identification pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use faultid::pipeline::Pipeline;

#[derive(Parser)]
#[command(
    name = "faultid",
    about = "Admittance-based structural fault identification",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Pipeline configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to the core count).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate training data (and the truth measurement file).
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Skip the measurement file; no truth entry required.
        #[arg(long)]
        no_measurement: bool,
    },
    /// Fit one response surface per excitation frequency.
    Calibrate {
        #[command(flatten)]
        common: Common,
        /// Training CSV (defaults to <out>/training.csv).
        #[arg(long)]
        training: Option<PathBuf>,
    },
    /// Run the many-objective ensemble and emit archives and tallies.
    Identify {
        #[command(flatten)]
        common: Common,
        /// Surface directory (defaults to <out>/surfaces).
        #[arg(long)]
        surfaces: Option<PathBuf>,
        /// Measurement CSV (defaults to <out>/measurement.csv).
        #[arg(long)]
        measurement: Option<PathBuf>,
    },
    /// Render ranked tables from existing tallies.
    Report {
        #[command(flatten)]
        common: Common,
        /// Rows per panel (defaults to the config's report_top_k).
        #[arg(long)]
        top: Option<usize>,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Simulate { common, .. }
            | Command::Calibrate { common, .. }
            | Command::Identify { common, .. }
            | Command::Report { common, .. } => common,
        }
    }

    fn stage_name(&self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::Calibrate { .. } => "calibrate",
            Command::Identify { .. } => "identify",
            Command::Report { .. } => "report",
        }
    }
}

fn run(command: &Command) -> Result<(), Box<dyn std::error::Error>> {
    let common = command.common();
    if let Some(threads) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()?;
    }
    let pipeline = Pipeline::from_config_path(&common.config, common.out.as_deref(), common.seed)?;
    match command {
        Command::Simulate { no_measurement, .. } => {
            let summary = pipeline.simulate(!no_measurement)?;
            println!(
                "simulate: {} frequencies x {} scenarios -> {}",
                summary.n_frequencies,
                summary.n_scenarios,
                summary.training_path.display()
            );
            if let Some(m) = summary.measurement_path {
                println!("simulate: measurement -> {}", m.display());
            }
        }
        Command::Calibrate { training, .. } => {
            let training = training.clone().unwrap_or_else(|| pipeline.out.training());
            let summary = pipeline.calibrate(&training)?;
            println!(
                "calibrate: {} surfaces -> {}",
                summary.n_surfaces,
                summary.surfaces_dir.display()
            );
            println!(
                "calibrate: diagnostics -> {}",
                summary.diagnostics_path.display()
            );
        }
        Command::Identify {
            surfaces,
            measurement,
            ..
        } => {
            let surfaces = surfaces
                .clone()
                .unwrap_or_else(|| pipeline.out.surfaces_dir());
            let measurement = measurement
                .clone()
                .unwrap_or_else(|| pipeline.out.measurement());
            let summary = pipeline.identify(&surfaces, &measurement)?;
            println!(
                "identify: {} runs, archive sizes {:?}",
                summary.runs, summary.archive_sizes
            );
            println!("identify: tallies -> {}", summary.tallies_dir.display());
            if let Some(v) = summary.validation {
                println!(
                    "identify: truth (segment {}, severity {:.4}) ranks: \
                     solution {:?}, range {:?}, partial {:?}, partial-range {:?}, baseline {:?}",
                    v.truth.segment,
                    v.truth.severity,
                    v.solution_rank,
                    v.range_rank,
                    v.partial_solution_rank,
                    v.partial_range_rank,
                    v.baseline_rank
                );
            }
        }
        Command::Report { top, .. } => {
            let mut pipeline = pipeline;
            if let Some(k) = top {
                pipeline.config.report_top_k = *k;
            }
            let tallies_dir = pipeline.out.root.clone();
            let summary = pipeline.report(&tallies_dir)?;
            println!("report: panels {:?}", summary.panels);
            if !summary.omitted.is_empty() {
                println!("report: omitted {:?}", summary.omitted);
            }
            println!("report: -> {}", summary.report_path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", cli.command.stage_name());
            ExitCode::FAILURE
        }
    }
}
