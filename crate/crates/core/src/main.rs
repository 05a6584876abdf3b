use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use anticipation::expcli::{
    cmd_classify, cmd_hydro1d, cmd_means_check, cmd_polar, cmd_simulate, cmd_sweep, exit_code, ExperimentConfig,
    MeansOptions, RunOptions, EXIT_CONFIG,
};
use anticipation::Result;

#[derive(Parser)]
#[command(name = "anticipation", version, about = "Experiments on anticipation-driven swarms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Overrides the configured random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a swarm and record diagnostics.
    Simulate,
    /// Run a grid of parameter overrides.
    Sweep,
    /// Test the local-vs-global means inequality on random instances.
    MeansCheck {
        #[arg(long, default_value_t = 1000)]
        instances: usize,
        #[arg(long, default_value_t = 12)]
        n_max: usize,
        #[arg(long, default_value_t = 3)]
        d_max: usize,
        #[arg(long, default_value_t = 1.0)]
        lam_max: f64,
        #[arg(long, default_value_t = 4.0)]
        cap_max: f64,
    },
    /// Integrate the two-agent polar system.
    Polar,
    /// One-dimensional critical-threshold experiment.
    Hydro1d,
    /// Certify structural classes of a potential.
    ClassifyPotential,
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    match &cli.config {
        Some(path) => ExperimentConfig::load(path),
        None => Err(anticipation::Error::Config("--config is required for this command".into())),
    }
}

fn run(cli: &Cli) -> Result<i32> {
    let opts = RunOptions { out: cli.out.clone(), seed: cli.seed, quiet: cli.quiet };
    let outcome = match &cli.command {
        Command::MeansCheck { instances, n_max, d_max, lam_max, cap_max } => {
            let means = MeansOptions {
                seed: cli.seed.unwrap_or(0),
                instances: *instances,
                n_max: *n_max,
                d_max: *d_max,
                lam_max: *lam_max,
                cap_max: *cap_max,
            };
            cmd_means_check(&means, &opts)?
        }
        Command::Simulate => cmd_simulate(&load(cli)?, &opts)?,
        Command::Sweep => cmd_sweep(&load(cli)?, &opts)?,
        Command::Polar => cmd_polar(&load(cli)?, &opts)?,
        Command::Hydro1d => cmd_hydro1d(&load(cli)?, &opts)?,
        Command::ClassifyPotential => cmd_classify(&load(cli)?, &opts)?,
    };
    Ok(outcome.exit_code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    let code = match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
