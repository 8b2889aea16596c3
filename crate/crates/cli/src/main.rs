use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use refwhy::{stages, CliError, PipelineConfig};

#[derive(Parser)]
#[command(name = "refwhy", version, about = "Mine, sample, classify and analyse refactoring motivations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Pipeline configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Use the offline synthetic model backend instead of the configured endpoints.
    #[arg(long, global = true)]
    mock: bool,
    /// Override the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Mine histories, compute metrics and ingest refactorings.
    Mine,
    /// Draw the stratified sample.
    Sample,
    /// Run the model consensus, alignment and open coding.
    Classify,
    /// Correlations, importances and agreement report.
    Analyze,
    /// Serve the human review service.
    Serve,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let mut cfg = PipelineConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    match cli.command {
        Command::Mine => {
            let repos = stages::mine::run(&cfg)?;
            for r in repos {
                println!("{}: {} commits, {} metric rows, {} refactorings", r.project, r.commits, r.metric_rows, r.instances);
            }
        }
        Command::Sample => {
            let r = stages::sample::run(&cfg)?;
            println!("sampled {} of {} (target {})", r.selected, r.population, r.target);
        }
        Command::Classify => {
            let r = stages::classify::run(&cfg, cli.mock)?;
            println!(
                "{} records, {} arbiter calls, {} categories, {} cases exported for review",
                r.records, r.arbiter_invocations, r.categories, r.validation.exported
            );
        }
        Command::Analyze => {
            let r = stages::analyze::run(&cfg)?;
            println!("{} observations analysed; see {}", r.observations, cfg.stage_dir(stages::analyze::DIR).display());
        }
        Command::Serve => refwhy::review::serve(&cfg)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.exit_code())
        }
    }
}
