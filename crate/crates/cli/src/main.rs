use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use gossip_transient::harness::{
    load_config, run_experiment, Analysis, ExperimentConfig, PresetName,
};
use gossip_transient::sim::RunConfig;

/// Transient opinion dynamics of randomized gossip on two communities with
/// stubborn agents.
#[derive(Parser)]
#[command(name = "gossip-transient", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one stochastic trajectory, plus a Monte Carlo mean when
    /// `--replicates` is given.
    Simulate(ConfigArgs),
    /// Compute the exact expected-state trajectory.
    Expect(ConfigArgs),
    /// Compute the transient sign window and check it against the exact
    /// expectation.
    Window(ConfigArgs),
    /// Check the consensus envelope matching the graph regime (local when
    /// ls > ld, global otherwise).
    Bounds(ConfigArgs),
    /// Run a built-in experiment.
    Reproduce {
        /// fig2_expected_local, fig3_expected_global, fig4a_states_local, or
        /// fig4b_states_global.
        preset: PresetName,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Monte Carlo replicate count.
    #[arg(long)]
    replicates: Option<usize>,
    /// Number of gossip steps.
    #[arg(long)]
    horizon: Option<u64>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(seed) = self.seed {
            cfg.run.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(m) = self.replicates {
            cfg.run.replicates = m;
        }
        if let Some(h) = self.horizon {
            cfg.run.horizon = h;
            if cfg.run.record_every > h.max(1) {
                cfg.run.record_every = RunConfig::default_stride(h);
            }
        }
    }
}

fn from_file(args: &ConfigArgs) -> Result<ExperimentConfig> {
    let mut cfg =
        load_config(&args.config).with_context(|| format!("loading {}", args.config.display()))?;
    args.overrides.apply(&mut cfg);
    Ok(cfg)
}

fn build(command: &Command) -> Result<ExperimentConfig> {
    let cfg = match command {
        Command::Simulate(args) => {
            let mut analyses = vec![Analysis::Simulate];
            if args.overrides.replicates.is_some() {
                analyses.push(Analysis::McMean);
            }
            from_file(args)?.with_analyses(analyses)?
        }
        Command::Expect(args) => from_file(args)?.with_analyses([Analysis::Exact])?,
        Command::Window(args) => {
            from_file(args)?.with_analyses([Analysis::Exact, Analysis::Window])?
        }
        Command::Bounds(args) => {
            let cfg = from_file(args)?;
            let bound = if cfg.params.ls > cfg.params.ld {
                Analysis::LocalBound
            } else {
                Analysis::GlobalBound
            };
            cfg.with_analyses([Analysis::Exact, bound])?
        }
        Command::Reproduce { preset, overrides } => {
            let mut cfg = preset.config();
            overrides.apply(&mut cfg);
            cfg
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = build(&cli.command)?;
    let outcome = run_experiment(&cfg)?;
    print!("{}", outcome.summary);
    println!(
        "wrote {} files to {}",
        outcome.files.len(),
        cfg.output_dir.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
