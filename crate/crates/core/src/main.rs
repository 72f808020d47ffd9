use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use zesprit::cli::{self, RunConfig};
use zesprit::Result;

#[derive(Parser)]
#[command(
    name = "zesprit",
    version,
    about = "Zoom-ESPRIT frequency and signal-count estimation"
)]
struct Args {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long, global = true)]
    zoom_factor: Option<usize>,
    /// Output file (signal for `gen`, CSV for `estimate` and `sweep`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// FFT presence gate before estimation.
    #[arg(long, global = true)]
    gate: Option<Switch>,
    /// Override any configuration key, e.g. `--set snr_db=10`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a test signal file.
    Gen,
    /// Estimate the signal count and frequencies of a signal file.
    Estimate { input: PathBuf },
    /// Monte Carlo sweep of the probability of correct estimation.
    Sweep,
}

fn config(args: &Args) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    for o in &args.overrides {
        cfg.apply_override(o)?;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(a) = args.zoom_factor {
        cfg.zoom_factor = a;
    }
    if let Some(g) = args.gate {
        cfg.gate = matches!(g, Switch::On);
    }
    Ok(cfg)
}

fn run(args: &Args) -> Result<()> {
    let cfg = config(args)?;
    match &args.command {
        Command::Gen => {
            let out = args
                .out
                .clone()
                .unwrap_or_else(|| PathBuf::from("signal.bin"));
            print!("{}", cli::cmd_gen(&cfg, &out)?);
        }
        Command::Estimate { input } => {
            let report = cli::cmd_estimate(&cfg, input)?;
            print!("{}", cli::render_report(&report));
            if let Some(out) = &args.out {
                cli::write_text(Some(out), &cli::report_csv(&report))?;
            }
        }
        Command::Sweep => {
            eprint!("{}", cli::echo_config(&cfg.zoom_config()?));
            let result = cli::run_sweep(&cfg)?;
            cli::write_text(args.out.as_deref(), &cli::sweep_csv(&result))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
