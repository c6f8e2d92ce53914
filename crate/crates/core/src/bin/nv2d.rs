use std::fs;
use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nv2d::harness::{self, run::run_command, EXIT_CONFIG};

/// Coupled wave / kinetic solver with retarded-integral cross-checks.
#[derive(Parser)]
#[command(name = "nv2d", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace a config value, `key=value`. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the coupled simulation and write diagnostics and snapshots.
    Run(Common),
    /// Run the property suite.
    Verify(Common),
    /// Run, then evaluate the retarded representations at the given points.
    Probe {
        #[command(flatten)]
        common: Common,
        /// File of `t x1 x2` lines.
        #[arg(long)]
        points: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Run(c) | Command::Verify(c) => c,
        Command::Probe { common, .. } => common,
    };
    let cfg = match harness::load_config(&common.config, &common.overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.class());
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let out = common.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    let code = match &cli.command {
        Command::Run(_) => run_command(&cfg, &out, &mut io::stderr()),
        Command::Verify(_) => harness::verify_command(&cfg, &mut io::stdout()),
        Command::Probe { points, .. } => match fs::read_to_string(points) {
            Ok(text) => harness::probe_command(&cfg, &text, &out, &mut io::stderr()),
            Err(e) => {
                eprintln!("error[config]: cannot read {}: {e}", points.display());
                EXIT_CONFIG
            }
        },
    };
    ExitCode::from(code as u8)
}
