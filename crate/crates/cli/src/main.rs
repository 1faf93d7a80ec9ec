use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hyperwalk::config::ExperimentConfig;
use hyperwalk::runner::{run, Command, RunOptions};

mod emit;

#[derive(Parser)]
#[command(name = "hyperwalk", version, about = "Random walks on free groups and Schottky groups")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    #[command(flatten)]
    args: Args,
}

#[derive(clap::Args)]
struct Args {
    /// Experiment configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory for report.json and measure CSVs.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write SVG plots of the convergence series.
    #[arg(long, global = true)]
    plots: bool,
    /// Record elapsed seconds in the report.
    #[arg(long, global = true)]
    wall_clock: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Schottky certification and support checks
    Certify,
    /// Rate of escape
    Drift,
    /// Sublinear tracking of the limit geodesic
    Track,
    /// Translation length against drift
    LengthLaw,
    /// Fellow travelling of the translation axis
    AxisCheck,
    /// Harmonic measure solvers and estimators
    Harmonic,
    /// Closed geodesic occupation measures against the flow prediction
    Equidistribute,
    /// Every suite above
    All,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Command {
        match s {
            Sub::Certify => Command::Certify,
            Sub::Drift => Command::Drift,
            Sub::Track => Command::Track,
            Sub::LengthLaw => Command::LengthLaw,
            Sub::AxisCheck => Command::AxisCheck,
            Sub::Harmonic => Command::Harmonic,
            Sub::Equidistribute => Command::Equidistribute,
            Sub::All => Command::All,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = execute(cli, &mut std::io::stdout(), &mut std::io::stderr());
    ExitCode::from(code)
}

/// 0 when every gate passes, 1 when some gate fails, 2 on errors.
fn execute(cli: Cli, out: &mut impl Write, err: &mut impl Write) -> u8 {
    let a = cli.args;
    let Some(path) = a.config else {
        let _ = writeln!(err, "error: --config is required");
        return 2;
    };
    let result = ExperimentConfig::from_path(&path).and_then(|cfg| {
        let opts = RunOptions {
            jobs: a.jobs,
            seed: a.seed,
            wall_clock: a.wall_clock,
        };
        run(cli.command.into(), &cfg, &opts)
    });
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 2;
        }
    };
    let _ = write!(out, "{}", report.summary());
    if let Some(dir) = a.out {
        if let Err(e) = emit::emit(&report, &dir, a.plots) {
            let _ = writeln!(err, "error: {e}");
            return 2;
        }
    }
    u8::from(!report.all_pass())
}
