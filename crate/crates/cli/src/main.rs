use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rmvqe_cli::commands;
use rmvqe_cli::config::Overrides;
use rmvqe_cli::error::CliResult;

#[derive(Parser)]
#[command(name = "rmvqe", version, about = "Variational inner-region R-matrix solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the N-electron target blocks and write target.json.
    SolveTarget(Common),
    /// Run the selected cost strategy over the scattering trials.
    SolveScattering(Common),
    /// Evaluate R(E) on the configured grid from solution.json.
    Rmatrix(Common),
    /// Exact spectrum of the projected symmetry sector.
    OracleSpectrum(Common),
    /// Check a run configuration without running the scattering solve.
    ValidateConfig(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = ["variance", "folded", "sum-variance", "subspace"])]
    cost: Option<String>,
    #[arg(long = "max-evals")]
    max_evals: Option<usize>,
    /// Energy tolerance in Hartree.
    #[arg(long)]
    tol: Option<f64>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            out: self.out.clone(),
            seed: self.seed,
            cost: self.cost.clone(),
            max_evals: self.max_evals,
            tol: self.tol,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    type Handler = fn(&Path, &Overrides) -> CliResult<serde_json::Value>;
    let (handler, common): (Handler, &Common) = match &cli.command {
        Command::SolveTarget(c) => (commands::solve_target_cmd, c),
        Command::SolveScattering(c) => (commands::solve_scattering_cmd, c),
        Command::Rmatrix(c) => (commands::rmatrix_cmd, c),
        Command::OracleSpectrum(c) => (commands::oracle_cmd, c),
        Command::ValidateConfig(c) => (commands::validate_cmd, c),
    };
    match handler(&common.config, &common.overrides()) {
        Ok(report) => {
            // a reader that closes the pipe early is not an error
            let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&report).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
