use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use queue_equilibria::commands::{
    execute, Command, GridRange, RunManifest, SweepKind, EXIT_INPUT,
};
use queue_equilibria::Tolerances;

/// Equilibrium solver and simulator for observable queues with
/// state-dependent service rates.
#[derive(Parser, Debug)]
#[command(name = "queue-eq", version)]
struct Cli {
    /// Instance file (JSON).
    #[arg(long, global = true)]
    instance: Option<PathBuf>,
    /// Directory to write CSV/JSON outputs into.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 10_000)]
    reps: usize,
    /// Override the indifference tolerance.
    #[arg(long = "tol-eq", global = true)]
    tol_eq: Option<f64>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Generalized delay table for threshold strategy x.
    Delay {
        #[arg(long)]
        x: f64,
    },
    /// Pure and mixed threshold equilibria.
    Equilibria {
        /// Comma-separated rewards; prints the pure equilibria table.
        #[arg(long, value_delimiter = ',')]
        table1: Option<Vec<f64>>,
    },
    /// Marginal delay as a function of n0 or x.
    Sweep {
        #[arg(long, value_parser = parse_kind)]
        kind: SweepKind,
        #[arg(long, value_parser = parse_range)]
        range: GridRange,
    },
    /// Monte Carlo sojourn estimate against the analytic delay.
    Simulate {
        #[arg(long)]
        x: f64,
        #[arg(long)]
        n: usize,
    },
    /// Coupled two-system check of the pathwise ordering.
    VerifyCoupling {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        n0: usize,
        /// Mixed threshold strategy instead of the pure threshold n0.
        #[arg(long)]
        x: Option<f64>,
    },
}

fn parse_kind(s: &str) -> Result<SweepKind, String> {
    s.parse().map_err(|e: queue_equilibria::Error| e.to_string())
}

fn parse_range(s: &str) -> Result<GridRange, String> {
    s.parse().map_err(|e: queue_equilibria::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(instance_path) = cli.instance else {
        eprintln!("error: --instance <path> is required");
        return ExitCode::from(EXIT_INPUT as u8);
    };
    let mut tol = Tolerances::default();
    if let Some(eq) = cli.tol_eq {
        tol.eq = eq;
    }
    let command = match cli.command {
        Cmd::Delay { x } => Command::Delay { x },
        Cmd::Equilibria { table1 } => Command::Equilibria { table1 },
        Cmd::Sweep { kind, range } => Command::Sweep { kind, range },
        Cmd::Simulate { x, n } => Command::Simulate { x, n },
        Cmd::VerifyCoupling { n, n0, x } => Command::VerifyCoupling { n, n0, x },
    };
    let manifest = RunManifest {
        command,
        instance_path,
        out_dir: cli.out,
        seed: cli.seed,
        reps: cli.reps,
        tol,
    };
    let output = match execute(&manifest) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT as u8);
        }
    };
    if let Some(dir) = &manifest.out_dir {
        if let Err(e) = std::fs::create_dir_all(dir) {
            eprintln!("error: {}: {e}", dir.display());
            return ExitCode::from(EXIT_INPUT as u8);
        }
        for (name, contents) in &output.files {
            if let Err(e) = std::fs::write(dir.join(name), contents) {
                eprintln!("error: {name}: {e}");
                return ExitCode::from(EXIT_INPUT as u8);
            }
        }
    }
    print!("{}", output.stdout);
    ExitCode::from(output.exit_code as u8)
}
