//! Sweeps of the marginal delay over pure thresholds and over mixed
//! thresholds, written as CSV into the given directory.
//!
//!     cargo run --example figure_sweeps -- out/

use std::path::PathBuf;

use queue_equilibria::commands::{cmd_sweep, GridRange, SweepKind};
use queue_equilibria::{EconomicParams, Instance, ServiceRatePolicy, Tolerances};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "sweeps".into()));
    std::fs::create_dir_all(&out)?;
    let instance = Instance {
        params: EconomicParams::new(3.0, 8.5, 1.0)?,
        policy: ServiceRatePolicy::threshold(23, 2.0, 5.0)?,
    };
    let tol = Tolerances::default();

    let pure = cmd_sweep(&instance, SweepKind::PureN0, &"1:40".parse()?, &tol)?;
    std::fs::write(out.join("pure_n0.csv"), &pure)?;
    let grid: GridRange = "24.05:39:0.05".parse()?;
    let mixed = cmd_sweep(&instance, SweepKind::MixedX, &grid, &tol)?;
    std::fs::write(out.join("mixed_x.csv"), &mixed)?;

    // crude text plot of the pure sweep; '*' marks equilibria
    for line in pure.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let w: f64 = f[1].parse()?;
        let mark = if f[2] == "true" { '*' } else { ' ' };
        println!("{:>3} {mark} {:<60} {w:.3}", f[0], "#".repeat((w * 5.0) as usize));
    }
    println!("wrote {} and {}", out.join("pure_n0.csv").display(), out.join("mixed_x.csv").display());
    Ok(())
}
