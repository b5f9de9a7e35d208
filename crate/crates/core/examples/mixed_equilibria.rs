//! Full equilibrium report: pure thresholds, isolated mixed roots of
//! w(x) = r_tilde and continua of mixed equilibria.

use queue_equilibria::equilibrium::{enumerate_equilibria, marginal_delay};
use queue_equilibria::{EconomicParams, ServiceRatePolicy, Tolerances};

fn main() -> queue_equilibria::Result<()> {
    let policy = ServiceRatePolicy::threshold(23, 2.0, 5.0)?;
    for reward in [8.15, 8.5] {
        let params = EconomicParams::new(3.0, reward, 1.0)?;
        let report = enumerate_equilibria(&params, &policy, &Tolerances::default())?;
        println!("R = {reward}");
        println!("  pure thresholds: {:?}", report.pure);
        for &x in &report.mixed_points {
            let w = marginal_delay(x, &params, &policy)?;
            println!("  mixed x = {x:.10}   w(x) - r = {:+.1e}", w - params.r_tilde());
        }
        for [a, b] in &report.mixed_intervals {
            println!("  every x in ({a}, {b}) is an equilibrium");
        }
    }
    Ok(())
}
