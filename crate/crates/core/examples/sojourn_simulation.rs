//! Monte Carlo estimate of a tagged customer's sojourn time against the
//! analytic arrival delay.

use queue_equilibria::model::strategy_from_x;
use queue_equilibria::sim::{simulate_sojourn, SimConfig};
use queue_equilibria::{DelayTable, EconomicParams, ServiceRatePolicy};

fn main() -> queue_equilibria::Result<()> {
    let params = EconomicParams::new(3.0, 8.5, 1.0)?;
    let policy = ServiceRatePolicy::threshold(23, 2.0, 5.0)?;
    let strategy = strategy_from_x(30.5)?;
    let table = DelayTable::solve(&policy, &strategy, &params);
    let config = SimConfig::new(7, 20_000, params, policy, strategy)?;

    println!("  n   analytic   simulated ± 95%");
    for n in [0, 10, 23, 24, 29, 30] {
        let est = simulate_sojourn(&config, n)?;
        println!(
            "{n:>3}   {:>8.4}   {:>8.4} ± {:.4}",
            table.arrival_delay(n)?,
            est.mean,
            est.half_width_95
        );
    }
    Ok(())
}
