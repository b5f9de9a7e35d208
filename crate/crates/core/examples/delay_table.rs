//! Generalized delays W(n, m) and arrival delays for a mixed threshold
//! strategy under a threshold service policy.
//!
//!     cargo run --example delay_table -- 26.4

use queue_equilibria::model::strategy_from_x;
use queue_equilibria::{DelayTable, EconomicParams, ServiceRatePolicy};

fn main() -> queue_equilibria::Result<()> {
    let x: f64 = std::env::args().nth(1).map_or(26.4, |s| s.parse().expect("x must be a number"));
    let params = EconomicParams::new(3.0, 8.5, 1.0)?;
    let policy = ServiceRatePolicy::threshold(23, 2.0, 5.0)?;
    let strategy = strategy_from_x(x)?;
    let table = DelayTable::solve(&policy, &strategy, &params);

    println!("threshold x = {x}, balk state n0 = {}", table.n0());
    println!("marginal delay W(n0-1, n0) = {:.6}", table.marginal());
    println!("\n  n   join p   W(n; p)");
    for (n, w) in table.arrival_delays().iter().enumerate() {
        println!("{n:>3}   {:.3}   {w:>9.5}", strategy.prob(n));
    }
    Ok(())
}
