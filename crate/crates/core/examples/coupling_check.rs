//! Pathwise check that a customer with one fewer ahead never leaves later,
//! using coupled systems that share arrivals, service requirements and
//! join coins.

use queue_equilibria::model::strategy_from_x;
use queue_equilibria::sim::{coupled_replication_log, events_to_jsonl, run_coupling, SimConfig};
use queue_equilibria::{DelayTable, EconomicParams, ServiceRatePolicy};

fn main() -> queue_equilibria::Result<()> {
    let params = EconomicParams::new(3.0, 8.5, 1.0)?;
    let policy = ServiceRatePolicy::threshold(23, 2.0, 5.0)?;
    let strategy = strategy_from_x(28.0)?;
    let n0 = strategy.balk_state();
    let table = DelayTable::solve(&policy, &strategy, &params);
    let config = SimConfig::new(11, 10_000, params, policy, strategy)?;

    for n in [1, 12, 24, 27] {
        let s = run_coupling(&config, n, n0)?;
        let gap = table.get(n, n + 1).unwrap() - table.get(n - 1, n).unwrap();
        println!(
            "n = {n:>2}: violations {} (tied paths {}), mean gap {:.4} ± {:.4}, analytic {gap:.4}",
            s.violations, s.tie_violations, s.last_gap.mean, s.last_gap.half_width_95
        );
    }

    let (_, log) = coupled_replication_log(&config, 2, 0)?;
    println!("\nfirst events of one coupled path:");
    for line in events_to_jsonl(&log).lines().take(8) {
        println!("  {line}");
    }
    Ok(())
}
