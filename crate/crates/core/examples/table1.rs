//! Pure threshold equilibria below and above the service threshold for a
//! range of rewards, with the [L, U] search window above T.

use queue_equilibria::commands::{cmd_table1, table1_csv};
use queue_equilibria::{EconomicParams, Instance, ServiceRatePolicy, Tolerances};

fn main() -> queue_equilibria::Result<()> {
    let instance = Instance {
        params: EconomicParams::new(3.0, 8.5, 1.0)?,
        policy: ServiceRatePolicy::threshold(23, 2.0, 5.0)?,
    };
    let rewards = [8.0, 8.15, 8.5, 9.5, 13.0];
    let rows = cmd_table1(&instance, &rewards, &Tolerances::default())?;
    print!("{}", table1_csv(&rows));
    Ok(())
}
