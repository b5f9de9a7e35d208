//! Symmetric joining equilibria for an observable single-server Markovian
//! queue whose service rate is nondecreasing in the number of customers.
//!
//! - [`model`]: service policies, strategies, economic parameters, instances.
//! - [`delay`]: exact expected sojourn times by first-step analysis.
//! - [`equilibrium`]: pure and mixed threshold equilibria.
//! - [`sim`]: Monte Carlo sojourn estimates and the coupled two-system check.
//! - [`commands`]: the command layer behind the `queue-eq` binary.

pub mod commands;
pub mod csv;
pub mod delay;
pub mod equilibrium;
pub mod error;
pub mod model;
pub mod sim;

pub use delay::DelayTable;
pub use equilibrium::{EquilibriumReport, Tolerances};
pub use error::{Error, Result};
pub use model::{EconomicParams, Instance, JoinStrategy, ServiceRatePolicy, ThresholdStrategy};
