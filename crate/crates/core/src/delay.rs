//! Expected sojourn times under a fixed symmetric joining strategy.
//!
//! `W(n, m)` is the expected remaining time in system of a tagged customer
//! with `n` customers ahead and `m` customers present in total (tagged one
//! included), when every future arrival follows the strategy. First-step
//! analysis on the tagged customer's position gives, with
//! `a = lambda * p_m` and `b = mu_m`,
//!
//! ```text
//! W(0, m) = 1/(a+b) + a/(a+b) * W(0, m+1)
//! W(n, m) = 1/(a+b) + a/(a+b) * W(n, m+1) + b/(a+b) * W(n-1, m-1)
//! ```
//!
//! The system is triangular: at `m = n0` no arrival joins, so row `n = 0`
//! is solved backwards from `m = n0`, and each later row only needs its own
//! larger-`m` entries plus the previous row.

use crate::csv::{float, CsvBuf};
use crate::error::{Error, Result};
use crate::model::{EconomicParams, JoinStrategy, ServiceRatePolicy};

/// Solves the generalized delays for states `0 <= n < m <= horizon` where
/// `probs[m]` is the join probability at `m` for `m < horizon` and nobody
/// joins at `horizon`. Earlier zeros in `probs` are allowed (they make some
/// states transient but the recursion stays well defined).
///
/// Returns rows indexed `rows[n][m - n - 1]`.
pub(crate) fn generalized_delays(
    policy: &ServiceRatePolicy,
    lambda: f64,
    probs: &[f64],
    horizon: usize,
) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(horizon);
    for n in 0..horizon {
        // entries for m = n+1 ..= horizon
        let len = horizon - n;
        let mut row = vec![0.0; len];
        let idx = |m: usize| m - n - 1;
        let mu = policy.rate(horizon);
        row[idx(horizon)] = if n == 0 {
            1.0 / mu
        } else {
            1.0 / mu + rows[n - 1][horizon - 1 - n]
        };
        for m in (n + 1..horizon).rev() {
            let arrive = lambda * probs.get(m).copied().unwrap_or(0.0);
            let serve = policy.rate(m);
            let total = arrive + serve;
            let mut w = (1.0 + arrive * row[idx(m + 1)]) / total;
            if n > 0 {
                // W(n-1, m-1) lives at rows[n-1][(m-1) - (n-1) - 1]
                w += serve / total * rows[n - 1][m - n - 1];
            }
            row[idx(m)] = w;
        }
        rows.push(row);
    }
    rows
}

/// Solved generalized delays `W(n, m)` for `0 <= n < m <= n0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayTable {
    n0: usize,
    rows: Vec<Vec<f64>>,
    policy: ServiceRatePolicy,
    strategy: JoinStrategy,
}

impl DelayTable {
    /// Backward first-step sweep. A strategy with `n0 = 0` yields an empty
    /// table.
    pub fn solve(
        policy: &ServiceRatePolicy,
        strategy: &JoinStrategy,
        params: &EconomicParams,
    ) -> Self {
        let n0 = strategy.balk_state();
        let rows = generalized_delays(policy, params.lambda(), strategy.probs(), n0);
        Self {
            n0,
            rows,
            policy: policy.clone(),
            strategy: strategy.clone(),
        }
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn policy(&self) -> &ServiceRatePolicy {
        &self.policy
    }

    pub fn strategy(&self) -> &JoinStrategy {
        &self.strategy
    }

    /// `W(n, m)`, or `None` outside `0 <= n < m <= n0`.
    pub fn get(&self, n: usize, m: usize) -> Option<f64> {
        if n < m && m <= self.n0 {
            Some(self.rows[n][m - n - 1])
        } else {
            None
        }
    }

    /// Iterates `(n, m, W(n, m))` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(n, row)| row.iter().enumerate().map(move |(j, &w)| (n, n + 1 + j, w)))
    }

    pub fn is_empty(&self) -> bool {
        self.n0 == 0
    }

    /// `W(n0 - 1, n0)`, the delay of the last customer admitted; zero when
    /// `n0 = 0`.
    pub fn marginal(&self) -> f64 {
        if self.n0 == 0 {
            0.0
        } else {
            self.rows[self.n0 - 1][0]
        }
    }

    /// Expected sojourn time of an arrival that finds `n` customers and
    /// joins. At `n = n0` nobody else joins until the next departure, so the
    /// residual service runs at `mu_{n0+1}`.
    pub fn arrival_delay(&self, n: usize) -> Result<f64> {
        if n < self.n0 {
            Ok(self.rows[n][0])
        } else if n == self.n0 {
            Ok(1.0 / self.policy.rate(self.n0 + 1) + self.marginal())
        } else {
            Err(Error::StateOutOfRange { n, n0: self.n0 })
        }
    }

    /// `W(n; p)` for every `n = 0..=n0`.
    pub fn arrival_delays(&self) -> Vec<f64> {
        (0..=self.n0)
            .map(|n| self.arrival_delay(n).expect("n within recurrent class"))
            .collect()
    }

    /// One row per entry, header `n,m,W`.
    pub fn to_csv(&self) -> String {
        let mut out = CsvBuf::with_header(&["n", "m", "W"]);
        for (n, m, w) in self.entries() {
            out.row([n.to_string(), m.to_string(), float(w)]);
        }
        out.into_string()
    }

    /// Header `n,W_arrival`, one row per state of the recurrent class.
    pub fn arrival_csv(&self) -> String {
        let mut out = CsvBuf::with_header(&["n", "W_arrival"]);
        for (n, w) in self.arrival_delays().into_iter().enumerate() {
            out.row([n.to_string(), float(w)]);
        }
        out.into_string()
    }
}

/// Closed-form arrival delay under a two-rate policy when the strategy never
/// admits more than `T` customers (`n0 <= T`): the server always runs at
/// `mu_low`, except that a hypothetical joiner at `n = n0 = T` pushes the
/// system to `mu_high` for the residual service in progress.
pub fn closed_form_below_t(policy: &ServiceRatePolicy, n0: usize, n: usize) -> Result<f64> {
    let form = policy.threshold_form().ok_or(Error::NotThresholdPolicy)?;
    if n0 > form.threshold {
        return Err(Error::AboveServiceThreshold {
            n0,
            threshold: form.threshold,
        });
    }
    if n < n0 {
        Ok((n + 1) as f64 / form.mu_low)
    } else if n == n0 {
        Ok(1.0 / policy.rate(n0 + 1) + n0 as f64 / form.mu_low)
    } else {
        Err(Error::StateOutOfRange { n, n0 })
    }
}
