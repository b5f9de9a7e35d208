#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use queue_equilibria::model::strategy_from_x;
use queue_equilibria::{EconomicParams, JoinStrategy, ServiceRatePolicy};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Nondecreasing policy with a random prefix length and increments.
pub fn random_policy(rng: &mut ChaCha8Rng) -> ServiceRatePolicy {
    let len = rng.random_range(0..12);
    let mut rate = rng.random_range(0.2..3.0);
    let mut prefix = Vec::with_capacity(len);
    for _ in 0..len {
        prefix.push(rate);
        if rng.random_bool(0.5) {
            rate += rng.random_range(0.0..1.5);
        }
    }
    let tail = rate + if rng.random_bool(0.7) { rng.random_range(0.0..2.0) } else { 0.0 };
    ServiceRatePolicy::new(prefix, tail).unwrap()
}

/// Threshold strategy `x` in `(0, max_x]`, integer half of the time.
pub fn random_threshold(rng: &mut ChaCha8Rng, max_x: usize) -> JoinStrategy {
    let x = if rng.random_bool(0.5) {
        rng.random_range(1..=max_x) as f64
    } else {
        rng.random_range(0.05..max_x as f64)
    };
    strategy_from_x(x).unwrap()
}

pub fn random_params(rng: &mut ChaCha8Rng) -> EconomicParams {
    EconomicParams::new(rng.random_range(0.1..6.0), 1.0, 1.0).unwrap()
}

/// Solves every first-step equation at once as a dense linear system,
/// unknowns `W(n, m)` for `0 <= n < m <= n0`. Returns `w[n][m]`.
#[allow(clippy::needless_range_loop)]
pub fn dense_delays(
    policy: &ServiceRatePolicy,
    lambda: f64,
    strategy: &JoinStrategy,
) -> Vec<Vec<f64>> {
    let n0 = strategy.balk_state();
    let mut index = vec![vec![usize::MAX; n0 + 1]; n0 + 1];
    let mut count = 0;
    for n in 0..n0 {
        for m in n + 1..=n0 {
            index[n][m] = count;
            count += 1;
        }
    }
    let mut a = DMatrix::<f64>::zeros(count, count);
    let b = DVector::<f64>::from_element(count, 1.0);
    for n in 0..n0 {
        for m in n + 1..=n0 {
            let row = index[n][m];
            let arrive = lambda * strategy.prob(m);
            let serve = policy.rate_at(m).unwrap();
            a[(row, row)] = arrive + serve;
            if arrive > 0.0 {
                a[(row, index[n][m + 1])] -= arrive;
            }
            if n > 0 {
                a[(row, index[n - 1][m - 1])] -= serve;
            }
        }
    }
    let sol = a.lu().solve(&b).expect("first-step system is nonsingular");
    let mut w = vec![vec![f64::NAN; n0 + 1]; n0 + 1];
    for n in 0..n0 {
        for m in n + 1..=n0 {
            w[n][m] = sol[index[n][m]];
        }
    }
    w
}
