//! Service policies, joining strategies and economic parameters.
//!
//! A service policy is a nondecreasing rate sequence `mu_1, mu_2, ...` with a
//! finite limit `M`. It is stored as a finite prefix plus a constant tail,
//! which is exact on every state a finite-threshold strategy can reach.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed when validating join probabilities at the ends of `[0, 1]`.
pub const PROB_TOL: f64 = 1e-12;

/// Two-rate structure: `mu_low` for `1 <= n <= T`, `mu_high` for `n > T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdForm {
    pub threshold: usize,
    pub mu_low: f64,
    pub mu_high: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceRatePolicy {
    prefix: Vec<f64>,
    tail: f64,
    threshold: Option<ThresholdForm>,
}

fn check_rate(index: usize, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveRate { index, value })
    }
}

impl ServiceRatePolicy {
    /// Builds a policy from `mu_1..mu_K` and the rate applied to every `n > K`.
    pub fn new(prefix: Vec<f64>, tail: f64) -> Result<Self> {
        for (i, &r) in prefix.iter().enumerate() {
            check_rate(i + 1, r)?;
        }
        check_rate(prefix.len() + 1, tail)?;
        let mut prev = f64::NEG_INFINITY;
        for (i, &r) in prefix.iter().chain(std::iter::once(&tail)).enumerate() {
            if r < prev {
                return Err(Error::DecreasingRates {
                    state: i + 1,
                    prev,
                    next: r,
                });
            }
            prev = r;
        }
        Ok(Self {
            prefix,
            tail,
            threshold: None,
        })
    }

    /// The memoryless M/M/1 policy.
    pub fn constant(mu: f64) -> Result<Self> {
        Self::new(Vec::new(), mu)
    }

    /// The two-rate policy `(T, mu_low, mu_high)`.
    pub fn threshold(threshold: usize, mu_low: f64, mu_high: f64) -> Result<Self> {
        if threshold == 0 {
            return Err(Error::ZeroThreshold);
        }
        check_rate(1, mu_low)?;
        check_rate(threshold + 1, mu_high)?;
        if mu_low >= mu_high {
            return Err(Error::ThresholdRatesOrder { mu_low, mu_high });
        }
        Ok(Self {
            prefix: vec![mu_low; threshold],
            tail: mu_high,
            threshold: Some(ThresholdForm {
                threshold,
                mu_low,
                mu_high,
            }),
        })
    }

    /// Service rate with `n >= 1` customers present.
    pub fn rate_at(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(Error::EmptyStateRate);
        }
        Ok(self.rate(n))
    }

    /// Unchecked lookup for internal callers that only ever pass `n >= 1`.
    pub(crate) fn rate(&self, n: usize) -> f64 {
        debug_assert!(n >= 1);
        self.prefix.get(n - 1).copied().unwrap_or(self.tail)
    }

    pub fn prefix(&self) -> &[f64] {
        &self.prefix
    }

    /// `M`, the supremum (and limit) of the rate sequence.
    pub fn tail_rate(&self) -> f64 {
        self.tail
    }

    /// `mu_1`, the smallest rate.
    pub fn min_rate(&self) -> f64 {
        self.rate(1)
    }

    pub fn threshold_form(&self) -> Option<&ThresholdForm> {
        self.threshold.as_ref()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EconomicParams {
    lambda: f64,
    reward: f64,
    wait_cost: f64,
    r_tilde: f64,
}

impl EconomicParams {
    pub fn new(lambda: f64, reward: f64, wait_cost: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParam {
                name: "lambda",
                value: lambda,
            });
        }
        if !(reward.is_finite() && reward >= 0.0) {
            return Err(Error::InvalidParam {
                name: "reward",
                value: reward,
            });
        }
        if !(wait_cost.is_finite() && wait_cost > 0.0) {
            return Err(Error::InvalidParam {
                name: "wait_cost",
                value: wait_cost,
            });
        }
        Ok(Self {
            lambda,
            reward,
            wait_cost,
            r_tilde: reward / wait_cost,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn reward(&self) -> f64 {
        self.reward
    }

    pub fn wait_cost(&self) -> f64 {
        self.wait_cost
    }

    /// Reward measured in units of waiting time, `R / C`.
    pub fn r_tilde(&self) -> f64 {
        self.r_tilde
    }

    /// Same arrival rate and cost with a different reward.
    pub fn with_reward(&self, reward: f64) -> Result<Self> {
        Self::new(self.lambda, reward, self.wait_cost)
    }
}

/// A join-probability vector `p_0..p_{n0}` whose last entry is the first zero.
#[derive(Debug, Clone, PartialEq)]
pub struct JoinStrategy {
    probs: Vec<f64>,
}

impl JoinStrategy {
    /// Validates `probs` and truncates it at the first zero entry.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let mut out = Vec::with_capacity(probs.len());
        for (index, p) in probs.into_iter().enumerate() {
            if !(-PROB_TOL..=1.0 + PROB_TOL).contains(&p) {
                return Err(Error::ProbabilityOutOfRange { index, value: p });
            }
            let p = p.clamp(0.0, 1.0);
            out.push(p);
            if p == 0.0 {
                return Ok(Self { probs: out });
            }
        }
        Err(Error::NoBalkState)
    }

    /// Pure threshold strategy: join iff fewer than `n0` customers are present.
    pub fn pure(n0: usize) -> Self {
        let mut probs = vec![1.0; n0];
        probs.push(0.0);
        Self { probs }
    }

    /// `n0`, the first state where balking is prescribed.
    pub fn balk_state(&self) -> usize {
        self.probs.len() - 1
    }

    /// Join probability at state `n`; zero beyond the balk state.
    pub fn prob(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn is_pure_threshold(&self) -> bool {
        self.probs[..self.balk_state()].iter().all(|&p| p == 1.0)
    }
}

/// Threshold strategy encoded by a single real `x >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ThresholdStrategy(f64);

impl ThresholdStrategy {
    pub fn new(x: f64) -> Result<Self> {
        if x.is_finite() && x >= 0.0 {
            Ok(Self(x))
        } else {
            Err(Error::InvalidThreshold(x))
        }
    }

    pub fn x(&self) -> f64 {
        self.0
    }

    /// Integer `x` gives the pure threshold `n0 = x`; otherwise the customer
    /// at state `floor(x)` joins with probability `x - floor(x)`.
    pub fn join_strategy(&self) -> JoinStrategy {
        let whole = self.0.floor();
        let k = whole as usize;
        let frac = self.0 - whole;
        if frac == 0.0 {
            JoinStrategy::pure(k)
        } else {
            let mut probs = vec![1.0; k];
            probs.push(frac);
            probs.push(0.0);
            JoinStrategy { probs }
        }
    }
}

pub fn strategy_from_x(x: f64) -> Result<JoinStrategy> {
    Ok(ThresholdStrategy::new(x)?.join_strategy())
}

/// `floor(r_tilde * M) + 1`: no strategy makes joining worthwhile at or
/// beyond this state.
pub fn balk_upper_bound(params: &EconomicParams, policy: &ServiceRatePolicy) -> usize {
    (params.r_tilde() * policy.tail_rate()).floor() as usize + 1
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub params: EconomicParams,
    pub policy: ServiceRatePolicy,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    lambda: f64,
    reward: f64,
    wait_cost: f64,
    policy: RawPolicy,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum RawPolicy {
    Sequence(RawSequence),
    Threshold(RawThreshold),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSequence {
    prefix: Vec<f64>,
    tail: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawThreshold {
    #[serde(rename = "T")]
    threshold: usize,
    mu_low: f64,
    mu_high: f64,
}

impl Instance {
    pub fn new(params: EconomicParams, policy: ServiceRatePolicy) -> Self {
        Self { params, policy }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawInstance =
            serde_json::from_str(text).map_err(|e| Error::Instance(e.to_string()))?;
        let params = EconomicParams::new(raw.lambda, raw.reward, raw.wait_cost)?;
        let policy = match raw.policy {
            RawPolicy::Sequence(s) => ServiceRatePolicy::new(s.prefix, s.tail)?,
            RawPolicy::Threshold(t) => {
                ServiceRatePolicy::threshold(t.threshold, t.mu_low, t.mu_high)?
            }
        };
        Ok(Self { params, policy })
    }

    pub fn to_json(&self) -> String {
        let policy = match self.policy.threshold_form() {
            Some(t) => RawPolicy::Threshold(RawThreshold {
                threshold: t.threshold,
                mu_low: t.mu_low,
                mu_high: t.mu_high,
            }),
            None => RawPolicy::Sequence(RawSequence {
                prefix: self.policy.prefix().to_vec(),
                tail: self.policy.tail_rate(),
            }),
        };
        let raw = RawInstance {
            lambda: self.params.lambda(),
            reward: self.params.reward(),
            wait_cost: self.params.wait_cost(),
            policy,
        };
        serde_json::to_string(&raw).expect("instance serialization cannot fail")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case_study() -> ServiceRatePolicy {
        ServiceRatePolicy::threshold(23, 2.0, 5.0).unwrap()
    }

    #[test]
    fn threshold_rates() {
        let p = case_study();
        assert_eq!(p.rate_at(23).unwrap(), 2.0);
        assert_eq!(p.rate_at(24).unwrap(), 5.0);
        assert_eq!(p.rate_at(1).unwrap(), 2.0);
        assert_eq!(p.tail_rate(), 5.0);
    }

    #[test]
    fn constant_rate_everywhere() {
        let p = ServiceRatePolicy::constant(2.0).unwrap();
        for n in 1..50 {
            assert_eq!(p.rate_at(n).unwrap(), 2.0);
        }
    }

    #[test]
    fn rate_at_zero_rejected() {
        assert_eq!(case_study().rate_at(0), Err(Error::EmptyStateRate));
    }

    #[test]
    fn policy_validation() {
        assert!(matches!(
            ServiceRatePolicy::new(vec![2.0, 1.0], 3.0),
            Err(Error::DecreasingRates { state: 2, .. })
        ));
        assert!(matches!(
            ServiceRatePolicy::new(vec![1.0, 4.0], 3.0),
            Err(Error::DecreasingRates { state: 3, .. })
        ));
        assert!(ServiceRatePolicy::new(vec![0.0], 3.0).is_err());
        assert!(ServiceRatePolicy::new(vec![], f64::INFINITY).is_err());
        assert!(ServiceRatePolicy::threshold(0, 1.0, 2.0).is_err());
        assert!(ServiceRatePolicy::threshold(3, 2.0, 2.0).is_err());
    }

    #[test]
    fn params_validation() {
        let p = EconomicParams::new(3.0, 8.5, 2.0).unwrap();
        assert_eq!(p.r_tilde(), 4.25);
        assert!(EconomicParams::new(0.0, 1.0, 1.0).is_err());
        assert!(EconomicParams::new(1.0, -1.0, 1.0).is_err());
        assert!(EconomicParams::new(1.0, 1.0, 0.0).is_err());
        assert!(EconomicParams::new(1.0, 0.0, 1.0).is_ok());
    }

    #[test]
    fn strategy_from_integer_x() {
        let s = strategy_from_x(3.0).unwrap();
        assert_eq!(s.probs(), &[1.0, 1.0, 1.0, 0.0]);
        assert_eq!(s.balk_state(), 3);
        assert!(s.is_pure_threshold());
    }

    #[test]
    fn strategy_from_fractional_x() {
        let s = strategy_from_x(3.4).unwrap();
        assert_eq!(s.balk_state(), 4);
        assert_eq!(&s.probs()[..3], &[1.0, 1.0, 1.0]);
        assert!((s.probs()[3] - 0.4).abs() < 1e-15);
        assert_eq!(s.probs()[4], 0.0);
        assert!(!s.is_pure_threshold());
    }

    #[test]
    fn strategy_always_balk() {
        let s = strategy_from_x(0.0).unwrap();
        assert_eq!(s.probs(), &[0.0]);
        assert_eq!(s.balk_state(), 0);
        assert!(strategy_from_x(-0.5).is_err());
        assert!(strategy_from_x(f64::NAN).is_err());
    }

    #[test]
    fn join_strategy_validation() {
        let s = JoinStrategy::new(vec![1.0, 0.5, 0.0, 1.0]).unwrap();
        assert_eq!(s.balk_state(), 2);
        assert_eq!(s.prob(3), 0.0);
        assert_eq!(JoinStrategy::new(vec![1.0, 1.0]), Err(Error::NoBalkState));
        assert!(matches!(
            JoinStrategy::new(vec![1.2, 0.0]),
            Err(Error::ProbabilityOutOfRange { index: 0, .. })
        ));
        let s = JoinStrategy::new(vec![1.0 + 1e-13, -1e-13]).unwrap();
        assert_eq!(s.probs(), &[1.0, 0.0]);
    }

    #[test]
    fn balk_bound() {
        let params = EconomicParams::new(3.0, 8.5, 1.0).unwrap();
        assert_eq!(balk_upper_bound(&params, &case_study()), 43);
        let params = EconomicParams::new(3.0, 13.0, 1.0).unwrap();
        assert_eq!(balk_upper_bound(&params, &case_study()), 66);
        let params = EconomicParams::new(3.0, 0.0, 1.0).unwrap();
        assert_eq!(balk_upper_bound(&params, &case_study()), 1);
    }

    #[test]
    fn instance_json() {
        let inst = Instance::from_json(
            r#"{"lambda": 3, "reward": 8.5, "wait_cost": 1,
                "policy": {"T": 23, "mu_low": 2, "mu_high": 5}}"#,
        )
        .unwrap();
        assert_eq!(inst.policy, case_study());
        assert_eq!(Instance::from_json(&inst.to_json()).unwrap(), inst);

        let inst = Instance::from_json(
            r#"{"lambda": 1, "reward": 2, "wait_cost": 1,
                "policy": {"prefix": [1, 2], "tail": 2}}"#,
        )
        .unwrap();
        assert_eq!(inst.policy.rate_at(1).unwrap(), 1.0);
        assert!(inst.policy.threshold_form().is_none());
    }

    #[test]
    fn instance_rejects_unknown_keys() {
        let extra_top = r#"{"lambda": 1, "reward": 2, "wait_cost": 1, "seed": 4,
                "policy": {"prefix": [], "tail": 2}}"#;
        assert!(Instance::from_json(extra_top).is_err());
        let extra_policy = r#"{"lambda": 1, "reward": 2, "wait_cost": 1,
                "policy": {"T": 3, "mu_low": 1, "mu_high": 2, "tail": 4}}"#;
        assert!(Instance::from_json(extra_policy).is_err());
        let bad_rates = r#"{"lambda": 1, "reward": 2, "wait_cost": 1,
                "policy": {"T": 3, "mu_low": 3, "mu_high": 2}}"#;
        assert!(Instance::from_json(bad_rates).is_err());
    }
}
