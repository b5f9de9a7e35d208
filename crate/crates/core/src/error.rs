use thiserror::Error;

/// Errors raised while validating inputs or evaluating the model.
#[derive(Debug, Error, PartialEq)]
pub enum Error {
    #[error("service rate at index {index} is not strictly positive and finite: {value}")]
    NonPositiveRate { index: usize, value: f64 },

    #[error("service rates must be nondecreasing: rate {next} at state {state} follows {prev}")]
    DecreasingRates { state: usize, prev: f64, next: f64 },

    #[error("threshold policy requires mu_low < mu_high (got {mu_low} >= {mu_high})")]
    ThresholdRatesOrder { mu_low: f64, mu_high: f64 },

    #[error("threshold policy requires T >= 1")]
    ZeroThreshold,

    #[error("no service rate is defined for an empty system (n = 0)")]
    EmptyStateRate,

    #[error("invalid economic parameter {name} = {value}")]
    InvalidParam { name: &'static str, value: f64 },

    #[error("join probability p[{index}] = {value} lies outside [0, 1]")]
    ProbabilityOutOfRange { index: usize, value: f64 },

    #[error("strategy never balks: the probability vector must end with a zero")]
    NoBalkState,

    #[error("threshold parameter x must be a finite nonnegative number, got {0}")]
    InvalidThreshold(f64),

    #[error("state {n} lies outside the recurrent class 0..={n0}")]
    StateOutOfRange { n: usize, n0: usize },

    #[error("the policy has no threshold form")]
    NotThresholdPolicy,

    #[error("closed form below T requires n0 <= T (n0 = {n0}, T = {threshold})")]
    AboveServiceThreshold { n0: usize, threshold: usize },

    #[error("bisection did not converge on ({lo}, {hi}) after {iterations} iterations")]
    NoConvergence { lo: f64, hi: f64, iterations: usize },

    #[error("invalid search range ({lo}, {hi})")]
    InvalidRange { lo: f64, hi: f64 },

    #[error("coupling requires 1 <= n <= n0 - 1 (n = {n}, n0 = {n0})")]
    CouplingState { n: usize, n0: usize },

    #[error("replications must be at least 1")]
    NoReplications,

    #[error("malformed instance: {0}")]
    Instance(String),
}

pub type Result<T> = std::result::Result<T, Error>;
