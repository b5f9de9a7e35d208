//! Discrete-event Monte Carlo for the state-dependent queue.
//!
//! Every customer carries a unit-mean exponential service requirement that
//! depletes at the current rate `mu_{N(t)}`, so a rate switch mid-service
//! changes the remaining service time. With a constant rate this is the
//! usual exponential service.
//!
//! Each replication owns a ChaCha8 generator keyed by the seed, with one
//! stream per input kind (interarrival times, service requirements by
//! customer label, join coins by arrival index). Two systems that read the
//! same index get the same draw, which is how the coupling shares arrivals,
//! service requirements and coins.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{EconomicParams, JoinStrategy, ServiceRatePolicy};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    pub replications: usize,
    pub params: EconomicParams,
    pub policy: ServiceRatePolicy,
    pub strategy: JoinStrategy,
}

impl SimConfig {
    pub fn new(
        seed: u64,
        replications: usize,
        params: EconomicParams,
        policy: ServiceRatePolicy,
        strategy: JoinStrategy,
    ) -> Result<Self> {
        if replications == 0 {
            return Err(Error::NoReplications);
        }
        Ok(Self {
            seed,
            replications,
            params,
            policy,
            strategy,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StreamKind {
    Arrivals = 0,
    Service = 1,
    Coins = 2,
}

/// Lazily extended sequence of draws from one named stream.
struct Stream {
    rng: ChaCha8Rng,
    kind: StreamKind,
    values: Vec<f64>,
}

impl Stream {
    fn new(seed: u64, replication: usize, kind: StreamKind) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(((replication as u64) << 2) | kind as u64);
        Self {
            rng,
            kind,
            values: Vec::new(),
        }
    }

    fn get(&mut self, i: usize) -> f64 {
        while self.values.len() <= i {
            let v = match self.kind {
                StreamKind::Arrivals | StreamKind::Service => self.rng.sample(Exp1),
                StreamKind::Coins => self.rng.random::<f64>(),
            };
            self.values.push(v);
        }
        self.values[i]
    }
}

/// Random inputs of one replication, shared by every system simulated in it.
struct ReplicationInputs {
    interarrivals: Stream,
    requirements: Stream,
    coins: Stream,
}

impl ReplicationInputs {
    fn new(seed: u64, replication: usize) -> Self {
        Self {
            interarrivals: Stream::new(seed, replication, StreamKind::Arrivals),
            requirements: Stream::new(seed, replication, StreamKind::Service),
            coins: Stream::new(seed, replication, StreamKind::Coins),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SystemId {
    A,
    B,
}

impl fmt::Display for SystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SystemId::A => f.write_str("A"),
            SystemId::B => f.write_str("B"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Arrival,
    Join,
    Balk,
    Departure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event {
    pub t: f64,
    pub system: SystemId,
    pub kind: EventKind,
    pub n_after: usize,
}

/// One event per line, `{"t":..,"system":"A","kind":"join","n_after":..}`.
pub fn events_to_jsonl(events: &[Event]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("event serialization cannot fail"));
        out.push('\n');
    }
    out
}

struct SystemRun {
    /// Departure epochs of the initial customers, in label order.
    departures: Vec<f64>,
    saw_tie: bool,
}

/// Runs one FCFS system from `t = 0` until every initially present customer
/// has left. `initial` lists labels front to back; the potential arrival
/// with index `k` carries label `first_future + k`.
#[allow(clippy::too_many_arguments)]
fn run_system(
    policy: &ServiceRatePolicy,
    lambda: f64,
    strategy: &JoinStrategy,
    initial: &[usize],
    first_future: usize,
    inputs: &mut ReplicationInputs,
    system: SystemId,
    mut log: Option<&mut Vec<Event>>,
) -> SystemRun {
    let mut queue: std::collections::VecDeque<(usize, f64)> = initial
        .iter()
        .map(|&label| (label, inputs.requirements.get(label)))
        .collect();
    let mut departures = vec![f64::NAN; initial.len()];
    let first_label = initial.first().copied().unwrap_or(0);
    let mut remaining_initial = initial.len();
    let mut saw_tie = false;
    let mut t = 0.0;
    let mut k = 0usize;
    let mut next_arrival = inputs.interarrivals.get(0) / lambda;

    while remaining_initial > 0 {
        let n = queue.len();
        let rate = policy.rate(n);
        let head = queue.front_mut().expect("initial customer still present");
        let t_dep = t + head.1 / rate;
        if t_dep == next_arrival {
            saw_tie = true;
        }
        if t_dep <= next_arrival {
            t = t_dep;
            let (label, _) = queue.pop_front().expect("nonempty");
            if label >= first_label && label < first_label + initial.len() {
                departures[label - first_label] = t;
                remaining_initial -= 1;
            }
            if let Some(log) = log.as_deref_mut() {
                log.push(Event {
                    t,
                    system,
                    kind: EventKind::Departure,
                    n_after: queue.len(),
                });
            }
        } else {
            head.1 = (head.1 - rate * (next_arrival - t)).max(0.0);
            t = next_arrival;
            let joins = inputs.coins.get(k) < strategy.prob(n);
            if let Some(log) = log.as_deref_mut() {
                log.push(Event {
                    t,
                    system,
                    kind: EventKind::Arrival,
                    n_after: n,
                });
            }
            if joins {
                let label = first_future + k;
                queue.push_back((label, inputs.requirements.get(label)));
            }
            if let Some(log) = log.as_deref_mut() {
                log.push(Event {
                    t,
                    system,
                    kind: if joins { EventKind::Join } else { EventKind::Balk },
                    n_after: queue.len(),
                });
            }
            k += 1;
            next_arrival += inputs.interarrivals.get(k) / lambda;
        }
    }
    SystemRun {
        departures,
        saw_tie,
    }
}

/// Order-independent running sum (Neumaier).
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sample mean with a 95% normal-approximation confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    /// Infinite when fewer than two samples are available.
    pub half_width_95: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let samples = xs.len();
        let mut s = CompensatedSum::default();
        xs.iter().for_each(|&x| s.add(x));
        let mean = s.value() / samples as f64;
        if samples < 2 {
            return Self {
                mean,
                std_error: f64::INFINITY,
                half_width_95: f64::INFINITY,
                samples,
            };
        }
        let mut sq = CompensatedSum::default();
        xs.iter().for_each(|&x| sq.add((x - mean) * (x - mean)));
        let var = sq.value() / (samples - 1) as f64;
        let std_error = (var / samples as f64).sqrt();
        Self {
            mean,
            std_error,
            half_width_95: 1.96 * std_error,
            samples,
        }
    }

    /// No variance estimate (a single replication).
    pub fn is_degenerate(&self) -> bool {
        !self.std_error.is_finite()
    }

    /// `|mean - value| <= k * std_error`.
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_error
    }
}

/// Sojourn time of a tagged customer who finds `n` customers and joins
/// (even at `n = n0`), while all later arrivals follow the strategy.
pub fn simulate_sojourn(config: &SimConfig, n: usize) -> Result<Estimate> {
    let n0 = config.strategy.balk_state();
    if n > n0 {
        return Err(Error::StateOutOfRange { n, n0 });
    }
    if config.replications == 0 {
        return Err(Error::NoReplications);
    }
    let labels: Vec<usize> = (0..=n).collect();
    let samples: Vec<f64> = (0..config.replications)
        .into_par_iter()
        .map(|rep| {
            let mut inputs = ReplicationInputs::new(config.seed, rep);
            let run = run_system(
                &config.policy,
                config.params.lambda(),
                &config.strategy,
                &labels,
                n + 1,
                &mut inputs,
                SystemId::A,
                None,
            );
            run.departures[n]
        })
        .collect();
    Ok(Estimate::from_samples(&samples))
}

/// Sojourn times of the labeled customers `1..=n` in both coupled systems.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledPathOutcome {
    pub t_a: Vec<f64>,
    pub t_b: Vec<f64>,
    /// Some event epoch coincided exactly in one of the systems.
    pub tie: bool,
}

impl CoupledPathOutcome {
    /// Largest `T_A(j) - T_B(j)`, or zero when the ordering holds.
    pub fn max_violation(&self) -> f64 {
        self.t_a
            .iter()
            .zip(&self.t_b)
            .map(|(a, b)| a - b)
            .fold(0.0, f64::max)
    }

    pub fn ordered(&self) -> bool {
        self.t_a.iter().zip(&self.t_b).all(|(a, b)| a <= b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSummary {
    pub n: usize,
    pub n0: usize,
    pub replications: usize,
    /// Replications where `T_A(j) > T_B(j)` for some `j`, ties excluded.
    pub violations: usize,
    /// Violating replications that also contained an exact event tie.
    pub tie_violations: usize,
    pub max_violation: f64,
    /// `T_B(n) - T_A(n)`, an estimate of `W(n, n+1) - W(n-1, n)`.
    pub last_gap: Estimate,
    pub outcomes: Vec<CoupledPathOutcome>,
}

fn check_threshold_strategy(strategy: &JoinStrategy) -> bool {
    let n0 = strategy.balk_state();
    n0 >= 1 && strategy.probs()[..n0 - 1].iter().all(|&p| p == 1.0)
}

fn coupled_replication(
    config: &SimConfig,
    n: usize,
    rep: usize,
    mut log: Option<&mut Vec<Event>>,
) -> CoupledPathOutcome {
    let mut inputs = ReplicationInputs::new(config.seed, rep);
    let lambda = config.params.lambda();
    let labels_a: Vec<usize> = (1..=n).collect();
    let labels_b: Vec<usize> = (0..=n).collect();
    let a = run_system(
        &config.policy,
        lambda,
        &config.strategy,
        &labels_a,
        n + 1,
        &mut inputs,
        SystemId::A,
        log.as_deref_mut(),
    );
    let b = run_system(
        &config.policy,
        lambda,
        &config.strategy,
        &labels_b,
        n + 1,
        &mut inputs,
        SystemId::B,
        log,
    );
    CoupledPathOutcome {
        t_a: a.departures,
        t_b: b.departures[1..].to_vec(),
        tie: a.saw_tie || b.saw_tie,
    }
}

/// Coupled comparison of system A (customers `1..=n`, customer 1 in
/// service) and system B (customers `0..=n`, customer 0 just entered
/// service). The strategy must be a threshold strategy with balk state `n0`.
pub fn run_coupling(config: &SimConfig, n: usize, n0: usize) -> Result<CouplingSummary> {
    if n == 0 || n + 1 > n0 || config.strategy.balk_state() != n0 {
        return Err(Error::CouplingState { n, n0 });
    }
    if !check_threshold_strategy(&config.strategy) {
        return Err(Error::CouplingState { n, n0 });
    }
    let outcomes: Vec<CoupledPathOutcome> = (0..config.replications)
        .into_par_iter()
        .map(|rep| coupled_replication(config, n, rep, None))
        .collect();
    let mut violations = 0;
    let mut tie_violations = 0;
    let mut max_violation = 0.0f64;
    for o in &outcomes {
        if !o.ordered() {
            if o.tie {
                tie_violations += 1;
            } else {
                violations += 1;
            }
            max_violation = max_violation.max(o.max_violation());
        }
    }
    let gaps: Vec<f64> = outcomes.iter().map(|o| o.t_b[n - 1] - o.t_a[n - 1]).collect();
    Ok(CouplingSummary {
        n,
        n0,
        replications: config.replications,
        violations,
        tie_violations,
        max_violation,
        last_gap: Estimate::from_samples(&gaps),
        outcomes,
    })
}

/// A single coupled replication with its full event log (A's events first).
pub fn coupled_replication_log(
    config: &SimConfig,
    n: usize,
    replication: usize,
) -> Result<(CoupledPathOutcome, Vec<Event>)> {
    let n0 = config.strategy.balk_state();
    if n == 0 || n + 1 > n0 || !check_threshold_strategy(&config.strategy) {
        return Err(Error::CouplingState { n, n0 });
    }
    let mut log = Vec::new();
    let outcome = coupled_replication(config, n, replication, Some(&mut log));
    Ok((outcome, log))
}
