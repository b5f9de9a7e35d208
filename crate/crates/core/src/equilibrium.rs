//! Symmetric threshold equilibria in the recurrent class.
//!
//! Under threshold strategies the arrival delay `W(n; p)` is nondecreasing
//! in `n`, so a pure threshold `n0` is an equilibrium iff
//!
//! ```text
//! r_tilde - 1/mu_{n0+1} <= W(n0-1, n0) <= r_tilde
//! ```
//!
//! and a mixed threshold `x` is an equilibrium iff the marginal delay
//! `w(x) = W(floor(x), floor(x)+1)` equals `r_tilde`.

use rayon::prelude::*;
use serde::Serialize;

use crate::csv::{float, CsvBuf};
use crate::delay::{closed_form_below_t, generalized_delays, DelayTable};
use crate::error::{Error, Result};
use crate::model::{strategy_from_x, EconomicParams, JoinStrategy, ServiceRatePolicy};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Absolute slack (time units) for indifference and boundary ties.
    pub eq: f64,
    /// Slack for deciding whether `r_tilde * mu_low` is an integer.
    pub int: f64,
    /// Bisection stops once the bracket is narrower than this.
    pub root_x: f64,
    /// Residual `|w(x) - r_tilde|` accepted for a mixed root.
    pub root: f64,
    /// Probe points per unit interval in the mixed search.
    pub probes: usize,
    pub max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eq: 1e-9,
            int: 1e-9,
            root_x: 1e-10,
            root: 1e-9,
            probes: 64,
            max_iter: 200,
        }
    }
}

/// Expected utility `C q_n (r_tilde - W(n; p))` of joining with probability
/// `q_n` at state `n` while everyone else plays `strategy`.
pub fn net_benefit(
    q_n: f64,
    n: usize,
    strategy: &JoinStrategy,
    params: &EconomicParams,
    policy: &ServiceRatePolicy,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&q_n) {
        return Err(Error::ProbabilityOutOfRange { index: n, value: q_n });
    }
    if q_n == 0.0 {
        return Ok(0.0);
    }
    let w = DelayTable::solve(policy, strategy, params).arrival_delay(n)?;
    Ok(params.wait_cost() * q_n * (params.r_tilde() - w))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BestResponse {
    Join,
    Balk,
    Indifferent,
}

impl BestResponse {
    pub fn from_surplus(surplus: f64, tol: f64) -> Self {
        if surplus > tol {
            BestResponse::Join
        } else if surplus < -tol {
            BestResponse::Balk
        } else {
            BestResponse::Indifferent
        }
    }
}

pub fn best_response(
    n: usize,
    strategy: &JoinStrategy,
    params: &EconomicParams,
    policy: &ServiceRatePolicy,
    tol: &Tolerances,
) -> Result<BestResponse> {
    let w = DelayTable::solve(policy, strategy, params).arrival_delay(n)?;
    Ok(BestResponse::from_surplus(params.r_tilde() - w, tol.eq))
}

/// Real bounds on admissible thresholds, plus the integers they admit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CandidateRange {
    pub low: f64,
    pub high: f64,
    #[serde(skip)]
    first: usize,
    #[serde(skip)]
    last: Option<usize>,
}

impl CandidateRange {
    fn new(low: f64, high: f64, slack_low: f64, slack_high: f64, floor_at: usize) -> Self {
        let first = ((low - slack_low).ceil().max(0.0) as usize).max(floor_at);
        let top = (high + slack_high).floor();
        let last = if top < 0.0 || (top as usize) < first {
            None
        } else {
            Some(top as usize)
        };
        Self {
            low,
            high,
            first,
            last,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.last.is_none()
    }

    pub fn contains(&self, n0: usize) -> bool {
        self.last.is_some_and(|last| self.first <= n0 && n0 <= last)
    }

    /// Integer candidates, ascending.
    pub fn integers(&self) -> Vec<usize> {
        match self.last {
            Some(last) => (self.first..=last).collect(),
            None => Vec::new(),
        }
    }
}

/// Thresholds that can possibly be equilibria: `W(n0-1, n0) >= n0/M` caps
/// `n0 <= r_tilde M`, and `W(n0; p) <= (n0+1)/mu_1` forces
/// `n0 >= r_tilde mu_1 - 1`.
pub fn pure_candidate_range(
    params: &EconomicParams,
    policy: &ServiceRatePolicy,
    tol: &Tolerances,
) -> CandidateRange {
    let r = params.r_tilde();
    let mu1 = policy.min_rate();
    let m = policy.tail_rate();
    CandidateRange::new(r * mu1 - 1.0, r * m, tol.eq * mu1, tol.eq * m, 0)
}

/// `[L, U]` for thresholds above `T` under a two-rate policy, with
/// `L = max((r_tilde - 1/mu_h) mu_l, T+1)` and `U = max(r_tilde mu_h, T+1)`.
pub fn above_threshold_range(
    params: &EconomicParams,
    policy: &ServiceRatePolicy,
    tol: &Tolerances,
) -> Option<CandidateRange> {
    let form = policy.threshold_form()?;
    let r = params.r_tilde();
    let floor_at = form.threshold + 1;
    let low = ((r - 1.0 / form.mu_high) * form.mu_low).max(floor_at as f64);
    let high = (r * form.mu_high).max(floor_at as f64);
    Some(CandidateRange::new(
        low,
        high,
        tol.eq * form.mu_low,
        tol.eq * form.mu_high,
        floor_at,
    ))
}

/// Outcome of the two-sided delay test for one pure threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PureDiagnostic {
    pub n0: usize,
    /// `W(n0-1, n0)`, zero for `n0 = 0`.
    #[serde(rename = "W_marginal")]
    pub w_marginal: f64,
    /// `r_tilde - 1/mu_{n0+1}`.
    pub lower_bound: f64,
    /// `r_tilde`.
    pub upper_bound: f64,
    pub is_equilibrium: bool,
}

impl PureDiagnostic {
    fn evaluate(n0: usize, w_marginal: f64, next_rate: f64, params: &EconomicParams, policy: &ServiceRatePolicy, tol: &Tolerances) -> Self {
        let r = params.r_tilde();
        let lower_bound = r - 1.0 / next_rate;
        let upper_bound = r;
        let range_ok = (n0 as f64) >= (lower_bound - tol.eq) * policy.min_rate()
            && (n0 as f64) <= (r + tol.eq) * policy.tail_rate();
        let is_equilibrium = range_ok
            && w_marginal >= lower_bound - tol.eq
            && w_marginal <= upper_bound + tol.eq;
        Self {
            n0,
            w_marginal,
            lower_bound,
            upper_bound,
            is_equilibrium,
        }
    }
}

/// Pure threshold equilibrium test for `n0` using the general delay solver.
/// `n0 = 0` reduces to `r_tilde <= 1/mu_1`.
pub fn is_pure_equilibrium(
    n0: usize,
    params: &EconomicParams,
    policy: &ServiceRatePolicy,
    tol: &Tolerances,
) -> PureDiagnostic {
    let table = DelayTable::solve(policy, &JoinStrategy::pure(n0), params);
    PureDiagnostic::evaluate(n0, table.marginal(), policy.rate(n0 + 1), params, policy, tol)
}

/// Same test with the closed-form delays valid for `n0 <= T`.
fn closed_form_diagnostic(
    n0: usize,
    params: &EconomicParams,
    policy: &ServiceRatePolicy,
    tol: &Tolerances,
) -> Result<PureDiagnostic> {
    let w_marginal = if n0 == 0 {
        0.0
    } else {
        closed_form_below_t(policy, n0, n0 - 1)?
    };
    Ok(PureDiagnostic::evaluate(n0, w_marginal, policy.rate(n0 + 1), params, policy, tol))
}

/// Pure threshold equilibria in `{0, ..., T}` under a two-rate policy,
/// determined directly from `r_tilde * mu_low`.
pub fn threshold_policy_below_t(
    params: &EconomicParams,
    policy: &ServiceRatePolicy,
    tol: &Tolerances,
) -> Result<Vec<usize>> {
    let form = policy.threshold_form().ok_or(Error::NotThresholdPolicy)?;
    let t = form.threshold as f64;
    let a = params.r_tilde() * form.mu_low;
    let nearest = a.round();
    let integral = (a - nearest).abs() <= tol.int;
    let out = if integral && nearest <= t {
        // two adjacent equilibria (one when a = 0)
        let k = nearest as usize;
        match k {
            0 => vec![0],
            _ => vec![k - 1, k],
        }
    } else if !integral && a < t {
        vec![a.floor() as usize]
    } else if a > t && a <= t + form.mu_low / form.mu_high + tol.int {
        vec![form.threshold]
    } else {
        Vec::new()
    };
    Ok(out)
}

/// The marginal delay `w(x) = W(floor(x), floor(x)+1; p(x))` for `x > 0`.
/// At integer `x` this is the pure threshold value, so `w` is left
/// continuous.
pub fn marginal_delay(x: f64, params: &EconomicParams, policy: &ServiceRatePolicy) -> Result<f64> {
    if x.is_nan() || x <= 0.0 {
        return Err(Error::InvalidThreshold(x));
    }
    let strategy = strategy_from_x(x)?;
    Ok(DelayTable::solve(policy, &strategy, params).marginal())
}

/// `W(k, k+1)` when everyone joins below `k`, joins with probability `p` at
/// `k` and balks from `k+1` on. Continuous on `p in [0, 1]`; equals
/// `w(k + p)` for `p in (0, 1]` and the right limit of `w` at `k` for `p = 0`.
pub fn interval_delay(
    k: usize,
    p: f64,
    params: &EconomicParams,
    policy: &ServiceRatePolicy,
) -> f64 {
    let mut probs = vec![1.0; k + 2];
    probs[k] = p;
    probs[k + 1] = 0.0;
    let rows = generalized_delays(policy, params.lambda(), &probs, k + 1);
    rows[k][0]
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MixedEquilibria {
    pub points: Vec<f64>,
    /// Open intervals on which every `x` is an equilibrium.
    pub intervals: Vec<(f64, f64)>,
}

fn bisect<F: Fn(f64) -> f64>(
    f: &F,
    mut lo: f64,
    mut hi: f64,
    mut f_lo: f64,
    tol: &Tolerances,
) -> Result<f64> {
    let (start_lo, start_hi) = (lo, hi);
    for _ in 0..tol.max_iter {
        if hi - lo <= tol.root_x {
            return Ok(0.5 * (lo + hi));
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence {
        lo: start_lo,
        hi: start_hi,
        iterations: tol.max_iter,
    })
}

/// Mixed threshold equilibria with `x` in `(x_min, x_max)`.
///
/// Each unit interval is scanned on a probe grid; every sign change of
/// `w(x) - r_tilde` is refined by bisection, so several roots per interval
/// are found if `w` is not monotone there. Intervals where `w` is flat at
/// `r_tilde` are reported whole.
pub fn find_mixed_equilibria(
    params: &EconomicParams,
    policy: &ServiceRatePolicy,
    x_min: f64,
    x_max: f64,
    tol: &Tolerances,
) -> Result<MixedEquilibria> {
    if !(x_min.is_finite() && x_max.is_finite() && x_min >= 0.0 && x_min < x_max) {
        return Err(Error::InvalidRange {
            lo: x_min,
            hi: x_max,
        });
    }
    let r = params.r_tilde();
    let continuum_k = policy.threshold_form().and_then(|form| {
        let a = r * form.mu_low;
        let nearest = a.round();
        ((a - nearest).abs() <= tol.int && nearest >= 1.0 && nearest <= form.threshold as f64)
            .then(|| nearest as usize - 1)
    });

    let first = x_min.floor() as usize;
    let last = x_max.ceil() as usize;
    let per_interval: Vec<Result<MixedEquilibria>> = (first..last)
        .into_par_iter()
        .map(|k| {
            let kf = k as f64;
            let p_lo = (x_min - kf).max(0.0);
            let p_hi = (x_max - kf).min(1.0);
            let mut found = MixedEquilibria::default();
            if p_hi <= p_lo {
                return Ok(found);
            }
            let interval = (kf + p_lo, kf + p_hi);
            if continuum_k == Some(k) {
                found.intervals.push(interval);
                return Ok(found);
            }
            let f = |p: f64| interval_delay(k, p, params, policy) - r;
            let g = tol.probes.max(1);
            let grid: Vec<f64> = (0..=g)
                .map(|i| p_lo + (p_hi - p_lo) * i as f64 / g as f64)
                .collect();
            let vals: Vec<f64> = grid.iter().map(|&p| f(p)).collect();
            if vals.iter().all(|v| v.abs() <= tol.eq) {
                found.intervals.push(interval);
                return Ok(found);
            }
            let interior = |p: f64| p > 0.0 && p < 1.0;
            for i in 0..g {
                let (a, b) = (grid[i], grid[i + 1]);
                let (fa, fb) = (vals[i], vals[i + 1]);
                if fa == 0.0 {
                    if interior(a) {
                        found.points.push(kf + a);
                    }
                    continue;
                }
                if fb != 0.0 && (fa < 0.0) != (fb < 0.0) {
                    let p = bisect(&f, a, b, fa, tol)?;
                    if interior(p) {
                        found.points.push(kf + p);
                    }
                }
            }
            if vals[g] == 0.0 && interior(grid[g]) {
                found.points.push(kf + grid[g]);
            }
            Ok(found)
        })
        .collect();

    let mut out = MixedEquilibria::default();
    for part in per_interval {
        let part = part?;
        out.points.extend(part.points);
        out.intervals.extend(part.intervals);
    }
    Ok(out)
}

/// Pure and mixed threshold equilibria in the recurrent class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport {
    pub pure: Vec<usize>,
    pub mixed_points: Vec<f64>,
    pub mixed_intervals: Vec<[f64; 2]>,
    pub range: [f64; 2],
    /// `[L, U]` for two-rate policies.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold_range: Option<[f64; 2]>,
    pub diagnostics: Vec<PureDiagnostic>,
    pub classification_scope: &'static str,
    #[serde(skip)]
    service_threshold: Option<usize>,
}

impl EquilibriumReport {
    /// Pure equilibria with `n0 <= T` (all of them for general policies).
    pub fn pure_below_threshold(&self) -> Vec<usize> {
        match self.service_threshold {
            Some(t) => self.pure.iter().copied().filter(|&n| n <= t).collect(),
            None => self.pure.clone(),
        }
    }

    /// Pure equilibria with `n0 > T`; empty for general policies.
    pub fn pure_above_threshold(&self) -> Vec<usize> {
        match self.service_threshold {
            Some(t) => self.pure.iter().copied().filter(|&n| n > t).collect(),
            None => Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// Header `n0,W_marginal,lower_bound,upper_bound,is_equilibrium`.
    pub fn diagnostics_csv(&self) -> String {
        let mut out = CsvBuf::with_header(&[
            "n0",
            "W_marginal",
            "lower_bound",
            "upper_bound",
            "is_equilibrium",
        ]);
        for d in &self.diagnostics {
            out.row([
                d.n0.to_string(),
                float(d.w_marginal),
                float(d.lower_bound),
                float(d.upper_bound),
                d.is_equilibrium.to_string(),
            ]);
        }
        out.into_string()
    }
}

/// Pure threshold equilibria. Two-rate policies use the closed form below
/// `T` and the general test on `[L, U]` above it; other policies run the
/// general test over the whole candidate range.
pub fn enumerate_pure_equilibria(
    params: &EconomicParams,
    policy: &ServiceRatePolicy,
    tol: &Tolerances,
) -> Result<EquilibriumReport> {
    let range = pure_candidate_range(params, policy, tol);
    let above = above_threshold_range(params, policy, tol);
    let (mut pure, mut diagnostics) = match (policy.threshold_form(), above) {
        (Some(form), Some(above)) => {
            let below = threshold_policy_below_t(params, policy, tol)?;
            let mut diags = range
                .integers()
                .into_iter()
                .filter(|&n0| n0 <= form.threshold)
                .map(|n0| closed_form_diagnostic(n0, params, policy, tol))
                .collect::<Result<Vec<_>>>()?;
            let upper: Vec<PureDiagnostic> = above
                .integers()
                .into_par_iter()
                .map(|n0| is_pure_equilibrium(n0, params, policy, tol))
                .collect();
            let mut pure = below;
            pure.extend(upper.iter().filter(|d| d.is_equilibrium).map(|d| d.n0));
            diags.extend(upper);
            (pure, diags)
        }
        _ => {
            let diags: Vec<PureDiagnostic> = range
                .integers()
                .into_par_iter()
                .map(|n0| is_pure_equilibrium(n0, params, policy, tol))
                .collect();
            let pure = diags.iter().filter(|d| d.is_equilibrium).map(|d| d.n0).collect();
            (pure, diags)
        }
    };
    pure.sort_unstable();
    pure.dedup();
    diagnostics.sort_by_key(|d| d.n0);
    diagnostics.dedup_by_key(|d| d.n0);
    Ok(EquilibriumReport {
        pure,
        mixed_points: Vec::new(),
        mixed_intervals: Vec::new(),
        range: [range.low, range.high],
        threshold_range: above.map(|a| [a.low, a.high]),
        diagnostics,
        classification_scope: "recurrent-class",
        service_threshold: policy.threshold_form().map(|f| f.threshold),
    })
}

/// Pure equilibria plus every mixed threshold equilibrium. Mixed roots can
/// only occur where `(k+1)/M <= r_tilde <= (k+1)/mu_1`, which bounds the
/// search window.
pub fn enumerate_equilibria(
    params: &EconomicParams,
    policy: &ServiceRatePolicy,
    tol: &Tolerances,
) -> Result<EquilibriumReport> {
    let mut report = enumerate_pure_equilibria(params, policy, tol)?;
    let r = params.r_tilde();
    let x_min = ((r * policy.min_rate()).floor() - 1.0).max(0.0);
    let x_max = (r * policy.tail_rate()).floor() + 1.0;
    let mixed = find_mixed_equilibria(params, policy, x_min, x_max, tol)?;
    report.mixed_points = mixed.points;
    report.mixed_intervals = mixed.intervals.into_iter().map(|(a, b)| [a, b]).collect();
    Ok(report)
}
