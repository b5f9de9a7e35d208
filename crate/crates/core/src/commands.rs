//! Commands behind the `queue-eq` binary. Each command returns its output
//! as text so it can be driven from tests and examples without a process.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::csv::{float, CsvBuf};
use crate::delay::DelayTable;
use crate::equilibrium::{
    enumerate_equilibria, enumerate_pure_equilibria, is_pure_equilibrium, marginal_delay,
    Tolerances,
};
use crate::error::{Error, Result};
use crate::model::{strategy_from_x, Instance, JoinStrategy};
use crate::sim::{run_coupling, simulate_sojourn, SimConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;

/// `a:b[:step]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRange {
    pub start: f64,
    pub end: f64,
    pub step: Option<f64>,
}

impl FromStr for GridRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Instance(format!("range must look like a:b[:step], got {s:?}"));
        let parts: Vec<&str> = s.split(':').collect();
        if !(2..=3).contains(&parts.len()) {
            return Err(bad());
        }
        let num = |p: &str| p.trim().parse::<f64>().map_err(|_| bad());
        let start = num(parts[0])?;
        let end = num(parts[1])?;
        let step = parts.get(2).map(|p| num(p)).transpose()?;
        if !(start.is_finite() && end.is_finite()) || start > end {
            return Err(Error::InvalidRange { lo: start, hi: end });
        }
        if let Some(step) = step {
            if !(step.is_finite() && step > 0.0) {
                return Err(Error::Instance(format!("grid step must be positive, got {step}")));
            }
        }
        Ok(Self { start, end, step })
    }
}

impl GridRange {
    /// `start, start + step, ...` up to `end`; values within `1e-9` of an
    /// integer are snapped to it.
    pub fn points(&self, default_step: f64) -> Vec<f64> {
        let step = self.step.unwrap_or(default_step);
        let mut out = Vec::new();
        let mut i = 0u64;
        loop {
            let mut x = self.start + step * i as f64;
            if x > self.end + 1e-9 {
                break;
            }
            if (x - x.round()).abs() < 1e-9 {
                x = x.round();
            }
            out.push(x);
            i += 1;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    PureN0,
    MixedX,
}

impl FromStr for SweepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pure_n0" | "pure-n0" => Ok(SweepKind::PureN0),
            "mixed_x" | "mixed-x" => Ok(SweepKind::MixedX),
            _ => Err(Error::Instance(format!("unknown sweep kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Delay { x: f64 },
    Equilibria { table1: Option<Vec<f64>> },
    Sweep { kind: SweepKind, range: GridRange },
    Simulate { x: f64, n: usize },
    VerifyCoupling { n: usize, n0: usize, x: Option<f64> },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Delay { .. } => "delay",
            Command::Equilibria { .. } => "equilibria",
            Command::Sweep { .. } => "sweep",
            Command::Simulate { .. } => "simulate",
            Command::VerifyCoupling { .. } => "verify-coupling",
        }
    }
}

/// Everything one invocation needs, validated before any work starts.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: Command,
    pub instance_path: PathBuf,
    pub out_dir: Option<PathBuf>,
    pub seed: u64,
    pub reps: usize,
    pub tol: Tolerances,
}

impl RunManifest {
    pub fn validate(&self) -> Result<()> {
        if !self.instance_path.is_file() {
            return Err(Error::Instance(format!(
                "instance file {} not found",
                self.instance_path.display()
            )));
        }
        if let Some(dir) = &self.out_dir {
            if dir.exists() && !dir.is_dir() {
                return Err(Error::Instance(format!("{} is not a directory", dir.display())));
            }
        }
        if self.reps == 0 {
            return Err(Error::NoReplications);
        }
        if !(self.tol.eq.is_finite() && self.tol.eq >= 0.0) {
            return Err(Error::Instance(format!("invalid --tol-eq {}", self.tol.eq)));
        }
        Ok(())
    }
}

/// Text for stdout plus named files for `--out`, and the exit code.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommandOutput {
    pub stdout: String,
    pub files: Vec<(String, String)>,
    pub exit_code: i32,
}

pub fn load_instance(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Instance(format!("{}: {e}", path.display())))?;
    Instance::from_json(&text)
}

pub struct DelayOutput {
    pub table_csv: String,
    pub arrival_csv: String,
}

pub fn cmd_delay(instance: &Instance, x: f64) -> Result<DelayOutput> {
    let strategy = strategy_from_x(x)?;
    let table = DelayTable::solve(&instance.policy, &strategy, &instance.params);
    Ok(DelayOutput {
        table_csv: table.to_csv(),
        arrival_csv: table.arrival_csv(),
    })
}

pub struct EquilibriaOutput {
    pub json: String,
    pub diagnostics_csv: String,
}

pub fn cmd_equilibria(instance: &Instance, tol: &Tolerances) -> Result<EquilibriaOutput> {
    let report = enumerate_equilibria(&instance.params, &instance.policy, tol)?;
    Ok(EquilibriaOutput {
        json: report.to_json(),
        diagnostics_csv: report.diagnostics_csv(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table1Row {
    pub reward: f64,
    pub below: Vec<usize>,
    pub above: Vec<usize>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

/// Pure equilibria split at `T` for each reward, with the `[L, U]` bounds.
pub fn cmd_table1(instance: &Instance, rewards: &[f64], tol: &Tolerances) -> Result<Vec<Table1Row>> {
    rewards
        .iter()
        .map(|&reward| {
            let params = instance.params.with_reward(reward)?;
            let report = enumerate_pure_equilibria(&params, &instance.policy, tol)?;
            Ok(Table1Row {
                reward,
                below: report.pure_below_threshold(),
                above: report.pure_above_threshold(),
                lower: report.threshold_range.map(|r| r[0]),
                upper: report.threshold_range.map(|r| r[1]),
            })
        })
        .collect()
}

fn join_set(set: &[usize]) -> String {
    if set.is_empty() {
        "-".to_string()
    } else {
        set.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" ")
    }
}

/// Header `R,below_T,above_T,L,U`; sets are space separated, `-` if empty.
pub fn table1_csv(rows: &[Table1Row]) -> String {
    let mut out = CsvBuf::with_header(&["R", "below_T", "above_T", "L", "U"]);
    let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| v.to_string());
    for row in rows {
        out.row([
            row.reward.to_string(),
            join_set(&row.below),
            join_set(&row.above),
            opt(row.lower),
            opt(row.upper),
        ]);
    }
    out.into_string()
}

/// `pure_n0`: `n0,W,is_equilibrium,hit` over integer thresholds.
/// `mixed_x`: `x,w,hit` on the grid. `hit` marks `|w - r_tilde| <= tol_eq`.
pub fn cmd_sweep(
    instance: &Instance,
    kind: SweepKind,
    range: &GridRange,
    tol: &Tolerances,
) -> Result<String> {
    let params = &instance.params;
    let policy = &instance.policy;
    let r = params.r_tilde();
    match kind {
        SweepKind::PureN0 => {
            let mut out = CsvBuf::with_header(&["n0", "W", "is_equilibrium", "hit"]);
            for v in range.points(1.0) {
                if v < 0.0 || v.fract() != 0.0 {
                    return Err(Error::Instance(format!("pure sweep needs integer n0, got {v}")));
                }
                let n0 = v as usize;
                let diag = is_pure_equilibrium(n0, params, policy, tol);
                let w = DelayTable::solve(policy, &JoinStrategy::pure(n0), params).marginal();
                out.row([
                    n0.to_string(),
                    float(w),
                    diag.is_equilibrium.to_string(),
                    ((w - r).abs() <= tol.eq).to_string(),
                ]);
            }
            Ok(out.into_string())
        }
        SweepKind::MixedX => {
            let mut out = CsvBuf::with_header(&["x", "w", "hit"]);
            for x in range.points(0.05) {
                let w = marginal_delay(x, params, policy)?;
                out.row([float(x), float(w), ((w - r).abs() <= tol.eq).to_string()]);
            }
            Ok(out.into_string())
        }
    }
}

pub fn cmd_simulate(
    instance: &Instance,
    x: f64,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<CommandOutput> {
    let strategy = strategy_from_x(x)?;
    let table = DelayTable::solve(&instance.policy, &strategy, &instance.params);
    let analytic = table.arrival_delay(n)?;
    let config = SimConfig::new(seed, reps, instance.params, instance.policy.clone(), strategy)?;
    let est = simulate_sojourn(&config, n)?;
    let within = est.mean - est.half_width_95 <= analytic && analytic <= est.mean + est.half_width_95;

    let mut text = String::new();
    let _ = writeln!(text, "state n = {n}, replications = {reps}, seed = {seed}");
    let _ = writeln!(text, "analytic W(n) = {analytic:.10}");
    let _ = writeln!(
        text,
        "simulated mean = {:.10} +/- {:.10} (95%)",
        est.mean, est.half_width_95
    );
    if est.is_degenerate() {
        let _ = writeln!(text, "warning: degenerate confidence interval (fewer than 2 replications)");
    } else {
        let _ = writeln!(text, "analytic value inside CI: {within}");
    }
    let mut csv = CsvBuf::with_header(&["n", "analytic", "mean", "half_width_95", "samples", "within_ci"]);
    csv.row([
        n.to_string(),
        float(analytic),
        float(est.mean),
        float(est.half_width_95),
        est.samples.to_string(),
        within.to_string(),
    ]);
    Ok(CommandOutput {
        stdout: text,
        files: vec![("simulate.csv".into(), csv.into_string())],
        exit_code: EXIT_OK,
    })
}

pub fn cmd_verify_coupling(
    instance: &Instance,
    n: usize,
    n0: usize,
    x: Option<f64>,
    reps: usize,
    seed: u64,
) -> Result<CommandOutput> {
    let strategy = match x {
        Some(x) => strategy_from_x(x)?,
        None => JoinStrategy::pure(n0),
    };
    let config = SimConfig::new(seed, reps, instance.params, instance.policy.clone(), strategy)?;
    let summary = run_coupling(&config, n, n0)?;
    let table = DelayTable::solve(&config.policy, &config.strategy, &config.params);
    let analytic_gap = table.get(n, n + 1).unwrap_or(0.0) - table.get(n - 1, n).unwrap_or(0.0);

    let mut text = String::new();
    let _ = writeln!(text, "coupling n = {n}, n0 = {n0}, replications = {reps}, seed = {seed}");
    let _ = writeln!(text, "ordering violations: {}", summary.violations);
    if summary.tie_violations > 0 {
        let _ = writeln!(text, "violations with event ties: {}", summary.tie_violations);
    }
    let _ = writeln!(text, "max violation: {:e}", summary.max_violation);
    let _ = writeln!(
        text,
        "mean T_B(n) - T_A(n) = {:.10} +/- {:.10} (analytic {:.10})",
        summary.last_gap.mean, summary.last_gap.half_width_95, analytic_gap
    );
    let mut csv = CsvBuf::with_header(&[
        "n",
        "n0",
        "replications",
        "violations",
        "tie_violations",
        "max_violation",
        "mean_gap",
        "half_width_95",
        "analytic_gap",
    ]);
    csv.row([
        n.to_string(),
        n0.to_string(),
        reps.to_string(),
        summary.violations.to_string(),
        summary.tie_violations.to_string(),
        float(summary.max_violation),
        float(summary.last_gap.mean),
        float(summary.last_gap.half_width_95),
        float(analytic_gap),
    ]);
    let bad = summary.violations + summary.tie_violations > 0;
    Ok(CommandOutput {
        stdout: text,
        files: vec![("coupling.csv".into(), csv.into_string())],
        exit_code: if bad { EXIT_VIOLATION } else { EXIT_OK },
    })
}

/// Runs a validated manifest.
pub fn execute(manifest: &RunManifest) -> Result<CommandOutput> {
    manifest.validate()?;
    let instance = load_instance(&manifest.instance_path)?;
    let tol = &manifest.tol;
    match &manifest.command {
        Command::Delay { x } => {
            let out = cmd_delay(&instance, *x)?;
            Ok(CommandOutput {
                stdout: out.table_csv.clone(),
                files: vec![
                    ("delay_table.csv".into(), out.table_csv),
                    ("arrival_delay.csv".into(), out.arrival_csv),
                ],
                exit_code: EXIT_OK,
            })
        }
        Command::Equilibria { table1: Some(rewards) } => {
            let csv = table1_csv(&cmd_table1(&instance, rewards, tol)?);
            Ok(CommandOutput {
                stdout: csv.clone(),
                files: vec![("table1.csv".into(), csv)],
                exit_code: EXIT_OK,
            })
        }
        Command::Equilibria { table1: None } => {
            let out = cmd_equilibria(&instance, tol)?;
            let mut stdout = out.json.clone();
            stdout.push('\n');
            Ok(CommandOutput {
                stdout,
                files: vec![
                    ("equilibria.json".into(), out.json),
                    ("diagnostics.csv".into(), out.diagnostics_csv),
                ],
                exit_code: EXIT_OK,
            })
        }
        Command::Sweep { kind, range } => {
            let csv = cmd_sweep(&instance, *kind, range, tol)?;
            let name = match kind {
                SweepKind::PureN0 => "sweep_pure_n0.csv",
                SweepKind::MixedX => "sweep_mixed_x.csv",
            };
            Ok(CommandOutput {
                stdout: csv.clone(),
                files: vec![(name.into(), csv)],
                exit_code: EXIT_OK,
            })
        }
        Command::Simulate { x, n } => cmd_simulate(&instance, *x, *n, manifest.reps, manifest.seed),
        Command::VerifyCoupling { n, n0, x } => {
            cmd_verify_coupling(&instance, *n, *n0, *x, manifest.reps, manifest.seed)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case_study() -> Instance {
        Instance::from_json(
            r#"{"lambda": 3, "reward": 8.5, "wait_cost": 1,
                "policy": {"T": 23, "mu_low": 2, "mu_high": 5}}"#,
        )
        .unwrap()
    }

    #[test]
    fn range_parsing() {
        let r: GridRange = "24:39:0.05".parse().unwrap();
        assert_eq!(r.step, Some(0.05));
        let pts = r.points(1.0);
        assert_eq!(pts[0], 24.0);
        assert_eq!(pts[20], 25.0);
        assert_eq!(*pts.last().unwrap(), 39.0);
        assert_eq!("1:40".parse::<GridRange>().unwrap().points(1.0).len(), 40);
        assert!("1".parse::<GridRange>().is_err());
        assert!("5:1".parse::<GridRange>().is_err());
        assert!("1:5:0".parse::<GridRange>().is_err());
        assert!("1:5:-1".parse::<GridRange>().is_err());
        assert!("a:5".parse::<GridRange>().is_err());
    }

    #[test]
    fn step_larger_than_range() {
        let r: GridRange = "3:4:10".parse().unwrap();
        assert_eq!(r.points(1.0), vec![3.0]);
        let csv = cmd_sweep(&case_study(), SweepKind::MixedX, &r, &Tolerances::default()).unwrap();
        assert_eq!(csv.lines().count(), 2);
    }

    #[test]
    fn delay_command_sizes() {
        let inst = case_study();
        let out = cmd_delay(&inst, 1.0).unwrap();
        assert_eq!(out.table_csv.lines().count(), 2);
        let out = cmd_delay(&inst, 0.0).unwrap();
        assert_eq!(out.table_csv, "n,m,W\n");
        let out = cmd_delay(&inst, 26.0).unwrap();
        assert_eq!(out.table_csv.lines().count(), 1 + 26 * 27 / 2);
        assert_eq!(out.arrival_csv.lines().count(), 1 + 27);
        assert!(out.table_csv.lines().last().unwrap().starts_with("25,26,"));
        assert!(cmd_delay(&inst, -1.0).is_err());
    }

    #[test]
    fn table1_layout() {
        let rows = cmd_table1(&case_study(), &[8.0, 13.0], &Tolerances::default()).unwrap();
        assert_eq!(
            table1_csv(&rows),
            "R,below_T,above_T,L,U\n8,15 16,-,24,40\n13,-,64,25.6,65\n"
        );
    }

    #[test]
    fn zero_reward_balks() {
        let inst = Instance::from_json(
            r#"{"lambda": 1, "reward": 0, "wait_cost": 1,
                "policy": {"prefix": [1, 2], "tail": 3}}"#,
        )
        .unwrap();
        let out = cmd_equilibria(&inst, &Tolerances::default()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out.json).unwrap();
        assert_eq!(v["pure"], serde_json::json!([0]));
    }

    #[test]
    fn simulate_single_rep_flags_degenerate() {
        let out = cmd_simulate(&case_study(), 10.0, 3, 1, 5).unwrap();
        assert!(out.stdout.contains("degenerate"));
    }
}
