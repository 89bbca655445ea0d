//! Multi-trial experiments on top of `srf_core::experiments`.
//!
//! Trial `t` of every experiment uses `derive_seed(master_seed, t)`, so the
//! same instances are reused across parameter values, grid cells and
//! solvers. Trials run on a rayon pool and are collected in trial order,
//! which keeps every output independent of the thread count.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use srf_core::experiments::{degrees_of_freedom, run_trial, ProblemKind, SolverKind, TrialResult, TrialSpec};
use srf_core::nnm::NnmConfig;
use srf_core::random::derive_seed;
use srf_core::solver::StdClock;
use srf_core::SolverConfig;

use crate::error::{LabError, LabResult};
use crate::io;

pub const VERSION: &str = concat!("srf-lab v", env!("CARGO_PKG_VERSION"));

pub fn trial_seed(master_seed: u64, trial: usize) -> u64 {
    derive_seed(master_seed, trial as u64)
}

fn pool(jobs: usize) -> LabResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| LabError::Invalid(format!("cannot start {jobs} worker threads: {e}")))
}

/// Runs every spec, returning results in input order.
pub fn run_trials(specs: &[TrialSpec], jobs: usize) -> LabResult<Vec<TrialResult>> {
    for spec in specs {
        spec.validate()?;
    }
    let results = pool(jobs)?.install(|| {
        specs
            .par_iter()
            .map(|spec| run_trial(spec, &StdClock::default()))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(results)
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Shared description of the instances an experiment draws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentBase {
    pub problem: ProblemKind,
    pub n: usize,
    pub srf: SolverConfig,
    pub nnm: NnmConfig,
    pub master_seed: u64,
    pub trials: usize,
}

impl ExperimentBase {
    fn spec(&self, rank: usize, m: usize, solver: SolverKind, trial: usize) -> TrialSpec {
        let mut spec = TrialSpec::new(self.problem, self.n, rank, m, solver, trial_seed(self.master_seed, trial));
        spec.srf = self.srf.clone();
        spec.nnm = self.nnm.clone();
        spec
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.trials).map(|t| trial_seed(self.master_seed, t)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    #[serde(rename = "L")]
    InnerIters,
    #[serde(rename = "c")]
    C,
    #[serde(rename = "epsilon")]
    Epsilon,
}

impl std::str::FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "L" | "l" | "inner-iters" => Ok(Self::InnerIters),
            "c" => Ok(Self::C),
            "epsilon" | "eps" => Ok(Self::Epsilon),
            _ => Err(format!("unknown sweep parameter {s:?}; expected L, c or epsilon")),
        }
    }
}

impl SweepParam {
    fn apply(self, config: &mut SolverConfig, value: f64) -> LabResult<()> {
        match self {
            Self::InnerIters => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(LabError::Invalid(format!("L must be a positive integer, got {value}")));
                }
                config.inner_iters = value as usize;
            }
            Self::C => config.c = value,
            Self::Epsilon => config.epsilon = value,
        }
        config.validate()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param_value: f64,
    pub mean_rsnr_db: f64,
    pub trials: usize,
}

/// Mean RSNR of the SRF solver at each value of one parameter.
pub fn sweep_parameter(
    base: &ExperimentBase,
    rank: usize,
    m: usize,
    param: SweepParam,
    values: &[f64],
    jobs: usize,
) -> LabResult<Vec<SweepRow>> {
    let mut specs = Vec::with_capacity(values.len() * base.trials);
    for &value in values {
        let mut config = base.srf.clone();
        param.apply(&mut config, value)?;
        for t in 0..base.trials {
            let mut spec = base.spec(rank, m, SolverKind::Srf, t);
            spec.srf = config.clone();
            specs.push(spec);
        }
    }
    let results = run_trials(&specs, jobs)?;
    Ok(values
        .iter()
        .zip(results.chunks(base.trials.max(1)))
        .map(|(&param_value, chunk)| SweepRow {
            param_value,
            mean_rsnr_db: mean(chunk.iter().map(|r| r.rsnr_db)),
            trials: chunk.len(),
        })
        .collect())
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("param_value,mean_rsnr_db,trials\n");
    for row in rows {
        writeln!(out, "{},{},{}", row.param_value, row.mean_rsnr_db, row.trials).unwrap();
    }
    out
}

/// Recovery rates over a `(rank, m)` grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub solver: SolverKind,
    pub rank_grid: Vec<usize>,
    pub m_grid: Vec<usize>,
    /// `rates[i][j]` for `rank_grid[i]` and `m_grid[j]`.
    pub rates: Vec<Vec<f64>>,
    /// Cells with `m < d_r` or `m > n²`, reported as rate 0 without running.
    pub skipped: Vec<(usize, usize)>,
}

impl PhaseGrid {
    pub fn rate(&self, rank: usize, m: usize) -> Option<f64> {
        let i = self.rank_grid.iter().position(|&r| r == rank)?;
        let j = self.m_grid.iter().position(|&v| v == m)?;
        Some(self.rates[i][j])
    }
}

pub fn phase_transition(
    base: &ExperimentBase,
    rank_grid: &[usize],
    m_grid: &[usize],
    solver: SolverKind,
    jobs: usize,
) -> LabResult<PhaseGrid> {
    let n = base.n;
    if rank_grid.is_empty() || m_grid.is_empty() {
        return Err(LabError::Invalid("rank and m grids must be non-empty".into()));
    }
    for &r in rank_grid {
        if r == 0 || r > n {
            return Err(LabError::Invalid(format!("rank {r} outside 1..={n}")));
        }
    }
    for &m in m_grid {
        if m == 0 || m > n * n {
            return Err(LabError::Invalid(format!("m {m} outside 1..={}", n * n)));
        }
    }
    let mut cells = Vec::new();
    let mut skipped = Vec::new();
    let mut specs = Vec::new();
    for &r in rank_grid {
        for &m in m_grid {
            if m < degrees_of_freedom(n, n, r)? {
                skipped.push((r, m));
                continue;
            }
            cells.push((r, m));
            specs.extend((0..base.trials).map(|t| base.spec(r, m, solver, t)));
        }
    }
    let results = run_trials(&specs, jobs)?;
    let mut rates = vec![vec![0.0; m_grid.len()]; rank_grid.len()];
    for (&(r, m), chunk) in cells.iter().zip(results.chunks(base.trials.max(1))) {
        let i = rank_grid.iter().position(|&v| v == r).unwrap();
        let j = m_grid.iter().position(|&v| v == m).unwrap();
        rates[i][j] = chunk.iter().filter(|t| t.recovered).count() as f64 / chunk.len() as f64;
    }
    Ok(PhaseGrid {
        solver,
        rank_grid: rank_grid.to_vec(),
        m_grid: m_grid.to_vec(),
        rates,
        skipped,
    })
}

/// First row: `rank\m` then the m grid; one row per rank.
pub fn phase_csv(grid: &PhaseGrid) -> String {
    let mut out = String::from("rank\\m");
    for m in &grid.m_grid {
        write!(out, ",{m}").unwrap();
    }
    out.push('\n');
    for (r, row) in grid.rank_grid.iter().zip(&grid.rates) {
        write!(out, "{r}").unwrap();
        for v in row {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Adjacent-m drops in recovery rate larger than `0.15`, as `(rank, m_before, m_after)`.
pub fn monotonicity_flags(grid: &PhaseGrid) -> Vec<(usize, usize, usize)> {
    let mut flags = Vec::new();
    for (r, row) in grid.rank_grid.iter().zip(&grid.rates) {
        for j in 1..row.len() {
            if row[j - 1] - row[j] > 0.15 {
                flags.push((*r, grid.m_grid[j - 1], grid.m_grid[j]));
            }
        }
    }
    flags
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub rank: usize,
    pub m_over_dr: f64,
    pub solver: SolverKind,
    pub mean_rsnr_db: f64,
    pub mean_wall_ms: f64,
    pub trials: usize,
}

/// `m = round(ratio · d_r)`, capped at `n²`.
pub fn measurements_for_ratio(n: usize, rank: usize, ratio: f64) -> LabResult<usize> {
    if ratio.is_nan() || ratio < 1.0 || !ratio.is_finite() {
        return Err(LabError::Invalid(format!("m/d_r must be at least 1, got {ratio}")));
    }
    let dr = degrees_of_freedom(n, n, rank)?;
    Ok(((ratio * dr as f64).round() as usize).min(n * n))
}

/// SRF against the baseline on matrix completion over `(rank, m/d_r)` cells.
pub fn mc_comparison(
    base: &ExperimentBase,
    ranks: &[usize],
    ratios: &[f64],
    solvers: &[SolverKind],
    jobs: usize,
) -> LabResult<Vec<ComparisonRow>> {
    let mut cells = Vec::new();
    let mut specs = Vec::new();
    for &r in ranks {
        if r == 0 || r > base.n {
            return Err(LabError::Invalid(format!("rank {r} outside 1..={}", base.n)));
        }
        for &ratio in ratios {
            let m = measurements_for_ratio(base.n, r, ratio)?;
            for &solver in solvers {
                cells.push((r, ratio, solver));
                specs.extend((0..base.trials).map(|t| base.spec(r, m, solver, t)));
            }
        }
    }
    let results = run_trials(&specs, jobs)?;
    Ok(cells
        .iter()
        .zip(results.chunks(base.trials.max(1)))
        .map(|(&(rank, m_over_dr, solver), chunk)| ComparisonRow {
            rank,
            m_over_dr,
            solver,
            mean_rsnr_db: mean(chunk.iter().map(|t| t.rsnr_db)),
            mean_wall_ms: mean(chunk.iter().map(|t| t.wall_ms)),
            trials: chunk.len(),
        })
        .collect())
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::from("rank,m_over_dr,solver,mean_rsnr_db,mean_wall_ms,trials\n");
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            row.rank,
            row.m_over_dr,
            row.solver.id(),
            row.mean_rsnr_db,
            row.mean_wall_ms,
            row.trials
        )
        .unwrap();
    }
    out
}

/// JSON sidecar written as `<output>.meta.json`.
#[derive(Clone, Debug, Serialize)]
pub struct Sidecar<'a, T: Serialize> {
    pub version: &'static str,
    pub command: &'a str,
    pub base: &'a ExperimentBase,
    pub seeds: Vec<u64>,
    pub details: T,
}

pub fn write_with_sidecar<T: Serialize>(
    out_file: &Path,
    contents: &str,
    command: &str,
    base: &ExperimentBase,
    details: T,
) -> LabResult<()> {
    io::write_bytes(out_file, contents.as_bytes())?;
    let sidecar = Sidecar {
        version: VERSION,
        command,
        base,
        seeds: base.seeds(),
        details,
    };
    let mut meta = out_file.as_os_str().to_owned();
    meta.push(".meta.json");
    io::write_json(Path::new(&meta), &sidecar)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(problem: ProblemKind, n: usize, trials: usize) -> ExperimentBase {
        ExperimentBase {
            problem,
            n,
            srf: SolverConfig::default(),
            nnm: NnmConfig::default(),
            master_seed: 3,
            trials,
        }
    }

    #[test]
    fn results_do_not_depend_on_job_count() {
        let b = base(ProblemKind::Mc, 8, 4);
        let specs: Vec<_> = (0..4).map(|t| b.spec(1, 30, SolverKind::Srf, t)).collect();
        let one = run_trials(&specs, 1).unwrap();
        let three = run_trials(&specs, 3).unwrap();
        let strip = |v: Vec<TrialResult>| v.into_iter().map(|r| (r.spec, r.rsnr_db, r.outer_iters)).collect::<Vec<_>>();
        assert_eq!(strip(one), strip(three));
    }

    #[test]
    fn cells_below_the_floor_are_zero() {
        let b = base(ProblemKind::Arm, 6, 2);
        let grid = phase_transition(&b, &[1, 3], &[8, 36], SolverKind::Srf, 1).unwrap();
        assert_eq!(grid.rate(3, 8), Some(0.0));
        assert!(grid.skipped.contains(&(3, 8)));
        assert_eq!(grid.rate(1, 36), Some(1.0));
        let csv = phase_csv(&grid);
        assert!(csv.starts_with("rank\\m,8,36\n1,"));
    }

    #[test]
    fn ratio_to_m() {
        assert_eq!(measurements_for_ratio(30, 3, 1.0).unwrap(), 171);
        assert_eq!(measurements_for_ratio(4, 4, 2.0).unwrap(), 16);
        assert!(measurements_for_ratio(30, 3, 0.5).is_err());
    }

    #[test]
    fn sweep_rejects_bad_values() {
        let b = base(ProblemKind::Arm, 6, 1);
        assert!(sweep_parameter(&b, 1, 20, SweepParam::C, &[1.5], 1).is_err());
        assert!(sweep_parameter(&b, 1, 20, SweepParam::InnerIters, &[2.5], 1).is_err());
    }

    #[test]
    fn monotonicity_flags_large_drops() {
        let grid = PhaseGrid {
            solver: SolverKind::Srf,
            rank_grid: vec![1],
            m_grid: vec![10, 20, 30],
            rates: vec![vec![0.5, 0.2, 0.9]],
            skipped: vec![],
        };
        assert_eq!(monotonicity_flags(&grid), vec![(1, 10, 20)]);
    }
}
