//! The `srf` command line.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand};
use serde::Serialize;
use srf_core::experiments::{gen_mask, ProblemKind, SolverKind};
use srf_core::nnm::{run_nnm, NnmConfig};
use srf_core::solver::{rsnr, StdClock, SrfSolver};
use srf_core::ssp::{self, ChainDiagnostics};
use srf_core::surrogate::{validate_family, FamilyReport};
use srf_core::{AffineOperator, AffineProjector, DenseMatrix, SolveReport, SolverConfig, SurrogateFamily};

use crate::error::{LabError, LabResult};
use crate::harness::{self, ExperimentBase, SweepParam};
use crate::io;

#[derive(Debug, Parser)]
#[command(name = "srf", version, about = "Low-rank matrix recovery with the smoothed rank function")]
pub struct Cli {
    /// Suppress the stdout summary; files are written regardless.
    #[arg(long, global = true)]
    pub quiet: bool,
    /// Worker threads for experiment subcommands.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    /// Master seed for generated masks and experiment trials.
    #[arg(long, global = true, env = "SRF_SEED", default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Affine rank minimization from an operator file and measurements.
    Solve {
        #[arg(long)]
        operator: PathBuf,
        #[arg(long)]
        measurements: PathBuf,
        /// Ground truth; adds RSNR and error-bound diagnostics to the report.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Matrix completion of a matrix file from a mask.
    #[command(group(ArgGroup::new("mask").required(true).args(["mask_file", "sample_count"])))]
    Complete {
        #[arg(long)]
        matrix: PathBuf,
        /// Ω as JSON: `[[i,j],...]`, `{"omega": [...]}` or an entry_sampling operator.
        #[arg(long)]
        mask_file: Option<PathBuf>,
        /// Sample this many entries uniformly at random (with `--seed`).
        #[arg(long)]
        sample_count: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Mean RSNR over one SRF parameter.
    Sweep {
        /// L, c or epsilon.
        #[arg(long)]
        param: SweepParam,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, value_parser = parse_problem, default_value = "arm")]
        problem: ProblemKind,
        #[arg(long, default_value_t = 30)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        rank: usize,
        #[arg(long, default_value_t = 500)]
        m: usize,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Recovery-rate grid over rank and number of measurements.
    PhaseTransition {
        #[arg(long, value_parser = parse_problem, default_value = "arm")]
        problem: ProblemKind,
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        ranks: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        ms: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// SRF against the nuclear-norm baseline on matrix completion.
    McCompare {
        #[arg(long, default_value_t = 30)]
        n: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        ranks: Vec<usize>,
        /// Values of m/d_r.
        #[arg(long, value_delimiter = ',', required = true)]
        ratios: Vec<f64>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Numerical check of the surrogate-family requirements.
    ValidateFamily {
        /// Check one family; all built-ins when omitted.
        #[arg(long, value_parser = parse_family)]
        family: Option<SurrogateFamily>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spherical-section estimate for an operator, plus the error-bound
    /// chain for a solution when `--truth` and `--estimate` are given.
    SspDiagnose {
        #[arg(long)]
        operator: PathBuf,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, default_value_t = 50)]
        descent_steps: usize,
        #[arg(long, requires = "estimate")]
        truth: Option<PathBuf>,
        #[arg(long, requires = "truth")]
        estimate: Option<PathBuf>,
        /// δ for the chain check.
        #[arg(long, default_value_t = 1e-3)]
        delta: f64,
        #[arg(long, value_parser = parse_family, default_value = "gaussian")]
        family: SurrogateFamily,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Solver flags; anything left unset keeps the library default.
#[derive(Debug, Clone, Default, Args)]
pub struct SolverArgs {
    #[arg(long, value_parser = parse_solver, default_value = "srf")]
    pub solver: SolverKind,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    /// Inner gradient-projection steps per δ (L).
    #[arg(long)]
    pub inner_iters: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub delta1_factor: Option<f64>,
    #[arg(long, value_parser = parse_family)]
    pub family: Option<SurrogateFamily>,
    #[arg(long)]
    pub max_outer: Option<usize>,
    /// Baseline threshold scale, relative to σ_max of the starting point.
    #[arg(long)]
    pub shrink_tau: Option<f64>,
    #[arg(long)]
    pub nnm_step: Option<f64>,
    #[arg(long)]
    pub nnm_max_iters: Option<usize>,
    #[arg(long)]
    pub nnm_tol: Option<f64>,
}

fn parse_family(s: &str) -> Result<SurrogateFamily, String> {
    s.parse::<SurrogateFamily>().map_err(|e| e.to_string())
}

fn parse_solver(s: &str) -> Result<SolverKind, String> {
    match s {
        "srf" => Ok(SolverKind::Srf),
        "nnm" => Ok(SolverKind::Nnm),
        _ => Err(format!("unknown solver {s:?}; expected srf or nnm")),
    }
}

fn parse_problem(s: &str) -> Result<ProblemKind, String> {
    match s {
        "arm" => Ok(ProblemKind::Arm),
        "mc" => Ok(ProblemKind::Mc),
        _ => Err(format!("unknown problem {s:?}; expected arm or mc")),
    }
}

impl SolverArgs {
    /// The SRF configuration, validated.
    pub fn srf_config(&self) -> LabResult<SolverConfig> {
        let mut c = SolverConfig::default();
        if let Some(v) = self.mu {
            c.mu = v;
        }
        if let Some(v) = self.c {
            c.c = v;
        }
        if let Some(v) = self.inner_iters {
            c.inner_iters = v;
        }
        if let Some(v) = self.epsilon {
            c.epsilon = v;
        }
        if let Some(v) = self.delta1_factor {
            c.delta1_factor = v;
        }
        if let Some(v) = self.family {
            c.family = v;
        }
        if let Some(v) = self.max_outer {
            c.max_outer_iters = v;
        }
        c.validate().map_err(flag_error)?;
        Ok(c)
    }

    pub fn nnm_config(&self) -> LabResult<NnmConfig> {
        let mut c = NnmConfig::default();
        if let Some(v) = self.shrink_tau {
            c.shrink_tau = v;
        }
        if let Some(v) = self.nnm_step {
            c.step = v;
        }
        if let Some(v) = self.nnm_max_iters {
            c.max_iters = v;
        }
        if let Some(v) = self.nnm_tol {
            c.tol = v;
        }
        c.validate().map_err(flag_error)?;
        Ok(c)
    }
}

fn flag_error(e: srf_core::Error) -> LabError {
    LabError::Invalid(format!("invalid solver flag: {e}"))
}

fn prepare_out(dir: &Path) -> LabResult<()> {
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))
}

struct Output {
    quiet: bool,
}

impl Output {
    fn line(&self, text: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", text.as_ref());
        }
    }
}

fn solve_with(
    projector: &AffineProjector,
    solver: SolverKind,
    srf: &SolverConfig,
    nnm: &NnmConfig,
) -> LabResult<SolveReport> {
    let clock = StdClock::default();
    Ok(match solver {
        SolverKind::Srf => SrfSolver::new(projector, srf.clone())?.run_with(&clock, &mut |_, _| {})?,
        SolverKind::Nnm => run_nnm(projector, nnm, &clock)?,
    })
}

fn write_solution(
    out: &Path,
    report: &SolveReport,
    solver: SolverKind,
    truth: Option<&DenseMatrix>,
    family: SurrogateFamily,
) -> LabResult<io::ReportFile> {
    let solution_path = out.join("solution.csv");
    io::write_matrix(&solution_path, &report.solution)?;
    let snr = truth.map(|t| rsnr(t, &report.solution)).transpose()?;
    let mut file = io::ReportFile::new(report, solver.id(), Path::new("solution.csv"), snr);
    if let (Some(t), SolverKind::Srf, Some(last)) = (truth, solver, report.outer_trace.last()) {
        file.ssp_diagnostics = Some(ssp::check_lemma3_chain(t, &report.solution, last.delta, family)?);
    }
    io::write_json(&out.join("report.json"), &file)?;
    Ok(file)
}

fn summarize(o: &Output, file: &io::ReportFile, out: &Path) {
    let snr = file.rsnr_db.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2} dB"));
    o.line(format!(
        "solver={} converged={} iterations={} rsnr={snr}",
        file.solver, file.converged, file.outer_iters
    ));
    if file.ill_conditioned {
        o.line("warning: measurement operator is badly conditioned");
    }
    o.line(format!("wrote {}", out.join("report.json").display()));
}

#[derive(Serialize)]
struct FamilyEntry {
    family: SurrogateFamily,
    report: FamilyReport,
    passes: bool,
}

#[derive(Serialize)]
struct SspReport {
    version: &'static str,
    shape: [usize; 2],
    m: usize,
    seed: u64,
    samples_used: usize,
    descent_steps: usize,
    /// Upper bound on the spherical-section constant.
    delta_upper: f64,
    witness_file: PathBuf,
    /// Rank of the truth and whether `2 r0 ≥ delta_upper` rules out the
    /// uniqueness condition.
    #[serde(skip_serializing_if = "Option::is_none")]
    r0: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    uniqueness_ruled_out: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    chain: Option<ChainDiagnostics>,
}

#[derive(Serialize)]
struct SspFile {
    ssp_diagnostics: SspReport,
}

fn execute(cli: Cli) -> LabResult<()> {
    let o = Output { quiet: cli.quiet };
    if cli.jobs == 0 {
        return Err(LabError::Invalid("--jobs must be at least 1".into()));
    }
    match cli.command {
        Command::Solve {
            operator,
            measurements,
            truth,
            out,
            solver,
        } => {
            let srf = solver.srf_config()?;
            let nnm = solver.nnm_config()?;
            let op = io::read_operator(&operator)?;
            let b = io::read_measurements(&measurements)?;
            let truth = truth.as_deref().map(io::read_matrix).transpose()?;
            let projector = AffineProjector::new(op, b)?;
            prepare_out(&out)?;
            let report = solve_with(&projector, solver.solver, &srf, &nnm)?;
            let file = write_solution(&out, &report, solver.solver, truth.as_ref(), srf.family)?;
            summarize(&o, &file, &out);
        }
        Command::Complete {
            matrix,
            mask_file,
            sample_count,
            out,
            solver,
        } => {
            let srf = solver.srf_config()?;
            let nnm = solver.nnm_config()?;
            let x = io::read_matrix(&matrix)?;
            let (n1, n2) = x.shape();
            let op = match (mask_file, sample_count) {
                (Some(path), _) => {
                    let omega = io::read_mask(&path)?;
                    AffineOperator::entry_sampling(omega, n1, n2).map_err(|e| LabError::format(&path, e))?
                }
                (None, Some(m)) => gen_mask(n1, n2, m, cli.seed)
                    .map_err(|e| LabError::Invalid(format!("--sample-count: {e}")))?,
                (None, None) => unreachable!("clap requires one mask source"),
            };
            let b = op.apply(&x)?;
            prepare_out(&out)?;
            io::write_operator(&out.join("mask.json"), &op, "mask_data.csv")?;
            let projector = AffineProjector::new(op, b)?;
            let report = solve_with(&projector, solver.solver, &srf, &nnm)?;
            let file = write_solution(&out, &report, solver.solver, Some(&x), srf.family)?;
            summarize(&o, &file, &out);
        }
        Command::Sweep {
            param,
            values,
            problem,
            n,
            rank,
            m,
            trials,
            out,
            solver,
        } => {
            let base = ExperimentBase {
                problem,
                n,
                srf: solver.srf_config()?,
                nnm: solver.nnm_config()?,
                master_seed: cli.seed,
                trials,
            };
            prepare_out(&out)?;
            let rows = harness::sweep_parameter(&base, rank, m, param, &values, cli.jobs)?;
            let path = out.join("sweep.csv");
            #[derive(Serialize)]
            struct Details {
                param: SweepParam,
                rank: usize,
                m: usize,
            }
            harness::write_with_sidecar(&path, &harness::sweep_csv(&rows), "sweep", &base, Details { param, rank, m })?;
            for row in &rows {
                o.line(format!("{:>10} {:>9.2} dB", row.param_value, row.mean_rsnr_db));
            }
            o.line(format!("wrote {}", path.display()));
        }
        Command::PhaseTransition {
            problem,
            n,
            ranks,
            ms,
            trials,
            out,
            solver,
        } => {
            let base = ExperimentBase {
                problem,
                n,
                srf: solver.srf_config()?,
                nnm: solver.nnm_config()?,
                master_seed: cli.seed,
                trials,
            };
            prepare_out(&out)?;
            let grid = harness::phase_transition(&base, &ranks, &ms, solver.solver, cli.jobs)?;
            let path = out.join("phase_transition.csv");
            #[derive(Serialize)]
            struct Details {
                solver: SolverKind,
                skipped: Vec<(usize, usize)>,
                monotonicity_flags: Vec<(usize, usize, usize)>,
            }
            let details = Details {
                solver: solver.solver,
                skipped: grid.skipped.clone(),
                monotonicity_flags: harness::monotonicity_flags(&grid),
            };
            let csv = harness::phase_csv(&grid);
            harness::write_with_sidecar(&path, &csv, "phase-transition", &base, details)?;
            o.line(csv.trim_end());
            o.line(format!("wrote {}", path.display()));
        }
        Command::McCompare {
            n,
            ranks,
            ratios,
            trials,
            out,
            solver,
        } => {
            let base = ExperimentBase {
                problem: ProblemKind::Mc,
                n,
                srf: solver.srf_config()?,
                nnm: solver.nnm_config()?,
                master_seed: cli.seed,
                trials,
            };
            prepare_out(&out)?;
            let solvers = [SolverKind::Srf, SolverKind::Nnm];
            let rows = harness::mc_comparison(&base, &ranks, &ratios, &solvers, cli.jobs)?;
            let path = out.join("mc_comparison.csv");
            harness::write_with_sidecar(&path, &harness::comparison_csv(&rows), "mc-compare", &base, ())?;
            for row in &rows {
                o.line(format!(
                    "r={} m/d_r={} {} {:.2} dB",
                    row.rank,
                    row.m_over_dr,
                    row.solver.id(),
                    row.mean_rsnr_db
                ));
            }
            o.line(format!("wrote {}", path.display()));
        }
        Command::ValidateFamily { family, out } => {
            let families: Vec<SurrogateFamily> = family.map_or_else(|| SurrogateFamily::ALL.to_vec(), |f| vec![f]);
            let entries: Vec<FamilyEntry> = families
                .into_iter()
                .map(|family| {
                    let report = validate_family(&family);
                    FamilyEntry {
                        family,
                        passes: report.all_pass(),
                        report,
                    }
                })
                .collect();
            for e in &entries {
                o.line(format!("{}: {}", e.family, if e.passes { "pass" } else { "FAIL" }));
            }
            if let Some(out) = out {
                prepare_out(&out)?;
                io::write_json(&out.join("family_report.json"), &entries)?;
            }
            if entries.iter().any(|e| !e.passes) {
                return Err(LabError::Invalid("surrogate family validation failed".into()));
            }
        }
        Command::SspDiagnose {
            operator,
            samples,
            descent_steps,
            truth,
            estimate,
            delta,
            family,
            out,
        } => {
            let op = io::read_operator(&operator)?;
            let truth = truth.as_deref().map(io::read_matrix).transpose()?;
            let estimate = estimate.as_deref().map(io::read_matrix).transpose()?;
            let (n1, n2) = op.shape();
            let m = op.m();
            let projector = AffineProjector::new(op, srf_core::MeasurementVector::zeros(m))?;
            prepare_out(&out)?;
            let est = ssp::estimate_ssp(&projector, samples, descent_steps, cli.seed)?;
            io::write_matrix(&out.join("ssp_witness.csv"), &est.witness)?;
            let r0 = truth.as_ref().map(srf_core::svd::numeric_rank).transpose()?;
            let chain = match (&truth, &estimate) {
                (Some(t), Some(e)) => Some(ssp::check_lemma3_chain(t, e, delta, family)?),
                _ => None,
            };
            let report = SspReport {
                version: harness::VERSION,
                shape: [n1, n2],
                m,
                seed: cli.seed,
                samples_used: est.samples_used,
                descent_steps,
                delta_upper: est.delta_upper,
                witness_file: PathBuf::from("ssp_witness.csv"),
                r0,
                uniqueness_ruled_out: r0.map(|r| 2.0 * r as f64 >= est.delta_upper),
                chain,
            };
            o.line(format!("spherical-section upper bound: {:.6}", report.delta_upper));
            if let Some(chain) = &report.chain {
                o.line(format!("error chain: {}", if chain.all_pass() { "pass" } else { "FAIL" }));
            }
            io::write_json(&out.join("ssp_diagnostics.json"), &SspFile { ssp_diagnostics: report })?;
        }
    }
    Ok(())
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
