//! Benchmark harness: assemble a test problem, build the preconditioner,
//! run PCG and report timings and iteration counts.

use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use clap::ValueEnum;
use ntd_core::{
    assemble_with, build_block_ilu0, make_rhs, pcg, BandedMatrix, CoefficientField, CombinedPrecond,
    GridSpec, Identity, Ilu0Solver, NtdSolver, PcgOptions, Preconditioner, RhsMode, SolveStats,
    SolverError, WorkerTeam,
};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrecondKind {
    #[value(name = "ntd+ilu0")]
    #[serde(rename = "ntd+ilu0")]
    NtdIlu0,
    Ntd,
    Ilu0,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rhs {
    Ones,
    Manufactured,
}

impl From<Rhs> for RhsMode {
    fn from(r: Rhs) -> Self {
        match r {
            Rhs::Ones => RhsMode::Ones,
            Rhs::Manufactured => RhsMode::ManufacturedOnes,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
    Table,
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub matrix_type: u8,
    pub n: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub workers: usize,
    pub rhs: Rhs,
    pub precond: PrecondKind,
    pub format: OutputFormat,
    #[serde(skip)]
    pub dump_matrix: Option<PathBuf>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            matrix_type: 1,
            n: 50,
            tol: 1e-7,
            max_iters: 200,
            workers: 1,
            rhs: Rhs::Ones,
            precond: PrecondKind::NtdIlu0,
            format: OutputFormat::Table,
            dump_matrix: None,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<CoefficientField, BenchError> {
        let field = CoefficientField::from_type(self.matrix_type)
            .ok_or_else(|| BenchError::Config(format!("type must be 1, 2 or 3, got {}", self.matrix_type)))?;
        if self.n == 0 {
            return Err(BenchError::Config("n must be at least 1".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(BenchError::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if ![1, 2, 4].contains(&self.workers) {
            return Err(BenchError::Config(format!("workers must be 1, 2 or 4, got {}", self.workers)));
        }
        if self.n == 1 && matches!(self.precond, PrecondKind::NtdIlu0 | PrecondKind::Ilu0) {
            return Err(BenchError::Config("ILU0 needs at least two rows".into()));
        }
        Ok(field)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub rows: usize,
    pub assembly_seconds: f64,
    pub setup_seconds: f64,
    pub solve_seconds: f64,
    pub overall_seconds: f64,
    pub iterations: usize,
    pub converged: bool,
    pub relres: f64,
    pub relres_history: Vec<f64>,
}

/// Report plus the computed solution.
pub struct BenchRun {
    pub report: BenchReport,
    pub solution: Vec<f64>,
}

fn solve_with(
    a: &BandedMatrix,
    b: &[f64],
    cfg: &BenchConfig,
    team: Arc<WorkerTeam>,
) -> Result<(Vec<f64>, SolveStats, f64), BenchError> {
    let opts = PcgOptions {
        tol: cfg.tol,
        max_iters: cfg.max_iters,
    };
    let setup = Instant::now();
    let mut pre: Box<dyn Preconditioner + '_> = match cfg.precond {
        PrecondKind::NtdIlu0 => {
            let ntd = NtdSolver::new(a, team.clone())?;
            let ilu = build_block_ilu0(a, &team)?;
            Box::new(CombinedPrecond::new(a, ntd, ilu)?)
        }
        PrecondKind::Ntd => Box::new(NtdSolver::new(a, team.clone())?),
        PrecondKind::Ilu0 => Box::new(Ilu0Solver::new(a, team.clone())?),
        PrecondKind::None => Box::new(Identity),
    };
    let setup_seconds = setup.elapsed().as_secs_f64();
    let (x, stats) = pcg(a, b, pre.as_mut(), &opts, &team)?;
    Ok((x, stats, setup_seconds))
}

pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchRun, BenchError> {
    let field = cfg.validate()?;
    let team = Arc::new(WorkerTeam::new(cfg.workers)?);
    let grid = GridSpec::cube(cfg.n)?;

    let t = Instant::now();
    let a = assemble_with(&grid, field, &team);
    let assembly_seconds = t.elapsed().as_secs_f64();
    if let Some(path) = &cfg.dump_matrix {
        let file = File::create(path).map_err(SolverError::from)?;
        a.write_matrix_market(BufWriter::new(file))?;
    }
    let b = make_rhs(&a, cfg.rhs.into());

    let (x, mut stats, setup_seconds) = solve_with(&a, &b, cfg, team)?;
    stats.setup_seconds = setup_seconds;
    let report = BenchReport {
        config: cfg.clone(),
        rows: a.n_rows(),
        assembly_seconds,
        setup_seconds,
        solve_seconds: stats.solve_seconds,
        overall_seconds: setup_seconds + stats.solve_seconds,
        iterations: stats.iterations,
        converged: stats.converged,
        relres: stats.final_relres(),
        relres_history: stats.relres_history,
    };
    Ok(BenchRun { report, solution: x })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedupRow {
    pub workers: usize,
    pub solve_seconds: f64,
    pub speedup: f64,
}

/// Runs the same solve with 1, 2 and 4 workers.
pub fn speedup_probe(cfg: &BenchConfig) -> Result<Vec<SpeedupRow>, BenchError> {
    let mut rows = Vec::new();
    let mut base = None;
    for workers in [1, 2, 4] {
        let run = run_benchmark(&BenchConfig {
            workers,
            dump_matrix: None,
            ..cfg.clone()
        })?;
        let t = run.report.solve_seconds;
        let t1 = *base.get_or_insert(t);
        rows.push(SpeedupRow {
            workers,
            solve_seconds: t,
            speedup: t1 / t,
        });
    }
    Ok(rows)
}

pub const CSV_HEADER: [&str; 8] = ["type", "rows", "tol", "setup_s", "solve_s", "overall_s", "iters", "relres"];

pub fn render(report: &BenchReport, format: OutputFormat) -> Result<String, BenchError> {
    match format {
        OutputFormat::Json => Ok(serde_json::to_string_pretty(report)?),
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(CSV_HEADER)?;
            w.write_record([
                report.config.matrix_type.to_string(),
                report.rows.to_string(),
                format!("{:e}", report.config.tol),
                format!("{:.6}", report.setup_seconds),
                format!("{:.6}", report.solve_seconds),
                format!("{:.6}", report.overall_seconds),
                report.iterations.to_string(),
                format!("{:.6e}", report.relres),
            ])?;
            let bytes = w.into_inner().map_err(|e| BenchError::Config(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        OutputFormat::Table => {
            let mut s = String::new();
            let c = &report.config;
            let _ = writeln!(
                s,
                "{:>4} {:>10} {:>9} {:>9} {:>9} {:>9} {:>6} {:>12}",
                "type", "rows", "tol", "setup_s", "solve_s", "overall_s", "iters", "relres"
            );
            let _ = writeln!(
                s,
                "{:>4} {:>10} {:>9.1e} {:>9.3} {:>9.3} {:>9.3} {:>6} {:>12.3e}",
                c.matrix_type,
                report.rows,
                c.tol,
                report.setup_seconds,
                report.solve_seconds,
                report.overall_seconds,
                report.iterations,
                report.relres
            );
            if !report.converged {
                let _ = writeln!(s, "not converged after {} iterations", report.iterations);
            }
            Ok(s)
        }
    }
}

pub fn render_speedup(rows: &[SpeedupRow]) -> String {
    let mut s = String::from("workers  solve_s  speedup\n");
    for r in rows {
        let _ = writeln!(s, "{:>7} {:>8.3} {:>8.2}", r.workers, r.solve_seconds, r.speedup);
    }
    s
}
