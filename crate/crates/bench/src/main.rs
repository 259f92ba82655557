use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ntd_bench::{render, render_speedup, run_benchmark, speedup_probe, BenchConfig, BenchError, OutputFormat, PrecondKind, Rhs};

const EXIT_NOT_CONVERGED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_FAILURE: u8 = 3;

/// Solve a 3D diffusion test problem with preconditioned CG.
#[derive(Parser, Debug)]
#[command(name = "ntd-bench", version)]
struct Args {
    /// Coefficient field: 1 skyscraper, 2 ring, 3 Poisson.
    #[arg(long = "type", default_value_t = 1)]
    matrix_type: u8,
    /// Cells per axis.
    #[arg(long, default_value_t = 50)]
    n: usize,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, value_enum, default_value_t = Rhs::Ones)]
    rhs: Rhs,
    #[arg(long, value_enum, default_value_t = PrecondKind::NtdIlu0)]
    precond: PrecondKind,
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    format: OutputFormat,
    /// Write the assembled matrix in MatrixMarket format.
    #[arg(long)]
    dump_matrix: Option<PathBuf>,
    /// Repeat the solve with 1, 2 and 4 workers and print the speedups.
    #[arg(long)]
    speedup: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = BenchConfig {
        matrix_type: args.matrix_type,
        n: args.n,
        tol: args.tol,
        max_iters: args.max_iters,
        workers: args.workers,
        rhs: args.rhs,
        precond: args.precond,
        format: args.format,
        dump_matrix: args.dump_matrix,
    };
    let fail = |e: BenchError| {
        eprintln!("ntd-bench: {e}");
        match e {
            BenchError::Config(_) => ExitCode::from(EXIT_USAGE),
            _ => ExitCode::from(EXIT_FAILURE),
        }
    };

    if args.speedup {
        return match speedup_probe(&cfg) {
            Ok(rows) => {
                print!("{}", render_speedup(&rows));
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        };
    }

    let run = match run_benchmark(&cfg) {
        Ok(run) => run,
        Err(e) => return fail(e),
    };
    match render(&run.report, cfg.format) {
        Ok(s) => print!("{s}"),
        Err(e) => return fail(e),
    }
    if run.report.converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_NOT_CONVERGED)
    }
}
