//! Preconditioned conjugate gradients.

use std::time::Instant;

use crate::banded::{dot, norm2, BandedMatrix};
use crate::error::{Result, SolverError};
use crate::ilu0::Ilu0Factors;
use crate::ntd::NtdSolver;
use crate::team::WorkerTeam;

/// `z = M^{-1} r`.
pub trait Preconditioner {
    fn apply(&mut self, r: &[f64], z: &mut [f64]) -> Result<()>;
}

/// `M = I`; PCG with it is plain CG.
#[derive(Clone, Copy, Debug, Default)]
pub struct Identity;

impl Preconditioner for Identity {
    fn apply(&mut self, r: &[f64], z: &mut [f64]) -> Result<()> {
        if r.len() != z.len() {
            return Err(SolverError::Dimension { expected: r.len(), found: z.len() });
        }
        z.copy_from_slice(r);
        Ok(())
    }
}

/// `z = w + B_ntd^{-1} (r - A w)` with `w = B_ilu^{-1} r`.
pub struct CombinedPrecond<'a> {
    a: &'a BandedMatrix,
    ntd: NtdSolver,
    ilu: Ilu0Factors,
    w: Vec<f64>,
    t: Vec<f64>,
    s: Vec<f64>,
}

impl<'a> CombinedPrecond<'a> {
    pub fn new(a: &'a BandedMatrix, ntd: NtdSolver, ilu: Ilu0Factors) -> Result<Self> {
        let n = a.n_rows();
        for found in [ntd.bands().n(), ilu.dims().n()] {
            if found != n {
                return Err(SolverError::Dimension { expected: n, found });
            }
        }
        Ok(Self {
            a,
            ntd,
            ilu,
            w: vec![0.0; n],
            t: vec![0.0; n],
            s: vec![0.0; n],
        })
    }

    pub fn ntd(&self) -> &NtdSolver {
        &self.ntd
    }

    pub fn ilu(&self) -> &Ilu0Factors {
        &self.ilu
    }
}

impl Preconditioner for CombinedPrecond<'_> {
    fn apply(&mut self, r: &[f64], z: &mut [f64]) -> Result<()> {
        let n = self.a.n_rows();
        for len in [r.len(), z.len()] {
            if len != n {
                return Err(SolverError::Dimension { expected: n, found: len });
            }
        }
        let team = self.ntd.team().clone();
        self.ilu.solve(r, &mut self.w, &team)?;
        self.a.spmv(&self.w, &mut self.t, &team)?;
        for (t, &ri) in self.t.iter_mut().zip(r) {
            *t = ri - *t;
        }
        self.ntd.solve(&self.t, &mut self.s)?;
        for ((zi, &wi), &si) in z.iter_mut().zip(&self.w).zip(&self.s) {
            *zi = wi + si;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PcgOptions {
    /// Stop once `||b - A x|| / ||b|| < tol`.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for PcgOptions {
    fn default() -> Self {
        Self { tol: 1e-7, max_iters: 200 }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveStats {
    /// Number of updates of `x`.
    pub iterations: usize,
    /// True relative residual after each iteration; one entry per iteration.
    pub relres_history: Vec<f64>,
    pub converged: bool,
    /// Filled in by callers that time the preconditioner setup.
    pub setup_seconds: f64,
    pub solve_seconds: f64,
    /// `||r_k|| / ||b||` from the recurrence, for drift checks.
    pub recursive_relres: f64,
}

impl SolveStats {
    pub fn final_relres(&self) -> f64 {
        match self.relres_history.last() {
            Some(&r) => r,
            None if self.converged => 0.0,
            None => 1.0,
        }
    }
}

fn true_residual(a: &BandedMatrix, b: &[f64], x: &[f64], out: &mut [f64], team: &WorkerTeam) -> Result<()> {
    a.spmv(x, out, team)?;
    for (o, &bi) in out.iter_mut().zip(b) {
        *o = bi - *o;
    }
    Ok(())
}

/// Solves `A x = b` from `x0 = 0`. Non-convergence within `max_iters` is not
/// an error; check [`SolveStats::converged`].
pub fn pcg(
    a: &BandedMatrix,
    b: &[f64],
    precond: &mut dyn Preconditioner,
    opts: &PcgOptions,
    team: &WorkerTeam,
) -> Result<(Vec<f64>, SolveStats)> {
    let n = a.n_rows();
    if b.len() != n {
        return Err(SolverError::Dimension { expected: n, found: b.len() });
    }
    let start = Instant::now();
    let mut stats = SolveStats::default();
    let mut x = vec![0.0; n];
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        stats.converged = true;
        stats.recursive_relres = 0.0;
        stats.solve_seconds = start.elapsed().as_secs_f64();
        return Ok((x, stats));
    }

    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut res = vec![0.0; n];
    precond.apply(&r, &mut z)?;
    let mut p = z.clone();
    let mut rz = dot(&r, &z)?;
    stats.recursive_relres = 1.0;

    for k in 0..opts.max_iters {
        a.spmv(&p, &mut q, team)?;
        let pq = dot(&p, &q)?;
        let alpha = rz / pq;
        if !alpha.is_finite() {
            return Err(SolverError::Divergence { iteration: k });
        }
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        stats.iterations = k + 1;

        true_residual(a, b, &x, &mut res, team)?;
        let relres = norm2(&res) / bnorm;
        if !relres.is_finite() {
            return Err(SolverError::Divergence { iteration: k + 1 });
        }
        stats.relres_history.push(relres);
        if relres < opts.tol {
            stats.converged = true;
            break;
        }

        precond.apply(&r, &mut z)?;
        let rz_new = dot(&r, &z)?;
        let beta = rz_new / rz;
        if !beta.is_finite() {
            return Err(SolverError::Divergence { iteration: k + 1 });
        }
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    stats.recursive_relres = norm2(&r) / bnorm;
    stats.solve_seconds = start.elapsed().as_secs_f64();
    Ok((x, stats))
}
