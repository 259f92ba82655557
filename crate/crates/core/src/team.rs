//! Persistent worker team shared by the SpMV, ILU0 and NTD kernels.
//!
//! A team owns at most one thread pool, created when the team is built and
//! reused for every kernel call afterwards. All kernels partition their output
//! into disjoint ranges whose per-element arithmetic does not depend on the
//! partition, so results are bitwise identical for every worker count.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use rayon::{ThreadPool, ThreadPoolBuilder};

use crate::error::{Result, SolverError};

pub struct WorkerTeam {
    workers: usize,
    pool: Option<ThreadPool>,
    spawned: Arc<AtomicUsize>,
}

impl WorkerTeam {
    /// Builds a team of `workers` threads. A single worker runs everything on
    /// the calling thread and never spawns.
    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(SolverError::Workers(workers));
        }
        let spawned = Arc::new(AtomicUsize::new(0));
        let pool = if workers > 1 {
            let counter = Arc::clone(&spawned);
            let pool = ThreadPoolBuilder::new()
                .num_threads(workers)
                .thread_name(|i| format!("ntd-worker-{i}"))
                .start_handler(move |_| {
                    counter.fetch_add(1, Ordering::SeqCst);
                })
                .build()
                .map_err(|_| SolverError::Workers(workers))?;
            Some(pool)
        } else {
            None
        };
        Ok(Self {
            workers,
            pool,
            spawned,
        })
    }

    pub fn serial() -> Self {
        Self {
            workers: 1,
            pool: None,
            spawned: Arc::new(AtomicUsize::new(0)),
        }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Number of OS threads this team has started over its lifetime.
    pub fn threads_spawned(&self) -> usize {
        self.spawned.load(Ordering::SeqCst)
    }

    /// Runs `f` inside the team so nested [`join`](Self::join) calls land on
    /// the team's workers.
    pub fn install<R, F>(&self, f: F) -> R
    where
        F: FnOnce() -> R + Send,
        R: Send,
    {
        match &self.pool {
            Some(pool) if pool.current_thread_index().is_none() => pool.install(f),
            _ => f(),
        }
    }

    /// Runs `a` and `b`, concurrently when `parallel` is set and the team has
    /// more than one worker, otherwise `a` then `b` on the calling thread.
    pub fn join<A, B, RA, RB>(&self, parallel: bool, a: A, b: B) -> (RA, RB)
    where
        A: FnOnce() -> RA + Send,
        B: FnOnce() -> RB + Send,
        RA: Send,
        RB: Send,
    {
        match &self.pool {
            Some(pool) if parallel => {
                if pool.current_thread_index().is_some() {
                    rayon::join(a, b)
                } else {
                    pool.install(|| rayon::join(a, b))
                }
            }
            _ => {
                let ra = a();
                let rb = b();
                (ra, rb)
            }
        }
    }

    /// Applies `f(first_row, chunk)` to contiguous chunks of `out`, one chunk
    /// per worker.
    pub fn for_each_row_block<F>(&self, out: &mut [f64], f: F)
    where
        F: Fn(usize, &mut [f64]) + Sync,
    {
        let n = out.len();
        match &self.pool {
            Some(pool) if n >= 2 * self.workers => {
                use rayon::prelude::*;
                let chunk = n.div_ceil(self.workers);
                let body = |out: &mut [f64]| {
                    out.par_chunks_mut(chunk)
                        .enumerate()
                        .for_each(|(c, block)| f(c * chunk, block))
                };
                if pool.current_thread_index().is_some() {
                    body(out)
                } else {
                    pool.install(|| body(out))
                }
            }
            _ => f(0, out),
        }
    }
}

impl std::fmt::Debug for WorkerTeam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WorkerTeam")
            .field("workers", &self.workers)
            .field("threads_spawned", &self.threads_spawned())
            .finish()
    }
}
