//! Nested twisted frequency-filtering decomposition.
//!
//! The preconditioner is stored as seven length-`N` arrays: the line bands
//! `l1`/`u1` of `T`, the line-coupling bands `l2`/`u2` of `P`, the
//! plane-coupling bands `l3`/`u3` (copied from `A`) and the reciprocals of
//! the innermost pivots `M`. All bands are row-indexed like
//! [`BandedMatrix`](crate::BandedMatrix): `l1[k] = T[k, k-1]`,
//! `u2[k] = P[k, k+nx]`, `l3[k] = A[k, k-nx*ny]` and so on.

mod chain;
mod factor;
mod solve;

use std::io::{Read, Write};
use std::sync::Arc;

pub use chain::{chain_bidiagonal_solve, Direction, DEFAULT_LANES, MAX_LANES};
pub use factor::{
    compute_beta, factor_level1, factor_level2, factor_level3, Breakdown, LineBands, PlaneBands,
    PlaneFactor,
};

use crate::banded::{BandedMatrix, Dims};
use crate::error::{Result, SolverError};
use crate::pcg::Preconditioner;
use crate::team::WorkerTeam;
use solve::{lower_sweep, plane_solve, upper_sweep, Level, PlaneFactors};

/// One-based index of the block where the two elimination sweeps meet.
pub fn twist_index(num_blocks: usize) -> usize {
    assert!(num_blocks >= 1, "twist of an empty block sequence");
    (num_blocks - 1) / 2 + 1
}

#[derive(Clone, Debug, PartialEq)]
pub struct PreconBands {
    pub dims: Dims,
    pub l1: Vec<f64>,
    pub u1: Vec<f64>,
    pub l2: Vec<f64>,
    pub u2: Vec<f64>,
    pub l3: Vec<f64>,
    pub u3: Vec<f64>,
    pub m_recip: Vec<f64>,
}

impl PreconBands {
    pub fn n(&self) -> usize {
        self.dims.n()
    }

    /// Twist point within each line.
    pub fn twist1(&self) -> usize {
        twist_index(self.dims.nx)
    }

    /// Twist line within each plane.
    pub fn twist2(&self) -> usize {
        twist_index(self.dims.ny)
    }

    /// Twist plane.
    pub fn twist3(&self) -> usize {
        twist_index(self.dims.nz)
    }

    /// Number of stored `f64` values.
    pub fn storage_len(&self) -> usize {
        self.arrays().iter().map(|a| a.len()).sum()
    }

    fn arrays(&self) -> [&Vec<f64>; 7] {
        [
            &self.l1,
            &self.u1,
            &self.l2,
            &self.u2,
            &self.l3,
            &self.u3,
            &self.m_recip,
        ]
    }

    fn plane(&self, p: usize) -> PlaneFactors<'_> {
        let nxy = self.dims.nxy();
        let r = p * nxy..(p + 1) * nxy;
        PlaneFactors {
            nx: self.dims.nx,
            ny: self.dims.ny,
            m_recip: &self.m_recip[r.clone()],
            l1: &self.l1[r.clone()],
            u1: &self.u1[r.clone()],
            l2: &self.l2[r.clone()],
            u2: &self.u2[r],
        }
    }

    /// Binary dump: header `N, nx, ny, nz` as little-endian `u64`, then
    /// `l1, u1, l2, u2, l3, u3, m_recip` as little-endian `f64`.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let d = self.dims;
        for v in [self.n(), d.nx, d.ny, d.nz] {
            w.write_all(&(v as u64).to_le_bytes())?;
        }
        for array in self.arrays() {
            for v in array {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut word = [0u8; 8];
        let mut header = [0usize; 4];
        for h in &mut header {
            r.read_exact(&mut word)?;
            *h = u64::from_le_bytes(word) as usize;
        }
        let dims = Dims::new(header[1], header[2], header[3])?;
        if dims.n() != header[0] {
            return Err(SolverError::InvalidBands(format!(
                "header claims {} rows for a {}x{}x{} grid",
                header[0], dims.nx, dims.ny, dims.nz
            )));
        }
        let mut read_array = || -> Result<Vec<f64>> {
            let mut v = vec![0.0; dims.n()];
            for x in &mut v {
                r.read_exact(&mut word)?;
                *x = f64::from_le_bytes(word);
            }
            Ok(v)
        };
        Ok(Self {
            dims,
            l1: read_array()?,
            u1: read_array()?,
            l2: read_array()?,
            u2: read_array()?,
            l3: read_array()?,
            u3: read_array()?,
            m_recip: read_array()?,
        })
    }
}

/// Scratch vectors for the upper sweeps, reused across applications.
#[derive(Clone, Debug)]
pub struct SolveWorkspace {
    x_tmp: Vec<f64>,
    b_tmp: Vec<f64>,
}

impl SolveWorkspace {
    pub fn new(n: usize) -> Self {
        Self {
            x_tmp: vec![0.0; n],
            b_tmp: vec![0.0; n],
        }
    }
}

/// `x = B^{-1} x` in place.
fn apply_in_place(
    team: &WorkerTeam,
    pb: &PreconBands,
    x: &mut [f64],
    ws: &mut SolveWorkspace,
    lanes: usize,
) {
    let lvl = Level {
        blocks: pb.dims.nz,
        size: pb.dims.nxy(),
        lower: &pb.l3,
        upper: &pb.u3,
        parallel: team.workers() >= 2,
    };
    let inner_parallel = team.workers() >= 4;
    let plane = |p: usize, blk: &mut [f64], scratch: &mut [f64]| {
        plane_solve(team, pb.plane(p), blk, scratch, lanes, inner_parallel);
    };
    let SolveWorkspace { x_tmp, b_tmp } = ws;
    team.install(|| {
        lower_sweep(team, &lvl, x, b_tmp, &plane);
        upper_sweep(team, &lvl, x, x_tmp, b_tmp, &plane);
    });
}

/// NTD preconditioner bound to a worker team and its solve workspace.
pub struct NtdSolver {
    bands: PreconBands,
    team: Arc<WorkerTeam>,
    workspace: SolveWorkspace,
    lanes: usize,
}

impl NtdSolver {
    pub fn new(a: &BandedMatrix, team: Arc<WorkerTeam>) -> Result<Self> {
        let bands = factor_level3(a, &team)?;
        Ok(Self::from_bands(bands, team))
    }

    pub fn from_bands(bands: PreconBands, team: Arc<WorkerTeam>) -> Self {
        let workspace = SolveWorkspace::new(bands.n());
        Self {
            bands,
            team,
            workspace,
            lanes: DEFAULT_LANES,
        }
    }

    /// Lane count of the innermost chained substitution (1 gives the plain
    /// sequential recurrence).
    pub fn with_lanes(mut self, lanes: usize) -> Self {
        self.lanes = lanes.clamp(1, MAX_LANES);
        self
    }

    pub fn bands(&self) -> &PreconBands {
        &self.bands
    }

    pub fn team(&self) -> &Arc<WorkerTeam> {
        &self.team
    }

    pub fn solve(&mut self, b: &[f64], x: &mut [f64]) -> Result<()> {
        let n = self.bands.n();
        for len in [b.len(), x.len()] {
            if len != n {
                return Err(SolverError::Dimension { expected: n, found: len });
            }
        }
        x.copy_from_slice(b);
        apply_in_place(&self.team, &self.bands, x, &mut self.workspace, self.lanes);
        Ok(())
    }

    /// `max_k |(B^{-1} A 1)_k - 1|`: how far the preconditioner is from
    /// reproducing `A` on the all-ones filter vector.
    pub fn filter_defect(&mut self, a: &BandedMatrix) -> Result<f64> {
        let ones = vec![1.0; a.n_rows()];
        let mut a1 = vec![0.0; a.n_rows()];
        a.spmv(&ones, &mut a1, &self.team)?;
        let mut z = vec![0.0; a.n_rows()];
        self.solve(&a1, &mut z)?;
        Ok(z.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max))
    }
}

impl Preconditioner for NtdSolver {
    fn apply(&mut self, r: &[f64], z: &mut [f64]) -> Result<()> {
        self.solve(r, z)
    }
}

/// One-shot `B^{-1} b` with a fresh team of `workers`.
pub fn ntd_apply(pre: &PreconBands, b: &[f64], workers: usize) -> Result<Vec<f64>> {
    let team = Arc::new(WorkerTeam::new(workers)?);
    let mut solver = NtdSolver::from_bands(pre.clone(), team);
    let mut x = vec![0.0; b.len()];
    solver.solve(b, &mut x)?;
    Ok(x)
}
