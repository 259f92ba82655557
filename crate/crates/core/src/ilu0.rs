//! Zero-fill ILU of the block-diagonal approximation
//! `blkdiag(A[0..m, 0..m], A[m..n, m..n])`, `m = n / 2`.
//!
//! The two halves share no rows or columns, so both the factorization and
//! the triangular sweeps run independently per half.

use std::sync::Arc;

use crate::banded::{Band, BandedMatrix, Dims};
use crate::error::{Result, SolverError};
use crate::pcg::Preconditioner;
use crate::team::WorkerTeam;

const LOWER: [Band; 3] = [Band::ZMinus, Band::YMinus, Band::XMinus];
const UPPER: [Band; 3] = [Band::XPlus, Band::YPlus, Band::ZPlus];

/// Combined `L` (unit lower, strictly-lower bands) and `U` (diagonal and
/// upper bands) factors, stored on `A`'s seven bands with every coupling
/// across the split zeroed.
#[derive(Clone, Debug, PartialEq)]
pub struct Ilu0Factors {
    dims: Dims,
    split: usize,
    lu: [Vec<f64>; 7],
}

/// Rows `[start, end)` of the seven bands.
struct HalfMut<'a> {
    start: usize,
    end: usize,
    bands: [&'a mut [f64]; 7],
}

struct HalfRef<'a> {
    start: usize,
    end: usize,
    bands: [&'a [f64]; 7],
}

impl Ilu0Factors {
    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// First row of the second half.
    pub fn split(&self) -> usize {
        self.split
    }

    pub fn band(&self, band: Band) -> &[f64] {
        &self.lu[band.index()]
    }

    fn halves(&self) -> (HalfRef<'_>, HalfRef<'_>) {
        let n = self.dims.n();
        let m = self.split;
        let first = std::array::from_fn(|b| &self.lu[b][..m]);
        let second = std::array::from_fn(|b| &self.lu[b][m..]);
        (
            HalfRef { start: 0, end: m, bands: first },
            HalfRef { start: m, end: n, bands: second },
        )
    }

    /// `z = U^{-1} L^{-1} r`, one half per worker.
    pub fn solve(&self, r: &[f64], z: &mut [f64], team: &WorkerTeam) -> Result<()> {
        let n = self.dims.n();
        for len in [r.len(), z.len()] {
            if len != n {
                return Err(SolverError::Dimension { expected: n, found: len });
            }
        }
        let (h0, h1) = self.halves();
        let (z0, z1) = z.split_at_mut(self.split);
        let dims = self.dims;
        team.join(
            team.workers() >= 2,
            || sweep_half(dims, &h0, &r[..h0.end], z0),
            || sweep_half(dims, &h1, &r[h1.start..], z1),
        );
        Ok(())
    }
}

fn sweep_half(dims: Dims, h: &HalfRef<'_>, r: &[f64], z: &mut [f64]) {
    let len = (h.end - h.start) as isize;
    let offsets_lower = LOWER.map(|b| b.offset(dims));
    let offsets_upper = UPPER.map(|b| b.offset(dims));
    // Padding entries are zero, so only the index range needs checking.
    for i in 0..len {
        let mut v = r[i as usize];
        for (band, &d) in LOWER.iter().zip(&offsets_lower) {
            let j = i + d;
            if j >= 0 {
                v -= h.bands[band.index()][i as usize] * z[j as usize];
            }
        }
        z[i as usize] = v;
    }
    let diag = h.bands[Band::Diag.index()];
    for i in (0..len).rev() {
        let mut v = z[i as usize];
        for (band, &d) in UPPER.iter().zip(&offsets_upper) {
            let j = i + d;
            if j < len {
                v -= h.bands[band.index()][i as usize] * z[j as usize];
            }
        }
        z[i as usize] = v / diag[i as usize];
    }
}

/// Whether `band` of global row `row` is part of the factor pattern.
fn in_pattern(dims: Dims, band: Band, row: usize, start: usize, end: usize) -> bool {
    if !band.is_structural(dims, row) {
        return false;
    }
    let col = row as isize + band.offset(dims);
    col >= start as isize && col < end as isize
}

/// Row-wise IKJ elimination restricted to the 7-band pattern.
fn factor_half(dims: Dims, h: &mut HalfMut<'_>) -> Result<()> {
    let (start, end) = (h.start, h.end);
    for row in start..end {
        let i = row - start;
        for band in Band::ALL {
            if !in_pattern(dims, band, row, start, end) {
                h.bands[band.index()][i] = 0.0;
            }
        }
    }
    for row in start..end {
        let i = row - start;
        for lb in LOWER {
            if !in_pattern(dims, lb, row, start, end) {
                continue;
            }
            let k = (row as isize + lb.offset(dims)) as usize;
            let lik = h.bands[lb.index()][i] / h.bands[Band::Diag.index()][k - start];
            h.bands[lb.index()][i] = lik;
            for ub in UPPER {
                if !in_pattern(dims, ub, k, start, end) {
                    continue;
                }
                let col = k as isize + ub.offset(dims);
                let target = Band::ALL.into_iter().find(|&t| {
                    row as isize + t.offset(dims) == col && in_pattern(dims, t, row, start, end)
                });
                if let Some(t) = target {
                    let ukj = h.bands[ub.index()][k - start];
                    h.bands[t.index()][i] -= lik * ukj;
                }
            }
        }
        let pivot = h.bands[Band::Diag.index()][i];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(SolverError::Factorization {
                level: 0,
                block: usize::from(start > 0),
                row,
                value: pivot,
            });
        }
    }
    Ok(())
}

fn to_array(v: Vec<&mut [f64]>) -> [&mut [f64]; 7] {
    v.try_into().unwrap_or_else(|_| unreachable!("seven bands"))
}

/// Factors both halves of `a`; needs at least two rows.
pub fn build_block_ilu0(a: &BandedMatrix, team: &WorkerTeam) -> Result<Ilu0Factors> {
    let dims = a.dims();
    let n = dims.n();
    if n < 2 {
        return Err(SolverError::Dimension { expected: 2, found: n });
    }
    let split = n / 2;
    let mut lu: [Vec<f64>; 7] = std::array::from_fn(|b| a.band(Band::ALL[b]).to_vec());

    let mut firsts: Vec<&mut [f64]> = Vec::with_capacity(7);
    let mut seconds: Vec<&mut [f64]> = Vec::with_capacity(7);
    for band in lu.iter_mut() {
        let (x, y) = band.split_at_mut(split);
        firsts.push(x);
        seconds.push(y);
    }
    let mut h0 = HalfMut {
        start: 0,
        end: split,
        bands: to_array(firsts),
    };
    let mut h1 = HalfMut {
        start: split,
        end: n,
        bands: to_array(seconds),
    };
    let (r0, r1) = team.join(
        team.workers() >= 2,
        || factor_half(dims, &mut h0),
        || factor_half(dims, &mut h1),
    );
    r0?;
    r1?;
    Ok(Ilu0Factors { dims, split, lu })
}

/// ILU0 factors bound to a worker team, usable as a standalone
/// preconditioner.
pub struct Ilu0Solver {
    pub factors: Ilu0Factors,
    team: Arc<WorkerTeam>,
}

impl Ilu0Solver {
    pub fn new(a: &BandedMatrix, team: Arc<WorkerTeam>) -> Result<Self> {
        let factors = build_block_ilu0(a, &team)?;
        Ok(Self { factors, team })
    }
}

impl Preconditioner for Ilu0Solver {
    fn apply(&mut self, r: &[f64], z: &mut [f64]) -> Result<()> {
        self.factors.solve(r, z, &self.team)
    }
}
