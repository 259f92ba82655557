//! Recursive twisted solve with `B = (P + L3)(I + P^{-1} U3)`,
//! `P = (T + L2)(I + T^{-1} U2)` and `T = (M + L1)(I + M^{-1} U1)`.
//!
//! At every level the blocks above the twist are eliminated top-down and the
//! blocks below it bottom-up; the two halves touch disjoint ranges and run
//! concurrently, and the twist block is finished once both are done. Level 1
//! replaces the worker split with lane-chained substitution.

use super::chain::{chain_in_place, Direction, Lower, UnitUpper};
use crate::team::WorkerTeam;

/// One level of the block-twisted structure.
pub(crate) struct Level<'a> {
    pub blocks: usize,
    pub size: usize,
    /// Row-indexed coupling to the previous block.
    pub lower: &'a [f64],
    /// Row-indexed coupling to the next block.
    pub upper: &'a [f64],
    pub parallel: bool,
}

impl Level<'_> {
    fn mid(&self) -> usize {
        (self.blocks - 1) / 2
    }

    fn lower_of(&self, block: usize) -> &[f64] {
        &self.lower[block * self.size..(block + 1) * self.size]
    }

    fn upper_of(&self, block: usize) -> &[f64] {
        &self.upper[block * self.size..(block + 1) * self.size]
    }
}

/// `(blocks before mid, block mid, blocks after mid)`; an empty buffer yields
/// three empty slices.
fn split3(buf: &mut [f64], mid: usize, size: usize) -> (&mut [f64], &mut [f64], &mut [f64]) {
    if buf.is_empty() {
        return (&mut [], &mut [], &mut []);
    }
    let (top, rest) = buf.split_at_mut(mid * size);
    let (m, bottom) = rest.split_at_mut(size);
    (top, m, bottom)
}

fn block_mut(buf: &mut [f64], i: usize, size: usize) -> &mut [f64] {
    if buf.is_empty() {
        buf
    } else {
        &mut buf[i * size..(i + 1) * size]
    }
}

#[inline]
fn subtract_coupled(target: &mut [f64], coupling: &[f64], neighbour: &[f64]) {
    for ((t, &c), &v) in target.iter_mut().zip(coupling).zip(neighbour) {
        *t -= c * v;
    }
}

/// Solves `(D + L) y = b` in place, where `D` is block diagonal (applied by
/// `solve`) and `L` is the twisted lower factor built from the couplings.
pub(crate) fn lower_sweep<S>(
    team: &WorkerTeam,
    lvl: &Level<'_>,
    x: &mut [f64],
    scratch: &mut [f64],
    solve: &S,
) where
    S: Fn(usize, &mut [f64], &mut [f64]) + Sync,
{
    let size = lvl.size;
    let mid = lvl.mid();
    let (xt, xm, xb) = split3(x, mid, size);
    let (st, sm, sb) = split3(scratch, mid, size);

    team.join(
        lvl.parallel,
        || {
            for i in 0..mid {
                let (done, rest) = xt.split_at_mut(i * size);
                let cur = &mut rest[..size];
                if i > 0 {
                    subtract_coupled(cur, lvl.lower_of(i), &done[(i - 1) * size..]);
                }
                solve(i, cur, block_mut(st, i, size));
            }
        },
        || {
            let count = lvl.blocks - mid - 1;
            for li in (0..count).rev() {
                let i = mid + 1 + li;
                let (head, after) = xb.split_at_mut((li + 1) * size);
                let cur = &mut head[li * size..];
                if li + 1 < count {
                    subtract_coupled(cur, lvl.upper_of(i), &after[..size]);
                }
                solve(i, cur, block_mut(sb, li, size));
            }
        },
    );

    if mid > 0 {
        subtract_coupled(xm, lvl.lower_of(mid), &xt[(mid - 1) * size..]);
    }
    if mid + 1 < lvl.blocks {
        subtract_coupled(xm, lvl.upper_of(mid), &xb[..size]);
    }
    solve(mid, xm, sm);
}

/// Solves `(I + D^{-1} U) x = y` in place. The twist block is already final;
/// every other block subtracts `D^{-1}` applied to its coupling with the
/// block on the twist side, which `tmp` holds while it is solved.
pub(crate) fn upper_sweep<S>(
    team: &WorkerTeam,
    lvl: &Level<'_>,
    x: &mut [f64],
    tmp: &mut [f64],
    scratch: &mut [f64],
    solve: &S,
) where
    S: Fn(usize, &mut [f64], &mut [f64]) + Sync,
{
    let size = lvl.size;
    let mid = lvl.mid();
    let (xt, xm, xb) = split3(x, mid, size);
    let xm: &[f64] = xm;
    let (tt, _, tb) = split3(tmp, mid, size);
    let (st, _, sb) = split3(scratch, mid, size);

    team.join(
        lvl.parallel,
        || {
            for i in (0..mid).rev() {
                let (head, after) = xt.split_at_mut((i + 1) * size);
                let cur = &mut head[i * size..];
                let next = if i + 1 == mid { xm } else { &after[..size] };
                let t = block_mut(tt, i, size);
                for ((tv, &u), &v) in t.iter_mut().zip(lvl.upper_of(i)).zip(next) {
                    *tv = u * v;
                }
                solve(i, t, block_mut(st, i, size));
                for (c, &tv) in cur.iter_mut().zip(t.iter()) {
                    *c -= tv;
                }
            }
        },
        || {
            let count = lvl.blocks - mid - 1;
            for li in 0..count {
                let i = mid + 1 + li;
                let (before, rest) = xb.split_at_mut(li * size);
                let cur = &mut rest[..size];
                let prev = if li == 0 { xm } else { &before[(li - 1) * size..] };
                let t = block_mut(tb, li, size);
                for ((tv, &l), &v) in t.iter_mut().zip(lvl.lower_of(i)).zip(prev) {
                    *tv = l * v;
                }
                solve(i, t, block_mut(sb, li, size));
                for (c, &tv) in cur.iter_mut().zip(t.iter()) {
                    *c -= tv;
                }
            }
        },
    );
}

/// Exact solve with the twisted factorization of one tridiagonal line,
/// in place.
pub(crate) fn line_solve(m_recip: &[f64], l1: &[f64], u1: &[f64], x: &mut [f64], lanes: usize) {
    let n = x.len();
    let mid = (n - 1) / 2;
    let (top, rest) = x.split_at_mut(mid);
    let (xm, bottom) = rest.split_at_mut(1);

    // (M + L1) y = b
    chain_in_place(
        &Lower {
            recip: &m_recip[..mid],
            off: &l1[..mid],
        },
        top,
        0.0,
        Direction::Forward,
        lanes,
    );
    chain_in_place(
        &Lower {
            recip: &m_recip[mid + 1..],
            off: &u1[mid + 1..],
        },
        bottom,
        0.0,
        Direction::Backward,
        lanes,
    );
    let mut v = xm[0];
    if mid > 0 {
        v -= l1[mid] * top[mid - 1];
    }
    if mid + 1 < n {
        v -= u1[mid] * bottom[0];
    }
    xm[0] = v * m_recip[mid];

    // (I + M^{-1} U1) x = y
    let seed = xm[0];
    chain_in_place(
        &UnitUpper {
            recip: &m_recip[..mid],
            off: &u1[..mid],
        },
        top,
        seed,
        Direction::Backward,
        lanes,
    );
    chain_in_place(
        &UnitUpper {
            recip: &m_recip[mid + 1..],
            off: &l1[mid + 1..],
        },
        bottom,
        seed,
        Direction::Forward,
        lanes,
    );
}

/// Read-only view of one plane's factors; every slice has length `nx*ny`.
#[derive(Clone, Copy)]
pub(crate) struct PlaneFactors<'a> {
    pub nx: usize,
    pub ny: usize,
    pub m_recip: &'a [f64],
    pub l1: &'a [f64],
    pub u1: &'a [f64],
    pub l2: &'a [f64],
    pub u2: &'a [f64],
}

/// Applies the two-level approximate inverse of one plane in place. `tmp`
/// must have the plane's length.
pub(crate) fn plane_solve(
    team: &WorkerTeam,
    pf: PlaneFactors<'_>,
    x: &mut [f64],
    tmp: &mut [f64],
    lanes: usize,
    parallel: bool,
) {
    let nx = pf.nx;
    let lvl = Level {
        blocks: pf.ny,
        size: nx,
        lower: pf.l2,
        upper: pf.u2,
        parallel,
    };
    let line = |i: usize, blk: &mut [f64], _: &mut [f64]| {
        let r = i * nx..(i + 1) * nx;
        line_solve(&pf.m_recip[r.clone()], &pf.l1[r.clone()], &pf.u1[r], blk, lanes);
    };
    lower_sweep(team, &lvl, x, &mut [], &line);
    upper_sweep(team, &lvl, x, tmp, &mut [], &line);
}
