//! Construction of the NTD bands by three nested twisted recurrences.
//!
//! Level 3 runs over planes, level 2 over the lines of a plane and level 1
//! over the points of a line. At levels 3 and 2 the exact Schur update
//! `L N^{-1} U` with a neighbouring block `N` is replaced by
//! `L (2 beta - beta N beta) U`, where the diagonal `beta` makes the
//! surrogate agree with the neighbour's (approximate) inverse on the coupling
//! applied to the all-ones vector. The surrogate keeps the sparsity of `N`,
//! so every block keeps the stencil pattern of the original diagonal block.

use super::solve::{line_solve, plane_solve, PlaneFactors};
use super::{twist_index, PreconBands};
use crate::banded::{Band, BandedMatrix};
use crate::error::{Result, SolverError};
use crate::team::WorkerTeam;

/// Pivot breakdown at a position local to the slice being factored.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Breakdown {
    pub index: usize,
    pub value: f64,
}

/// Tridiagonal working block: one line of `T`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LineBands {
    pub diag: Vec<f64>,
    /// `T[k, k-1]`
    pub lower: Vec<f64>,
    /// `T[k, k+1]`
    pub upper: Vec<f64>,
}

impl LineBands {
    pub fn new(diag: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert!(diag.len() == lower.len() && diag.len() == upper.len());
        Self { diag, lower, upper }
    }

    fn zeros(n: usize) -> Self {
        Self::new(vec![0.0; n], vec![0.0; n], vec![0.0; n])
    }

    fn load(&mut self, plane: &PlaneBands, line: usize) {
        let r = line * plane.nx..(line + 1) * plane.nx;
        self.diag.copy_from_slice(&plane.diag[r.clone()]);
        self.lower.copy_from_slice(&plane.x_minus[r.clone()]);
        self.upper.copy_from_slice(&plane.x_plus[r]);
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    fn subtract_filtered(&mut self, nbr: &LineBands, left: &[f64], beta: &[f64], right: &[f64]) {
        filtered_diag(&mut self.diag, &nbr.diag, left, beta, right);
        filtered_band(&mut self.lower, &nbr.lower, left, beta, right, -1);
        filtered_band(&mut self.upper, &nbr.upper, left, beta, right, 1);
    }
}

/// Pentadiagonal working block: one plane of `P`, row-indexed within the
/// plane.
#[derive(Clone, Debug, PartialEq)]
pub struct PlaneBands {
    pub nx: usize,
    pub ny: usize,
    pub diag: Vec<f64>,
    pub x_minus: Vec<f64>,
    pub x_plus: Vec<f64>,
    pub y_minus: Vec<f64>,
    pub y_plus: Vec<f64>,
}

impl PlaneBands {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        let n = nx * ny;
        Self {
            nx,
            ny,
            diag: vec![0.0; n],
            x_minus: vec![0.0; n],
            x_plus: vec![0.0; n],
            y_minus: vec![0.0; n],
            y_plus: vec![0.0; n],
        }
    }

    /// The diagonal block of plane `plane` of `a`.
    pub fn from_matrix(a: &BandedMatrix, plane: usize) -> Self {
        let dims = a.dims();
        let mut p = Self::zeros(dims.nx, dims.ny);
        p.load(a, plane);
        p
    }

    fn load(&mut self, a: &BandedMatrix, plane: usize) {
        let nxy = self.nx * self.ny;
        let r = plane * nxy..(plane + 1) * nxy;
        self.diag.copy_from_slice(&a.band(Band::Diag)[r.clone()]);
        self.x_minus.copy_from_slice(&a.band(Band::XMinus)[r.clone()]);
        self.x_plus.copy_from_slice(&a.band(Band::XPlus)[r.clone()]);
        self.y_minus.copy_from_slice(&a.band(Band::YMinus)[r.clone()]);
        self.y_plus.copy_from_slice(&a.band(Band::YPlus)[r]);
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    fn subtract_filtered(&mut self, nbr: &PlaneBands, left: &[f64], beta: &[f64], right: &[f64]) {
        let nx = self.nx as isize;
        filtered_diag(&mut self.diag, &nbr.diag, left, beta, right);
        filtered_band(&mut self.x_minus, &nbr.x_minus, left, beta, right, -1);
        filtered_band(&mut self.x_plus, &nbr.x_plus, left, beta, right, 1);
        filtered_band(&mut self.y_minus, &nbr.y_minus, left, beta, right, -nx);
        filtered_band(&mut self.y_plus, &nbr.y_plus, left, beta, right, nx);
    }
}

/// `diag -= left .* (2 beta - beta N beta) .* right` on the diagonal.
fn filtered_diag(diag: &mut [f64], nbr: &[f64], left: &[f64], beta: &[f64], right: &[f64]) {
    for r in 0..diag.len() {
        let lb = left[r] * beta[r];
        let br = beta[r] * right[r];
        diag[r] -= 2.0 * lb * right[r] - lb * nbr[r] * br;
    }
}

/// Off-diagonal part of the same update for the band with `offset`:
/// `band[r] += (left beta)[r] * N[r, r+offset] * (beta right)[r+offset]`.
/// Boundary entries of `nbr` are zero, so padding stays zero.
fn filtered_band(
    band: &mut [f64],
    nbr: &[f64],
    left: &[f64],
    beta: &[f64],
    right: &[f64],
    offset: isize,
) {
    let n = band.len() as isize;
    let lo = (-offset).max(0);
    let hi = (n - offset.max(0)).max(lo);
    for r in lo..hi {
        let c = (r + offset) as usize;
        let r = r as usize;
        band[r] += left[r] * beta[r] * nbr[r] * (beta[c] * right[c]);
    }
}

fn check_pivot(index: usize, m: f64) -> std::result::Result<f64, Breakdown> {
    if m == 0.0 || !m.is_finite() {
        Err(Breakdown { index, value: m })
    } else {
        Ok(1.0 / m)
    }
}

/// Pivot reciprocals of the twisted factorization `(M + L1)(I + M^{-1} U1)`
/// of a tridiagonal block. Pivots above the twist are eliminated top-down,
/// those below bottom-up, and the twist pivot takes both corrections.
pub(crate) fn factor_line_into(
    diag: &[f64],
    lower: &[f64],
    upper: &[f64],
    m_recip: &mut [f64],
) -> std::result::Result<(), Breakdown> {
    let n = diag.len();
    let mid = twist_index(n) - 1;
    for k in 0..mid {
        let m = if k == 0 {
            diag[0]
        } else {
            diag[k] - lower[k] * m_recip[k - 1] * upper[k - 1]
        };
        m_recip[k] = check_pivot(k, m)?;
    }
    for k in (mid + 1..n).rev() {
        let m = if k + 1 == n {
            diag[k]
        } else {
            diag[k] - upper[k] * m_recip[k + 1] * lower[k + 1]
        };
        m_recip[k] = check_pivot(k, m)?;
    }
    let mut m = diag[mid];
    if mid > 0 {
        m -= lower[mid] * m_recip[mid - 1] * upper[mid - 1];
    }
    if mid + 1 < n {
        m -= upper[mid] * m_recip[mid + 1] * lower[mid + 1];
    }
    m_recip[mid] = check_pivot(mid, m)?;
    Ok(())
}

/// Level-1 factorization of one line: returns `1 / M_i`.
pub fn factor_level1(line: &LineBands) -> std::result::Result<Vec<f64>, Breakdown> {
    let mut m_recip = vec![0.0; line.len()];
    factor_line_into(&line.diag, &line.lower, &line.upper, &mut m_recip)?;
    Ok(m_recip)
}

/// Filtering diagonal for a neighbour block: `beta[k] = (N^{-1} u)[k] / u[k]`
/// with `N^{-1}` supplied by `apply_inv` (in place), and `beta[k] = 0` where
/// the coupling `u[k]` vanishes.
pub fn compute_beta<F>(
    apply_inv: F,
    u_seg: &[f64],
    beta: &mut [f64],
) -> std::result::Result<(), Breakdown>
where
    F: FnOnce(&mut [f64]),
{
    beta.copy_from_slice(u_seg);
    apply_inv(beta);
    for (k, (b, &u)) in beta.iter_mut().zip(u_seg).enumerate() {
        *b = if u != 0.0 { *b / u } else { 0.0 };
        if !b.is_finite() {
            return Err(Breakdown { index: k, value: *b });
        }
    }
    Ok(())
}

/// Output slices of the factorization for a run of consecutive planes.
pub(crate) struct FactorOut<'a> {
    pub l1: &'a mut [f64],
    pub u1: &'a mut [f64],
    pub m_recip: &'a mut [f64],
    pub l2: &'a mut [f64],
    pub u2: &'a mut [f64],
}

impl<'a> FactorOut<'a> {
    fn split3(self, mid: usize, size: usize) -> (FactorOut<'a>, FactorOut<'a>, FactorOut<'a>) {
        fn cut(s: &mut [f64], mid: usize, size: usize) -> (&mut [f64], &mut [f64], &mut [f64]) {
            let (a, rest) = s.split_at_mut(mid * size);
            let (b, c) = rest.split_at_mut(size);
            (a, b, c)
        }
        let (l1a, l1b, l1c) = cut(self.l1, mid, size);
        let (u1a, u1b, u1c) = cut(self.u1, mid, size);
        let (ma, mb, mc) = cut(self.m_recip, mid, size);
        let (l2a, l2b, l2c) = cut(self.l2, mid, size);
        let (u2a, u2b, u2c) = cut(self.u2, mid, size);
        (
            FactorOut { l1: l1a, u1: u1a, m_recip: ma, l2: l2a, u2: u2a },
            FactorOut { l1: l1b, u1: u1b, m_recip: mb, l2: l2b, u2: u2b },
            FactorOut { l1: l1c, u1: u1c, m_recip: mc, l2: l2c, u2: u2c },
        )
    }

    fn plane(&mut self, p: usize, size: usize) -> FactorOut<'_> {
        let r = p * size..(p + 1) * size;
        FactorOut {
            l1: &mut self.l1[r.clone()],
            u1: &mut self.u1[r.clone()],
            m_recip: &mut self.m_recip[r.clone()],
            l2: &mut self.l2[r.clone()],
            u2: &mut self.u2[r],
        }
    }

    fn view(&self, nx: usize, ny: usize) -> PlaneFactors<'_> {
        PlaneFactors {
            nx,
            ny,
            m_recip: self.m_recip,
            l1: self.l1,
            u1: self.u1,
            l2: self.l2,
            u2: self.u2,
        }
    }
}

fn finish_line(out: &mut FactorOut<'_>, nx: usize, i: usize, t: &LineBands) -> std::result::Result<(), Breakdown> {
    let r = i * nx..(i + 1) * nx;
    out.l1[r.clone()].copy_from_slice(&t.lower);
    out.u1[r.clone()].copy_from_slice(&t.upper);
    factor_line_into(&t.diag, &t.lower, &t.upper, &mut out.m_recip[r])
}

/// Level-2 recurrence over the lines of one plane block `plane`.
///
/// `plane_index` and `first_row` only label errors.
pub(crate) fn factor_plane_into(
    plane: &PlaneBands,
    out: &mut FactorOut<'_>,
    plane_index: usize,
    first_row: usize,
    lanes: usize,
) -> Result<()> {
    let nx = plane.nx;
    let ny = plane.ny;
    let mid = twist_index(ny) - 1;
    out.l2.copy_from_slice(&plane.y_minus);
    out.u2.copy_from_slice(&plane.y_plus);
    let (l2, u2) = (&plane.y_minus, &plane.y_plus);
    let line = |i: usize| i * nx..(i + 1) * nx;

    let line_error = |i: usize, b: Breakdown| SolverError::Factorization {
        level: 1,
        block: plane_index * ny + i,
        row: first_row + i * nx + b.index,
        value: b.value,
    };
    let beta_error = |i: usize, b: Breakdown| SolverError::Factorization {
        level: 2,
        block: plane_index,
        row: first_row + i * nx + b.index,
        value: b.value,
    };
    // beta of line i against `coupling`, using line i's exact inverse.
    let line_beta = |out: &FactorOut<'_>, i: usize, coupling: &[f64], beta: &mut [f64]| {
        let r = line(i);
        let (m, lo, up) = (&out.m_recip[r.clone()], &out.l1[r.clone()], &out.u1[r]);
        compute_beta(|v| line_solve(m, lo, up, v, lanes), coupling, beta).map_err(|b| beta_error(i, b))
    };

    let mut cur = LineBands::zeros(nx);

    let mut top = LineBands::zeros(nx);
    let mut top_beta = vec![0.0; nx];
    for i in 0..mid {
        cur.load(plane, i);
        if i > 0 {
            cur.subtract_filtered(&top, &l2[line(i)], &top_beta, &u2[line(i - 1)]);
        }
        finish_line(out, nx, i, &cur).map_err(|b| line_error(i, b))?;
        std::mem::swap(&mut top, &mut cur);
        line_beta(out, i, &u2[line(i)], &mut top_beta)?;
    }

    let mut bottom = LineBands::zeros(nx);
    let mut bottom_beta = vec![0.0; nx];
    for i in (mid + 1..ny).rev() {
        cur.load(plane, i);
        if i + 1 < ny {
            cur.subtract_filtered(&bottom, &u2[line(i)], &bottom_beta, &l2[line(i + 1)]);
        }
        finish_line(out, nx, i, &cur).map_err(|b| line_error(i, b))?;
        std::mem::swap(&mut bottom, &mut cur);
        line_beta(out, i, &l2[line(i)], &mut bottom_beta)?;
    }

    cur.load(plane, mid);
    if mid > 0 {
        cur.subtract_filtered(&top, &l2[line(mid)], &top_beta, &u2[line(mid - 1)]);
    }
    if mid + 1 < ny {
        cur.subtract_filtered(&bottom, &u2[line(mid)], &bottom_beta, &l2[line(mid + 1)]);
    }
    finish_line(out, nx, mid, &cur).map_err(|b| line_error(mid, b))
}

/// Owned factors of a single plane block.
#[derive(Clone, Debug, PartialEq)]
pub struct PlaneFactor {
    pub nx: usize,
    pub ny: usize,
    pub l1: Vec<f64>,
    pub u1: Vec<f64>,
    pub m_recip: Vec<f64>,
    pub l2: Vec<f64>,
    pub u2: Vec<f64>,
}

impl PlaneFactor {
    /// Applies the plane's two-level approximate inverse in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let mut tmp = vec![0.0; x.len()];
        let view = PlaneFactors {
            nx: self.nx,
            ny: self.ny,
            m_recip: &self.m_recip,
            l1: &self.l1,
            u1: &self.u1,
            l2: &self.l2,
            u2: &self.u2,
        };
        plane_solve(&WorkerTeam::serial(), view, x, &mut tmp, super::chain::DEFAULT_LANES, false);
    }
}

/// Level-2 factorization of a standalone plane block.
pub fn factor_level2(plane: &PlaneBands) -> Result<PlaneFactor> {
    let n = plane.len();
    let mut f = PlaneFactor {
        nx: plane.nx,
        ny: plane.ny,
        l1: vec![0.0; n],
        u1: vec![0.0; n],
        m_recip: vec![0.0; n],
        l2: vec![0.0; n],
        u2: vec![0.0; n],
    };
    let mut out = FactorOut {
        l1: &mut f.l1,
        u1: &mut f.u1,
        m_recip: &mut f.m_recip,
        l2: &mut f.l2,
        u2: &mut f.u2,
    };
    factor_plane_into(plane, &mut out, 0, 0, super::chain::DEFAULT_LANES)?;
    Ok(f)
}

/// Working state carried out of one half of the level-3 sweep: the last
/// plane block formed and its filtering diagonal.
struct SweepTail {
    plane: PlaneBands,
    beta: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
fn plane_beta(
    out: &mut FactorOut<'_>,
    nx: usize,
    ny: usize,
    coupling: &[f64],
    tmp: &mut [f64],
    beta: &mut [f64],
    plane_index: usize,
    first_row: usize,
) -> Result<()> {
    let team = WorkerTeam::serial();
    let view = out.view(nx, ny);
    compute_beta(
        |v| plane_solve(&team, view, v, tmp, super::chain::DEFAULT_LANES, false),
        coupling,
        beta,
    )
    .map_err(|b| SolverError::Factorization {
        level: 3,
        block: plane_index,
        row: first_row + b.index,
        value: b.value,
    })
}

fn sweep_down(a: &BandedMatrix, mut out: FactorOut<'_>, planes: usize) -> Result<Option<SweepTail>> {
    if planes == 0 {
        return Ok(None);
    }
    let dims = a.dims();
    let (nx, ny, nxy) = (dims.nx, dims.ny, dims.nxy());
    let l3 = a.band(Band::ZMinus);
    let u3 = a.band(Band::ZPlus);
    let rows = |p: usize| p * nxy..(p + 1) * nxy;

    let mut cur = PlaneBands::zeros(nx, ny);
    let mut prev = PlaneBands::zeros(nx, ny);
    let mut beta = vec![0.0; nxy];
    let mut tmp = vec![0.0; nxy];
    for p in 0..planes {
        cur.load(a, p);
        if p > 0 {
            cur.subtract_filtered(&prev, &l3[rows(p)], &beta, &u3[rows(p - 1)]);
        }
        let mut po = out.plane(p, nxy);
        factor_plane_into(&cur, &mut po, p, p * nxy, super::chain::DEFAULT_LANES)?;
        plane_beta(&mut po, nx, ny, &u3[rows(p)], &mut tmp, &mut beta, p, p * nxy)?;
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(Some(SweepTail { plane: prev, beta }))
}

/// Bottom-up half: `out` covers planes `first..nz`.
fn sweep_up(a: &BandedMatrix, mut out: FactorOut<'_>, first: usize) -> Result<Option<SweepTail>> {
    let dims = a.dims();
    let (nx, ny, nz, nxy) = (dims.nx, dims.ny, dims.nz, dims.nxy());
    if first >= nz {
        return Ok(None);
    }
    let l3 = a.band(Band::ZMinus);
    let u3 = a.band(Band::ZPlus);
    let rows = |p: usize| p * nxy..(p + 1) * nxy;

    let mut cur = PlaneBands::zeros(nx, ny);
    let mut prev = PlaneBands::zeros(nx, ny);
    let mut beta = vec![0.0; nxy];
    let mut tmp = vec![0.0; nxy];
    for p in (first..nz).rev() {
        cur.load(a, p);
        if p + 1 < nz {
            cur.subtract_filtered(&prev, &u3[rows(p)], &beta, &l3[rows(p + 1)]);
        }
        let mut po = out.plane(p - first, nxy);
        factor_plane_into(&cur, &mut po, p, p * nxy, super::chain::DEFAULT_LANES)?;
        plane_beta(&mut po, nx, ny, &l3[rows(p)], &mut tmp, &mut beta, p, p * nxy)?;
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(Some(SweepTail { plane: prev, beta }))
}

/// Builds the full NTD preconditioner of `a`. The planes above and below
/// the twist plane are processed concurrently when the team has workers to
/// spare; the result does not depend on the worker count.
pub fn factor_level3(a: &BandedMatrix, team: &WorkerTeam) -> Result<PreconBands> {
    let dims = a.dims();
    let n = dims.n();
    let nxy = dims.nxy();
    let mid = twist_index(dims.nz) - 1;

    let mut l1 = vec![0.0; n];
    let mut u1 = vec![0.0; n];
    let mut m_recip = vec![0.0; n];
    let mut l2 = vec![0.0; n];
    let mut u2 = vec![0.0; n];
    let out = FactorOut {
        l1: &mut l1,
        u1: &mut u1,
        m_recip: &mut m_recip,
        l2: &mut l2,
        u2: &mut u2,
    };
    let (top_out, mut mid_out, bottom_out) = out.split3(mid, nxy);

    let (top, bottom) = team.join(
        team.workers() >= 2,
        || sweep_down(a, top_out, mid),
        || sweep_up(a, bottom_out, mid + 1),
    );
    let (top, bottom) = (top?, bottom?);

    let l3 = a.band(Band::ZMinus);
    let u3 = a.band(Band::ZPlus);
    let rows = |p: usize| p * nxy..(p + 1) * nxy;
    let mut cur = PlaneBands::from_matrix(a, mid);
    if let Some(t) = &top {
        cur.subtract_filtered(&t.plane, &l3[rows(mid)], &t.beta, &u3[rows(mid - 1)]);
    }
    if let Some(b) = &bottom {
        cur.subtract_filtered(&b.plane, &u3[rows(mid)], &b.beta, &l3[rows(mid + 1)]);
    }
    factor_plane_into(&cur, &mut mid_out, mid, mid * nxy, super::chain::DEFAULT_LANES)?;

    Ok(PreconBands {
        dims,
        l1,
        u1,
        l2,
        u2,
        l3: l3.to_vec(),
        u3: u3.to_vec(),
        m_recip,
    })
}
