//! Diagonal-format storage for 7-point structured-grid operators.
//!
//! Every band is a length-`N` array indexed by row: entry `k` of the band with
//! offset `d` holds `A[k, k+d]`. Positions whose column would leave the matrix
//! or cross a line (for `±1`) or plane (for `±nx`) boundary are stored as 0.

use std::io::Write;

use crate::error::{Result, SolverError};
use crate::team::WorkerTeam;

/// Grid extents. `nx` is the fastest-varying index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dims {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl Dims {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Result<Self> {
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(SolverError::InvalidGrid { nx, ny, nz });
        }
        Ok(Self { nx, ny, nz })
    }

    pub fn cube(n: usize) -> Result<Self> {
        Self::new(n, n, n)
    }

    pub fn n(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn nxy(&self) -> usize {
        self.nx * self.ny
    }

    /// `(i, j, k)` grid coordinates of a row.
    pub fn coords(&self, row: usize) -> (usize, usize, usize) {
        let i = row % self.nx;
        let j = (row / self.nx) % self.ny;
        let k = row / self.nxy();
        (i, j, k)
    }
}

/// The seven diagonals of a 7-point stencil, ordered by offset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Band {
    ZMinus,
    YMinus,
    XMinus,
    Diag,
    XPlus,
    YPlus,
    ZPlus,
}

impl Band {
    pub const ALL: [Band; 7] = [
        Band::ZMinus,
        Band::YMinus,
        Band::XMinus,
        Band::Diag,
        Band::XPlus,
        Band::YPlus,
        Band::ZPlus,
    ];

    pub const OFF_DIAGONAL: [Band; 6] = [
        Band::ZMinus,
        Band::YMinus,
        Band::XMinus,
        Band::XPlus,
        Band::YPlus,
        Band::ZPlus,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn offset(self, dims: Dims) -> isize {
        let nx = dims.nx as isize;
        let nxy = dims.nxy() as isize;
        match self {
            Band::ZMinus => -nxy,
            Band::YMinus => -nx,
            Band::XMinus => -1,
            Band::Diag => 0,
            Band::XPlus => 1,
            Band::YPlus => nx,
            Band::ZPlus => nxy,
        }
    }

    pub fn mirror(self) -> Band {
        match self {
            Band::ZMinus => Band::ZPlus,
            Band::YMinus => Band::YPlus,
            Band::XMinus => Band::XPlus,
            Band::Diag => Band::Diag,
            Band::XPlus => Band::XMinus,
            Band::YPlus => Band::YMinus,
            Band::ZPlus => Band::ZMinus,
        }
    }

    /// Whether `row` has a grid neighbour in this direction.
    pub fn is_structural(self, dims: Dims, row: usize) -> bool {
        let (i, j, k) = dims.coords(row);
        match self {
            Band::ZMinus => k > 0,
            Band::YMinus => j > 0,
            Band::XMinus => i > 0,
            Band::Diag => true,
            Band::XPlus => i + 1 < dims.nx,
            Band::YPlus => j + 1 < dims.ny,
            Band::ZPlus => k + 1 < dims.nz,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BandedMatrix {
    dims: Dims,
    bands: [Vec<f64>; 7],
}

impl BandedMatrix {
    pub fn zeros(dims: Dims) -> Self {
        let n = dims.n();
        Self {
            dims,
            bands: std::array::from_fn(|_| vec![0.0; n]),
        }
    }

    pub fn identity(dims: Dims) -> Self {
        let mut m = Self::zeros(dims);
        m.bands[Band::Diag.index()].fill(1.0);
        m
    }

    /// Builds a matrix from `f(row, band)`, evaluated only at structural
    /// positions; every other position is zero.
    pub fn from_fn<F>(dims: Dims, mut f: F) -> Self
    where
        F: FnMut(usize, Band) -> f64,
    {
        let mut m = Self::zeros(dims);
        for row in 0..dims.n() {
            for band in Band::ALL {
                if band.is_structural(dims, row) {
                    m.bands[band.index()][row] = f(row, band);
                }
            }
        }
        m
    }

    /// Wraps raw band arrays (in [`Band::ALL`] order) after checking their
    /// lengths and boundary padding.
    pub fn from_bands(dims: Dims, bands: [Vec<f64>; 7]) -> Result<Self> {
        let n = dims.n();
        for band in Band::ALL {
            let values = &bands[band.index()];
            if values.len() != n {
                return Err(SolverError::Dimension {
                    expected: n,
                    found: values.len(),
                });
            }
            if let Some(row) =
                (0..n).find(|&r| values[r] != 0.0 && !band.is_structural(dims, r))
            {
                return Err(SolverError::InvalidBands(format!(
                    "{band:?} has nonzero padding at row {row}"
                )));
            }
        }
        Ok(Self { dims, bands })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn n_rows(&self) -> usize {
        self.dims.n()
    }

    pub fn band(&self, band: Band) -> &[f64] {
        &self.bands[band.index()]
    }

    pub(crate) fn band_mut(&mut self, band: Band) -> &mut [f64] {
        &mut self.bands[band.index()]
    }

    /// Entry `A[row, col]`, zero off the stencil.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        let d = col as isize - row as isize;
        Band::ALL
            .iter()
            .find(|b| b.offset(self.dims) == d && b.is_structural(self.dims, row))
            .map_or(0.0, |b| self.bands[b.index()][row])
    }

    /// Row-major dense copy. Only sensible for small grids.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n_rows();
        let mut dense = vec![0.0; n * n];
        for row in 0..n {
            for band in Band::ALL {
                if band.is_structural(self.dims, row) {
                    let col = (row as isize + band.offset(self.dims)) as usize;
                    dense[row * n + col] = self.bands[band.index()][row];
                }
            }
        }
        dense
    }

    /// Whether every structural entry equals its transpose partner bitwise.
    pub fn is_symmetric(&self) -> bool {
        Band::OFF_DIAGONAL.iter().all(|&band| {
            let d = band.offset(self.dims);
            (0..self.n_rows()).all(|row| {
                !band.is_structural(self.dims, row) || {
                    let col = (row as isize + d) as usize;
                    self.bands[band.index()][row].to_bits()
                        == self.bands[band.mirror().index()][col].to_bits()
                }
            })
        })
    }

    /// `y = A x` over contiguous row blocks, one block per worker.
    pub fn spmv(&self, x: &[f64], y: &mut [f64], team: &WorkerTeam) -> Result<()> {
        let n = self.n_rows();
        check_len(n, x.len())?;
        check_len(n, y.len())?;
        team.for_each_row_block(y, |start, block| self.spmv_rows(x, start, block));
        Ok(())
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.n_rows()];
        self.spmv(x, &mut y, &WorkerTeam::serial())?;
        Ok(y)
    }

    /// Rows `start..start + y.len()` of `A x`. The per-row summation order is
    /// fixed (diagonal, then bands by increasing offset) so the result does
    /// not depend on how rows are blocked.
    fn spmv_rows(&self, x: &[f64], start: usize, y: &mut [f64]) {
        let n = self.n_rows() as isize;
        let end = start + y.len();
        let diag = &self.bands[Band::Diag.index()][start..end];
        for ((yi, &d), &xi) in y.iter_mut().zip(diag).zip(&x[start..end]) {
            *yi = d * xi;
        }
        for band in Band::OFF_DIAGONAL {
            let d = band.offset(self.dims);
            let lo = (start as isize).max(-d).max(0) as usize;
            let hi = (end as isize).min(n - d.max(0)).max(lo as isize) as usize;
            let values = &self.bands[band.index()];
            let xs = &x[(lo as isize + d) as usize..(hi as isize + d) as usize];
            for ((yi, &a), &xj) in y[lo - start..hi - start]
                .iter_mut()
                .zip(&values[lo..hi])
                .zip(xs)
            {
                *yi += a * xj;
            }
        }
    }

    /// MatrixMarket coordinate export (1-indexed, every stored entry written).
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.n_rows();
        let mut entries = Vec::new();
        for row in 0..n {
            for band in Band::ALL {
                let v = self.bands[band.index()][row];
                if band.is_structural(self.dims, row) && v != 0.0 {
                    let col = (row as isize + band.offset(self.dims)) as usize;
                    entries.push((row, col, v));
                }
            }
        }
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(
            w,
            "% 7-point operator on a {}x{}x{} grid",
            self.dims.nx, self.dims.ny, self.dims.nz
        )?;
        writeln!(w, "{n} {n} {}", entries.len())?;
        for (r, c, v) in entries {
            writeln!(w, "{} {} {:.17e}", r + 1, c + 1, v)?;
        }
        Ok(())
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(SolverError::Dimension { expected, found });
    }
    Ok(())
}

pub fn dot(x: &[f64], y: &[f64]) -> Result<f64> {
    check_len(x.len(), y.len())?;
    Ok(x.iter().zip(y).map(|(a, b)| a * b).sum())
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) -> Result<()> {
    check_len(x.len(), y.len())?;
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
    Ok(())
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
