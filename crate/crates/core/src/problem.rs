//! Diffusion test problems `-div(kappa grad u) = f` on the unit cube with
//! homogeneous Dirichlet boundaries.
//!
//! The operator is a cell-centred finite-volume stencil multiplied by `h^2`:
//! interior faces carry the harmonic mean of the two adjacent cell values,
//! boundary faces carry the interior cell's own value and only contribute to
//! the diagonal.

use crate::banded::{Band, BandedMatrix, Dims};
use crate::error::{Result, SolverError};
use crate::team::WorkerTeam;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub dims: Dims,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Result<Self> {
        Ok(Self {
            dims: Dims::new(nx, ny, nz)?,
        })
    }

    pub fn cube(n: usize) -> Result<Self> {
        Self::new(n, n, n)
    }

    /// Mesh width per axis, `1 / (n + 1)`. The scaled operator does not
    /// depend on it.
    pub fn h(&self) -> [f64; 3] {
        let d = self.dims;
        [d.nx, d.ny, d.nz].map(|n| 1.0 / (n as f64 + 1.0))
    }

    /// Centre of cell `(i, j, k)`, zero-based.
    pub fn cell_center(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        let d = self.dims;
        [
            (i as f64 + 0.5) / d.nx as f64,
            (j as f64 + 0.5) / d.ny as f64,
            (k as f64 + 0.5) / d.nz as f64,
        ]
    }
}

/// Diffusion coefficient fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CoefficientField {
    /// Type 1: isolated high-permeability cubes in a checkerboard, with
    /// strength growing along the second axis.
    Skyscraper = 1,
    /// Type 2: a spherical shell of value `1e3` around the cube centre.
    Ring = 2,
    /// Type 3: constant coefficient.
    Poisson = 3,
}

impl CoefficientField {
    pub fn from_type(t: u8) -> Option<Self> {
        match t {
            1 => Some(Self::Skyscraper),
            2 => Some(Self::Ring),
            3 => Some(Self::Poisson),
            _ => None,
        }
    }

    pub fn type_id(self) -> u8 {
        self as u8
    }
}

pub fn kappa_eval(field: CoefficientField, point: [f64; 3]) -> Result<f64> {
    if !point.iter().all(|&c| c > 0.0 && c < 1.0) {
        return Err(SolverError::Domain { point });
    }
    let value = match field {
        CoefficientField::Skyscraper => {
            let cells = point.map(|c| (10.0 * c).floor() as i64);
            if cells.iter().all(|c| c % 2 == 0) {
                1e3 * (cells[1] as f64 + 1.0)
            } else {
                1.0
            }
        }
        CoefficientField::Ring => {
            let r = point
                .iter()
                .map(|c| (c - 0.5) * (c - 0.5))
                .sum::<f64>()
                .sqrt();
            let inner = 1.0 / (2.0 * std::f64::consts::SQRT_2);
            if (inner..=0.5).contains(&r) {
                1e3
            } else {
                1.0
            }
        }
        CoefficientField::Poisson => 1.0,
    };
    Ok(value)
}

fn harmonic_mean(a: f64, b: f64) -> f64 {
    2.0 * (a * b) / (a + b)
}

/// Assembles the scaled 7-point operator for `field` on `grid`.
pub fn assemble(grid: &GridSpec, field: CoefficientField) -> BandedMatrix {
    assemble_with(grid, field, &WorkerTeam::serial())
}

pub fn assemble_with(grid: &GridSpec, field: CoefficientField, team: &WorkerTeam) -> BandedMatrix {
    let dims = grid.dims;
    let n = dims.n();

    let mut kappa = vec![0.0; n];
    team.for_each_row_block(&mut kappa, |start, block| {
        for (off, v) in block.iter_mut().enumerate() {
            let (i, j, k) = dims.coords(start + off);
            *v = kappa_eval(field, grid.cell_center(i, j, k))
                .expect("cell centres lie strictly inside the unit cube");
        }
    });

    let mut a = BandedMatrix::zeros(dims);
    for band in Band::OFF_DIAGONAL {
        let d = band.offset(dims);
        let kappa = &kappa;
        team.for_each_row_block(a.band_mut(band), |start, block| {
            for (off, v) in block.iter_mut().enumerate() {
                let row = start + off;
                if band.is_structural(dims, row) {
                    let col = (row as isize + d) as usize;
                    *v = -harmonic_mean(kappa[row], kappa[col]);
                }
            }
        });
    }

    // Faces in the fixed order x-, x+, y-, y+, z-, z+.
    const FACE_ORDER: [Band; 6] = [
        Band::XMinus,
        Band::XPlus,
        Band::YMinus,
        Band::YPlus,
        Band::ZMinus,
        Band::ZPlus,
    ];
    let mut diag = vec![0.0; n];
    {
        let a = &a;
        let kappa = &kappa;
        team.for_each_row_block(&mut diag, |start, block| {
            for (off, v) in block.iter_mut().enumerate() {
                let row = start + off;
                let mut sum = 0.0;
                for face in FACE_ORDER {
                    sum += if face.is_structural(dims, row) {
                        -a.band(face)[row]
                    } else {
                        kappa[row]
                    };
                }
                *v = sum;
            }
        });
    }
    a.band_mut(Band::Diag).copy_from_slice(&diag);
    a
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RhsMode {
    /// `b = 1`.
    Ones,
    /// `b = A 1`, so the exact solution is the all-ones vector.
    ManufacturedOnes,
}

pub fn make_rhs(a: &BandedMatrix, mode: RhsMode) -> Vec<f64> {
    let ones = vec![1.0; a.n_rows()];
    match mode {
        RhsMode::Ones => ones,
        RhsMode::ManufacturedOnes => a.mul_vec(&ones).expect("length matches by construction"),
    }
}
