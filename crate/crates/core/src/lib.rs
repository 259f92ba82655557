//! Structured-grid diffusion solver built around the nested twisted
//! frequency-filtering decomposition (NTD).
//!
//! The crate covers the whole pipeline:
//!
//! * [`banded`]: 7-band storage of the structured-grid operator, banded SpMV
//!   and the dense-vector kernels used by the Krylov driver.
//! * [`problem`]: the three diffusion test problems (skyscraper, ring,
//!   Poisson) assembled with a cell-centred finite-volume stencil.
//! * [`ntd`]: the three nested twisted recurrences with all-ones filtering
//!   and the recursive twisted solve with lane-chained bidiagonal base case.
//! * [`ilu0`]: zero-fill ILU of the two diagonal halves of the operator.
//! * [`pcg`]: the multiplicative NTD+ILU0 combination and preconditioned CG.
//!
//! Row ordering is lexicographic with `x` fastest: row `i + nx*(j + ny*k)`
//! holds grid point `(i, j, k)`. Lines run along `x`, planes are `z = const`.

pub mod banded;
pub mod error;
pub mod ilu0;
pub mod ntd;
pub mod pcg;
pub mod problem;
pub mod team;

pub use banded::{axpy, dot, norm2, Band, BandedMatrix, Dims};
pub use error::{Result, SolverError};
pub use ilu0::{build_block_ilu0, Ilu0Factors, Ilu0Solver};
pub use ntd::{factor_level3, ntd_apply, twist_index, NtdSolver, PreconBands};
pub use pcg::{pcg, CombinedPrecond, Identity, PcgOptions, Preconditioner, SolveStats};
pub use problem::{assemble, assemble_with, kappa_eval, make_rhs, CoefficientField, GridSpec, RhsMode};
pub use team::WorkerTeam;
