mod common;

use common::*;
use ntd_core::{Band, CoefficientField};

#[test]
fn assembled_matrices_are_spd() {
    for nx in 1..=5 {
        for ny in 1..=5 {
            for nz in 1..=5 {
                for field in FIELDS {
                    let a = problem(nx, ny, nz, field);
                    assert!(a.is_symmetric());
                    let eig = dense(&a).symmetric_eigenvalues();
                    assert!(eig.min() > 0.0, "{nx}x{ny}x{nz} {field:?}");
                }
            }
        }
    }
}

#[test]
fn coefficient_jumps_are_present() {
    for field in [CoefficientField::Skyscraper, CoefficientField::Ring] {
        let a = problem(20, 20, 20, field);
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for band in Band::OFF_DIAGONAL {
            for &v in a.band(band) {
                if v != 0.0 {
                    lo = lo.min(v.abs());
                    hi = hi.max(v.abs());
                }
            }
        }
        assert!(hi / lo >= 1e3, "{field:?}: {hi} / {lo}");
    }
}
