mod common;

use common::*;
use nalgebra::DVector;
use ntd_core::{build_block_ilu0, Band, BandedMatrix, CoefficientField, Dims, WorkerTeam};

#[test]
fn factors_match_dense_reference() {
    for nx in 1..=4 {
        for ny in 1..=4 {
            for nz in 1..=4 {
                if nx * ny * nz < 2 {
                    continue;
                }
                for field in FIELDS {
                    let a = problem(nx, ny, nz, field);
                    let f = build_block_ilu0(&a, &WorkerTeam::serial()).unwrap();
                    let lu = reference_ilu0(&dense(&a));
                    let dims = a.dims();
                    let m = f.split();
                    for row in 0..dims.n() {
                        for band in Band::ALL {
                            let ours = f.band(band)[row];
                            if !band.is_structural(dims, row) {
                                assert_eq!(ours, 0.0);
                                continue;
                            }
                            let col = (row as isize + band.offset(dims)) as usize;
                            if (row < m) != (col < m) {
                                assert_eq!(ours, 0.0, "crossing entry ({row},{col})");
                                continue;
                            }
                            let want = lu[(row, col)];
                            assert!(
                                (ours - want).abs() <= 1e-14 * want.abs(),
                                "{nx}x{ny}x{nz} {field:?} ({row},{col}): {ours} vs {want}"
                            );
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn solve_inverts_the_dense_factors() {
    let mut rng = rng(2);
    for field in FIELDS {
        let a = problem(4, 3, 4, field);
        let team = WorkerTeam::serial();
        let f = build_block_ilu0(&a, &team).unwrap();
        let lu = reference_ilu0(&dense(&a));
        let n = a.n_rows();
        let l = lu.lower_triangle() - nalgebra::DMatrix::from_diagonal(&lu.diagonal())
            + nalgebra::DMatrix::identity(n, n);
        let u = lu.upper_triangle();
        let r = random_vec(&mut rng, n);
        let mut z = vec![0.0; n];
        f.solve(&r, &mut z, &team).unwrap();
        let back = &l * &u * DVector::from_column_slice(&z);
        assert!(rel_err(back.as_slice(), &r) <= 1e-13, "{field:?}");
    }
}

#[test]
fn halves_are_independent() {
    let a = problem(5, 4, 6, CoefficientField::Skyscraper);
    let dims = a.dims();
    let base = build_block_ilu0(&a, &WorkerTeam::serial()).unwrap();
    let m = base.split();

    // Perturb every entry of the second half only.
    let perturbed = BandedMatrix::from_fn(dims, |row, band| {
        let v = a.band(band)[row];
        if row >= m { v * 1.25 } else { v }
    });
    let f = build_block_ilu0(&perturbed, &WorkerTeam::serial()).unwrap();
    for band in Band::ALL {
        assert_eq!(&f.band(band)[..m], &base.band(band)[..m]);
    }
    assert_ne!(&f.band(Band::Diag)[m..], &base.band(Band::Diag)[m..]);

    let mut rng = rng(9);
    let n = dims.n();
    let r = random_vec(&mut rng, n);
    let mut r2 = r.clone();
    for v in &mut r2[m..] {
        *v += 1.0;
    }
    let team = WorkerTeam::serial();
    let (mut z, mut z2) = (vec![0.0; n], vec![0.0; n]);
    base.solve(&r, &mut z, &team).unwrap();
    base.solve(&r2, &mut z2, &team).unwrap();
    assert_eq!(&z[..m], &z2[..m]);
}

#[test]
fn two_workers_match_one() {
    let a = problem(12, 11, 10, CoefficientField::Ring);
    let f1 = build_block_ilu0(&a, &WorkerTeam::serial()).unwrap();
    let team2 = WorkerTeam::new(2).unwrap();
    let f2 = build_block_ilu0(&a, &team2).unwrap();
    assert_eq!(f1, f2);
    let r: Vec<f64> = (0..a.n_rows()).map(|i| (i % 7) as f64 - 3.0).collect();
    let (mut z1, mut z2) = (vec![0.0; a.n_rows()], vec![0.0; a.n_rows()]);
    f1.solve(&r, &mut z1, &WorkerTeam::serial()).unwrap();
    f2.solve(&r, &mut z2, &team2).unwrap();
    assert_eq!(z1, z2);
}

#[test]
fn seven_point_stencil_only_updates_diagonal() {
    let a = problem(4, 4, 4, CoefficientField::Skyscraper);
    let f = build_block_ilu0(&a, &WorkerTeam::serial()).unwrap();
    let dims = a.dims();
    let m = f.split();
    for row in 0..dims.n() {
        for band in [Band::XPlus, Band::YPlus, Band::ZPlus] {
            let col = row as isize + band.offset(dims);
            if band.is_structural(dims, row) && (row < m) == ((col as usize) < m) {
                assert_eq!(f.band(band)[row], a.band(band)[row]);
            }
        }
    }
}

#[test]
fn odd_row_count_split() {
    let a = problem(3, 3, 3, CoefficientField::Poisson);
    let f = build_block_ilu0(&a, &WorkerTeam::serial()).unwrap();
    assert_eq!(f.split(), 13);
    assert_eq!(f.dims(), Dims::new(3, 3, 3).unwrap());
}
