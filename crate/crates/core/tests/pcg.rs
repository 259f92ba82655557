mod common;

use std::sync::Arc;

use common::*;
use nalgebra::DVector;
use ntd_core::{
    build_block_ilu0, make_rhs, norm2, pcg, BandedMatrix, CoefficientField, CombinedPrecond, Identity,
    Ilu0Solver, NtdSolver, PcgOptions, Preconditioner, RhsMode, WorkerTeam,
};

fn combined<'a>(a: &'a BandedMatrix, team: &Arc<WorkerTeam>) -> CombinedPrecond<'a> {
    let ntd = NtdSolver::new(a, team.clone()).unwrap();
    let ilu = build_block_ilu0(a, team).unwrap();
    CombinedPrecond::new(a, ntd, ilu).unwrap()
}

#[test]
fn combination_matches_three_term_expansion() {
    let mut rng = rng(12);
    let a = problem(3, 3, 3, CoefficientField::Skyscraper);
    let team = Arc::new(WorkerTeam::serial());
    let mut c = combined(&a, &team);
    let n = a.n_rows();
    let r = random_vec(&mut rng, n);
    let mut z = vec![0.0; n];
    c.apply(&r, &mut z).unwrap();

    let ad = dense(&a);
    let bn = materialize(&ntd_core::factor_level3(&a, &team).unwrap());
    let lu = reference_ilu0(&ad);
    let l = lu.lower_triangle() - nalgebra::DMatrix::from_diagonal(&lu.diagonal()) + nalgebra::DMatrix::identity(n, n);
    let bi = &l * lu.upper_triangle();
    let rv = DVector::from_vec(r);
    let bn_r = bn.clone().lu().solve(&rv).unwrap();
    let bi_r = bi.clone().lu().solve(&rv).unwrap();
    let cross = bn.lu().solve(&(&ad * &bi_r)).unwrap();
    let want = bn_r + bi_r - cross;
    assert!(rel_err(&z, want.as_slice()) <= 1e-12);
}

#[test]
fn combination_is_linear() {
    let mut rng = rng(13);
    let a = problem(5, 4, 3, CoefficientField::Ring);
    let team = Arc::new(WorkerTeam::serial());
    let mut c = combined(&a, &team);
    let n = a.n_rows();
    let (u, v) = (random_vec(&mut rng, n), random_vec(&mut rng, n));
    let mix: Vec<f64> = u.iter().zip(&v).map(|(p, q)| 2.0 * p - 0.5 * q).collect();
    let (mut zu, mut zv, mut zm) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    c.apply(&u, &mut zu).unwrap();
    c.apply(&v, &mut zv).unwrap();
    c.apply(&mix, &mut zm).unwrap();
    let combo: Vec<f64> = zu.iter().zip(&zv).map(|(p, q)| 2.0 * p - 0.5 * q).collect();
    assert!(rel_err(&zm, &combo) <= 1e-12);
}

#[test]
fn mismatched_components_are_rejected() {
    let a = problem(3, 3, 3, CoefficientField::Poisson);
    let other = problem(3, 3, 2, CoefficientField::Poisson);
    let team = Arc::new(WorkerTeam::serial());
    let ntd = NtdSolver::new(&other, team.clone()).unwrap();
    let ilu = build_block_ilu0(&a, &team).unwrap();
    assert!(CombinedPrecond::new(&a, ntd, ilu).is_err());
}

/// Plain CG with the same operation order and stopping rule.
fn textbook_cg(a: &BandedMatrix, b: &[f64], tol: f64, max_iters: usize) -> usize {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    let bn = norm2(b);
    for k in 0..max_iters {
        let q = a.mul_vec(&p).unwrap();
        let pq: f64 = p.iter().zip(&q).map(|(s, t)| s * t).sum();
        let alpha = rr / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        let ax = a.mul_vec(&x).unwrap();
        let res: Vec<f64> = b.iter().zip(&ax).map(|(s, t)| s - t).collect();
        if norm2(&res) / bn < tol {
            return k + 1;
        }
        let rr_new: f64 = r.iter().map(|v| v * v).sum();
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    max_iters
}

#[test]
fn unpreconditioned_matches_textbook_cg() {
    let a = problem(20, 20, 20, CoefficientField::Poisson);
    let b = vec![1.0; a.n_rows()];
    for tol in [1e-7, 1e-10] {
        let opts = PcgOptions { tol, max_iters: 500 };
        let (_, st) = pcg(&a, &b, &mut Identity, &opts, &WorkerTeam::serial()).unwrap();
        assert!(st.converged);
        assert_eq!(st.iterations, textbook_cg(&a, &b, tol, 500));
    }
}

#[test]
fn manufactured_solution_is_recovered() {
    for field in FIELDS {
        let a = problem(12, 12, 12, field);
        let team = Arc::new(WorkerTeam::serial());
        let b = make_rhs(&a, RhsMode::ManufacturedOnes);
        for tol in [1e-7, 1e-10] {
            let mut c = combined(&a, &team);
            let (x, st) = pcg(&a, &b, &mut c, &PcgOptions { tol, max_iters: 200 }, &team).unwrap();
            assert!(st.converged, "{field:?} {tol}");
            let ones = vec![1.0; x.len()];
            assert!(rel_err(&x, &ones) <= 100.0 * tol, "{field:?} {tol}: {}", rel_err(&x, &ones));
        }
    }
}

#[test]
fn history_has_one_entry_per_iteration() {
    let a = problem(10, 10, 10, CoefficientField::Skyscraper);
    let team = Arc::new(WorkerTeam::serial());
    let mut c = combined(&a, &team);
    let b = vec![1.0; a.n_rows()];
    let (_, st) = pcg(&a, &b, &mut c, &PcgOptions::default(), &team).unwrap();
    assert!(st.iterations > 0);
    assert_eq!(st.relres_history.len(), st.iterations);
    assert!(*st.relres_history.last().unwrap() < 1e-7);
}

#[test]
fn max_iterations_is_not_an_error() {
    let a = problem(10, 10, 10, CoefficientField::Skyscraper);
    let b = vec![1.0; a.n_rows()];
    let opts = PcgOptions { tol: 1e-12, max_iters: 3 };
    let (_, st) = pcg(&a, &b, &mut Identity, &opts, &WorkerTeam::serial()).unwrap();
    assert!(!st.converged);
    assert_eq!(st.iterations, 3);
}

#[test]
fn energy_error_is_non_increasing() {
    for field in FIELDS {
        let a = problem(10, 10, 10, field);
        let team = Arc::new(WorkerTeam::serial());
        let b = make_rhs(&a, RhsMode::ManufacturedOnes);
        let mut last = f64::INFINITY;
        for k in 1..=12 {
            let mut c = combined(&a, &team);
            let (x, st) = pcg(&a, &b, &mut c, &PcgOptions { tol: 1e-14, max_iters: k }, &team).unwrap();
            let e: Vec<f64> = x.iter().map(|v| v - 1.0).collect();
            let ae = a.mul_vec(&e).unwrap();
            let energy: f64 = e.iter().zip(&ae).map(|(p, q)| p * q).sum::<f64>().sqrt();
            assert!(energy <= last * (1.0 + 1e-10), "{field:?} k={k}: {energy:e} > {last:e}");
            last = energy;
            if st.converged {
                break;
            }
        }
    }
}

#[test]
fn recursive_residual_tracks_true_residual() {
    for field in FIELDS {
        let a = problem(16, 16, 16, field);
        let team = Arc::new(WorkerTeam::serial());
        let b = vec![1.0; a.n_rows()];
        for tol in [1e-7, 1e-10] {
            let mut c = combined(&a, &team);
            let (_, st) = pcg(&a, &b, &mut c, &PcgOptions { tol, max_iters: 200 }, &team).unwrap();
            assert!((st.recursive_relres - st.final_relres()).abs() <= 1e-6, "{field:?} {tol}");
        }
    }
}

#[test]
fn filtering_accelerates_convergence() {
    let a = problem(30, 30, 30, CoefficientField::Skyscraper);
    let team = Arc::new(WorkerTeam::serial());
    let b = vec![1.0; a.n_rows()];
    let opts = PcgOptions { tol: 1e-7, max_iters: 3000 };
    let mut c = combined(&a, &team);
    let (_, with_c) = pcg(&a, &b, &mut c, &opts, &team).unwrap();
    let mut ilu = Ilu0Solver::new(&a, team.clone()).unwrap();
    let (_, with_ilu) = pcg(&a, &b, &mut ilu, &opts, &team).unwrap();
    let (_, plain) = pcg(&a, &b, &mut Identity, &opts, &team).unwrap();
    assert!(with_c.iterations < with_ilu.iterations, "{} vs {}", with_c.iterations, with_ilu.iterations);
    assert!(with_ilu.iterations < plain.iterations, "{} vs {}", with_ilu.iterations, plain.iterations);
}

#[test]
fn workers_do_not_change_the_iterates() {
    let a = problem(14, 13, 12, CoefficientField::Ring);
    let b = vec![1.0; a.n_rows()];
    let mut runs = Vec::new();
    for w in [1, 2, 4] {
        let team = Arc::new(WorkerTeam::new(w).unwrap());
        let mut c = combined(&a, &team);
        runs.push(pcg(&a, &b, &mut c, &PcgOptions::default(), &team).unwrap());
    }
    for (x, st) in &runs[1..] {
        assert_eq!(st.iterations, runs[0].1.iterations);
        assert!(x.iter().zip(&runs[0].0).all(|(p, q)| p.to_bits() == q.to_bits()));
    }
}
