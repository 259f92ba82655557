#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use ntd_core::{assemble, BandedMatrix, CoefficientField, Dims, GridSpec, PreconBands};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FIELDS: [CoefficientField; 3] = [
    CoefficientField::Skyscraper,
    CoefficientField::Ring,
    CoefficientField::Poisson,
];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn grid(nx: usize, ny: usize, nz: usize) -> GridSpec {
    GridSpec::new(nx, ny, nz).unwrap()
}

pub fn problem(nx: usize, ny: usize, nz: usize, field: CoefficientField) -> BandedMatrix {
    assemble(&grid(nx, ny, nz), field)
}

pub fn dense(a: &BandedMatrix) -> DMatrix<f64> {
    let n = a.n_rows();
    DMatrix::from_row_slice(n, n, &a.to_dense())
}

pub fn rel_err(x: &[f64], y: &[f64]) -> f64 {
    let num: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let den: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

pub fn max_rel_entry(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    let scale = y.amax().max(f64::MIN_POSITIVE);
    (x - y).amax() / scale
}

/// `(D + L)(I + D^{-1} U)` for a block-tridiagonal coupling given by
/// row-indexed `lower`/`upper` bands of stride `size`, with the coupling to
/// the previous block in `L` above the twist and in `U` below it (and the
/// reverse for the coupling to the next block).
pub fn twisted_product(blocks: &[DMatrix<f64>], lower: &[f64], upper: &[f64]) -> DMatrix<f64> {
    let nb = blocks.len();
    let size = blocks[0].nrows();
    let n = nb * size;
    let mid = (nb - 1) / 2;
    let mut d = DMatrix::zeros(n, n);
    let mut l = DMatrix::zeros(n, n);
    let mut u = DMatrix::zeros(n, n);
    for (i, blk) in blocks.iter().enumerate() {
        d.view_mut((i * size, i * size), (size, size)).copy_from(blk);
        for k in 0..size {
            let row = i * size + k;
            if i > 0 {
                let target = if i <= mid { &mut l } else { &mut u };
                target[(row, row - size)] = lower[row];
            }
            if i + 1 < nb {
                let target = if i >= mid { &mut l } else { &mut u };
                target[(row, row + size)] = upper[row];
            }
        }
    }
    let dinv_u = d.clone().lu().solve(&u).expect("block diagonal is invertible");
    (d + l) * (DMatrix::identity(n, n) + dinv_u)
}

/// `T` for one plane (or any run of whole lines) starting at global row `r0`.
pub fn materialize_lines(pb: &PreconBands, r0: usize, lines: usize) -> Vec<DMatrix<f64>> {
    let nx = pb.dims.nx;
    (0..lines)
        .map(|line| {
            let s = r0 + line * nx;
            let blocks: Vec<DMatrix<f64>> = (0..nx)
                .map(|k| DMatrix::from_element(1, 1, 1.0 / pb.m_recip[s + k]))
                .collect();
            twisted_product(&blocks, &pb.l1[s..s + nx], &pb.u1[s..s + nx])
        })
        .collect()
}

/// `B_NTD` assembled from the stored bands.
pub fn materialize(pb: &PreconBands) -> DMatrix<f64> {
    let Dims { ny, nz, .. } = pb.dims;
    let nxy = pb.dims.nxy();
    let planes: Vec<DMatrix<f64>> = (0..nz)
        .map(|p| {
            let r = p * nxy..(p + 1) * nxy;
            let t = materialize_lines(pb, r.start, ny);
            twisted_product(&t, &pb.l2[r.clone()], &pb.u2[r])
        })
        .collect();
    twisted_product(&planes, &pb.l3, &pb.u3)
}

/// Independent dense construction of the nested twisted preconditioner:
/// block sizes from the outermost level inwards, e.g. `[nx*ny, nx, 1]`.
pub fn reference_ntd(a: &DMatrix<f64>, sizes: &[usize]) -> DMatrix<f64> {
    reference_ntd_with(a, sizes, 0, &mut |_, _, _| {})
}

/// Working line blocks `T_i` of the reference construction, in row order.
pub fn reference_line_blocks(a: &DMatrix<f64>, nx: usize, ny: usize) -> Vec<DMatrix<f64>> {
    let mut found: Vec<(usize, DMatrix<f64>)> = Vec::new();
    reference_ntd_with(a, &[nx * ny, nx, 1], 0, &mut |depth, start, blk| {
        if depth == 2 {
            found.push((start, blk.clone()));
        }
    });
    found.sort_by_key(|(s, _)| *s);
    found.into_iter().map(|(_, b)| b).collect()
}

/// Reports every final working block as `(levels left, first row, block)`.
type Sink<'a> = dyn FnMut(usize, usize, &DMatrix<f64>) + 'a;

fn reference_ntd_with(a: &DMatrix<f64>, sizes: &[usize], offset: usize, sink: &mut Sink<'_>) -> DMatrix<f64> {
    let n = a.nrows();
    let s = sizes[0];
    let nb = n / s;
    let mid = (nb - 1) / 2;
    let blk = |i: usize, j: usize| a.view((i * s, j * s), (s, s)).clone_owned();
    let mut approx = |i: usize, p: &DMatrix<f64>| {
        sink(sizes.len(), offset + i * s, p);
        if sizes.len() == 1 {
            p.clone()
        } else {
            reference_ntd_with(p, &sizes[1..], offset + i * s, sink)
        }
    };
    // lc: couples the current block to the neighbour; uc: the reverse.
    let correction = |p: &DMatrix<f64>, b: &DMatrix<f64>, lc: DMatrix<f64>, uc: DMatrix<f64>| {
        let u = uc.diagonal();
        let w = b.clone().lu().solve(&u).unwrap();
        let beta = DVector::from_iterator(s, (0..s).map(|k| if u[k] != 0.0 { w[k] / u[k] } else { 0.0 }));
        let bt = DMatrix::from_diagonal(&beta);
        let inner = &bt * 2.0 - &bt * p * &bt;
        lc * inner * uc
    };
    let mut p: Vec<Option<DMatrix<f64>>> = vec![None; nb];
    let mut b: Vec<Option<DMatrix<f64>>> = vec![None; nb];
    for i in 0..mid {
        let mut pi = blk(i, i);
        if i > 0 {
            pi -= correction(p[i - 1].as_ref().unwrap(), b[i - 1].as_ref().unwrap(), blk(i, i - 1), blk(i - 1, i));
        }
        b[i] = Some(approx(i, &pi));
        p[i] = Some(pi);
    }
    for i in (mid + 1..nb).rev() {
        let mut pi = blk(i, i);
        if i + 1 < nb {
            pi -= correction(p[i + 1].as_ref().unwrap(), b[i + 1].as_ref().unwrap(), blk(i, i + 1), blk(i + 1, i));
        }
        b[i] = Some(approx(i, &pi));
        p[i] = Some(pi);
    }
    let mut pm = blk(mid, mid);
    if mid > 0 {
        pm -= correction(p[mid - 1].as_ref().unwrap(), b[mid - 1].as_ref().unwrap(), blk(mid, mid - 1), blk(mid - 1, mid));
    }
    if mid + 1 < nb {
        pm -= correction(p[mid + 1].as_ref().unwrap(), b[mid + 1].as_ref().unwrap(), blk(mid, mid + 1), blk(mid + 1, mid));
    }
    b[mid] = Some(approx(mid, &pm));

    let blocks: Vec<DMatrix<f64>> = b.into_iter().map(Option::unwrap).collect();
    let mut lower = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for r in 0..n {
        if r >= s {
            lower[r] = a[(r, r - s)];
        }
        if r + s < n {
            upper[r] = a[(r, r + s)];
        }
    }
    twisted_product(&blocks, &lower, &upper)
}

/// Dense zero-fill IKJ factorization of `blkdiag(A11, A22)`, split at
/// `n / 2`; returns the combined `L\U` matrix.
pub fn reference_ilu0(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let m = n / 2;
    let mut lu = a.clone();
    for i in 0..n {
        for j in 0..n {
            if (i < m) != (j < m) {
                lu[(i, j)] = 0.0;
            }
        }
    }
    let pattern: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| lu[(i, j)] != 0.0).collect()).collect();
    for i in 1..n {
        for k in 0..i {
            if !pattern[i][k] {
                continue;
            }
            lu[(i, k)] /= lu[(k, k)];
            for j in k + 1..n {
                if pattern[i][j] {
                    lu[(i, j)] -= lu[(i, k)] * lu[(k, j)];
                }
            }
        }
    }
    lu
}
