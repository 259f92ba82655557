//! Lane-chained first-order recurrences.
//!
//! A bidiagonal substitution `x_i = (b_i - l_i x_{i-1}) / m_i` is an affine
//! map `x_i = a_i x_{i-1} + c_i`. Splitting the segment into `K` contiguous
//! chunks, each chunk composes its maps into one affine map of the value just
//! before it; the `K` chunk seeds then follow from a short stitching pass and
//! every chunk re-runs its own recurrence from the exact seed. Both passes
//! step all lanes together, so the inner loop is `K` independent chains.

/// Largest supported lane count.
pub const MAX_LANES: usize = 16;

/// Lane count used by the NTD solve.
pub const DEFAULT_LANES: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Row `i` couples to row `i - 1`.
    Forward,
    /// Row `i` couples to row `i + 1`.
    Backward,
}

/// One step of a bidiagonal recurrence at row `i`.
pub(crate) trait Step {
    /// The exact substitution formula.
    fn eval(&self, i: usize, rhs: f64, prev: f64) -> f64;
    /// `(a, c)` with `eval(i, rhs, p) ~= a * p + c`.
    fn affine(&self, i: usize, rhs: f64) -> (f64, f64);
}

/// `x_i = (b_i - off_i * x_prev) * recip_i`
pub(crate) struct Lower<'a> {
    pub recip: &'a [f64],
    pub off: &'a [f64],
}

impl Step for Lower<'_> {
    #[inline(always)]
    fn eval(&self, i: usize, rhs: f64, prev: f64) -> f64 {
        (rhs - self.off[i] * prev) * self.recip[i]
    }

    #[inline(always)]
    fn affine(&self, i: usize, rhs: f64) -> (f64, f64) {
        (-self.off[i] * self.recip[i], rhs * self.recip[i])
    }
}

/// `x_i = b_i - recip_i * (off_i * x_prev)`, the unit-diagonal factor
/// `I + M^{-1} U`.
pub(crate) struct UnitUpper<'a> {
    pub recip: &'a [f64],
    pub off: &'a [f64],
}

impl Step for UnitUpper<'_> {
    #[inline(always)]
    fn eval(&self, i: usize, rhs: f64, prev: f64) -> f64 {
        rhs - self.recip[i] * (self.off[i] * prev)
    }

    #[inline(always)]
    fn affine(&self, i: usize, rhs: f64) -> (f64, f64) {
        (-self.recip[i] * self.off[i], rhs)
    }
}

/// Solves the recurrence in place: `buf` holds the right-hand side on entry
/// and the solution on exit. `seed` is the already known value adjacent to
/// the segment (the predecessor of its first row in traversal order).
pub(crate) fn chain_in_place<S: Step>(
    step: &S,
    buf: &mut [f64],
    seed: f64,
    dir: Direction,
    lanes: usize,
) {
    let len = buf.len();
    let pos = |t: usize| match dir {
        Direction::Forward => t,
        Direction::Backward => len - 1 - t,
    };

    let lanes = lanes.clamp(1, MAX_LANES);
    if lanes == 1 || len < 2 * lanes {
        let mut prev = seed;
        for t in 0..len {
            let i = pos(t);
            prev = step.eval(i, buf[i], prev);
            buf[i] = prev;
        }
        return;
    }

    let chunk = len / lanes;
    let tail = len - lanes * chunk;

    // Compose each chunk's maps except the last, whose output is not needed.
    let mut scale = [1.0f64; MAX_LANES];
    let mut shift = [0.0f64; MAX_LANES];
    for t in 0..chunk {
        for lane in 0..lanes - 1 {
            let i = pos(lane * chunk + t);
            let (a, c) = step.affine(i, buf[i]);
            scale[lane] *= a;
            shift[lane] = a * shift[lane] + c;
        }
    }

    let mut prev = [0.0f64; MAX_LANES];
    prev[0] = seed;
    for lane in 1..lanes {
        prev[lane] = scale[lane - 1] * prev[lane - 1] + shift[lane - 1];
    }

    for t in 0..chunk {
        for (lane, p) in prev[..lanes].iter_mut().enumerate() {
            let i = pos(lane * chunk + t);
            let v = step.eval(i, buf[i], *p);
            buf[i] = v;
            *p = v;
        }
    }
    let last = lanes - 1;
    for t in lanes * chunk..lanes * chunk + tail {
        let i = pos(t);
        let v = step.eval(i, buf[i], prev[last]);
        buf[i] = v;
        prev[last] = v;
    }
}

/// Solves the lower-bidiagonal system `x_i = (b_i - offdiag_i * x_{i-1}) *
/// diag_recip_i` (forward) or its reflection `x_i = (b_i - offdiag_i *
/// x_{i+1}) * diag_recip_i` (backward), with `lanes` chained lanes.
///
/// `offdiag` is row-indexed: entry `i` couples row `i` to its predecessor in
/// traversal order, so `offdiag[0]` (forward) or `offdiag[len-1]` (backward)
/// is never read. With `lanes == 1` this is the plain sequential recurrence.
pub fn chain_bidiagonal_solve(
    diag_recip: &[f64],
    offdiag: &[f64],
    b: &[f64],
    x: &mut [f64],
    dir: Direction,
    lanes: usize,
) {
    assert_eq!(diag_recip.len(), b.len());
    assert_eq!(offdiag.len(), b.len());
    assert_eq!(x.len(), b.len());
    x.copy_from_slice(b);
    let step = Lower {
        recip: diag_recip,
        off: offdiag,
    };
    chain_in_place(&step, x, 0.0, dir, lanes);
}
