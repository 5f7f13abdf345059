//! Banded matrices with band-limited arithmetic.
//!
//! A [`BandedMatrix`] of bandwidth `τ` keeps the entries with
//! `|row − col| ≤ τ` and holds exact zeros elsewhere. Storage is a dense
//! row-major array; every kernel only touches the band, and products take an
//! explicit output bandwidth so results are truncated as they are formed.
//!
//! Kernels tally real operations in an [`OpCounter`]: a complex multiply is
//! four real multiplies and two real adds, a complex add two real adds.

use std::ops::Range;

use num_complex::Complex64;

use crate::flops::Flops;
use crate::system::CompositeMatrix;
use crate::{CMatrix, Error, Result};

/// Reciprocal-condition guard for inversions (1-norm condition estimate).
pub const CONDITION_LIMIT: f64 = 1e12;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Running tally of real arithmetic operations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounter {
    pub real_mult: u64,
    pub real_add: u64,
    pub real_div: u64,
}

impl OpCounter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record `count` complex multiplies.
    pub fn complex_mul(&mut self, count: u64) {
        self.real_mult += 4 * count;
        self.real_add += 2 * count;
    }

    /// Record `count` complex additions or subtractions.
    pub fn complex_add(&mut self, count: u64) {
        self.real_add += 2 * count;
    }

    pub fn operations(&self) -> u64 {
        self.real_mult + self.real_add + self.real_div
    }

    /// One operation is half a flop.
    pub fn flops(&self) -> Flops {
        Flops::new(self.operations() as i128, 2)
    }

    pub fn merge(&mut self, other: &OpCounter) {
        self.real_mult += other.real_mult;
        self.real_add += other.real_add;
        self.real_div += other.real_div;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// Columns of row `row` inside bandwidth `tau` of an order-`n` matrix.
#[inline]
pub fn band_range(row: usize, tau: usize, n: usize) -> Range<usize> {
    row.saturating_sub(tau)..(row + tau + 1).min(n)
}

/// Square complex matrix that is exactly zero outside `|r − c| ≤ τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    order: usize,
    bandwidth: usize,
    clamped: bool,
    data: Vec<Complex64>,
}

impl BandedMatrix {
    pub fn zeros(order: usize, bandwidth: usize) -> Self {
        Self {
            order,
            bandwidth: bandwidth.min(order.saturating_sub(1)),
            clamped: false,
            data: vec![ZERO; order * order],
        }
    }

    pub fn identity(order: usize) -> Self {
        Self::scaled_identity(order, Complex64::new(1.0, 0.0))
    }

    pub fn scaled_identity(order: usize, value: Complex64) -> Self {
        let mut m = Self::zeros(order, 0);
        for k in 0..order {
            m.data[k * order + k] = value;
        }
        m
    }

    /// Diagonal matrix with the given entries.
    pub fn diagonal(values: &[Complex64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, 0);
        for (k, v) in values.iter().enumerate() {
            m.data[k * n + k] = *v;
        }
        m
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// Whether the bandwidth covers the whole matrix.
    pub fn is_full(&self) -> bool {
        self.bandwidth + 1 >= self.order
    }

    /// Set when a requested bandwidth exceeded `N − 1` and was clamped.
    pub fn was_clamped(&self) -> bool {
        self.clamped
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.order + col]
    }

    /// Write an entry inside the band.
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) -> Result<()> {
        if row >= self.order || col >= self.order {
            return Err(Error::InvalidDimension(format!(
                "({row}, {col}) outside order {}",
                self.order
            )));
        }
        if row.abs_diff(col) > self.bandwidth {
            return Err(Error::InvalidParameter(format!(
                "({row}, {col}) lies outside bandwidth {}",
                self.bandwidth
            )));
        }
        self.data[row * self.order + col] = value;
        Ok(())
    }

    #[inline]
    fn row(&self, row: usize) -> &[Complex64] {
        &self.data[row * self.order..(row + 1) * self.order]
    }

    pub fn to_dense(&self) -> CMatrix {
        let n = self.order;
        CMatrix::from_fn(n, n, |r, c| self.data[r * n + c])
    }

    /// Same entries, re-labelled with a larger bandwidth or truncated to a smaller one.
    pub fn with_bandwidth(mut self, tau: usize) -> Self {
        let tau = tau.min(self.order.saturating_sub(1));
        if tau < self.bandwidth {
            let n = self.order;
            for r in 0..n {
                for c in band_range(r, self.bandwidth, n) {
                    if r.abs_diff(c) > tau {
                        self.data[r * n + c] = ZERO;
                    }
                }
            }
        }
        self.bandwidth = tau;
        self
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let n = self.order;
        let mut out = Self::zeros(n, self.bandwidth);
        for r in 0..n {
            for c in band_range(r, self.bandwidth, n) {
                out.data[c * n + r] = self.data[r * n + c].conj();
            }
        }
        out
    }

    /// Add `value` to every diagonal entry.
    pub fn add_to_diagonal(&mut self, value: Complex64, counter: &mut OpCounter) {
        let n = self.order;
        for k in 0..n {
            self.data[k * n + k] += value;
        }
        counter.complex_add(n as u64);
    }

    /// Negate in place.
    pub fn negate(&mut self) {
        let n = self.order;
        for r in 0..n {
            for c in band_range(r, self.bandwidth, n) {
                self.data[r * n + c] = -self.data[r * n + c];
            }
        }
    }

    /// Largest entry magnitude outside bandwidth `tau` (zero when `tau ≥ bandwidth`).
    pub fn max_outside(&self, tau: usize) -> f64 {
        let n = self.order;
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in band_range(r, self.bandwidth, n) {
                if r.abs_diff(c) > tau {
                    worst = worst.max(self.data[r * n + c].norm());
                }
            }
        }
        worst
    }

    /// Induced 1-norm (max column sum).
    pub fn norm_one(&self) -> f64 {
        let n = self.order;
        let mut sums = vec![0.0; n];
        for r in 0..n {
            for c in band_range(r, self.bandwidth, n) {
                sums[c] += self.data[r * n + c].norm();
            }
        }
        sums.into_iter().fold(0.0, f64::max)
    }
}

/// Copy the entries of `a` with `|m − m̄| ≤ τ`, zeroing the rest.
///
/// A bandwidth above `N − 1` is clamped to full and flagged via
/// [`BandedMatrix::was_clamped`].
pub fn band_limit(a: &CMatrix, tau: usize) -> Result<BandedMatrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "band_limit needs a square matrix, got {}×{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let n = a.nrows();
    let mut out = BandedMatrix::zeros(n, tau);
    out.clamped = tau > n.saturating_sub(1);
    let tau = out.bandwidth;
    for r in 0..n {
        for c in band_range(r, tau, n) {
            out.data[r * n + c] = a[(r, c)];
        }
    }
    Ok(out)
}

fn check_orders(a: &BandedMatrix, b: &BandedMatrix, what: &str) -> Result<()> {
    if a.order != b.order {
        return Err(Error::DimensionMismatch(format!(
            "{what}: orders {} and {} differ",
            a.order, b.order
        )));
    }
    Ok(())
}

/// `out += a · b` restricted to the band of `out`.
fn multiply_accumulate(out: &mut BandedMatrix, a: &BandedMatrix, b: &BandedMatrix, counter: &mut OpCounter) {
    let n = a.order;
    let tau_out = out.bandwidth;
    let mut terms = 0u64;
    for r in 0..n {
        let out_cols = band_range(r, tau_out, n);
        let a_row = a.row(r);
        let out_row = &mut out.data[r * n..(r + 1) * n];
        for k in band_range(r, a.bandwidth, n) {
            let lhs = a_row[k];
            let b_cols = band_range(k, b.bandwidth, n);
            let lo = out_cols.start.max(b_cols.start);
            let hi = out_cols.end.min(b_cols.end);
            if lo >= hi {
                continue;
            }
            let b_row = &b.data[k * n + lo..k * n + hi];
            for (o, rhs) in out_row[lo..hi].iter_mut().zip(b_row) {
                *o += lhs * rhs;
            }
            terms += (hi - lo) as u64;
        }
    }
    counter.complex_mul(terms);
    counter.complex_add(terms);
}

/// `band_limit(a · b, tau_out)`, computing only entries inside `tau_out`.
pub fn banded_multiply(
    a: &BandedMatrix,
    b: &BandedMatrix,
    tau_out: usize,
    counter: &mut OpCounter,
) -> Result<BandedMatrix> {
    check_orders(a, b, "banded_multiply")?;
    let mut out = BandedMatrix::zeros(a.order, tau_out);
    multiply_accumulate(&mut out, a, b, counter);
    Ok(out)
}

/// `a ± b` with bandwidth `max(τ_a, τ_b)`.
pub fn banded_add(a: &BandedMatrix, b: &BandedMatrix, sign: Sign, counter: &mut OpCounter) -> Result<BandedMatrix> {
    check_orders(a, b, "banded_add")?;
    let n = a.order;
    let tau = a.bandwidth.max(b.bandwidth);
    let mut out = BandedMatrix::zeros(n, tau);
    let mut count = 0u64;
    for r in 0..n {
        for c in band_range(r, tau, n) {
            let idx = r * n + c;
            out.data[idx] = match sign {
                Sign::Plus => a.data[idx] + b.data[idx],
                Sign::Minus => a.data[idx] - b.data[idx],
            };
        }
        count += band_range(r, tau, n).len() as u64;
    }
    counter.complex_add(count);
    Ok(out)
}

/// Dense inverse of `a`, truncated to `tau_out`.
///
/// Fails with [`Error::Singular`] when the matrix cannot be factored or its
/// 1-norm condition estimate exceeds [`CONDITION_LIMIT`].
pub fn banded_invert(a: &BandedMatrix, tau_out: usize) -> Result<BandedMatrix> {
    let inverse = checked_inverse(&a.to_dense(), &format!("order-{} banded matrix", a.order))?;
    band_limit(&inverse, tau_out)
}

/// LU inverse of a square matrix guarded by a 1-norm condition check.
pub(crate) fn checked_inverse(dense: &CMatrix, what: &str) -> Result<CMatrix> {
    let norm_one = |m: &CMatrix| {
        (0..m.ncols())
            .map(|c| m.column(c).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let inverse = dense
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular(format!("{what} has a zero pivot")))?;
    let cond = norm_one(dense) * norm_one(&inverse);
    if !cond.is_finite() || cond > CONDITION_LIMIT {
        return Err(Error::Singular(format!("{what} has condition estimate {cond:.3e}")));
    }
    Ok(inverse)
}

/// `a · u`.
pub fn banded_matvec(a: &BandedMatrix, u: &[Complex64], counter: &mut OpCounter) -> Result<Vec<Complex64>> {
    let n = a.order;
    if u.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "order-{n} matrix applied to vector of length {}",
            u.len()
        )));
    }
    let mut out = vec![ZERO; n];
    matvec_accumulate(a, u, &mut out, counter);
    Ok(out)
}

fn matvec_accumulate(a: &BandedMatrix, u: &[Complex64], out: &mut [Complex64], counter: &mut OpCounter) {
    let n = a.order;
    let mut terms = 0u64;
    for (r, o) in out.iter_mut().enumerate() {
        let cols = band_range(r, a.bandwidth, n);
        terms += cols.len() as u64;
        let row = &a.data[r * n + cols.start..r * n + cols.end];
        *o += row.iter().zip(&u[cols]).map(|(x, y)| x * y).sum::<Complex64>();
    }
    counter.complex_mul(terms);
    counter.complex_add(terms);
}

/// Grid of banded blocks sharing one order and one bandwidth.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedBlockMatrix {
    rows: usize,
    cols: usize,
    order: usize,
    bandwidth: usize,
    blocks: Vec<BandedMatrix>,
}

impl BandedBlockMatrix {
    /// Build from row-major blocks; narrower blocks are widened to the common bandwidth.
    pub fn new(rows: usize, cols: usize, blocks: Vec<BandedMatrix>) -> Result<Self> {
        if rows == 0 || cols == 0 || blocks.len() != rows * cols {
            return Err(Error::InvalidDimension(format!(
                "{} blocks for a {rows}×{cols} grid",
                blocks.len()
            )));
        }
        let order = blocks[0].order;
        if blocks.iter().any(|b| b.order != order) {
            return Err(Error::DimensionMismatch("blocks of different orders".into()));
        }
        let bandwidth = blocks.iter().map(|b| b.bandwidth).max().unwrap_or(0);
        let blocks = blocks.into_iter().map(|b| b.with_bandwidth(bandwidth)).collect();
        Ok(Self {
            rows,
            cols,
            order,
            bandwidth,
            blocks,
        })
    }

    pub fn zeros(rows: usize, cols: usize, order: usize, bandwidth: usize) -> Self {
        let blocks = vec![BandedMatrix::zeros(order, bandwidth); rows * cols];
        Self {
            rows,
            cols,
            order,
            bandwidth: blocks[0].bandwidth,
            blocks,
        }
    }

    /// Block identity (`blocks × blocks` grid of order-`order` blocks).
    pub fn identity(blocks: usize, order: usize) -> Self {
        let mut m = Self::zeros(blocks, blocks, order, 0);
        for k in 0..blocks {
            m.blocks[k * blocks + k] = BandedMatrix::identity(order);
        }
        m
    }

    /// Band-limit every block of a composite matrix (the banded approximation `μ`).
    pub fn from_composite(pi: &CompositeMatrix, tau: usize) -> Result<Self> {
        let mut blocks = Vec::with_capacity(pi.rx() * pi.tx());
        for a in 0..pi.rx() {
            for b in 0..pi.tx() {
                blocks.push(band_limit(&pi.block(a, b), tau)?);
            }
        }
        Self::new(pi.rx(), pi.tx(), blocks)
    }

    /// Split a dense matrix into blocks and band-limit each.
    pub fn from_dense(m: &CMatrix, order: usize, tau: usize) -> Result<Self> {
        let pi = CompositeMatrix::from_stacked(m.clone(), order)?;
        Self::from_composite(&pi, tau)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn block(&self, row: usize, col: usize) -> &BandedMatrix {
        &self.blocks[row * self.cols + col]
    }

    pub fn blocks(&self) -> &[BandedMatrix] {
        &self.blocks
    }

    pub fn to_dense(&self) -> CMatrix {
        let n = self.order;
        let mut out = CMatrix::zeros(self.rows * n, self.cols * n);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.view_mut((r * n, c * n), (n, n))
                    .copy_from(&self.block(r, c).to_dense());
            }
        }
        out
    }

    /// Block-level conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for r in 0..self.cols {
            for c in 0..self.rows {
                blocks.push(self.block(c, r).adjoint());
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            order: self.order,
            bandwidth: self.bandwidth,
            blocks,
        }
    }

    /// Quadrants `[top-left, top-right, bottom-left, bottom-right]` of an even grid.
    pub fn quadrants(&self) -> Result<[BandedBlockMatrix; 4]> {
        if !self.rows.is_multiple_of(2) || !self.cols.is_multiple_of(2) {
            return Err(Error::InvalidDimension(format!(
                "cannot split a {}×{} block grid into quadrants",
                self.rows, self.cols
            )));
        }
        let (hr, hc) = (self.rows / 2, self.cols / 2);
        let take = |r0: usize, c0: usize| {
            let mut blocks = Vec::with_capacity(hr * hc);
            for r in 0..hr {
                for c in 0..hc {
                    blocks.push(self.block(r0 + r, c0 + c).clone());
                }
            }
            BandedBlockMatrix {
                rows: hr,
                cols: hc,
                order: self.order,
                bandwidth: self.bandwidth,
                blocks,
            }
        };
        Ok([take(0, 0), take(0, hc), take(hr, 0), take(hr, hc)])
    }

    /// Reassemble from `[top-left, top-right, bottom-left, bottom-right]`.
    pub fn from_quadrants(q: [BandedBlockMatrix; 4]) -> Result<Self> {
        let [tl, tr, bl, br] = q;
        if tl.rows != tr.rows || bl.rows != br.rows || tl.cols != bl.cols || tr.cols != br.cols {
            return Err(Error::DimensionMismatch("quadrant grids do not tile".into()));
        }
        let rows = tl.rows + bl.rows;
        let cols = tl.cols + tr.cols;
        let mut blocks = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let b = match (r < tl.rows, c < tl.cols) {
                    (true, true) => tl.block(r, c),
                    (true, false) => tr.block(r, c - tl.cols),
                    (false, true) => bl.block(r - tl.rows, c),
                    (false, false) => br.block(r - tl.rows, c - tl.cols),
                };
                blocks.push(b.clone());
            }
        }
        Self::new(rows, cols, blocks)
    }

    /// Block product with every output block truncated to `tau_out`.
    pub fn multiply(&self, other: &Self, tau_out: usize, counter: &mut OpCounter) -> Result<Self> {
        if self.cols != other.rows || self.order != other.order {
            return Err(Error::DimensionMismatch(format!(
                "{}×{} grid times {}×{} grid",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut blocks = Vec::with_capacity(self.rows * other.cols);
        for r in 0..self.rows {
            for c in 0..other.cols {
                let mut acc = BandedMatrix::zeros(self.order, tau_out);
                for k in 0..self.cols {
                    multiply_accumulate(&mut acc, self.block(r, k), other.block(k, c), counter);
                }
                blocks.push(acc);
            }
        }
        Self::new(self.rows, other.cols, blocks)
    }

    /// Blockwise `self ± other`.
    pub fn add(&self, other: &Self, sign: Sign, counter: &mut OpCounter) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch("block grids differ".into()));
        }
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| banded_add(a, b, sign, counter))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.rows, self.cols, blocks)
    }

    /// Add `value` to the diagonal of every diagonal block.
    pub fn add_to_diagonal(&mut self, value: Complex64, counter: &mut OpCounter) {
        for k in 0..self.rows.min(self.cols) {
            let idx = k * self.cols + k;
            self.blocks[idx].add_to_diagonal(value, counter);
        }
    }

    pub fn negate(&mut self) {
        self.blocks.iter_mut().for_each(BandedMatrix::negate);
    }

    /// Stacked matrix-vector product.
    pub fn matvec(&self, u: &[Complex64], counter: &mut OpCounter) -> Result<Vec<Complex64>> {
        let n = self.order;
        if u.len() != self.cols * n {
            return Err(Error::DimensionMismatch(format!(
                "{}-column block grid applied to vector of length {}",
                self.cols * n,
                u.len()
            )));
        }
        let mut out = vec![ZERO; self.rows * n];
        for r in 0..self.rows {
            let dst = &mut out[r * n..(r + 1) * n];
            for c in 0..self.cols {
                matvec_accumulate(self.block(r, c), &u[c * n..(c + 1) * n], dst, counter);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dense(n: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    fn dense_band_limit(a: &CMatrix, tau: usize) -> CMatrix {
        CMatrix::from_fn(a.nrows(), a.ncols(), |r, c| {
            if r.abs_diff(c) <= tau {
                a[(r, c)]
            } else {
                ZERO
            }
        })
    }

    fn random_banded(n: usize, tau: usize, seed: u64) -> BandedMatrix {
        band_limit(&random_dense(n, seed), tau).unwrap()
    }

    /// Number of (r, k, c) triples with k in band of a, c in band of b and the output band.
    fn enumerate_terms(n: usize, ta: usize, tb: usize, tout: usize) -> u64 {
        let mut count = 0;
        for r in 0..n {
            for k in 0..n {
                for c in 0..n {
                    if r.abs_diff(k) <= ta && k.abs_diff(c) <= tb && r.abs_diff(c) <= tout {
                        count += 1;
                    }
                }
            }
        }
        count
    }

    #[test]
    fn band_limit_full_and_diagonal() {
        let a = random_dense(6, 1);
        assert_eq!(band_limit(&a, 5).unwrap().to_dense(), a);
        let d = band_limit(&a, 0).unwrap().to_dense();
        for r in 0..6 {
            for c in 0..6 {
                assert_eq!(d[(r, c)], if r == c { a[(r, c)] } else { ZERO });
            }
        }
    }

    #[test]
    fn band_limit_index_rule() {
        let ones = CMatrix::from_element(5, 5, Complex64::new(1.0, 0.0));
        let b = band_limit(&ones, 2).unwrap();
        // 1-based zeros at (1,4),(1,5),(2,5),(4,1),(5,1),(5,2)
        let zeros = [(0, 3), (0, 4), (1, 4), (3, 0), (4, 0), (4, 1)];
        for r in 0..5 {
            for c in 0..5 {
                let expect_zero = zeros.contains(&(r, c));
                assert_eq!(b.get(r, c) == ZERO, expect_zero, "({r},{c})");
            }
        }
    }

    #[test]
    fn band_limit_clamps_oversized_bandwidth() {
        let a = random_dense(4, 2);
        let b = band_limit(&a, 9).unwrap();
        assert!(b.was_clamped());
        assert_eq!(b.bandwidth(), 3);
        assert_eq!(b.to_dense(), a);
        assert!(!band_limit(&a, 3).unwrap().was_clamped());
    }

    #[test]
    fn set_outside_band_rejected() {
        let mut b = BandedMatrix::zeros(5, 1);
        assert!(b.set(0, 1, Complex64::new(1.0, 0.0)).is_ok());
        assert!(b.set(0, 2, Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn multiply_identity() {
        let i = BandedMatrix::identity(7);
        let mut ops = OpCounter::new();
        for tau_out in [0, 3, 6] {
            assert_eq!(
                banded_multiply(&i, &i, tau_out, &mut ops).unwrap().to_dense(),
                CMatrix::identity(7, 7)
            );
        }
    }

    #[test]
    fn multiply_matches_dense_oracle() {
        let a = random_banded(16, 3, 3);
        let b = random_banded(16, 3, 4);
        let mut ops = OpCounter::new();
        let got = banded_multiply(&a, &b, 6, &mut ops).unwrap().to_dense();
        let expected = dense_band_limit(&(a.to_dense() * b.to_dense()), 6);
        assert!((got - expected).camax() < 1e-12);
    }

    #[test]
    fn multiply_counter_matches_enumeration() {
        for (n, tau) in [(16, 3), (64, 15), (12, 0), (9, 4)] {
            let a = random_banded(n, tau, 5);
            let b = random_banded(n, tau, 6);
            let mut ops = OpCounter::new();
            banded_multiply(&a, &b, 2 * tau, &mut ops).unwrap();
            let terms = enumerate_terms(n, tau, tau, 2 * tau);
            assert_eq!(ops.operations(), 8 * terms);
            // Interior rows each cost (2τ+1)² terms; boundary rows fewer.
            let interior = 8 * (n as u64) * (2 * tau as u64 + 1).pow(2);
            assert!(ops.operations() <= interior);
            let deficit = interior - ops.operations();
            let t = tau as u64;
            // Each of the 2τ boundary rows drops at most (2τ+1)² terms.
            assert!(deficit <= 8 * 2 * t * (2 * t + 1) * (2 * t + 1));
        }
    }

    #[test]
    fn add_and_subtract() {
        let a = random_banded(8, 2, 7);
        let mut ops = OpCounter::new();
        let zero = banded_add(&a, &a, Sign::Minus, &mut ops).unwrap();
        assert!(zero.to_dense().iter().all(|z| *z == ZERO));
        let i = BandedMatrix::identity(8);
        let two = banded_add(&i, &i, Sign::Plus, &mut ops).unwrap();
        assert_eq!(two.to_dense(), CMatrix::identity(8, 8) * Complex64::new(2.0, 0.0));

        let x = random_banded(16, 3, 8);
        let y = random_banded(16, 3, 9);
        let sum = banded_add(&x, &y, Sign::Plus, &mut ops).unwrap();
        assert!((sum.to_dense() - (x.to_dense() + y.to_dense())).camax() < 1e-14);
        let mixed = banded_add(&x, &random_banded(16, 1, 10), Sign::Minus, &mut ops).unwrap();
        assert_eq!(mixed.bandwidth(), 3);
    }

    #[test]
    fn invert_identity_and_diagonal() {
        let i = BandedMatrix::identity(6);
        assert!((banded_invert(&i, 2).unwrap().to_dense() - CMatrix::identity(6, 6)).camax() < 1e-15);
        let values: Vec<Complex64> = (1..=6).map(|k| Complex64::new(k as f64, -(k as f64) / 2.0)).collect();
        let d = BandedMatrix::diagonal(&values);
        let inv = banded_invert(&d, 0).unwrap();
        for (k, v) in values.iter().enumerate() {
            assert!((inv.get(k, k) - v.inv()).norm() < 1e-14);
        }
    }

    #[test]
    fn invert_diagonally_dominant_matches_truncated_dense() {
        let n = 24;
        let mut a = random_banded(n, 3, 11);
        let mut ops = OpCounter::new();
        a.add_to_diagonal(Complex64::new(8.0, 0.0), &mut ops);
        let inv = banded_invert(&a, 6).unwrap();
        let dense_inv = a.to_dense().try_inverse().unwrap();
        assert!((inv.to_dense() - dense_band_limit(&dense_inv, 6)).camax() < 1e-12);
        // residual of the truncated inverse is bounded by the discarded mass
        let residual = (inv.to_dense() * a.to_dense() - CMatrix::identity(n, n)).camax();
        let tail = (dense_inv - inv.to_dense()).camax();
        assert!(residual <= tail * a.norm_one() + 1e-12);
    }

    #[test]
    fn invert_singular_fails() {
        let a = BandedMatrix::zeros(4, 1);
        assert!(matches!(banded_invert(&a, 1), Err(Error::Singular(_))));
        let mut near = BandedMatrix::identity(4);
        near.set(3, 3, Complex64::new(1e-14, 0.0)).unwrap();
        assert!(matches!(banded_invert(&near, 1), Err(Error::Singular(_))));
    }

    #[test]
    fn matvec_cases() {
        let mut ops = OpCounter::new();
        let u: Vec<Complex64> = (0..8).map(|k| Complex64::new(k as f64, 1.0)).collect();
        assert_eq!(banded_matvec(&BandedMatrix::identity(8), &u, &mut ops).unwrap(), u);
        let values: Vec<Complex64> = (0..8).map(|k| Complex64::new(0.5, k as f64)).collect();
        let got = banded_matvec(&BandedMatrix::diagonal(&values), &u, &mut ops).unwrap();
        for k in 0..8 {
            assert_eq!(got[k], values[k] * u[k]);
        }
        let a = random_banded(64, 5, 12);
        let u: Vec<Complex64> = (0..64)
            .map(|k| Complex64::new((k as f64).sin(), (k as f64).cos()))
            .collect();
        let got = banded_matvec(&a, &u, &mut ops).unwrap();
        let expected = a.to_dense() * CMatrix::from_vec(64, 1, u.clone());
        for k in 0..64 {
            assert!((got[k] - expected[k]).norm() < 1e-12);
        }
        assert!(banded_matvec(&a, &u[..10], &mut ops).is_err());
    }

    #[test]
    fn matvec_counter_matches_model() {
        for (n, tau) in [(64, 15), (64, 5), (32, 0)] {
            let a = random_banded(n, tau, 13);
            let mut ops = OpCounter::new();
            banded_matvec(&a, &vec![Complex64::new(1.0, 0.0); n], &mut ops).unwrap();
            let model = (n * (16 * tau + 8)) as u64;
            let t = tau as u64;
            assert!(ops.operations() <= model);
            assert!(model - ops.operations() <= 2 * t * (t + 1) * 8);
            assert_eq!(model - ops.operations(), t * (t + 1) * 8);
        }
    }

    #[test]
    fn block_grid_round_trip_and_quadrants() {
        let dense = random_dense(32, 14);
        let grid = BandedBlockMatrix::from_dense(&dense, 8, 7).unwrap();
        assert_eq!(grid.to_dense(), dense);
        let q = grid.quadrants().unwrap();
        assert_eq!(q[1].to_dense(), dense.view((0, 16), (16, 16)).into_owned());
        assert_eq!(BandedBlockMatrix::from_quadrants(q).unwrap(), grid);
        assert_eq!(grid.adjoint().to_dense(), dense.adjoint());
    }

    #[test]
    fn block_multiply_matches_dense_when_untruncated() {
        let a = BandedBlockMatrix::from_dense(&random_dense(24, 15), 8, 7).unwrap();
        let b = BandedBlockMatrix::from_dense(&random_dense(24, 16), 8, 7).unwrap();
        let mut ops = OpCounter::new();
        let got = a.multiply(&b, 7, &mut ops).unwrap().to_dense();
        assert!((got - a.to_dense() * b.to_dense()).camax() < 1e-12);
    }

    proptest! {
        #[test]
        fn band_limit_idempotent_and_monotone(seed in 0u64..1000, n in 1usize..12, t1 in 0usize..12, t2 in 0usize..12) {
            let a = random_dense(n, seed);
            let (lo, hi) = (t1.min(t2), t1.max(t2));
            let once = band_limit(&a, lo).unwrap();
            let twice = band_limit(&once.to_dense(), lo).unwrap();
            prop_assert_eq!(once.to_dense(), twice.to_dense());
            let nested = band_limit(&band_limit(&a, hi).unwrap().to_dense(), lo).unwrap();
            prop_assert_eq!(nested.to_dense(), once.to_dense());
        }

        #[test]
        fn products_commute_with_truncation(seed in 0u64..1000, n in 1usize..14, ta in 0usize..6, tb in 0usize..6, tout in 0usize..14) {
            let a = random_banded(n, ta, seed);
            let b = random_banded(n, tb, seed + 1);
            let mut ops = OpCounter::new();
            let got = banded_multiply(&a, &b, tout, &mut ops).unwrap().to_dense();
            let expected = dense_band_limit(&(a.to_dense() * b.to_dense()), tout);
            prop_assert!((got - expected).camax() < 1e-12);
            prop_assert_eq!(ops.operations(), 8 * enumerate_terms(n, a.bandwidth(), b.bandwidth(), tout.min(n - 1)));
        }
    }
}
