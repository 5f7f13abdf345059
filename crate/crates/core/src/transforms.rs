//! Dense multicarrier transform matrices.
//!
//! The synthesis matrix (IDCT) has entries
//! `β_n · cos(π (2k−1)(n−1) / 2N)` for 1-based `k, n`, with `β_1 = 1/√N` and
//! `β_n = √(2/N)` otherwise. Its columns are the orthonormal DCT-II basis, so
//! the analysis matrix (DCT) is its transpose and the pair is exactly inverse.
//! The DFT pair is unitary (`1/√N` in both directions).

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::{CMatrix, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransformKind {
    Dct,
    Idct,
    Dft,
    Idft,
}

/// An `N × N` transform materialized as a dense matrix.
///
/// DCT/IDCT entries are stored as complex numbers with exactly zero
/// imaginary part so they compose directly with channel matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformMatrix {
    kind: TransformKind,
    entries: CMatrix,
}

impl TransformMatrix {
    pub fn new(kind: TransformKind, order: usize) -> Result<Self> {
        match kind {
            TransformKind::Dct => dct_matrix(order),
            TransformKind::Idct => idct_matrix(order),
            TransformKind::Dft => dft_matrix(order),
            TransformKind::Idft => idft_matrix(order),
        }
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    /// Whether every entry has zero imaginary part (true for the DCT pair).
    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|z| z.im == 0.0)
    }

    /// The matrix that undoes this one.
    pub fn inverse(&self) -> TransformMatrix {
        let kind = match self.kind {
            TransformKind::Dct => TransformKind::Idct,
            TransformKind::Idct => TransformKind::Dct,
            TransformKind::Dft => TransformKind::Idft,
            TransformKind::Idft => TransformKind::Dft,
        };
        TransformMatrix {
            kind,
            entries: self.entries.adjoint(),
        }
    }

    /// Apply the transform to a vector of matching length.
    pub fn apply(&self, input: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.order();
        if input.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "transform of order {n} applied to vector of length {}",
                input.len()
            )));
        }
        Ok((0..n)
            .map(|r| self.entries.row(r).iter().zip(input).map(|(a, x)| a * x).sum())
            .collect())
    }
}

fn check_order(order: usize) -> Result<()> {
    if order == 0 {
        return Err(Error::InvalidDimension("transform order must be at least 1".into()));
    }
    Ok(())
}

fn beta(n0: usize, order: usize) -> f64 {
    if n0 == 0 {
        (1.0 / order as f64).sqrt()
    } else {
        (2.0 / order as f64).sqrt()
    }
}

/// IDCT (synthesis) matrix: column `n` is the `n`-th DCT-II basis vector.
pub fn idct_matrix(order: usize) -> Result<TransformMatrix> {
    check_order(order)?;
    let nf = order as f64;
    // 0-based k, n: (2k+1) n matches (2k'−1)(n'−1) for 1-based k', n'.
    let entries = CMatrix::from_fn(order, order, |k, n| {
        let v = beta(n, order) * (PI * (2 * k + 1) as f64 * n as f64 / (2.0 * nf)).cos();
        Complex64::new(v, 0.0)
    });
    Ok(TransformMatrix {
        kind: TransformKind::Idct,
        entries,
    })
}

/// DCT (analysis) matrix, the transpose of [`idct_matrix`].
pub fn dct_matrix(order: usize) -> Result<TransformMatrix> {
    let idct = idct_matrix(order)?;
    Ok(TransformMatrix {
        kind: TransformKind::Dct,
        entries: idct.entries.transpose(),
    })
}

/// Unitary DFT matrix, `exp(−i2πkn/N)/√N`.
pub fn dft_matrix(order: usize) -> Result<TransformMatrix> {
    check_order(order)?;
    Ok(TransformMatrix {
        kind: TransformKind::Dft,
        entries: fourier(order, -1.0),
    })
}

/// Unitary IDFT matrix, `exp(+i2πkn/N)/√N`.
pub fn idft_matrix(order: usize) -> Result<TransformMatrix> {
    check_order(order)?;
    Ok(TransformMatrix {
        kind: TransformKind::Idft,
        entries: fourier(order, 1.0),
    })
}

fn fourier(order: usize, sign: f64) -> CMatrix {
    let scale = 1.0 / (order as f64).sqrt();
    CMatrix::from_fn(order, order, |k, n| {
        // Reduce kn mod N first so large orders keep full phase accuracy.
        let idx = (k * n) % order;
        let phase = sign * 2.0 * PI * idx as f64 / order as f64;
        Complex64::from_polar(scale, phase)
    })
}
