//! Cosine-domain MIMO system model: polar NRZ mapping, the composite
//! matrix `Π` whose block `(a, b)` is `C·P_cp−·Λ^{a,b}·P_cp+·C⁻¹`, the noisy
//! transmit path and hard detection.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::{cfo_matrix, channel_irm, hybrid_matrix, ChannelRealization};
use crate::rng::Stream;
use crate::transforms::{dct_matrix, idct_matrix};
use crate::{CMatrix, Error, Result};

/// Polar NRZ symbols for one transmit antenna, each exactly `±1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolVector(Vec<f64>);

impl SymbolVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| *v != 1.0 && *v != -1.0) {
            return Err(Error::InvalidParameter("symbols must be exactly ±1".into()));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `1 → +1`, `0 → −1`. Any nonzero byte counts as a one.
pub fn modulate_bits(bits: &[u8]) -> SymbolVector {
    SymbolVector(bits.iter().map(|b| if *b != 0 { 1.0 } else { -1.0 }).collect())
}

/// `1` where the real part is `≥ 0`, else `0`.
pub fn detect_bits(equalized: &[Complex64]) -> Vec<u8> {
    equalized.iter().map(|z| u8::from(z.re >= 0.0)).collect()
}

/// Stacked `rx·N × tx·N` composite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeMatrix {
    block_size: usize,
    rx: usize,
    tx: usize,
    stacked: CMatrix,
}

impl CompositeMatrix {
    pub fn from_stacked(stacked: CMatrix, block_size: usize) -> Result<Self> {
        if block_size == 0 || !stacked.nrows().is_multiple_of(block_size) || !stacked.ncols().is_multiple_of(block_size) {
            return Err(Error::InvalidDimension(format!(
                "{}×{} matrix is not a grid of {block_size}×{block_size} blocks",
                stacked.nrows(),
                stacked.ncols()
            )));
        }
        Ok(Self {
            block_size,
            rx: stacked.nrows() / block_size,
            tx: stacked.ncols() / block_size,
            stacked,
        })
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn rx(&self) -> usize {
        self.rx
    }

    pub fn tx(&self) -> usize {
        self.tx
    }

    pub fn stacked(&self) -> &CMatrix {
        &self.stacked
    }

    pub fn block(&self, rx: usize, tx: usize) -> CMatrix {
        let n = self.block_size;
        self.stacked.view((rx * n, tx * n), (n, n)).into_owned()
    }
}

/// Stacked cosine-domain receive vector, `rx·N` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedVector {
    block_size: usize,
    values: Vec<Complex64>,
}

impl ReceivedVector {
    pub fn new(values: Vec<Complex64>, block_size: usize) -> Result<Self> {
        if block_size == 0 || !values.len().is_multiple_of(block_size) {
            return Err(Error::InvalidDimension(format!(
                "length {} is not a multiple of block size {block_size}",
                values.len()
            )));
        }
        Ok(Self { block_size, values })
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn streams(&self) -> impl Iterator<Item = &[Complex64]> {
        self.values.chunks(self.block_size)
    }
}

/// Transform pair and CP geometry for one block length, built once and reused.
#[derive(Debug, Clone)]
pub struct CosineModel {
    n: usize,
    n_cp: usize,
    dct: CMatrix,
    idct: CMatrix,
    dct_real: DMatrix<f64>,
}

impl CosineModel {
    pub fn new(n: usize, n_cp: usize) -> Result<Self> {
        if n_cp > n {
            return Err(Error::InvalidDimension(format!(
                "CP length {n_cp} exceeds block length {n}"
            )));
        }
        let dct = dct_matrix(n)?.into_matrix();
        let idct = idct_matrix(n)?.into_matrix();
        let dct_real = dct.map(|z| z.re);
        Ok(Self {
            n,
            n_cp,
            dct,
            idct,
            dct_real,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_cp(&self) -> usize {
        self.n_cp
    }

    pub fn dct(&self) -> &CMatrix {
        &self.dct
    }

    pub fn idct(&self) -> &CMatrix {
        &self.idct
    }

    /// `P_cp− · Λ · P_cp+`, computed by index folding rather than products.
    pub fn fold_cp(&self, lambda: &CMatrix) -> Result<CMatrix> {
        let (n, n_cp) = (self.n, self.n_cp);
        let size = n + n_cp;
        if lambda.shape() != (size, size) {
            return Err(Error::DimensionMismatch(format!(
                "hybrid matrix is {}×{}, expected {size}×{size}",
                lambda.nrows(),
                lambda.ncols()
            )));
        }
        // P_cp+ row s maps to input column n − n_cp + s for s < n_cp, s − n_cp after.
        Ok(CMatrix::from_fn(n, n, |r, c| {
            let row = n_cp + r;
            let mut v = lambda[(row, n_cp + c)];
            if c + n_cp >= n {
                v += lambda[(row, c + n_cp - n)];
            }
            v
        }))
    }

    /// `C · P_cp− · Λ · P_cp+ · C⁻¹` for one antenna pair.
    pub fn composite_block(&self, lambda: &CMatrix) -> Result<CMatrix> {
        let folded = self.fold_cp(lambda)?;
        Ok(self.cosine_image(&folded))
    }

    /// `C · A · Cᵀ` using real products on the real and imaginary parts.
    fn cosine_image(&self, a: &CMatrix) -> CMatrix {
        let c = &self.dct_real;
        let re = c * a.map(|z| z.re) * c.transpose();
        let im = c * a.map(|z| z.im) * c.transpose();
        CMatrix::from_fn(self.n, self.n, |r, k| Complex64::new(re[(r, k)], im[(r, k)]))
    }

    /// Hybrid CFO-plus-channel matrix `Λ` of one antenna pair.
    pub fn hybrid(&self, realization: &ChannelRealization, rx: usize, tx: usize) -> Result<CMatrix> {
        let (taps, eps) = realization.pair(rx, tx);
        let irm = channel_irm(taps, self.n + self.n_cp)?;
        let psi = cfo_matrix(*eps, self.n, self.n_cp)?;
        hybrid_matrix(&psi, &irm)
    }

    /// Stack every pair's composite block.
    pub fn assemble_mimo(&self, realization: &ChannelRealization) -> Result<CompositeMatrix> {
        let n = self.n;
        let (rx, tx) = (realization.rx(), realization.tx());
        let mut stacked = CMatrix::zeros(rx * n, tx * n);
        for a in 0..rx {
            for b in 0..tx {
                let lambda = self.hybrid(realization, a, b)?;
                let block = self.composite_block(&lambda)?;
                stacked.view_mut((a * n, b * n), (n, n)).copy_from(&block);
            }
        }
        CompositeMatrix::from_stacked(stacked, n)
    }

    /// Cosine-domain noise `ρ = C·P_cp−·z` for `rx` antennas, `z ~ CN(0, σ²)`.
    pub fn noise(&self, rx: usize, noise_power: f64, rng: &mut Stream) -> Vec<Complex64> {
        let s = (noise_power / 2.0).sqrt();
        let mut out = Vec::with_capacity(rx * self.n);
        for _ in 0..rx {
            let z: Vec<Complex64> = (0..self.n + self.n_cp)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(s * re, s * im)
                })
                .collect();
            // P_cp− drops the first n_cp samples
            let kept = &z[self.n_cp..];
            for r in 0..self.n {
                out.push((0..self.n).map(|k| self.dct[(r, k)] * kept[k]).sum());
            }
        }
        out
    }

    /// `ȳ = Π·X + ρ`.
    pub fn transmit(
        &self,
        symbols: &[SymbolVector],
        pi: &CompositeMatrix,
        noise_power: f64,
        rng: &mut Stream,
    ) -> Result<ReceivedVector> {
        if pi.block_size() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "composite block size {} but model block length {}",
                pi.block_size(),
                self.n
            )));
        }
        if !(noise_power >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise power must be ≥ 0, got {noise_power}"
            )));
        }
        let mut values = noiseless_receive(symbols, pi)?;
        if noise_power > 0.0 {
            for (v, z) in values.iter_mut().zip(self.noise(pi.rx(), noise_power, rng)) {
                *v += z;
            }
        }
        ReceivedVector::new(values, self.n)
    }
}

/// `Π·X` with no noise.
pub fn noiseless_receive(symbols: &[SymbolVector], pi: &CompositeMatrix) -> Result<Vec<Complex64>> {
    let n = pi.block_size();
    if symbols.len() != pi.tx() || symbols.iter().any(|s| s.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "expected {} symbol vectors of length {n}",
            pi.tx()
        )));
    }
    let x: Vec<f64> = symbols.iter().flat_map(|s| s.values().iter().copied()).collect();
    let m = pi.stacked();
    Ok((0..m.nrows())
        .map(|r| m.row(r).iter().zip(&x).map(|(a, v)| a * *v).sum())
        .collect())
}

/// Convenience wrapper: a single composite block with a freshly built model.
pub fn composite_block(lambda: &CMatrix, n: usize, n_cp: usize) -> Result<CMatrix> {
    CosineModel::new(n, n_cp)?.composite_block(lambda)
}

/// Convenience wrapper around [`CosineModel::assemble_mimo`].
pub fn assemble_mimo(realization: &ChannelRealization, n: usize, n_cp: usize) -> Result<CompositeMatrix> {
    CosineModel::new(n, n_cp)?.assemble_mimo(realization)
}

/// Convenience wrapper around [`CosineModel::transmit`].
pub fn transmit(
    symbols: &[SymbolVector],
    pi: &CompositeMatrix,
    n_cp: usize,
    noise_power: f64,
    rng: &mut Stream,
) -> Result<ReceivedVector> {
    CosineModel::new(pi.block_size(), n_cp)?.transmit(symbols, pi, noise_power, rng)
}
