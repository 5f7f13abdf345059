//! Linear MIMO equalizers: dense zero-forcing and MMSE baselines in the
//! cosine and frequency domains, and the banded regularized zero-forcing
//! equalizer built on a recursive Schur block inverse.

use std::fmt;

use num_complex::Complex64;

use crate::banded::{banded_invert, checked_inverse, BandedBlockMatrix, OpCounter, Sign};
use crate::channel::ChannelRealization;
use crate::flops::{flops_equalizer, Flops};
use crate::system::{CompositeMatrix, CosineModel, ReceivedVector};
use crate::transforms::{dft_matrix, idft_matrix};
use crate::{CMatrix, CVector, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EqualizerKind {
    LzfCde,
    LmmseCde,
    LzfFde,
    LmmseFde,
    Jlcrlzf,
}

impl EqualizerKind {
    pub const ALL: [EqualizerKind; 5] = [
        EqualizerKind::Jlcrlzf,
        EqualizerKind::LzfCde,
        EqualizerKind::LmmseCde,
        EqualizerKind::LzfFde,
        EqualizerKind::LmmseFde,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EqualizerKind::LzfCde => "lzf-cde",
            EqualizerKind::LmmseCde => "lmmse-cde",
            EqualizerKind::LzfFde => "lzf-fde",
            EqualizerKind::LmmseFde => "lmmse-fde",
            EqualizerKind::Jlcrlzf => "jlcrlzf-cde",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        let name = name.trim().to_ascii_lowercase().replace('_', "-");
        match name.as_str() {
            "jlcrlzf" => Some(EqualizerKind::Jlcrlzf),
            other => Self::ALL.into_iter().find(|k| k.name() == other),
        }
    }

    pub fn is_frequency_domain(self) -> bool {
        matches!(self, EqualizerKind::LzfFde | EqualizerKind::LmmseFde)
    }

    pub fn is_zero_forcing(self) -> bool {
        matches!(self, EqualizerKind::LzfCde | EqualizerKind::LzfFde)
    }
}

impl fmt::Display for EqualizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolutionMatrix {
    Dense(CMatrix),
    Banded(BandedBlockMatrix),
}

impl SolutionMatrix {
    pub fn to_dense(&self) -> CMatrix {
        match self {
            SolutionMatrix::Dense(m) => m.clone(),
            SolutionMatrix::Banded(b) => b.to_dense(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            SolutionMatrix::Dense(m) => m.shape(),
            SolutionMatrix::Banded(b) => (b.rows() * b.order(), b.cols() * b.order()),
        }
    }
}

/// Per-stream conversions around a frequency-domain solution: cosine to
/// frequency before, frequency back to cosine after.
#[derive(Debug, Clone, PartialEq)]
pub struct FdeTransforms {
    pub pre: CMatrix,
    pub post: CMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EqualizerSolution {
    pub kind: EqualizerKind,
    pub matrix: SolutionMatrix,
    /// Ridge term on the normal matrix; zero for zero-forcing kinds.
    pub alpha: f64,
    /// Bandwidth of the model; `N` for dense kinds.
    pub tau: usize,
    /// Block size `N`.
    pub order: usize,
    /// Analytic cost, when the configuration is a square `2^σ × 2^σ` system.
    pub modeled_flops: Option<Flops>,
    /// Flops actually executed by banded kernels.
    pub counted_flops: Option<Flops>,
    pub fde: Option<FdeTransforms>,
}

impl EqualizerSolution {
    /// Equivalent cosine-domain matrix, transforms folded in.
    pub fn effective_matrix(&self) -> CMatrix {
        let y = self.matrix.to_dense();
        match &self.fde {
            None => y,
            Some(t) => {
                let (rows, cols) = (y.nrows() / self.order, y.ncols() / self.order);
                block_diag(&t.post, rows) * y * block_diag(&t.pre, cols)
            }
        }
    }
}

fn block_diag(block: &CMatrix, count: usize) -> CMatrix {
    let n = block.nrows();
    let mut out = CMatrix::zeros(n * count, n * count);
    for k in 0..count {
        out.view_mut((k * n, k * n), (n, n)).copy_from(block);
    }
    out
}

/// `log2(count)` when `count` is a power of two.
fn exponent(count: usize) -> Option<u32> {
    count.is_power_of_two().then(|| count.trailing_zeros())
}

fn modeled(kind: EqualizerKind, rx: usize, tx: usize, n: usize, tau: usize) -> Option<Flops> {
    if rx != tx {
        return None;
    }
    let sigma = exponent(tx)?;
    flops_equalizer(kind, sigma, n as u64, tau as u64).ok().map(|m| m.flops)
}

/// `(ΠᴴΠ + αI)⁻¹ Πᴴ` on a dense matrix.
fn regularized_dense(pi: &CMatrix, alpha: f64, what: &str) -> Result<CMatrix> {
    if pi.nrows() < pi.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{}×{} system has fewer equations than unknowns",
            pi.nrows(),
            pi.ncols()
        )));
    }
    let adjoint = pi.adjoint();
    let mut gram = &adjoint * pi;
    for k in 0..gram.nrows() {
        gram[(k, k)] += Complex64::new(alpha, 0.0);
    }
    Ok(checked_inverse(&gram, what)? * adjoint)
}

fn check_snr(snr: f64) -> Result<()> {
    if !(snr > 0.0) || snr.is_nan() {
        return Err(Error::InvalidParameter(format!("snr must be positive, got {snr}")));
    }
    Ok(())
}

fn dense_solution(
    kind: EqualizerKind,
    pi: &CompositeMatrix,
    alpha: f64,
    matrix: CMatrix,
    fde: Option<FdeTransforms>,
) -> EqualizerSolution {
    let n = pi.block_size();
    EqualizerSolution {
        kind,
        matrix: SolutionMatrix::Dense(matrix),
        alpha,
        tau: n,
        order: n,
        modeled_flops: modeled(kind, pi.rx(), pi.tx(), n, n),
        counted_flops: None,
        fde,
    }
}

/// Zero-forcing on the cosine-domain composite.
pub fn lzf_cde(pi: &CompositeMatrix) -> Result<EqualizerSolution> {
    let y = regularized_dense(pi.stacked(), 0.0, "zero-forcing normal matrix")?;
    Ok(dense_solution(EqualizerKind::LzfCde, pi, 0.0, y, None))
}

/// MMSE on the cosine-domain composite with ridge `1/snr` (linear snr).
pub fn lmmse_cde(pi: &CompositeMatrix, snr: f64) -> Result<EqualizerSolution> {
    check_snr(snr)?;
    let alpha = 1.0 / snr;
    let y = regularized_dense(pi.stacked(), alpha, "MMSE normal matrix")?;
    Ok(dense_solution(EqualizerKind::LmmseCde, pi, alpha, y, None))
}

/// Frequency-domain composite with blocks `F·P_cp−·Λ·P_cp+·Fᴴ`, plus the
/// per-stream transforms linking it to the cosine domain.
pub fn frequency_composite(
    model: &CosineModel,
    realization: &ChannelRealization,
) -> Result<(CompositeMatrix, FdeTransforms)> {
    let n = model.n();
    let f = dft_matrix(n)?.into_matrix();
    let fh = idft_matrix(n)?.into_matrix();
    let (rx, tx) = (realization.rx(), realization.tx());
    let mut stacked = CMatrix::zeros(rx * n, tx * n);
    for a in 0..rx {
        for b in 0..tx {
            let folded = model.fold_cp(&model.hybrid(realization, a, b)?)?;
            stacked.view_mut((a * n, b * n), (n, n)).copy_from(&(&f * folded * &fh));
        }
    }
    let transforms = FdeTransforms {
        pre: &f * model.idct(),
        post: model.dct() * fh,
    };
    Ok((CompositeMatrix::from_stacked(stacked, n)?, transforms))
}

/// Zero-forcing on the frequency-domain composite.
pub fn lzf_fde(model: &CosineModel, realization: &ChannelRealization) -> Result<EqualizerSolution> {
    let (pi_f, transforms) = frequency_composite(model, realization)?;
    lzf_fde_from(&pi_f, &transforms)
}

/// MMSE on the frequency-domain composite.
pub fn lmmse_fde(model: &CosineModel, realization: &ChannelRealization, snr: f64) -> Result<EqualizerSolution> {
    check_snr(snr)?;
    let (pi_f, transforms) = frequency_composite(model, realization)?;
    lmmse_fde_from(&pi_f, &transforms, snr)
}

/// Zero-forcing from a precomputed frequency-domain composite.
pub fn lzf_fde_from(pi_f: &CompositeMatrix, transforms: &FdeTransforms) -> Result<EqualizerSolution> {
    let y = regularized_dense(pi_f.stacked(), 0.0, "frequency-domain normal matrix")?;
    Ok(dense_solution(
        EqualizerKind::LzfFde,
        pi_f,
        0.0,
        y,
        Some(transforms.clone()),
    ))
}

/// MMSE from a precomputed frequency-domain composite.
pub fn lmmse_fde_from(pi_f: &CompositeMatrix, transforms: &FdeTransforms, snr: f64) -> Result<EqualizerSolution> {
    check_snr(snr)?;
    let alpha = 1.0 / snr;
    let y = regularized_dense(pi_f.stacked(), alpha, "frequency-domain normal matrix")?;
    Ok(dense_solution(
        EqualizerKind::LmmseFde,
        pi_f,
        alpha,
        y,
        Some(transforms.clone()),
    ))
}

/// Quadrants of one Schur step and of its inverse.
///
/// `lambda` is `[λ₁, λ₂, λ₃, λ₄]` of the operand; `lambda_bar` holds the
/// matching inverse quadrants with `lambda_bar[0] = Φ`. Every stored block is
/// band-limited to the truncation bandwidth.
#[derive(Debug, Clone, PartialEq)]
pub struct SchurWorkspace {
    pub sigma: u32,
    pub bandwidth: usize,
    pub lambda: [BandedBlockMatrix; 4],
    pub lambda_bar: [BandedBlockMatrix; 4],
}

impl SchurWorkspace {
    /// Run one recursion level on a `2^σ × 2^σ` block grid.
    pub fn compute(m: &BandedBlockMatrix, tau: usize, sigma: u32, counter: &mut OpCounter) -> Result<Self> {
        if sigma == 0 {
            return Err(Error::InvalidParameter("Schur recursion needs σ ≥ 1".into()));
        }
        check_grid(m, sigma)?;
        let t = (2 * tau).min(m.order().saturating_sub(1));
        let [l1, l2, l3, l4] = m.quadrants()?;

        let inv4 = invert_level(&l4, tau, sigma - 1, counter).map_err(|e| quadrant_error(sigma, "λ₄", e))?;
        let l2_inv4 = l2.multiply(&inv4, t, counter)?;
        let inv4_l3 = inv4.multiply(&l3, t, counter)?;
        let correction = l2_inv4.multiply(&l3, t, counter)?;
        let schur = l1.add(&correction, Sign::Minus, counter)?;
        let phi = invert_level(&schur, tau, sigma - 1, counter)
            .map_err(|e| quadrant_error(sigma, "Schur complement λ₁ − λ₂λ₄⁻¹λ₃", e))?;

        let mut bar2 = phi.multiply(&l2_inv4, t, counter)?;
        bar2.negate();
        let mut bar3 = inv4_l3.multiply(&phi, t, counter)?;
        bar3.negate();
        let bar4 = inv4.add(&bar3.multiply(&l2_inv4, t, counter)?, Sign::Minus, counter)?;

        Ok(Self {
            sigma,
            bandwidth: t,
            lambda: [l1, l2, l3, l4],
            lambda_bar: [phi, bar2, bar3, bar4],
        })
    }

    pub fn phi(&self) -> &BandedBlockMatrix {
        &self.lambda_bar[0]
    }

    pub fn into_inverse(self) -> Result<BandedBlockMatrix> {
        BandedBlockMatrix::from_quadrants(self.lambda_bar)
    }
}

fn check_grid(m: &BandedBlockMatrix, sigma: u32) -> Result<()> {
    let blocks = 1usize << sigma;
    if m.rows() != blocks || m.cols() != blocks {
        return Err(Error::DimensionMismatch(format!(
            "depth {sigma} expects a {blocks}×{blocks} block grid, got {}×{}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

fn quadrant_error(sigma: u32, quadrant: &str, e: Error) -> Error {
    match e {
        Error::Singular(msg) => Error::Singular(format!("depth {sigma}, inverting {quadrant}: {msg}")),
        other => other,
    }
}

fn invert_level(m: &BandedBlockMatrix, tau: usize, sigma: u32, counter: &mut OpCounter) -> Result<BandedBlockMatrix> {
    if sigma == 0 {
        check_grid(m, 0)?;
        let t = (2 * tau).min(m.order().saturating_sub(1));
        let inv = banded_invert(m.block(0, 0), t)?;
        return BandedBlockMatrix::new(1, 1, vec![inv]);
    }
    SchurWorkspace::compute(m, tau, sigma, counter)?.into_inverse()
}

/// Recursive band-limited Schur inverse of a `2^σ × 2^σ` block grid.
///
/// Every intermediate block is truncated to `min(2τ, N − 1)`, so `τ = N − 1`
/// gives the exact inverse.
pub fn schur_block_invert(m: &BandedBlockMatrix, tau: usize, sigma: u32) -> Result<BandedBlockMatrix> {
    schur_block_invert_counted(m, tau, sigma, &mut OpCounter::new())
}

pub fn schur_block_invert_counted(
    m: &BandedBlockMatrix,
    tau: usize,
    sigma: u32,
    counter: &mut OpCounter,
) -> Result<BandedBlockMatrix> {
    if sigma == 0 {
        return Err(Error::InvalidParameter("Schur recursion needs σ ≥ 1".into()));
    }
    invert_level(m, tau, sigma, counter)
}

/// Banded regularized zero-forcing `(μᴴμ + αI)⁻¹ μᴴ`.
///
/// `mu` must already be band-limited to `tau`. Products and the inverse are
/// kept at bandwidth `2τ`.
pub fn jlcrlzf_cde(mu: &BandedBlockMatrix, alpha: f64, tau: usize) -> Result<EqualizerSolution> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "α must be finite and ≥ 0, got {alpha}"
        )));
    }
    let n = mu.order();
    if tau >= n {
        return Err(Error::InvalidParameter(format!("τ = {tau} must be below N = {n}")));
    }
    if mu.bandwidth() > tau {
        return Err(Error::InvalidParameter(format!(
            "μ has bandwidth {} but τ = {tau}",
            mu.bandwidth()
        )));
    }
    let tx = mu.cols();
    let sigma =
        exponent(tx).ok_or_else(|| Error::InvalidDimension(format!("{tx} transmit streams is not a power of two")))?;
    let t = (2 * tau).min(n - 1);
    let mut counter = OpCounter::new();
    let adjoint = mu.adjoint();
    let mut gram = adjoint.multiply(mu, t, &mut counter)?;
    gram.add_to_diagonal(Complex64::new(alpha, 0.0), &mut counter);
    let advise = |e: Error| match e {
        Error::Singular(msg) if alpha == 0.0 => {
            Error::Singular(format!("{msg}; the unregularized normal matrix is singular, use α > 0"))
        }
        other => other,
    };
    let inverse = if sigma == 0 {
        invert_level(&gram, tau, 0, &mut counter).map_err(advise)?
    } else {
        schur_block_invert_counted(&gram, tau, sigma, &mut counter).map_err(advise)?
    };
    let y = inverse.multiply(&adjoint, t, &mut counter)?;
    Ok(EqualizerSolution {
        kind: EqualizerKind::Jlcrlzf,
        matrix: SolutionMatrix::Banded(y),
        alpha,
        tau,
        order: n,
        modeled_flops: modeled(EqualizerKind::Jlcrlzf, mu.rows(), tx, n, tau),
        counted_flops: Some(counter.flops()),
        fde: None,
    })
}

/// Band-limit every block of `pi` to `tau` and build the banded solution.
pub fn jlcrlzf_from_composite(pi: &CompositeMatrix, alpha: f64, tau: usize) -> Result<EqualizerSolution> {
    jlcrlzf_cde(&BandedBlockMatrix::from_composite(pi, tau)?, alpha, tau)
}

/// `X̂ = Y·ȳ`, split into per-transmit-antenna estimates.
pub fn equalize(solution: &EqualizerSolution, received: &ReceivedVector) -> Result<Vec<Vec<Complex64>>> {
    let n = solution.order;
    if received.block_size() != n {
        return Err(Error::DimensionMismatch(format!(
            "received block size {} but solution order {n}",
            received.block_size()
        )));
    }
    let (rows, cols) = solution.matrix.shape();
    if received.values().len() != cols {
        return Err(Error::DimensionMismatch(format!(
            "solution takes {cols} samples, received {}",
            received.values().len()
        )));
    }
    let input: Vec<Complex64> = match &solution.fde {
        None => received.values().to_vec(),
        Some(t) => per_stream(&t.pre, received.values(), n),
    };
    let stacked = match &solution.matrix {
        SolutionMatrix::Dense(y) => (y * CVector::from_column_slice(&input)).as_slice().to_vec(),
        SolutionMatrix::Banded(y) => y.matvec(&input, &mut OpCounter::new())?,
    };
    debug_assert_eq!(stacked.len(), rows);
    let out = match &solution.fde {
        None => stacked,
        Some(t) => per_stream(&t.post, &stacked, n),
    };
    Ok(out.chunks(n).map(<[Complex64]>::to_vec).collect())
}

fn per_stream(m: &CMatrix, values: &[Complex64], n: usize) -> Vec<Complex64> {
    values
        .chunks(n)
        .flat_map(|chunk| (m * CVector::from_column_slice(chunk)).as_slice().to_vec())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::banded::BandedMatrix;
    use crate::channel::{draw_cfo, draw_rayleigh_taps, CfoValue, ChannelProfile};
    use crate::rng::{stream, Purpose};
    use crate::system::{modulate_bits, noiseless_receive};
    use rand::Rng;

    fn max_abs(a: &CMatrix, b: &CMatrix) -> f64 {
        (a - b).camax()
    }

    fn random_realization(seed: u64, rx: usize, tx: usize, eps_max: f64) -> ChannelRealization {
        let mut rng = stream(seed, 0, Purpose::ChannelTaps, 0);
        let pairs = (0..rx * tx)
            .map(|_| {
                let taps = draw_rayleigh_taps(&ChannelProfile::VehicularA.powers(), &mut rng).unwrap();
                (taps, draw_cfo(eps_max, &mut rng).unwrap())
            })
            .collect();
        ChannelRealization::new(rx, tx, pairs).unwrap()
    }

    fn dominant_grid(seed: u64, blocks: usize, n: usize) -> BandedBlockMatrix {
        let mut rng = stream(seed, 0, Purpose::Benchmark, 0);
        let size = blocks * n;
        let mut m = CMatrix::from_fn(size, size, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        for k in 0..size {
            m[(k, k)] += Complex64::new(2.0 * size as f64, 0.0);
        }
        BandedBlockMatrix::from_dense(&m, n, n - 1).unwrap()
    }

    #[test]
    fn kind_names_round_trip() {
        for k in EqualizerKind::ALL {
            assert_eq!(EqualizerKind::from_name(k.name()), Some(k));
        }
        assert_eq!(EqualizerKind::from_name("JLCRLZF"), Some(EqualizerKind::Jlcrlzf));
        assert_eq!(EqualizerKind::from_name("LZF_CDE"), Some(EqualizerKind::LzfCde));
        assert!(EqualizerKind::from_name("mmse").is_none());
    }

    #[test]
    fn identity_composite_gives_identity() {
        let pi = CompositeMatrix::from_stacked(CMatrix::identity(16, 16), 8).unwrap();
        let y = lzf_cde(&pi).unwrap();
        assert!(max_abs(&y.matrix.to_dense(), &CMatrix::identity(16, 16)) < 1e-14);
        assert_eq!(y.alpha, 0.0);
        let y = lmmse_cde(&pi, 1.0).unwrap();
        assert!(
            max_abs(
                &y.matrix.to_dense(),
                &(CMatrix::identity(16, 16) * Complex64::new(0.5, 0.0))
            ) < 1e-14
        );
        let mu = BandedBlockMatrix::identity(2, 8);
        let y = jlcrlzf_cde(&mu, 0.0, 3).unwrap();
        assert!(max_abs(&y.matrix.to_dense(), &CMatrix::identity(16, 16)) < 1e-14);
    }

    #[test]
    fn zero_forcing_is_a_left_inverse() {
        let model = CosineModel::new(16, 4).unwrap();
        let pi = model.assemble_mimo(&random_realization(3, 2, 2, 0.1)).unwrap();
        let y = lzf_cde(&pi).unwrap();
        let prod = y.matrix.to_dense() * pi.stacked();
        assert!(max_abs(&prod, &CMatrix::identity(32, 32)) < 1e-8);
    }

    #[test]
    fn mmse_matches_formula_and_limit() {
        let model = CosineModel::new(16, 4).unwrap();
        let pi = model.assemble_mimo(&random_realization(5, 2, 2, 0.1)).unwrap();
        let p = pi.stacked();
        let snr = 10.0;
        let oracle = (p.adjoint() * p + CMatrix::identity(32, 32) * Complex64::new(0.1, 0.0))
            .try_inverse()
            .unwrap()
            * p.adjoint();
        assert!(max_abs(&lmmse_cde(&pi, snr).unwrap().matrix.to_dense(), &oracle) < 1e-10);
        let zf = lzf_cde(&pi).unwrap().matrix.to_dense();
        assert!(max_abs(&lmmse_cde(&pi, 1e12).unwrap().matrix.to_dense(), &zf) < 1e-6);
        assert!(lmmse_cde(&pi, 0.0).is_err());
    }

    #[test]
    fn fde_and_cde_agree() {
        let model = CosineModel::new(16, 4).unwrap();
        for seed in 0..3 {
            let real = random_realization(seed, 2, 2, 0.1);
            let pi = model.assemble_mimo(&real).unwrap();
            let cde = lzf_cde(&pi).unwrap().effective_matrix();
            let fde = lzf_fde(&model, &real).unwrap().effective_matrix();
            assert!(max_abs(&cde, &fde) < 1e-8);
            let cde = lmmse_cde(&pi, 5.0).unwrap().effective_matrix();
            let fde = lmmse_fde(&model, &real, 5.0).unwrap().effective_matrix();
            assert!(max_abs(&cde, &fde) < 1e-8);
        }
    }

    #[test]
    fn ideal_fde_recovers_symbols() {
        let model = CosineModel::new(8, 2).unwrap();
        let real = ChannelRealization::ideal(1, 1).unwrap();
        let pi = model.assemble_mimo(&real).unwrap();
        let bits: Vec<Vec<u8>> = vec![vec![1, 0, 0, 1, 1, 1, 0, 0]];
        let symbols: Vec<_> = bits.iter().map(|b| modulate_bits(b)).collect();
        let rx = ReceivedVector::new(noiseless_receive(&symbols, &pi).unwrap(), 8).unwrap();
        let sol = lzf_fde(&model, &real).unwrap();
        for (est, sym) in equalize(&sol, &rx).unwrap().iter().zip(&symbols) {
            for (e, s) in est.iter().zip(sym.values()) {
                assert!((e - Complex64::new(*s, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn schur_matches_dense_inverse() {
        for sigma in 1..=3u32 {
            let m = dominant_grid(sigma as u64, 1 << sigma, 8);
            let inv = schur_block_invert(&m, 7, sigma).unwrap();
            let dense = m.to_dense().try_inverse().unwrap();
            assert!(max_abs(&inv.to_dense(), &dense) < 1e-8, "σ = {sigma}");
        }
    }

    #[test]
    fn schur_of_identity_and_bandwidths() {
        let id = BandedBlockMatrix::identity(4, 8);
        let inv = schur_block_invert(&id, 2, 2).unwrap();
        assert!(max_abs(&inv.to_dense(), &CMatrix::identity(32, 32)) < 1e-14);
        let m = dominant_grid(9, 2, 16);
        let ws = SchurWorkspace::compute(&m, 2, 1, &mut OpCounter::new()).unwrap();
        assert_eq!(ws.bandwidth, 4);
        for q in &ws.lambda_bar {
            assert!(q.blocks().iter().all(|b| b.max_outside(4) == 0.0));
        }
        assert!(schur_block_invert(&m, 2, 2).is_err());
        assert!(schur_block_invert(&m, 2, 0).is_err());
    }

    #[test]
    fn singular_quadrant_is_named() {
        let zero = BandedMatrix::zeros(4, 3);
        let id = BandedMatrix::identity(4);
        let m = BandedBlockMatrix::new(2, 2, vec![id.clone(), id.clone(), id.clone(), zero]).unwrap();
        let msg = schur_block_invert(&m, 3, 1).unwrap_err().to_string();
        assert!(msg.contains("depth 1") && msg.contains("λ₄"), "{msg}");
        let m = BandedBlockMatrix::new(2, 2, vec![id.clone(), id.clone(), id.clone(), id]).unwrap();
        let msg = schur_block_invert(&m, 3, 1).unwrap_err().to_string();
        assert!(msg.contains("Schur complement"), "{msg}");
    }

    #[test]
    fn full_band_matches_dense_equalizers() {
        let model = CosineModel::new(16, 4).unwrap();
        let pi = model.assemble_mimo(&random_realization(11, 2, 2, 0.1)).unwrap();
        let snr = 31.6;
        let banded = jlcrlzf_from_composite(&pi, 1.0 / snr, 15).unwrap();
        let dense = lmmse_cde(&pi, snr).unwrap();
        assert!(max_abs(&banded.matrix.to_dense(), &dense.matrix.to_dense()) < 1e-8);
        let banded = jlcrlzf_from_composite(&pi, 0.0, 15).unwrap();
        let dense = lzf_cde(&pi).unwrap();
        assert!(max_abs(&banded.matrix.to_dense(), &dense.matrix.to_dense()) < 1e-8);
    }

    #[test]
    fn banded_solution_respects_double_bandwidth() {
        let model = CosineModel::new(32, 8).unwrap();
        let pi = model.assemble_mimo(&random_realization(2, 2, 2, 0.1)).unwrap();
        let sol = jlcrlzf_from_composite(&pi, 1e-2, 4).unwrap();
        let SolutionMatrix::Banded(y) = &sol.matrix else {
            panic!("banded")
        };
        assert_eq!(y.bandwidth(), 8);
        assert!(sol.counted_flops.is_some());
        assert!(sol.modeled_flops.is_some());
        assert!(jlcrlzf_from_composite(&pi, -1.0, 4).is_err());
        assert!(jlcrlzf_from_composite(&pi, 1e-2, 32).is_err());
    }

    #[test]
    fn zero_alpha_singularity_advises_regularization() {
        let zero = BandedMatrix::zeros(4, 1);
        let mu = BandedBlockMatrix::new(2, 2, vec![zero.clone(), zero.clone(), zero.clone(), zero]).unwrap();
        let msg = jlcrlzf_cde(&mu, 0.0, 1).unwrap_err().to_string();
        assert!(msg.contains("α > 0"), "{msg}");
        assert!(jlcrlzf_cde(&mu, 1.0, 1).is_ok());
    }

    #[test]
    fn dense_and_banded_application_agree() {
        let model = CosineModel::new(16, 4).unwrap();
        let pi = model.assemble_mimo(&random_realization(4, 2, 2, 0.05)).unwrap();
        let banded = jlcrlzf_from_composite(&pi, 1e-2, 15).unwrap();
        let mut dense = banded.clone();
        dense.matrix = SolutionMatrix::Dense(banded.matrix.to_dense());
        let mut rng = stream(1, 0, Purpose::Noise, 0);
        let v: Vec<Complex64> = (0..32).map(|_| Complex64::new(rng.random(), rng.random())).collect();
        let rx = ReceivedVector::new(v, 16).unwrap();
        let a = equalize(&banded, &rx).unwrap();
        let b = equalize(&dense, &rx).unwrap();
        for (x, y) in a.iter().flatten().zip(b.iter().flatten()) {
            assert!((x - y).norm() < 1e-12);
        }
        let short = ReceivedVector::new(vec![Complex64::new(0.0, 0.0); 16], 16).unwrap();
        assert!(equalize(&banded, &short).is_err());
    }

    #[test]
    fn ridge_shrinks_solution() {
        let model = CosineModel::new(16, 4).unwrap();
        let pi = model.assemble_mimo(&random_realization(8, 2, 2, 0.1)).unwrap();
        let mut last = f64::INFINITY;
        for alpha in [0.0, 1e-3, 1e-1, 1.0, 10.0] {
            let sol = jlcrlzf_from_composite(&pi, alpha, 15).unwrap();
            let norm = sol.matrix.to_dense().norm();
            assert!(norm <= last + 1e-9);
            last = norm;
        }
    }

    #[test]
    fn zero_cfo_single_antenna() {
        let model = CosineModel::new(16, 5).unwrap();
        let mut rng = stream(0, 0, Purpose::ChannelTaps, 0);
        let taps = draw_rayleigh_taps(&ChannelProfile::VehicularA.powers(), &mut rng).unwrap();
        let real = ChannelRealization::new(1, 1, vec![(taps, CfoValue(0.0))]).unwrap();
        let pi = model.assemble_mimo(&real).unwrap();
        let sol = jlcrlzf_from_composite(&pi, 0.0, 15).unwrap();
        assert!(sol.modeled_flops.is_none());
        let y = sol.matrix.to_dense() * pi.stacked();
        assert!(max_abs(&y, &CMatrix::identity(16, 16)) < 1e-8);
    }
}
