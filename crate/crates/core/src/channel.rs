//! Channel realizations and the time-domain operators of one OFDM block:
//! cyclic-prefix insertion/removal, the channel impulse-response matrix and
//! the diagonal carrier-frequency-offset phasor.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::rng::Stream;
use crate::{CMatrix, Error, Result};

const PROFILE_TOLERANCE: f64 = 1e-12;

/// Relative tap powers (dB) of the six symbol-spaced vehicular profile.
pub const VEHICULAR_A_DB: [f64; 6] = [0.0, -1.0, -9.0, -10.0, -15.0, -20.0];

/// Named power-delay profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ChannelProfile {
    /// Six consecutive taps at 0, −1, −9, −10, −15, −20 dB.
    #[default]
    VehicularA,
    /// Single tap, flat fading.
    Flat,
}

impl ChannelProfile {
    pub const ALL: [ChannelProfile; 2] = [ChannelProfile::VehicularA, ChannelProfile::Flat];

    /// Per-tap mean powers, normalized to unit sum.
    pub fn powers(self) -> Vec<f64> {
        match self {
            ChannelProfile::VehicularA => {
                let lin: Vec<f64> = VEHICULAR_A_DB.iter().map(|db| 10f64.powf(db / 10.0)).collect();
                let total: f64 = lin.iter().sum();
                lin.into_iter().map(|p| p / total).collect()
            }
            ChannelProfile::Flat => vec![1.0],
        }
    }

    pub fn taps(self) -> usize {
        match self {
            ChannelProfile::VehicularA => VEHICULAR_A_DB.len(),
            ChannelProfile::Flat => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ChannelProfile::VehicularA => "vehicular-a",
            ChannelProfile::Flat => "flat",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }
}

/// Impulse response of one antenna pair together with the profile it was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTaps {
    taps: Vec<Complex64>,
    profile: Vec<f64>,
}

impl ChannelTaps {
    /// Wrap explicit taps. The profile must have the same length and unit sum.
    pub fn new(taps: Vec<Complex64>, profile: Vec<f64>) -> Result<Self> {
        validate_profile(&profile)?;
        if taps.len() != profile.len() {
            return Err(Error::InvalidParameter(format!(
                "{} taps but profile of length {}",
                taps.len(),
                profile.len()
            )));
        }
        Ok(Self { taps, profile })
    }

    /// Deterministic taps with a profile proportional to their own power.
    pub fn fixed(taps: Vec<Complex64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::InvalidParameter("empty tap vector".into()));
        }
        let total: f64 = taps.iter().map(|t| t.norm_sqr()).sum();
        let profile = if total > 0.0 {
            taps.iter().map(|t| t.norm_sqr() / total).collect()
        } else {
            let l = taps.len() as f64;
            vec![1.0 / l; taps.len()]
        };
        Ok(Self { taps, profile })
    }

    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }

    pub fn profile(&self) -> &[f64] {
        &self.profile
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Same profile, different tap values (used for estimation-error models).
    pub fn with_taps(&self, taps: Vec<Complex64>) -> Result<Self> {
        Self::new(taps, self.profile.clone())
    }
}

fn validate_profile(profile: &[f64]) -> Result<()> {
    if profile.is_empty() {
        return Err(Error::InvalidParameter("empty power-delay profile".into()));
    }
    if profile.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::InvalidParameter(
            "profile powers must be finite and nonnegative".into(),
        ));
    }
    let total: f64 = profile.iter().sum();
    if (total - 1.0).abs() > PROFILE_TOLERANCE {
        return Err(Error::InvalidParameter(format!("profile sums to {total}, expected 1")));
    }
    Ok(())
}

/// Normalized carrier frequency offset `ε = f / Δf`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct CfoValue(pub f64);

impl CfoValue {
    pub fn epsilon(self) -> f64 {
        self.0
    }
}

/// Taps and CFO for every (receive, transmit) antenna pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    rx: usize,
    tx: usize,
    // row-major over (rx, tx)
    pairs: Vec<(ChannelTaps, CfoValue)>,
}

impl ChannelRealization {
    /// Build from a row-major list of `rx × tx` pairs.
    pub fn new(rx: usize, tx: usize, pairs: Vec<(ChannelTaps, CfoValue)>) -> Result<Self> {
        if rx == 0 || tx == 0 {
            return Err(Error::InvalidDimension("antenna counts must be positive".into()));
        }
        if pairs.len() != rx * tx {
            return Err(Error::InvalidDimension(format!(
                "incomplete realization: {} pairs for a {rx}×{tx} grid",
                pairs.len()
            )));
        }
        Ok(Self { rx, tx, pairs })
    }

    /// Every pair ideal: a single unit tap and no CFO.
    pub fn ideal(rx: usize, tx: usize) -> Result<Self> {
        let unit = ChannelTaps::new(vec![Complex64::new(1.0, 0.0)], vec![1.0])?;
        Self::new(rx, tx, vec![(unit, CfoValue(0.0)); rx * tx])
    }

    pub fn rx(&self) -> usize {
        self.rx
    }

    pub fn tx(&self) -> usize {
        self.tx
    }

    pub fn pair(&self, rx: usize, tx: usize) -> &(ChannelTaps, CfoValue) {
        &self.pairs[rx * self.tx + tx]
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, &(ChannelTaps, CfoValue))> {
        let tx = self.tx;
        self.pairs.iter().enumerate().map(move |(k, p)| (k / tx, k % tx, p))
    }

    /// Longest impulse response over all pairs.
    pub fn max_taps(&self) -> usize {
        self.pairs.iter().map(|(t, _)| t.len()).max().unwrap_or(0)
    }

    /// Apply `f` to every pair, producing a new realization of the same shape.
    pub fn map_pairs<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize, &ChannelTaps, CfoValue) -> Result<(ChannelTaps, CfoValue)>,
    {
        let pairs = self
            .pairs()
            .map(|(r, t, (taps, cfo))| f(r, t, taps, *cfo))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.rx, self.tx, pairs)
    }
}

fn check_cp(n: usize, n_cp: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidDimension("block length must be at least 1".into()));
    }
    if n_cp > n {
        return Err(Error::InvalidDimension(format!(
            "CP length {n_cp} exceeds block length {n}"
        )));
    }
    Ok(())
}

/// `(N+Ncp) × N` selector that prepends the last `Ncp` samples.
pub fn cp_add_matrix(n: usize, n_cp: usize) -> Result<CMatrix> {
    check_cp(n, n_cp)?;
    let one = Complex64::new(1.0, 0.0);
    let mut m = CMatrix::zeros(n + n_cp, n);
    for r in 0..n_cp {
        m[(r, n - n_cp + r)] = one;
    }
    for r in 0..n {
        m[(n_cp + r, r)] = one;
    }
    Ok(m)
}

/// `N × (N+Ncp)` selector that keeps the last `N` samples.
pub fn cp_remove_matrix(n: usize, n_cp: usize) -> Result<CMatrix> {
    check_cp(n, n_cp)?;
    let mut m = CMatrix::zeros(n, n + n_cp);
    for r in 0..n {
        m[(r, n_cp + r)] = Complex64::new(1.0, 0.0);
    }
    Ok(m)
}

/// Lower-triangular Toeplitz impulse-response matrix, `(r, c) = h(r − c)`.
pub fn channel_irm(taps: &ChannelTaps, size: usize) -> Result<CMatrix> {
    let h = taps.taps();
    if h.len() > size {
        return Err(Error::InvalidDimension(format!(
            "{} taps do not fit a {size}×{size} IRM",
            h.len()
        )));
    }
    Ok(CMatrix::from_fn(size, size, |r, c| {
        if r >= c && r - c < h.len() {
            h[r - c]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }))
}

/// Phase of diagonal entry `m` of the CFO matrix.
pub fn cfo_phasor(epsilon: CfoValue, n: usize, m: usize) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * epsilon.0 * m as f64 / n as f64)
}

/// Diagonal `(N+Ncp) × (N+Ncp)` CFO matrix with entries `exp(i2πεm/N)`.
pub fn cfo_matrix(epsilon: CfoValue, n: usize, n_cp: usize) -> Result<CMatrix> {
    if n == 0 {
        return Err(Error::InvalidDimension("block length must be at least 1".into()));
    }
    let size = n + n_cp;
    let mut m = CMatrix::zeros(size, size);
    for k in 0..size {
        m[(k, k)] = cfo_phasor(epsilon, n, k);
    }
    Ok(m)
}

/// `ε = f / Δf`.
pub fn normalized_cfo(f: f64, delta_f: f64) -> Result<CfoValue> {
    if !(delta_f > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "subcarrier spacing must be positive, got {delta_f}"
        )));
    }
    Ok(CfoValue(f / delta_f))
}

/// Independent circularly-symmetric Gaussian taps, tap `w` with variance `profile[w]`.
pub fn draw_rayleigh_taps(profile: &[f64], rng: &mut Stream) -> Result<ChannelTaps> {
    validate_profile(profile)?;
    let taps = profile
        .iter()
        .map(|p| {
            let s = (p / 2.0).sqrt();
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(s * re, s * im)
        })
        .collect();
    Ok(ChannelTaps {
        taps,
        profile: profile.to_vec(),
    })
}

/// Uniform CFO on `[−ε_max, +ε_max]`.
///
/// Scales a single uniform draw by `ε_max`, so the same stream position
/// gives proportional offsets for different `ε_max`.
pub fn draw_cfo(epsilon_max: f64, rng: &mut Stream) -> Result<CfoValue> {
    if !(epsilon_max >= 0.0) || !epsilon_max.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "epsilon_max must be ≥ 0, got {epsilon_max}"
        )));
    }
    let u: f64 = rng.random_range(-1.0..=1.0);
    Ok(CfoValue(epsilon_max * u))
}

/// `Λ = Ψ·𝓗` for a diagonal CFO matrix `Ψ`.
pub fn hybrid_matrix(psi: &CMatrix, irm: &CMatrix) -> Result<CMatrix> {
    if !psi.is_square() || psi.ncols() != irm.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "CFO matrix {}×{} cannot multiply IRM {}×{}",
            psi.nrows(),
            psi.ncols(),
            irm.nrows(),
            irm.ncols()
        )));
    }
    let diagonal =
        (0..psi.nrows()).all(|r| (0..psi.ncols()).all(|c| r == c || psi[(r, c)] == Complex64::new(0.0, 0.0)));
    if !diagonal {
        return Err(Error::InvalidParameter("CFO matrix must be diagonal".into()));
    }
    let mut out = irm.clone();
    for (r, mut row) in out.row_iter_mut().enumerate() {
        row *= psi[(r, r)];
    }
    Ok(out)
}
