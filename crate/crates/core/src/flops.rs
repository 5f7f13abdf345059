//! Analytic operation and flop counts.
//!
//! One real multiply, add or divide is one operation and half a flop. All
//! counts are exact rationals. Dense equalizers are cubic polynomials in
//! `M = 2^σ N`; the banded equalizer is `N·(aτ² + bτ + c)` with per-σ
//! coefficients built from the recursive Schur construction.

use std::fmt;

use num_rational::Ratio;

use crate::equalizers::EqualizerKind;
use crate::{Error, Result};

/// Exact flop count.
pub type Flops = Ratio<i128>;

fn int(v: i128) -> Flops {
    Flops::from_integer(v)
}

fn half(v: i128) -> Flops {
    Flops::new(v, 2)
}

/// `N·(t2·τ² + t1·τ + t0)`; coefficients are stored doubled so halves stay exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BandPoly {
    twice: [i128; 3],
}

impl BandPoly {
    /// Coefficients given as `2·t2, 2·t1, 2·t0`.
    pub const fn from_doubled(t2: i128, t1: i128, t0: i128) -> Self {
        Self { twice: [t2, t1, t0] }
    }

    pub const fn integer(t2: i128, t1: i128, t0: i128) -> Self {
        Self::from_doubled(2 * t2, 2 * t1, 2 * t0)
    }

    pub const ZERO: BandPoly = BandPoly::integer(0, 0, 0);

    pub fn coefficients(&self) -> [Flops; 3] {
        [half(self.twice[0]), half(self.twice[1]), half(self.twice[2])]
    }

    pub fn eval(&self, n: u64, tau: u64) -> Flops {
        let (n, t) = (n as i128, tau as i128);
        half(n * (self.twice[0] * t * t + self.twice[1] * t + self.twice[2]))
    }

    pub fn scale(&self, k: i128) -> Self {
        Self::from_doubled(self.twice[0] * k, self.twice[1] * k, self.twice[2] * k)
    }
}

impl std::ops::Add for BandPoly {
    type Output = BandPoly;
    fn add(self, o: BandPoly) -> BandPoly {
        BandPoly::from_doubled(
            self.twice[0] + o.twice[0],
            self.twice[1] + o.twice[1],
            self.twice[2] + o.twice[2],
        )
    }
}

impl fmt::Display for BandPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.coefficients();
        write!(f, "N({a}τ² + {b}τ + {c})")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FullOp {
    Add,
    Mult,
    Inv,
    Matvec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BandedOp {
    Add,
    Mult,
    /// Banded inversion as tabulated: `N(5τ² + 10.5τ + 0.5)` flops.
    InvTable,
    /// Banded inversion as used in the worked 2×2 derivation: `N(20τ² + 21τ + 0.5)`.
    InvText,
    Matvec,
}

/// Flops of an `M × M` complex dense-matrix primitive.
pub fn flops_full(op: FullOp, m: u64) -> Flops {
    let m = m as i128;
    match op {
        FullOp::Add => int(m * m),
        FullOp::Mult => int(4 * m * m * m),
        FullOp::Inv => int(4 * m * m * m + m * m) + half(m),
        FullOp::Matvec => int(4 * m * m),
    }
}

/// Polynomial of a banded primitive on order-`N` matrices of bandwidth `τ`.
pub fn banded_poly(op: BandedOp) -> BandPoly {
    match op {
        BandedOp::Add => BandPoly::from_doubled(0, 4, 1),
        BandedOp::Mult => BandPoly::integer(16, 8, 4),
        BandedOp::InvTable => BandPoly::from_doubled(10, 21, 1),
        BandedOp::InvText => BandPoly::from_doubled(40, 42, 1),
        BandedOp::Matvec => BandPoly::integer(0, 8, 4),
    }
}

pub fn flops_banded(op: BandedOp, n: u64, tau: u64) -> Flops {
    banded_poly(op).eval(n, tau)
}

/// Costs of the four inverse quadrants at one recursion depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchurCost {
    pub phi: BandPoly,
    pub lambda2: BandPoly,
    pub lambda3: BandPoly,
    pub lambda4: BandPoly,
}

impl SchurCost {
    pub fn total(&self) -> BandPoly {
        self.phi + self.lambda2 + self.lambda3 + self.lambda4
    }
}

/// Largest depth with a printed closed form.
pub const PRINTED_SIGMA_MAX: u32 = 6;

/// Closed-form totals of the banded equalizer for σ = 1..=6.
pub const PRINTED_TOTALS: [BandPoly; 6] = [
    BandPoly::integer(1448, 434, 92),
    BandPoly::integer(7248, 2052, 412),
    BandPoly::integer(31904, 8840, 1736),
    BandPoly::integer(133440, 36624, 7120),
    BandPoly::integer(545408, 149024, 28832),
    BandPoly::integer(2204928, 601152, 116032),
];

/// Printed `Σ λ̄_q` totals for σ = 1..=6.
pub const PRINTED_QUADRANT_TOTALS: [BandPoly; 6] = [
    BandPoly::integer(680, 274, 44),
    BandPoly::integer(4688, 1284, 152),
    BandPoly::integer(21664, 5768, 704),
    BandPoly::integer(92480, 24336, 3008),
    BandPoly::integer(381568, 99872, 12416),
    BandPoly::integer(1549568, 404544, 50432),
];

/// Printed per-quadrant costs for σ = 1..=6.
pub const PRINTED_QUADRANTS: [SchurCost; 6] = [
    SchurCost {
        phi: BandPoly::from_doubled(1104, 220, 19),
        lambda2: BandPoly::integer(64, 32, 4),
        lambda3: BandPoly::integer(128, 64, 8),
        lambda4: BandPoly::from_doubled(128, 72, 9),
    },
    SchurCost {
        phi: BandPoly::integer(3664, 756, 86),
        lambda2: BandPoly::integer(256, 128, 16),
        lambda3: BandPoly::integer(512, 256, 32),
        lambda4: BandPoly::integer(256, 144, 18),
    },
    SchurCost {
        phi: BandPoly::integer(17568, 3656, 440),
        lambda2: BandPoly::integer(1024, 512, 64),
        lambda3: BandPoly::integer(2048, 1024, 128),
        lambda4: BandPoly::integer(1024, 576, 72),
    },
    SchurCost {
        phi: BandPoly::integer(76096, 15888, 1952),
        lambda2: BandPoly::integer(4096, 2048, 256),
        lambda3: BandPoly::integer(8192, 4096, 512),
        lambda4: BandPoly::integer(4096, 2304, 288),
    },
    SchurCost {
        phi: BandPoly::integer(316032, 66080, 8192),
        lambda2: BandPoly::integer(16384, 8192, 1024),
        lambda3: BandPoly::integer(32768, 16384, 2048),
        lambda4: BandPoly::integer(16384, 9216, 1152),
    },
    SchurCost {
        phi: BandPoly::integer(1287424, 269376, 33536),
        lambda2: BandPoly::integer(65536, 32768, 4096),
        lambda3: BandPoly::integer(131072, 65536, 8192),
        lambda4: BandPoly::integer(65536, 36864, 4608),
    },
];

fn pow4(k: u32) -> i128 {
    4i128.pow(k)
}

/// Cost of the two band-limited products `λ₂λ₄⁻¹` and `(λ₂λ₄⁻¹)λ₃` at depth σ (each).
fn quadrant_product(sigma: u32) -> BandPoly {
    BandPoly::integer(64, 8, 1).scale(pow4(sigma))
}

/// Cost of forming `λ₁ − λ₂λ₄⁻¹λ₃` at depth σ: one subtraction at bandwidth 2τ.
fn quadrant_subtraction(sigma: u32) -> BandPoly {
    BandPoly::from_doubled(0, 8, 1).scale(pow4(sigma - 1))
}

/// One step of the Schur cost recursion.
///
/// `previous_total` is the cost of inverting a depth-(σ−1) operand, which is
/// paid twice (for `λ₄⁻¹` and for `Φ`). The off-diagonal and bottom-right
/// quadrants are four copies of their depth-(σ−1) counterparts.
pub fn schur_step(sigma: u32, previous_total: BandPoly, previous: Option<&SchurCost>) -> SchurCost {
    let phi = previous_total.scale(2) + quadrant_product(sigma).scale(2) + quadrant_subtraction(sigma);
    match previous {
        Some(p) => SchurCost {
            phi,
            lambda2: p.lambda2.scale(4),
            lambda3: p.lambda3.scale(4),
            lambda4: p.lambda4.scale(4),
        },
        None => SchurCost {
            phi,
            lambda2: BandPoly::integer(64, 32, 4),
            lambda3: BandPoly::integer(128, 64, 8),
            lambda4: BandPoly::from_doubled(128, 72, 9),
        },
    }
}

/// Quadrant costs at depth σ from the recursion, starting from a single
/// banded inversion at depth 0.
pub fn schur_cost(sigma: u32) -> SchurCost {
    assert!(sigma >= 1, "recursion depth starts at 1");
    let mut cost = schur_step(1, banded_poly(BandedOp::InvText), None);
    for s in 2..=sigma {
        cost = schur_step(s, cost.total(), Some(&cost));
    }
    cost
}

/// Everything around the inversion: `μᴴμ`, the ridge term, the product with
/// `μᴴ` and the final matrix-vector product.
fn banded_overhead(sigma: u32) -> BandPoly {
    let blocks = pow4(sigma);
    let gram = banded_poly(BandedOp::Mult).scale(blocks);
    let ridge = BandPoly::integer(0, 0, 1i128 << sigma);
    let solution = BandPoly::integer(144, 24, 4).scale(blocks);
    let apply = BandPoly::integer(0, 16, 8).scale(blocks);
    gram + ridge + solution + apply
}

/// Banded equalizer polynomial at depth σ: printed closed form up to σ = 6,
/// the recursion beyond.
pub fn jlcrlzf_poly(sigma: u32) -> Result<BandPoly> {
    match sigma {
        0 => Err(Error::InvalidParameter("banded equalizer needs σ ≥ 1".into())),
        s if s <= PRINTED_SIGMA_MAX => Ok(PRINTED_TOTALS[(s - 1) as usize]),
        s => Ok(schur_cost(s).total() + banded_overhead(s)),
    }
}

/// Modeled cost of one equalizer configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlopModel {
    pub kind: EqualizerKind,
    pub sigma: u32,
    pub n: u64,
    pub tau: u64,
    pub flops: Flops,
}

/// Flops of constructing and applying an equalizer for a `2^σ × 2^σ` system.
pub fn flops_equalizer(kind: EqualizerKind, sigma: u32, n: u64, tau: u64) -> Result<FlopModel> {
    if n == 0 {
        return Err(Error::InvalidParameter("transform size must be ≥ 1".into()));
    }
    let m = ((1u64 << sigma) * n) as i128;
    let (m2, m3) = (m * m, m * m * m);
    let flops = match kind {
        EqualizerKind::LzfCde => int(12 * m3 + 5 * m2) + half(m),
        EqualizerKind::LmmseCde => int(12 * m3 + 5 * m2) + half(5 * m),
        EqualizerKind::LzfFde => int(12 * m3 + 6 * m2) - half(m),
        EqualizerKind::LmmseFde => int(12 * m3 + 6 * m2 + 2 * m),
        EqualizerKind::Jlcrlzf => jlcrlzf_poly(sigma)?.eval(n, tau),
    };
    Ok(FlopModel {
        kind,
        sigma,
        n,
        tau,
        flops,
    })
}

/// Measured time of a compared scheme relative to the proposed one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingComparison {
    pub t1: f64,
    pub t2: f64,
    pub eta_percent: f64,
}

/// `η% = (t₂ − t₁)/t₁ × 100`.
pub fn time_reduction(t1: f64, t2: f64) -> Result<f64> {
    if !(t1 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "baseline time must be positive, got {t1}"
        )));
    }
    if !(t2 >= 0.0) {
        return Err(Error::InvalidParameter(format!("compared time must be ≥ 0, got {t2}")));
    }
    Ok((t2 - t1) / t1 * 100.0)
}

pub fn compare_times(t1: f64, t2: f64) -> Result<TimingComparison> {
    Ok(TimingComparison {
        t1,
        t2,
        eta_percent: time_reduction(t1, t2)?,
    })
}

/// One depth of the recursion audit; all polynomials are `Σ λ̄_q` totals.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditRow {
    pub sigma: u32,
    /// Printed total, when the depth has one.
    pub printed: Option<BandPoly>,
    /// Sum of the printed per-quadrant figures.
    pub printed_components: Option<BandPoly>,
    /// Literal rule: `Φ(σ)` costs the whole total of depth σ−1, other
    /// quadrants four times their predecessors.
    pub literal: BandPoly,
    /// Structural rule: `Φ(σ)` pays the depth σ−1 inversion twice plus two
    /// products and one subtraction.
    pub structural: BandPoly,
    pub literal_matches: bool,
    pub structural_matches: bool,
    pub components_match: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub n: u64,
    pub tau: u64,
    pub rows: Vec<AuditRow>,
}

impl AuditReport {
    pub fn mismatches(&self) -> impl Iterator<Item = &AuditRow> {
        self.rows
            .iter()
            .filter(|r| !r.literal_matches || !r.structural_matches || !r.components_match)
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "recursion audit (N = {}, τ = {})", self.n, self.tau)?;
        writeln!(f, "sigma,printed,printed_components,literal,structural,flags")?;
        let show = |p: Option<BandPoly>| {
            p.map(|p| p.eval(self.n, self.tau).to_string())
                .unwrap_or_else(|| "-".into())
        };
        for r in &self.rows {
            let mut flags = Vec::new();
            if !r.components_match {
                flags.push("printed-total≠components");
            }
            if !r.literal_matches {
                flags.push("literal-mismatch");
            }
            if !r.structural_matches {
                flags.push("structural-mismatch");
            }
            let flags = if flags.is_empty() {
                "ok".to_string()
            } else {
                flags.join("|")
            };
            writeln!(
                f,
                "{},{},{},{},{},{}",
                r.sigma,
                show(r.printed),
                show(r.printed_components),
                show(Some(r.literal)),
                show(Some(r.structural)),
                flags
            )?;
        }
        Ok(())
    }
}

fn printed_cost(sigma: u32) -> Option<(BandPoly, SchurCost)> {
    (1..=PRINTED_SIGMA_MAX).contains(&sigma).then(|| {
        let k = (sigma - 1) as usize;
        (PRINTED_QUADRANT_TOTALS[k], PRINTED_QUADRANTS[k])
    })
}

/// Check each depth's printed `Σ λ̄_q` against both recursion readings,
/// stepping from the printed figures of the previous depth where they exist.
pub fn recursion_audit(sigma_max: u32, n: u64, tau: u64) -> Result<AuditReport> {
    if sigma_max < 2 {
        return Err(Error::InvalidParameter("audit needs sigma_max ≥ 2".into()));
    }
    let mut rows = Vec::new();
    // predecessor state: (total, quadrants) taken from print when available
    let mut prev: Option<(BandPoly, SchurCost)> = None;
    for sigma in 1..=sigma_max {
        let printed = printed_cost(sigma);
        let (literal, structural) = match &prev {
            None => {
                let base = schur_step(1, banded_poly(BandedOp::InvText), None).total();
                (printed.map(|p| p.0).unwrap_or(base), base)
            }
            Some((total, quads)) => {
                let literal = *total + quads.lambda2.scale(4) + quads.lambda3.scale(4) + quads.lambda4.scale(4);
                let structural = schur_step(sigma, *total, Some(quads)).total();
                (literal, structural)
            }
        };
        let printed_total = printed.map(|p| p.0);
        let components = printed.map(|p| p.1.total());
        rows.push(AuditRow {
            sigma,
            printed: printed_total,
            printed_components: components,
            literal,
            structural,
            literal_matches: printed_total.is_none_or(|p| p == literal),
            structural_matches: printed_total.is_none_or(|p| p == structural),
            components_match: printed_total == components,
        });
        prev = Some(match printed {
            Some(p) => p,
            None => {
                let (total, quads) = prev.expect("depth 1 is always printed");
                let next = schur_step(sigma, total, Some(&quads));
                (next.total(), next)
            }
        });
    }
    Ok(AuditReport { n, tau, rows })
}
