//! Monte Carlo BER engine, parameter sweeps and wall-clock benchmarking.
//!
//! Every iteration draws its randomness from named streams (see [`crate::rng`]):
//! channel taps, a uniform CFO variate per antenna pair, bits, unit-power
//! noise and channel-estimate perturbations. All scenarios and SNR points of
//! one run reuse the same draws, so curves in a sweep share common random
//! numbers and differ only by the swept parameter. Results are integer tallies
//! summed over iterations, so the outcome is identical in any execution order.

use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::banded::BandedBlockMatrix;
use crate::channel::{draw_cfo, draw_rayleigh_taps, CfoValue, ChannelProfile, ChannelRealization, ChannelTaps};
use crate::equalizers::{
    equalize, frequency_composite, jlcrlzf_cde, lmmse_cde, lmmse_fde, lmmse_fde_from, lzf_cde, lzf_fde, lzf_fde_from,
    EqualizerKind, EqualizerSolution, FdeTransforms,
};
use crate::flops::{compare_times, TimingComparison};
use crate::rng::{stream, Purpose};
use crate::system::{detect_bits, modulate_bits, noiseless_receive, CompositeMatrix, CosineModel, ReceivedVector};
use crate::{Error, Result};

/// One Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub n_cp: usize,
    /// `2^σ` transmit and receive antennas.
    pub sigma: u32,
    pub snr_db: Vec<f64>,
    pub epsilon_max: f64,
    pub tau: usize,
    pub alpha: f64,
    pub iterations: u64,
    pub master_seed: u64,
    pub profile: ChannelProfile,
    pub equalizer: EqualizerKind,
    pub cfo_error_percent: f64,
    pub channel_error_delta: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 64,
            n_cp: 16,
            sigma: 1,
            snr_db: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0],
            epsilon_max: 0.1,
            tau: 15,
            alpha: 1e-2,
            iterations: 1000,
            master_seed: 1,
            profile: ChannelProfile::VehicularA,
            equalizer: EqualizerKind::Jlcrlzf,
            cfo_error_percent: 0.0,
            channel_error_delta: 0.0,
        }
    }
}

/// Largest antenna exponent accepted by the simulator.
pub const MAX_SIGMA: u32 = 6;

impl SimConfig {
    pub fn antennas(&self) -> usize {
        1 << self.sigma
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n == 0 {
            return bad("n must be ≥ 1".into());
        }
        if self.iterations == 0 {
            return bad("iterations must be ≥ 1".into());
        }
        if self.tau >= self.n {
            return bad(format!("tau must be ≤ n − 1 = {}, got {}", self.n - 1, self.tau));
        }
        let taps = self.profile.taps();
        if self.n_cp + 1 < taps {
            return bad(format!(
                "n_cp must be ≥ {} for the {} profile, got {}",
                taps - 1,
                self.profile.name(),
                self.n_cp
            ));
        }
        if self.sigma > MAX_SIGMA {
            return bad(format!("sigma must be ≤ {MAX_SIGMA}, got {}", self.sigma));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return bad("snr_db must be a nonempty list of finite values".into());
        }
        if !(self.epsilon_max >= 0.0) || !self.epsilon_max.is_finite() {
            return bad(format!("eps_max must be ≥ 0, got {}", self.epsilon_max));
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return bad(format!("alpha must be ≥ 0, got {}", self.alpha));
        }
        if !(self.cfo_error_percent >= 0.0) || !self.cfo_error_percent.is_finite() {
            return bad(format!("cfo_err_pct must be ≥ 0, got {}", self.cfo_error_percent));
        }
        if !(self.channel_error_delta >= 0.0) || !self.channel_error_delta.is_finite() {
            return bad(format!("delta_h must be ≥ 0, got {}", self.channel_error_delta));
        }
        Ok(())
    }

    /// The run described by the configuration alone.
    pub fn scenario(&self) -> Scenario {
        Scenario {
            kind: self.equalizer,
            tau: TauSpec::Band(self.tau),
            alpha: AlphaSpec::Value(self.alpha),
            epsilon_max: self.epsilon_max,
            cfo_error_percent: self.cfo_error_percent,
            channel_error_delta: self.channel_error_delta,
        }
    }
}

/// Regularization of the banded equalizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaSpec {
    Value(f64),
    /// `α = 1/SNR` at each SNR point.
    InverseSnr,
}

impl AlphaSpec {
    pub fn label(&self) -> String {
        match self {
            AlphaSpec::Value(a) => format!("{a:e}"),
            AlphaSpec::InverseSnr => "1/snr".into(),
        }
    }
}

/// Bandwidth of the banded equalizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TauSpec {
    Band(usize),
    /// No truncation (`τ = N − 1`).
    Full,
    /// No truncation and no CFO on the channel.
    NoCfo,
}

impl TauSpec {
    pub fn label(&self) -> String {
        match self {
            TauSpec::Band(t) => t.to_string(),
            TauSpec::Full => "full".into(),
            TauSpec::NoCfo => "no-cfo".into(),
        }
    }

    fn resolve(&self, n: usize) -> usize {
        match self {
            TauSpec::Band(t) => *t,
            TauSpec::Full | TauSpec::NoCfo => n - 1,
        }
    }
}

/// One curve of a run: an equalizer plus the channel and knowledge it sees.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub kind: EqualizerKind,
    /// Used by the banded equalizer only.
    pub tau: TauSpec,
    /// Used by the banded equalizer only.
    pub alpha: AlphaSpec,
    pub epsilon_max: f64,
    pub cfo_error_percent: f64,
    pub channel_error_delta: f64,
}

impl Scenario {
    fn effective_epsilon_max(&self) -> f64 {
        if self.tau == TauSpec::NoCfo {
            0.0
        } else {
            self.epsilon_max
        }
    }

    fn per_snr(&self) -> bool {
        matches!(self.kind, EqualizerKind::LmmseCde | EqualizerKind::LmmseFde)
            || (self.kind == EqualizerKind::Jlcrlzf && self.alpha == AlphaSpec::InverseSnr)
    }

    fn validate(&self, n: usize) -> Result<()> {
        if let TauSpec::Band(t) = self.tau {
            if t >= n {
                return Err(Error::InvalidParameter(format!(
                    "tau must be ≤ n − 1 = {}, got {t}",
                    n - 1
                )));
            }
        }
        if let AlphaSpec::Value(a) = self.alpha {
            if !(a >= 0.0) || !a.is_finite() {
                return Err(Error::InvalidParameter(format!("alpha must be ≥ 0, got {a}")));
            }
        }
        for (name, v) in [
            ("eps_max", self.epsilon_max),
            ("cfo_err_pct", self.cfo_error_percent),
            ("delta_h", self.channel_error_delta),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be ≥ 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Effective regularization reported alongside results.
    pub fn alpha_at(&self, snr_db: f64) -> f64 {
        let inverse = 10f64.powf(-snr_db / 10.0);
        match (self.kind, self.alpha) {
            (EqualizerKind::LzfCde | EqualizerKind::LzfFde, _) => 0.0,
            (EqualizerKind::LmmseCde | EqualizerKind::LmmseFde, _) => inverse,
            (EqualizerKind::Jlcrlzf, AlphaSpec::Value(a)) => a,
            (EqualizerKind::Jlcrlzf, AlphaSpec::InverseSnr) => inverse,
        }
    }

    /// Reported bandwidth: the truncation for the banded equalizer, `N` otherwise.
    pub fn tau_reported(&self, n: usize) -> usize {
        match (self.kind, self.tau) {
            (EqualizerKind::Jlcrlzf, TauSpec::Band(t)) => t,
            _ => n,
        }
    }
}

/// Result at one SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct BerPoint {
    pub snr_db: f64,
    /// `bit_errors / total_bits`; NaN when every iteration failed.
    pub ber: f64,
    pub bit_errors: u64,
    /// Bits of successful iterations only.
    pub total_bits: u64,
    pub failed_iterations: u64,
    pub iterations: u64,
    pub equalizer: EqualizerKind,
    pub tau: usize,
    pub alpha: f64,
    pub epsilon_max: f64,
    pub seed: u64,
}

impl BerPoint {
    /// Binomial standard error of the BER estimate.
    pub fn standard_error(&self) -> f64 {
        if self.total_bits == 0 {
            return f64::NAN;
        }
        (self.ber * (1.0 - self.ber) / self.total_bits as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub parameter: String,
    /// Grid labels in sweep order.
    pub grid: Vec<String>,
    /// `curves[g][s]` is grid value `g` at SNR index `s`.
    pub curves: Vec<Vec<BerPoint>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    /// Rayon work pool when the `parallel` feature is on, sequential otherwise.
    #[default]
    Parallel,
    Sequential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
struct Tally {
    errors: u64,
    bits: u64,
    failed: u64,
}

fn merge(mut a: Vec<Tally>, b: Vec<Tally>) -> Vec<Tally> {
    for (x, y) in a.iter_mut().zip(b) {
        x.errors += y.errors;
        x.bits += y.bits;
        x.failed += y.failed;
    }
    a
}

struct Draws {
    taps: Vec<ChannelTaps>,
    cfo_unit: Vec<f64>,
    estimate: Vec<Vec<Complex64>>,
    bits: Vec<Vec<u8>>,
    unit_noise: Vec<Complex64>,
}

/// What the receiver believes about the channel in one iteration.
struct Knowledge {
    realization: ChannelRealization,
    pi: CompositeMatrix,
    frequency: Option<(CompositeMatrix, FdeTransforms)>,
}

impl Knowledge {
    fn frequency(&mut self, model: &CosineModel) -> Result<(&CompositeMatrix, &FdeTransforms)> {
        if self.frequency.is_none() {
            self.frequency = Some(frequency_composite(model, &self.realization)?);
        }
        let (pi_f, t) = self.frequency.as_ref().expect("set above");
        Ok((pi_f, t))
    }
}

struct Engine<'a> {
    config: &'a SimConfig,
    scenarios: &'a [Scenario],
    model: CosineModel,
    powers: Vec<f64>,
    noise_amplitude: Vec<f64>,
    snr_linear: Vec<f64>,
}

impl<'a> Engine<'a> {
    fn new(config: &'a SimConfig, scenarios: &'a [Scenario]) -> Result<Self> {
        config.validate()?;
        if scenarios.is_empty() {
            return Err(Error::InvalidParameter("no scenarios to run".into()));
        }
        for s in scenarios {
            s.validate(config.n)?;
        }
        let snr_linear: Vec<f64> = config.snr_db.iter().map(|d| 10f64.powf(d / 10.0)).collect();
        Ok(Self {
            config,
            scenarios,
            model: CosineModel::new(config.n, config.n_cp)?,
            powers: config.profile.powers(),
            noise_amplitude: snr_linear.iter().map(|s| (1.0 / s).sqrt()).collect(),
            snr_linear,
        })
    }

    fn draw(&self, iteration: u64) -> Result<Draws> {
        let seed = self.config.master_seed;
        let m = self.config.antennas();
        let pairs = (m * m) as u64;
        let mut taps = Vec::new();
        let mut cfo_unit = Vec::new();
        let mut estimate = Vec::new();
        for p in 0..pairs {
            taps.push(draw_rayleigh_taps(
                &self.powers,
                &mut stream(seed, iteration, Purpose::ChannelTaps, p),
            )?);
            cfo_unit.push(draw_cfo(1.0, &mut stream(seed, iteration, Purpose::Cfo, p))?.epsilon());
            let mut rng = stream(seed, iteration, Purpose::ChannelEstimate, p);
            estimate.push(
                (0..self.powers.len())
                    .map(|_| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
                    })
                    .collect(),
            );
        }
        let bits = (0..m as u64)
            .map(|t| {
                let mut rng = stream(seed, iteration, Purpose::Bits, t);
                (0..self.config.n).map(|_| rng.random_range(0..=1u8)).collect()
            })
            .collect();
        let unit_noise = self
            .model
            .noise(m, 1.0, &mut stream(seed, iteration, Purpose::Noise, 0));
        Ok(Draws {
            taps,
            cfo_unit,
            estimate,
            bits,
            unit_noise,
        })
    }

    fn realization(&self, draws: &Draws, eps_max: f64, pct: f64, delta: f64) -> Result<ChannelRealization> {
        let m = self.config.antennas();
        let scale = 1.0 + pct / 100.0;
        let pairs = draws
            .taps
            .iter()
            .zip(&draws.cfo_unit)
            .zip(&draws.estimate)
            .map(|((taps, u), g)| {
                let taps = if delta > 0.0 {
                    taps.with_taps(taps.taps().iter().zip(g).map(|(h, g)| h + g * delta).collect())?
                } else {
                    taps.clone()
                };
                Ok((taps, CfoValue(eps_max * u * scale)))
            })
            .collect::<Result<Vec<_>>>()?;
        ChannelRealization::new(m, m, pairs)
    }

    fn build(
        &self,
        scenario: &Scenario,
        known: &mut Knowledge,
        mu: &mut Option<BandedBlockMatrix>,
        snr: f64,
    ) -> Result<EqualizerSolution> {
        let pi = &known.pi;
        match scenario.kind {
            EqualizerKind::LzfCde => lzf_cde(pi),
            EqualizerKind::LmmseCde => lmmse_cde(pi, snr),
            EqualizerKind::LzfFde => {
                let (pi_f, t) = known.frequency(&self.model)?;
                lzf_fde_from(pi_f, t)
            }
            EqualizerKind::LmmseFde => {
                let (pi_f, t) = known.frequency(&self.model)?;
                lmmse_fde_from(pi_f, t, snr)
            }
            EqualizerKind::Jlcrlzf => {
                let tau = scenario.tau.resolve(self.config.n);
                if mu.is_none() {
                    *mu = Some(BandedBlockMatrix::from_composite(pi, tau)?);
                }
                let alpha = match scenario.alpha {
                    AlphaSpec::Value(a) => a,
                    AlphaSpec::InverseSnr => 1.0 / snr,
                };
                jlcrlzf_cde(mu.as_ref().expect("set above"), alpha, tau)
            }
        }
    }

    fn iteration(&self, iteration: u64) -> Result<Vec<Tally>> {
        let draws = self.draw(iteration)?;
        let symbols: Vec<_> = draws.bits.iter().map(|b| modulate_bits(b)).collect();
        let n_snr = self.snr_linear.len();
        let mut tallies = vec![Tally::default(); self.scenarios.len() * n_snr];
        let bits_per_iteration = (self.config.n * self.config.antennas()) as u64;
        // keyed by the bit patterns of the parameters that shape each matrix
        let mut truth_cache: Option<(u64, Vec<Complex64>)> = None;
        let mut known_cache: Option<((u64, u64, u64), Knowledge)> = None;

        for (s, scenario) in self.scenarios.iter().enumerate() {
            let eps = scenario.effective_epsilon_max();
            let truth_key = eps.to_bits();
            if truth_cache.as_ref().map(|c| c.0) != Some(truth_key) {
                let real = self.realization(&draws, eps, 0.0, 0.0)?;
                let pi = self.model.assemble_mimo(&real)?;
                truth_cache = Some((truth_key, noiseless_receive(&symbols, &pi)?));
            }
            let clean = &truth_cache.as_ref().expect("set above").1;
            let known_key = (
                eps.to_bits(),
                scenario.cfo_error_percent.to_bits(),
                scenario.channel_error_delta.to_bits(),
            );
            if known_cache.as_ref().map(|c| c.0) != Some(known_key) {
                let realization =
                    self.realization(&draws, eps, scenario.cfo_error_percent, scenario.channel_error_delta)?;
                let pi = self.model.assemble_mimo(&realization)?;
                known_cache = Some((
                    known_key,
                    Knowledge {
                        realization,
                        pi,
                        frequency: None,
                    },
                ));
            }
            let known = &mut known_cache.as_mut().expect("set above").1;

            let mut mu = None;
            let mut shared: Option<Option<EqualizerSolution>> = None;
            for k in 0..n_snr {
                let solution = if scenario.per_snr() {
                    self.build_or_fail(scenario, known, &mut mu, self.snr_linear[k])?
                } else {
                    if shared.is_none() {
                        shared = Some(self.build_or_fail(scenario, known, &mut mu, self.snr_linear[k])?);
                    }
                    shared.clone().expect("set above")
                };
                let tally = &mut tallies[s * n_snr + k];
                let Some(solution) = solution else {
                    tally.failed += 1;
                    continue;
                };
                let amp = self.noise_amplitude[k];
                let values = clean.iter().zip(&draws.unit_noise).map(|(c, z)| c + z * amp).collect();
                let received = ReceivedVector::new(values, self.config.n)?;
                let estimates = equalize(&solution, &received)?;
                for (est, sent) in estimates.iter().zip(&draws.bits) {
                    tally.errors += detect_bits(est).iter().zip(sent).filter(|(a, b)| a != b).count() as u64;
                }
                tally.bits += bits_per_iteration;
            }
        }
        Ok(tallies)
    }

    fn build_or_fail(
        &self,
        scenario: &Scenario,
        known: &mut Knowledge,
        mu: &mut Option<BandedBlockMatrix>,
        snr: f64,
    ) -> Result<Option<EqualizerSolution>> {
        match self.build(scenario, known, mu, snr) {
            Ok(s) => Ok(Some(s)),
            Err(Error::Singular(_)) => Ok(None),
            Err(e) => Err(e),
        }
    }

    fn run(&self, execution: Execution) -> Result<Vec<Tally>> {
        let zero = vec![Tally::default(); self.scenarios.len() * self.snr_linear.len()];
        let iterations = self.config.iterations;
        match execution {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..iterations)
                    .into_par_iter()
                    .map(|it| self.iteration(it))
                    .try_reduce(|| zero.clone(), |a, b| Ok(merge(a, b)))
            }
            _ => (0..iterations).try_fold(zero, |acc, it| Ok(merge(acc, self.iteration(it)?))),
        }
    }

    fn points(&self, tallies: &[Tally]) -> Vec<Vec<BerPoint>> {
        let n_snr = self.snr_linear.len();
        self.scenarios
            .iter()
            .enumerate()
            .map(|(s, scenario)| {
                self.config
                    .snr_db
                    .iter()
                    .enumerate()
                    .map(|(k, &snr_db)| {
                        let t = tallies[s * n_snr + k];
                        BerPoint {
                            snr_db,
                            ber: if t.bits == 0 {
                                f64::NAN
                            } else {
                                t.errors as f64 / t.bits as f64
                            },
                            bit_errors: t.errors,
                            total_bits: t.bits,
                            failed_iterations: t.failed,
                            iterations: self.config.iterations,
                            equalizer: scenario.kind,
                            tau: scenario.tau_reported(self.config.n),
                            alpha: scenario.alpha_at(snr_db),
                            epsilon_max: scenario.effective_epsilon_max(),
                            seed: self.config.master_seed,
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// Run several scenarios over one set of random draws; one curve per scenario.
pub fn run_scenarios(config: &SimConfig, scenarios: &[Scenario], execution: Execution) -> Result<Vec<Vec<BerPoint>>> {
    let engine = Engine::new(config, scenarios)?;
    let tallies = engine.run(execution)?;
    Ok(engine.points(&tallies))
}

/// BER versus SNR for the configured equalizer.
pub fn run_ber(config: &SimConfig) -> Result<Vec<BerPoint>> {
    run_ber_with(config, Execution::Parallel)
}

pub fn run_ber_with(config: &SimConfig, execution: Execution) -> Result<Vec<BerPoint>> {
    let mut curves = run_scenarios(config, &[config.scenario()], execution)?;
    Ok(curves.remove(0))
}

fn sweep(config: &SimConfig, parameter: &str, grid: Vec<String>, scenarios: Vec<Scenario>) -> Result<SweepResult> {
    if scenarios.is_empty() {
        return Err(Error::InvalidParameter(format!("{parameter} grid is empty")));
    }
    Ok(SweepResult {
        parameter: parameter.into(),
        grid,
        curves: run_scenarios(config, &scenarios, Execution::Parallel)?,
    })
}

/// Banded equalizer at each α; `0` and [`AlphaSpec::InverseSnr`] are valid entries.
pub fn sweep_alpha(config: &SimConfig, grid: &[AlphaSpec]) -> Result<SweepResult> {
    let base = Scenario {
        kind: EqualizerKind::Jlcrlzf,
        ..config.scenario()
    };
    let scenarios = grid.iter().map(|&alpha| Scenario { alpha, ..base.clone() }).collect();
    sweep(config, "alpha", grid.iter().map(AlphaSpec::label).collect(), scenarios)
}

/// Banded equalizer at each bandwidth, with full-band and no-CFO sentinels.
pub fn sweep_tau(config: &SimConfig, grid: &[TauSpec]) -> Result<SweepResult> {
    let base = Scenario {
        kind: EqualizerKind::Jlcrlzf,
        ..config.scenario()
    };
    let scenarios = grid.iter().map(|&tau| Scenario { tau, ..base.clone() }).collect();
    sweep(config, "tau", grid.iter().map(TauSpec::label).collect(), scenarios)
}

/// Configured equalizer at each `ε_max`.
pub fn sweep_cfo(config: &SimConfig, grid: &[f64]) -> Result<SweepResult> {
    let scenarios = grid
        .iter()
        .map(|&epsilon_max| Scenario {
            epsilon_max,
            ..config.scenario()
        })
        .collect();
    sweep(
        config,
        "eps_max",
        grid.iter().map(|v| v.to_string()).collect(),
        scenarios,
    )
}

/// Equalizer built from `ε̂ = ε(1 + p/100)` while the channel uses `ε`.
pub fn sweep_cfo_error(config: &SimConfig, grid: &[f64]) -> Result<SweepResult> {
    let scenarios = grid
        .iter()
        .map(|&cfo_error_percent| Scenario {
            cfo_error_percent,
            ..config.scenario()
        })
        .collect();
    sweep(
        config,
        "cfo_err_pct",
        grid.iter().map(|v| v.to_string()).collect(),
        scenarios,
    )
}

/// Equalizer built from `ĥ = h + Δh·g`, `g ~ CN(0, 1)` per tap.
pub fn sweep_channel_error(config: &SimConfig, grid: &[f64]) -> Result<SweepResult> {
    let scenarios = grid
        .iter()
        .map(|&channel_error_delta| Scenario {
            channel_error_delta,
            ..config.scenario()
        })
        .collect();
    sweep(
        config,
        "delta_h",
        grid.iter().map(|v| v.to_string()).collect(),
        scenarios,
    )
}

/// Column order of BER tables.
pub const BER_CSV_HEADER: &str = "snr_db,ber,total_bits,failed_iters,equalizer,tau,alpha,eps_max,seed";

fn csv_row(p: &BerPoint) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        p.snr_db,
        p.ber,
        p.total_bits,
        p.failed_iterations,
        p.equalizer.name(),
        p.tau,
        p.alpha,
        p.epsilon_max,
        p.seed
    )
}

/// BER curve as CSV text with a header row. Floats use shortest round-trip
/// formatting, so equal results give equal bytes.
pub fn ber_csv(points: &[BerPoint]) -> String {
    let mut out = String::from(BER_CSV_HEADER);
    out.push('\n');
    for p in points {
        out.push_str(&csv_row(p));
        out.push('\n');
    }
    out
}

/// Sweep as CSV text: the swept value leads each BER row.
pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = format!("{},{}\n", result.parameter, BER_CSV_HEADER);
    for (label, curve) in result.grid.iter().zip(&result.curves) {
        for p in curve {
            out.push_str(&format!("{label},{}\n", csv_row(p)));
        }
    }
    out
}

/// SNR at which a curve first drops to `target`, interpolating `log10(BER)`
/// linearly between grid points.
pub fn snr_at_ber(points: &[BerPoint], target: f64) -> Option<f64> {
    let log = |b: f64| b.max(1e-300).log10();
    let goal = log(target);
    points.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        if a.ber.is_nan() || b.ber.is_nan() {
            return None;
        }
        if a.ber >= target && b.ber <= target {
            let (la, lb) = (log(a.ber), log(b.ber));
            if la == lb {
                return Some(a.snr_db);
            }
            Some(a.snr_db + (goal - la) / (lb - la) * (b.snr_db - a.snr_db))
        } else {
            None
        }
    })
}

/// One wall-clock comparison point.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub sigma: u32,
    pub n: usize,
    pub n_cp: usize,
    pub tau: usize,
    pub alpha: f64,
    pub snr_db: f64,
    pub epsilon_max: f64,
    pub repetitions: usize,
    pub seed: u64,
}

impl BenchConfig {
    pub fn from_sim(config: &SimConfig, sigma: u32, repetitions: usize) -> Self {
        Self {
            sigma,
            n: config.n,
            n_cp: config.n_cp,
            tau: config.tau,
            alpha: config.alpha,
            snr_db: config.snr_db.last().copied().unwrap_or(15.0),
            epsilon_max: config.epsilon_max,
            repetitions,
            seed: config.master_seed,
        }
    }
}

/// Timings of the five equalizers at one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub config: BenchConfig,
    /// Best-of-repetitions seconds for construction plus one application.
    pub seconds: Vec<(EqualizerKind, f64)>,
    /// Each kind against the banded equalizer (`t1`).
    pub comparisons: Vec<(EqualizerKind, TimingComparison)>,
}

impl BenchResult {
    pub fn seconds_of(&self, kind: EqualizerKind) -> Option<f64> {
        self.seconds.iter().find(|(k, _)| *k == kind).map(|(_, s)| *s)
    }

    pub fn fastest(&self) -> Option<EqualizerKind> {
        self.seconds.iter().min_by(|a, b| a.1.total_cmp(&b.1)).map(|(k, _)| *k)
    }
}

/// Wall-clock of solution construction plus application for every kind.
///
/// The composite matrix is shared input; frequency-domain kinds pay for their
/// own frequency-domain composite. Absolute values depend on the machine.
pub fn bench_time(configs: &[BenchConfig]) -> Result<Vec<BenchResult>> {
    if configs.is_empty() {
        return Err(Error::InvalidParameter("no benchmark configurations".into()));
    }
    configs.iter().map(bench_one).collect()
}

fn bench_one(cfg: &BenchConfig) -> Result<BenchResult> {
    if cfg.tau >= cfg.n {
        return Err(Error::InvalidParameter(format!("tau must be ≤ n − 1 = {}", cfg.n - 1)));
    }
    let model = CosineModel::new(cfg.n, cfg.n_cp)?;
    let m = 1usize << cfg.sigma;
    let powers = ChannelProfile::VehicularA.powers();
    let mut rng = stream(cfg.seed, 0, Purpose::Benchmark, cfg.sigma as u64);
    let pairs = (0..m * m)
        .map(|_| {
            Ok((
                draw_rayleigh_taps(&powers, &mut rng)?,
                draw_cfo(cfg.epsilon_max, &mut rng)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let realization = ChannelRealization::new(m, m, pairs)?;
    let pi = model.assemble_mimo(&realization)?;
    let bits: Vec<Vec<u8>> = (0..m)
        .map(|_| (0..cfg.n).map(|_| rng.random_range(0..=1u8)).collect())
        .collect();
    let symbols: Vec<_> = bits.iter().map(|b| modulate_bits(b)).collect();
    let noise_power = 10f64.powf(-cfg.snr_db / 10.0);
    let received = model.transmit(&symbols, &pi, noise_power, &mut rng)?;
    let snr = 1.0 / noise_power;

    let mut seconds = Vec::new();
    for kind in EqualizerKind::ALL {
        let mut best = f64::INFINITY;
        for _ in 0..cfg.repetitions.max(1) {
            let start = Instant::now();
            let solution = match kind {
                EqualizerKind::LzfCde => lzf_cde(&pi)?,
                EqualizerKind::LmmseCde => lmmse_cde(&pi, snr)?,
                EqualizerKind::LzfFde => lzf_fde(&model, &realization)?,
                EqualizerKind::LmmseFde => lmmse_fde(&model, &realization, snr)?,
                EqualizerKind::Jlcrlzf => {
                    jlcrlzf_cde(&BandedBlockMatrix::from_composite(&pi, cfg.tau)?, cfg.alpha, cfg.tau)?
                }
            };
            let out = equalize(&solution, &received)?;
            best = best.min(start.elapsed().as_secs_f64());
            std::hint::black_box(out);
        }
        seconds.push((kind, best));
    }
    let t1 = seconds[0].1;
    let comparisons = seconds
        .iter()
        .map(|&(k, t2)| Ok((k, compare_times(t1.max(f64::MIN_POSITIVE), t2)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchResult {
        config: cfg.clone(),
        seconds,
        comparisons,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SimConfig {
        SimConfig {
            n: 16,
            n_cp: 5,
            snr_db: vec![0.0, 10.0, 20.0],
            tau: 5,
            iterations: 12,
            master_seed: 7,
            ..SimConfig::default()
        }
    }

    #[test]
    fn defaults_follow_the_reference_setup() {
        let c = SimConfig::default();
        assert_eq!((c.n, c.n_cp, c.sigma, c.tau, c.iterations), (64, 16, 1, 15, 1000));
        assert_eq!(c.snr_db, vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0]);
        assert_eq!(c.epsilon_max, 0.1);
        assert_eq!(c.alpha, 1e-2);
        c.validate().unwrap();
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = [
            SimConfig {
                iterations: 0,
                ..small()
            },
            SimConfig { tau: 16, ..small() },
            SimConfig { n_cp: 4, ..small() },
            SimConfig {
                snr_db: vec![],
                ..small()
            },
            SimConfig { alpha: -1.0, ..small() },
            SimConfig {
                epsilon_max: f64::NAN,
                ..small()
            },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
            assert!(run_ber(&c).is_err());
        }
    }

    #[test]
    fn noiseless_zero_forcing_is_error_free() {
        let c = SimConfig {
            snr_db: vec![200.0],
            tau: 15,
            alpha: 0.0,
            iterations: 20,
            ..small()
        };
        let p = run_ber(&c).unwrap();
        assert_eq!(p[0].bit_errors, 0);
        assert_eq!(p[0].total_bits + p[0].failed_iterations * 32, 20 * 32);
    }

    #[test]
    fn deterministic_across_execution_modes() {
        let c = small();
        let a = run_ber_with(&c, Execution::Parallel).unwrap();
        let b = run_ber_with(&c, Execution::Sequential).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, run_ber(&c).unwrap());
        let other = run_ber(&SimConfig { master_seed: 8, ..c }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn ber_falls_with_snr() {
        let p = run_ber(&SimConfig {
            iterations: 30,
            ..small()
        })
        .unwrap();
        assert!(p[2].ber < p[0].ber);
        assert!(p.iter().all(|q| q.failed_iterations == 0));
        assert!(p.iter().all(|q| q.total_bits == 30 * 32));
    }

    #[test]
    fn neutral_sweep_rows_equal_plain_runs() {
        let c = small();
        let base = run_ber(&c).unwrap();
        assert_eq!(sweep_cfo_error(&c, &[0.0, 20.0]).unwrap().curves[0], base);
        assert_eq!(sweep_channel_error(&c, &[0.0, 1e-2]).unwrap().curves[0], base);
        assert_eq!(sweep_tau(&c, &[TauSpec::Band(5)]).unwrap().curves[0], base);
        assert_eq!(sweep_alpha(&c, &[AlphaSpec::Value(1e-2)]).unwrap().curves[0], base);
        assert_eq!(sweep_cfo(&c, &[0.1]).unwrap().curves, vec![base]);
    }

    #[test]
    fn sentinels_match_dense_paths() {
        let c = SimConfig { tau: 15, ..small() };
        let sweep = sweep_alpha(&c, &[AlphaSpec::Value(0.0), AlphaSpec::InverseSnr]).unwrap();
        let dense = |kind| {
            run_ber(&SimConfig {
                equalizer: kind,
                ..c.clone()
            })
            .unwrap()
        };
        let strip = |v: &[BerPoint]| v.iter().map(|p| (p.bit_errors, p.total_bits)).collect::<Vec<_>>();
        assert_eq!(strip(&sweep.curves[0]), strip(&dense(EqualizerKind::LzfCde)));
        assert_eq!(strip(&sweep.curves[1]), strip(&dense(EqualizerKind::LmmseCde)));
        assert_eq!(sweep.grid, vec!["0e0", "1/snr"]);
    }

    #[test]
    fn no_cfo_sentinel_matches_zero_cfo() {
        let c = small();
        let sentinel = sweep_tau(&c, &[TauSpec::NoCfo]).unwrap();
        let zero = sweep_cfo(&SimConfig { tau: 15, ..c }, &[0.0]).unwrap();
        let strip = |v: &[BerPoint]| v.iter().map(|p| (p.bit_errors, p.total_bits)).collect::<Vec<_>>();
        assert_eq!(strip(&sentinel.curves[0]), strip(&zero.curves[0]));
        assert_eq!(sentinel.curves[0][0].tau, 16);
    }

    #[test]
    fn uninformative_estimate_gives_coin_flips() {
        let c = SimConfig {
            snr_db: vec![30.0],
            iterations: 40,
            channel_error_delta: 1.0,
            ..small()
        };
        let big = sweep_channel_error(&c, &[100.0]).unwrap();
        assert!((big.curves[0][0].ber - 0.5).abs() < 0.1, "{}", big.curves[0][0].ber);
    }

    #[test]
    fn csv_layout() {
        let c = SimConfig {
            iterations: 2,
            ..small()
        };
        let csv = ber_csv(&run_ber(&c).unwrap());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], BER_CSV_HEADER);
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,"));
        assert!(lines[1].ends_with(",jlcrlzf-cde,5,0.01,0.1,7"));
        let sweep = sweep_tau(&c, &[TauSpec::Band(1), TauSpec::Full]).unwrap();
        let csv = sweep_csv(&sweep);
        assert!(csv.starts_with("tau,snr_db,"));
        assert_eq!(csv.lines().count(), 7);
        assert!(csv.lines().last().unwrap().starts_with("full,20,"));
    }

    #[test]
    fn snr_interpolation() {
        let mk = |snr_db, ber| BerPoint {
            snr_db,
            ber,
            bit_errors: 0,
            total_bits: 1,
            failed_iterations: 0,
            iterations: 1,
            equalizer: EqualizerKind::Jlcrlzf,
            tau: 0,
            alpha: 0.0,
            epsilon_max: 0.0,
            seed: 0,
        };
        let pts = [mk(0.0, 1e-1), mk(10.0, 1e-2), mk(20.0, 1e-4)];
        assert!((snr_at_ber(&pts, 1e-2).unwrap() - 10.0).abs() < 1e-12);
        assert!((snr_at_ber(&pts, 1e-3).unwrap() - 15.0).abs() < 1e-12);
        assert!(snr_at_ber(&pts, 1e-6).is_none());
    }

    #[test]
    fn bench_reports_every_kind() {
        let cfg = BenchConfig {
            sigma: 1,
            n: 16,
            n_cp: 5,
            tau: 3,
            alpha: 1e-2,
            snr_db: 15.0,
            epsilon_max: 0.1,
            repetitions: 2,
            seed: 3,
        };
        let r = bench_time(&[cfg]).unwrap();
        assert_eq!(r[0].seconds.len(), 5);
        let own = r[0]
            .comparisons
            .iter()
            .find(|(k, _)| *k == EqualizerKind::Jlcrlzf)
            .unwrap();
        assert_eq!(own.1.eta_percent, 0.0);
        assert!(bench_time(&[]).is_err());
    }
}
