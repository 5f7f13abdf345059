//! `dctofdm`: BER runs, parameter sweeps, flop tables and timing.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod artifacts;
mod config;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dctofdm::equalizers::EqualizerKind;
use dctofdm::flops::{flops_equalizer, jlcrlzf_poly, recursion_audit};
use dctofdm::simulator::{
    bench_time, ber_csv, run_ber, sweep_alpha, sweep_cfo, sweep_cfo_error, sweep_channel_error, sweep_csv, sweep_tau,
    AlphaSpec, BenchConfig, BerPoint, SimConfig, SweepResult, TauSpec,
};

use artifacts::{OutDir, Series};

#[derive(Parser, Debug)]
#[command(
    name = "dctofdm",
    version,
    about = "MIMO DCT-OFDM simulation and banded equalization experiments"
)]
struct Cli {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, env = "DCTOFDM_OUT", default_value = "out")]
    out: PathBuf,

    /// Base name of the written files (defaults to the subcommand).
    #[arg(long, global = true)]
    name: Option<String>,

    /// Also write an SVG chart of the curves.
    #[arg(long, global = true)]
    plot: bool,

    /// Verify the previous run's artifacts, rerun, and require identical checksums.
    #[arg(long, global = true)]
    check: bool,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

/// Flags that override the configuration file.
#[derive(Args, Debug, Default)]
struct Overrides {
    #[arg(long, global = true)]
    n: Option<String>,
    #[arg(long, global = true)]
    n_cp: Option<String>,
    #[arg(long, global = true)]
    sigma: Option<String>,
    /// `start:step:stop` or a comma list.
    #[arg(long, global = true)]
    snr_db: Option<String>,
    #[arg(long, global = true)]
    eps_max: Option<String>,
    #[arg(long, global = true)]
    tau: Option<String>,
    #[arg(long, global = true)]
    alpha: Option<String>,
    #[arg(long, global = true)]
    iters: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    #[arg(long, global = true)]
    profile: Option<String>,
    #[arg(long, global = true)]
    equalizer: Option<String>,
    #[arg(long, global = true)]
    cfo_err_pct: Option<String>,
    #[arg(long, global = true)]
    delta_h: Option<String>,
}

impl Overrides {
    fn pairs(&self) -> [(&'static str, &Option<String>); 13] {
        [
            ("n", &self.n),
            ("n_cp", &self.n_cp),
            ("sigma", &self.sigma),
            ("snr_db", &self.snr_db),
            ("eps_max", &self.eps_max),
            ("tau", &self.tau),
            ("alpha", &self.alpha),
            ("iters", &self.iters),
            ("seed", &self.seed),
            ("profile", &self.profile),
            ("equalizer", &self.equalizer),
            ("cfo_err_pct", &self.cfo_err_pct),
            ("delta_h", &self.delta_h),
        ]
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// BER versus SNR for the configured equalizer.
    Ber,
    /// BER curves over one swept parameter.
    Sweep {
        #[arg(value_enum)]
        parameter: SweepKind,
        /// Comma-separated grid; `alpha` accepts `1/snr`, `tau` accepts `full` and `no-cfo`.
        #[arg(long)]
        grid: Option<String>,
    },
    /// Modeled flop counts and the recursion audit.
    Flops {
        #[arg(long, default_value_t = 6)]
        sigma_max: u32,
    },
    /// Wall-clock timing and time reduction relative to the banded equalizer.
    Bench {
        /// Comma-separated antenna exponents.
        #[arg(long, default_value = "1,2,3")]
        sigmas: String,
        #[arg(long, default_value_t = 3)]
        reps: usize,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SweepKind {
    Alpha,
    Tau,
    Cfo,
    CfoError,
    ChannelError,
}

impl SweepKind {
    fn slug(self) -> &'static str {
        match self {
            SweepKind::Alpha => "alpha",
            SweepKind::Tau => "tau",
            SweepKind::Cfo => "cfo",
            SweepKind::CfoError => "cfo-error",
            SweepKind::ChannelError => "channel-error",
        }
    }

    fn default_grid(self) -> &'static str {
        match self {
            SweepKind::Alpha => "1e2,1e1,1,1e-1,1e-2,1e-3,1e-4,1e-5,1e-6,0,1/snr",
            SweepKind::Tau => "0,5,10,15,20,full,no-cfo",
            SweepKind::Cfo => "0,0.05,0.1,0.15,0.2",
            SweepKind::CfoError => "0,5,10,20,50",
            SweepKind::ChannelError => "0,1e-3,1e-2,5e-2,1e-1",
        }
    }
}

/// Failure classes map to exit codes.
enum Failure {
    /// Bad configuration or arguments.
    Usage(anyhow::Error),
    /// Output directory missing or unwritable.
    Output(anyhow::Error),
    /// Simulation error or failed check.
    Run(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Output(_) => 2,
            Failure::Run(_) => 1,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Output(e) | Failure::Run(e) => e,
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<SimConfig> {
    let mut config = SimConfig::default();
    if let Some(path) = &cli.config {
        config::load(path, &mut config)?;
    }
    for (key, value) in cli.overrides.pairs() {
        if let Some(v) = value {
            config::set(&mut config, key, v).with_context(|| format!("--{}", key.replace('_', "-")))?;
        }
    }
    config.validate().map_err(|e| anyhow!("{e}"))?;
    Ok(config)
}

fn alpha_grid(text: &str) -> Result<Vec<AlphaSpec>> {
    text.split(',')
        .map(|v| match v.trim() {
            "1/snr" => Ok(AlphaSpec::InverseSnr),
            other => Ok(AlphaSpec::Value(
                other.parse().with_context(|| format!("bad alpha {other:?}"))?,
            )),
        })
        .collect()
}

fn tau_grid(text: &str, n: usize) -> Result<Vec<TauSpec>> {
    text.split(',')
        .map(|v| match v.trim() {
            "full" => Ok(TauSpec::Full),
            "no-cfo" => Ok(TauSpec::NoCfo),
            other => {
                let t: usize = other.parse().with_context(|| format!("bad tau {other:?}"))?;
                if t >= n {
                    bail!("tau must be ≤ n − 1 = {}, got {t}", n - 1);
                }
                Ok(TauSpec::Band(t))
            }
        })
        .collect()
}

fn value_grid(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|v| v.trim().parse().with_context(|| format!("bad grid value {v:?}")))
        .collect()
}

fn series(label: &str, points: &[BerPoint]) -> Series {
    Series {
        label: label.to_string(),
        points: points.iter().map(|p| (p.snr_db, p.ber)).collect(),
    }
}

fn print_curve(label: &str, points: &[BerPoint]) {
    let row: Vec<String> = points.iter().map(|p| format!("{}:{:.3e}", p.snr_db, p.ber)).collect();
    println!("{label:>12}  {}", row.join("  "));
}

fn run_sweep(config: &SimConfig, kind: SweepKind, grid: &str) -> Result<SweepResult, Failure> {
    let result = match kind {
        SweepKind::Alpha => sweep_alpha(config, &alpha_grid(grid).map_err(Failure::Usage)?),
        SweepKind::Tau => sweep_tau(config, &tau_grid(grid, config.n).map_err(Failure::Usage)?),
        SweepKind::Cfo => sweep_cfo(config, &value_grid(grid).map_err(Failure::Usage)?),
        SweepKind::CfoError => sweep_cfo_error(config, &value_grid(grid).map_err(Failure::Usage)?),
        SweepKind::ChannelError => sweep_channel_error(config, &value_grid(grid).map_err(Failure::Usage)?),
    };
    result.map_err(|e| Failure::Run(anyhow!("simulation failed: {e}")))
}

fn cmd_flops(config: &SimConfig, sigma_max: u32, out: &mut OutDir, name: &str) -> Result<(), Failure> {
    let (n, tau) = (config.n as u64, config.tau as u64);
    if sigma_max == 0 {
        return Err(Failure::Usage(anyhow!("sigma_max must be ≥ 1")));
    }
    let mut csv = String::from("equalizer,sigma,n,tau,flops\n");
    println!("flops at N = {n}, τ = {tau}");
    print!("{:>12}", "equalizer");
    for s in 1..=sigma_max {
        print!("  {:>18}", format!("σ={s}"));
    }
    println!();
    for kind in EqualizerKind::ALL.iter().rev() {
        print!("{:>12}", kind.name());
        for s in 1..=sigma_max {
            let model = flops_equalizer(*kind, s, n, tau).map_err(|e| Failure::Run(anyhow!("{e}")))?;
            print!("  {:>18}", model.flops.to_string());
            csv += &format!("{},{s},{n},{tau},{}\n", kind.name(), model.flops);
        }
        println!();
    }
    println!("\nbanded polynomial N·(aτ² + bτ + c):");
    for s in 1..=sigma_max {
        let p = jlcrlzf_poly(s).map_err(|e| Failure::Run(anyhow!("{e}")))?;
        println!("  σ={s}: {p}");
    }
    let audit = recursion_audit(sigma_max.max(2), n, tau).map_err(|e| Failure::Run(anyhow!("{e}")))?;
    println!("\n{audit}");
    out.write(&format!("{name}.csv"), &csv).map_err(Failure::Output)?;
    out.write(&format!("{name}-audit.csv"), &audit.to_string())
        .map_err(Failure::Output)?;
    Ok(())
}

fn cmd_bench(config: &SimConfig, sigmas: &str, reps: usize, out: &mut OutDir, name: &str) -> Result<(), Failure> {
    let sigmas: Vec<u32> = sigmas
        .split(',')
        .map(|s| s.trim().parse().with_context(|| format!("bad sigma {s:?}")))
        .collect::<Result<_>>()
        .map_err(Failure::Usage)?;
    let configs: Vec<BenchConfig> = sigmas.iter().map(|&s| BenchConfig::from_sim(config, s, reps)).collect();
    let results = bench_time(&configs).map_err(|e| Failure::Run(anyhow!("benchmark failed: {e}")))?;

    let mut csv = String::from("sigma,equalizer,seconds,eta_percent\n");
    for r in &results {
        for (kind, secs) in &r.seconds {
            let eta = r
                .comparisons
                .iter()
                .find(|(k, _)| k == kind)
                .map(|(_, c)| c.eta_percent.to_string())
                .unwrap_or_default();
            csv += &format!("{},{},{secs},{eta}\n", r.config.sigma, kind.name());
        }
    }
    let header: String = sigmas.iter().map(|s| format!("  {:>10}", format!("σ={s}"))).collect();
    println!("seconds (best of {reps})\n{:>12}{header}", "equalizer");
    for kind in EqualizerKind::ALL.iter().rev() {
        let cells: String = results
            .iter()
            .map(|r| format!("  {:>10.4}", r.seconds_of(*kind).unwrap_or(f64::NAN)))
            .collect();
        println!("{:>12}{cells}", kind.name());
    }
    println!(
        "\nη% relative to {}\n{:>12}{header}",
        EqualizerKind::Jlcrlzf.name(),
        "equalizer"
    );
    for kind in EqualizerKind::ALL.iter().rev() {
        let cells: String = results
            .iter()
            .map(|r| match r.comparisons.iter().find(|(k, _)| k == kind) {
                Some((_, c)) if *kind != EqualizerKind::Jlcrlzf => format!("  {:>10.2}", c.eta_percent),
                _ => format!("  {:>10}", "----"),
            })
            .collect();
        println!("{:>12}{cells}", kind.name());
    }
    out.write(&format!("{name}.csv"), &csv).map_err(Failure::Output)?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let started = Instant::now();
    let config = resolve_config(&cli).map_err(Failure::Usage)?;
    let (subcommand, default_name) = match &cli.command {
        Command::Ber => ("ber".to_string(), "ber".to_string()),
        Command::Sweep { parameter, .. } => (
            format!("sweep {}", parameter.slug()),
            format!("sweep-{}", parameter.slug()),
        ),
        Command::Flops { .. } => ("flops".to_string(), "flops".to_string()),
        Command::Bench { .. } => ("bench".to_string(), "bench".to_string()),
    };
    let name = cli.name.clone().unwrap_or(default_name);
    let mut out = OutDir::open(&cli.out).map_err(Failure::Output)?;

    let previous = if cli.check {
        let path = out.manifest_path(&name);
        let manifest = artifacts::read_manifest(&path).map_err(Failure::Usage)?;
        artifacts::verify_on_disk(out.root(), &manifest).map_err(Failure::Run)?;
        Some(manifest)
    } else {
        None
    };

    match &cli.command {
        Command::Ber => {
            let points = run_ber(&config).map_err(|e| Failure::Run(anyhow!("simulation failed: {e}")))?;
            print_curve(config.equalizer.name(), &points);
            out.write(&format!("{name}.csv"), &ber_csv(&points))
                .map_err(Failure::Output)?;
            if cli.plot {
                let svg = artifacts::svg_chart("BER", "SNR (dB)", &[series(config.equalizer.name(), &points)]);
                out.write(&format!("{name}.svg"), &svg).map_err(Failure::Output)?;
            }
        }
        Command::Sweep { parameter, grid } => {
            let grid = grid.as_deref().unwrap_or(parameter.default_grid());
            let result = run_sweep(&config, *parameter, grid)?;
            for (label, curve) in result.grid.iter().zip(&result.curves) {
                print_curve(label, curve);
            }
            out.write(&format!("{name}.csv"), &sweep_csv(&result))
                .map_err(Failure::Output)?;
            if cli.plot {
                let lines: Vec<Series> = result
                    .grid
                    .iter()
                    .zip(&result.curves)
                    .map(|(label, c)| series(&format!("{} = {label}", result.parameter), c))
                    .collect();
                let svg = artifacts::svg_chart(&format!("BER over {}", result.parameter), "SNR (dB)", &lines);
                out.write(&format!("{name}.svg"), &svg).map_err(Failure::Output)?;
            }
        }
        Command::Flops { sigma_max } => cmd_flops(&config, *sigma_max, &mut out, &name)?,
        Command::Bench { sigmas, reps } => cmd_bench(&config, sigmas, *reps, &mut out, &name)?,
    }

    let config_map: BTreeMap<String, String> = config::render(&config)
        .lines()
        .filter_map(|l| l.split_once(" = ").map(|(k, v)| (k.to_string(), v.to_string())))
        .collect();
    let manifest = out
        .finish(&name, &subcommand, config_map, started.elapsed().as_secs_f64())
        .map_err(Failure::Output)?;
    eprintln!(
        "wrote {} artifacts and {name}.manifest.json to {}",
        manifest.outputs.len(),
        cli.out.display()
    );

    if let Some(previous) = previous {
        let bad = artifacts::compare(&previous, &manifest);
        if !bad.is_empty() {
            return Err(Failure::Run(anyhow!(
                "check failed, artifacts differ: {}",
                bad.join(", ")
            )));
        }
        eprintln!("check passed: {} artifacts identical", manifest.outputs.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
