//! Flat `key = value` run configuration.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use dctofdm::channel::ChannelProfile;
use dctofdm::equalizers::EqualizerKind;
use dctofdm::simulator::SimConfig;

pub const KEYS: [&str; 13] = [
    "n",
    "n_cp",
    "sigma",
    "snr_db",
    "eps_max",
    "tau",
    "alpha",
    "iters",
    "seed",
    "profile",
    "equalizer",
    "cfo_err_pct",
    "delta_h",
];

/// Parse `start:step:stop` or a comma list.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let text = text.trim();
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    if parts.len() == 3 {
        let [start, step, stop] = [parts[0], parts[1], parts[2]].map(|p| p.parse::<f64>());
        let (start, step, stop) = (start?, step?, stop?);
        if !(step > 0.0) || stop < start {
            bail!("range {text} needs step > 0 and stop ≥ start");
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        return Ok((0..=count).map(|k| start + k as f64 * step).collect());
    }
    if parts.len() != 1 {
        bail!("expected start:step:stop or a comma list, got {text}");
    }
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .with_context(|| format!("bad number {v:?} in {text}"))
        })
        .collect()
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    value
        .trim()
        .parse()
        .with_context(|| format!("{key}: cannot parse {value:?}"))
}

/// Apply one key to a configuration.
pub fn set(config: &mut SimConfig, key: &str, value: &str) -> Result<()> {
    match key {
        "n" => config.n = number(key, value)?,
        "n_cp" => config.n_cp = number(key, value)?,
        "sigma" => config.sigma = number(key, value)?,
        "snr_db" => config.snr_db = parse_grid(value).context("snr_db")?,
        "eps_max" => config.epsilon_max = number(key, value)?,
        "tau" => config.tau = number(key, value)?,
        "alpha" => config.alpha = number(key, value)?,
        "iters" => config.iterations = number(key, value)?,
        "seed" => config.master_seed = number(key, value)?,
        "profile" => {
            config.profile = ChannelProfile::from_name(value.trim()).ok_or_else(|| {
                let names: Vec<_> = ChannelProfile::ALL.iter().map(|p| p.name()).collect();
                anyhow!("profile: unknown {value:?}, expected one of {}", names.join(", "))
            })?
        }
        "equalizer" => {
            config.equalizer = EqualizerKind::from_name(value).ok_or_else(|| {
                let names: Vec<_> = EqualizerKind::ALL.iter().map(|k| k.name()).collect();
                anyhow!("equalizer: unknown {value:?}, expected one of {}", names.join(", "))
            })?
        }
        "cfo_err_pct" => config.cfo_error_percent = number(key, value)?,
        "delta_h" => config.channel_error_delta = number(key, value)?,
        other => bail!("unknown key {other:?}; valid keys: {}", KEYS.join(", ")),
    }
    Ok(())
}

pub fn parse_str(text: &str, config: &mut SimConfig) -> Result<()> {
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected key = value, got {raw:?}", lineno + 1))?;
        set(config, key.trim(), value).with_context(|| format!("line {}", lineno + 1))?;
    }
    Ok(())
}

pub fn load(path: &Path, config: &mut SimConfig) -> Result<()> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    parse_str(&text, config).with_context(|| format!("in {}", path.display()))
}

fn grid_text(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// Resolved configuration in the file format, so a run can be replayed.
pub fn render(config: &SimConfig) -> String {
    let mut out = String::new();
    let pairs = [
        ("n", config.n.to_string()),
        ("n_cp", config.n_cp.to_string()),
        ("sigma", config.sigma.to_string()),
        ("snr_db", grid_text(&config.snr_db)),
        ("eps_max", config.epsilon_max.to_string()),
        ("tau", config.tau.to_string()),
        ("alpha", config.alpha.to_string()),
        ("iters", config.iterations.to_string()),
        ("seed", config.master_seed.to_string()),
        ("profile", config.profile.name().to_string()),
        ("equalizer", config.equalizer.name().to_string()),
        ("cfo_err_pct", config.cfo_error_percent.to_string()),
        ("delta_h", config.channel_error_delta.to_string()),
    ];
    for (k, v) in pairs {
        let _ = writeln!(out, "{k} = {v}");
    }
    out
}
