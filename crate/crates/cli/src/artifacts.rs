//! Output directory, run manifest and SVG charts.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub subcommand: String,
    /// Resolved configuration, key by key.
    pub config: BTreeMap<String, String>,
    pub outputs: Vec<Artifact>,
    pub elapsed_seconds: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Output directory that collects written artifacts.
pub struct OutDir {
    root: PathBuf,
    written: Vec<Artifact>,
}

impl OutDir {
    /// Create the directory and prove it is writable.
    pub fn open(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("cannot create output directory {}", root.display()))?;
        let probe = root.join(".dctofdm-write-probe");
        fs::write(&probe, b"").with_context(|| format!("output directory {} is not writable", root.display()))?;
        let _ = fs::remove_file(&probe);
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, file: &str, contents: &str) -> Result<PathBuf> {
        let path = self.root.join(file);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(Artifact {
            path: file.to_string(),
            sha256: sha256_hex(contents.as_bytes()),
        });
        Ok(path)
    }

    pub fn manifest_path(&self, name: &str) -> PathBuf {
        self.root.join(format!("{name}.manifest.json"))
    }

    /// Write the manifest; always the final file of a run.
    pub fn finish(
        self,
        name: &str,
        subcommand: &str,
        config: BTreeMap<String, String>,
        elapsed: f64,
    ) -> Result<RunManifest> {
        let manifest = RunManifest {
            subcommand: subcommand.to_string(),
            config,
            outputs: self.written,
            elapsed_seconds: elapsed,
        };
        let path = self.root.join(format!("{name}.manifest.json"));
        let text = serde_json::to_string_pretty(&manifest)?;
        fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(manifest)
    }
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
}

/// Compare fresh artifacts with a previous manifest. Returns the mismatching paths.
pub fn compare(previous: &RunManifest, current: &RunManifest) -> Vec<String> {
    let old: BTreeMap<_, _> = previous.outputs.iter().map(|a| (&a.path, &a.sha256)).collect();
    let new: BTreeMap<_, _> = current.outputs.iter().map(|a| (&a.path, &a.sha256)).collect();
    let mut bad: Vec<String> = old
        .iter()
        .filter(|(p, h)| new.get(*p) != Some(*h))
        .map(|(p, _)| p.to_string())
        .collect();
    bad.extend(new.keys().filter(|p| !old.contains_key(*p)).map(|p| p.to_string()));
    bad
}

/// Verify that files on disk still match a manifest.
pub fn verify_on_disk(root: &Path, manifest: &RunManifest) -> Result<()> {
    let mut bad = Vec::new();
    for a in &manifest.outputs {
        match fs::read(root.join(&a.path)) {
            Ok(bytes) if sha256_hex(&bytes) == a.sha256 => {}
            _ => bad.push(a.path.clone()),
        }
    }
    if !bad.is_empty() {
        bail!("checksum mismatch: {}", bad.join(", "));
    }
    Ok(())
}

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Line chart with a log10 y axis. Points with nonpositive or NaN y are dropped.
pub fn svg_chart(title: &str, x_label: &str, series: &[Series]) -> String {
    let (w, h, left, right, top, bottom) = (640.0, 420.0, 70.0, 150.0, 40.0, 50.0);
    let pts = || series.iter().flat_map(|s| s.points.iter()).filter(|(_, y)| *y > 0.0);
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut d0, mut d1) = (f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in pts() {
        x0 = x0.min(*x);
        x1 = x1.max(*x);
        d0 = d0.min(y.log10().floor());
        d1 = d1.max(y.log10().ceil());
    }
    if !x0.is_finite() {
        (x0, x1, d0, d1) = (0.0, 1.0, -6.0, 0.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if d1 <= d0 {
        d1 = d0 + 1.0;
    }
    let px = |x: f64| left + (x - x0) / (x1 - x0) * (w - left - right);
    let py = |y: f64| top + (d1 - y.log10()) / (d1 - d0) * (h - top - bottom);

    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{title}</text>\n",
        (left + w - right) / 2.0
    );
    let mut d = d0;
    while d <= d1 {
        let y = py(10f64.powf(d));
        s += &format!(
            "<line x1=\"{left}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#ddd\"/>\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">1e{d}</text>\n",
            w - right,
            left - 6.0,
            y + 4.0
        );
        d += 1.0;
    }
    for k in 0..=4 {
        let x = x0 + (x1 - x0) * k as f64 / 4.0;
        s += &format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
            px(x),
            h - bottom + 18.0,
            (x * 100.0).round() / 100.0
        );
    }
    s += &format!(
        "<rect x=\"{left}\" y=\"{top}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n\
         <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{x_label}</text>\n",
        w - left - right,
        h - top - bottom,
        (left + w - right) / 2.0,
        h - 12.0
    );
    for (i, line) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = line
            .points
            .iter()
            .filter(|(_, y)| *y > 0.0)
            .map(|(x, y)| format!("{:.1},{:.1}", px(*x), py(*y)))
            .collect();
        s += &format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            coords.join(" ")
        );
        let ly = top + 16.0 * i as f64 + 10.0;
        s += &format!(
            "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"2\"/>\
             <text x=\"{:.1}\" y=\"{:.1}\">{}</text>\n",
            w - right + 10.0,
            w - right + 30.0,
            w - right + 35.0,
            ly + 4.0,
            line.label
        );
    }
    s + "</svg>\n"
}
