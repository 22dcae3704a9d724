//! Run directories: staged writes, plots and the run manifest.
//!
//! Files are written under `<out>/.staging`, then renamed into `<out>` one by
//! one with `manifest.json` last. A directory holding a manifest therefore
//! always holds the complete, consistent set of files it lists.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::analysis::{ComparisonReport, DetectorHistogram, ScenarioHistograms};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::wavefield::pgm_bytes;

pub const MANIFEST: &str = "manifest.json";
const STAGING: &str = ".staging";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub tool_version: String,
    pub config_hash: String,
    pub config: Value,
    /// Wall-clock seconds per phase; the only non-reproducible content.
    pub timings: BTreeMap<String, f64>,
    pub files: Vec<String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, cfg: &ExperimentConfig) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: cfg.hash(),
            config: cfg.to_json_value(),
            timings: BTreeMap::new(),
            files: Vec::new(),
        }
    }
}

/// An output directory being populated.
#[derive(Debug)]
pub struct RunDir {
    root: PathBuf,
    staging: PathBuf,
    files: Vec<String>,
}

impl RunDir {
    /// Prepare `root` for a new run. Refuses a directory holding a manifest
    /// unless `force` is set.
    pub fn create(root: &Path, force: bool) -> Result<Self> {
        let manifest = root.join(MANIFEST);
        if manifest.exists() && !force {
            return Err(Error::OutputExists(root.to_path_buf()));
        }
        let staging = root.join(STAGING);
        if staging.exists() {
            fs::remove_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;
        }
        fs::create_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;
        Ok(Self { root: root.to_path_buf(), staging, files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        self.write_with(name, |w| w.write_all(bytes))
    }

    pub fn write_with(&mut self, name: &str, body: impl FnOnce(&mut BufWriter<fs::File>) -> io::Result<()>) -> Result<()> {
        let path = self.staging.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        body(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable output");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Move every staged file into place, then write the manifest.
    pub fn finish(self, mut manifest: RunManifest) -> Result<Vec<String>> {
        let old = self.root.join(MANIFEST);
        if old.exists() {
            fs::remove_file(&old).map_err(|e| Error::io(&old, e))?;
        }
        for name in &self.files {
            let (from, to) = (self.staging.join(name), self.root.join(name));
            if let Some(parent) = to.parent() {
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            fs::rename(&from, &to).map_err(|e| Error::io(&to, e))?;
        }
        manifest.files = self.files.clone();
        let staged = self.staging.join(MANIFEST);
        let mut text = serde_json::to_string_pretty(&manifest).expect("serializable manifest");
        text.push('\n');
        fs::write(&staged, text).map_err(|e| Error::io(&staged, e))?;
        fs::rename(&staged, &old).map_err(|e| Error::io(&old, e))?;
        fs::remove_dir_all(&self.staging).map_err(|e| Error::io(&self.staging, e))?;
        Ok(self.files)
    }
}

/// One arrival position per line, no header.
pub fn arrivals_csv(arrivals: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(arrivals.len() * 20);
    for x in arrivals {
        writeln!(out, "{x}").expect("write to memory");
    }
    out
}

/// Detector densities per interpretation: one block per interpretation,
/// each row `interpretation,bin_center,source,inserted,combined`.
///
/// `source` and `inserted` are normalized by the combined total so that the
/// two columns add up to `combined`.
pub fn fig2_csv(report: &ComparisonReport) -> Vec<u8> {
    let mut out = b"interpretation,bin_center,source,inserted,combined\n".to_vec();
    for (label, s) in [("bi", &report.histograms.bi), ("sqm", &report.histograms.sqm)] {
        let total = s.combined.total as f64;
        let width = s.combined.width();
        let scaled = |c: u64| if total == 0.0 { 0.0 } else { c as f64 / (total * width) };
        for i in 0..s.combined.bins() {
            writeln!(
                out,
                "{label},{},{},{},{}",
                s.combined.center(i),
                scaled(s.source.counts[i]),
                scaled(s.inserted.counts[i]),
                s.combined.densities[i]
            )
            .expect("write to memory");
        }
    }
    out
}

pub const PLOT_HEIGHT: usize = 120;
const BAR_WIDTH: usize = 3;

/// Grayscale bar chart of a histogram: white bars on black, height scaled to
/// the fullest bin.
pub fn histogram_pgm(h: &DetectorHistogram) -> Vec<u8> {
    let width = h.bins() * BAR_WIDTH;
    let peak = h.counts.iter().copied().max().unwrap_or(0);
    let heights: Vec<usize> = h
        .counts
        .iter()
        .map(|&c| if peak == 0 { 0 } else { ((c as f64 / peak as f64) * PLOT_HEIGHT as f64).round() as usize })
        .collect();
    let pixels = (0..PLOT_HEIGHT).flat_map(|row| {
        let level = PLOT_HEIGHT - row;
        let heights = &heights;
        (0..width).map(move |col| if heights[col / BAR_WIDTH] >= level { 255 } else { 0 })
    });
    pgm_bytes(width, PLOT_HEIGHT, pixels)
}

/// The six histogram plots of a comparison, as `(file name, PGM bytes)`.
pub fn comparison_plots(report: &ComparisonReport) -> Vec<(String, Vec<u8>)> {
    let mut plots = Vec::new();
    for (label, s) in [("bi", &report.histograms.bi), ("sqm", &report.histograms.sqm)] {
        let ScenarioHistograms { source, inserted, combined } = s;
        for (part, h) in [("source", source), ("inserted", inserted), ("combined", combined)] {
            plots.push((format!("plots/{label}_{part}.pgm"), histogram_pgm(h)));
        }
    }
    plots
}
