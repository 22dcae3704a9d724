//! Seeded sampling and ensemble execution.
//!
//! Every trajectory `i` of an ensemble draws from its own ChaCha8 stream,
//! keyed by `(master seed, i)`. Results are therefore a pure function of the
//! configuration and spec, whatever the worker count or scheduling order.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Region};
use crate::dynamics::{ArrivalRecord, ArrivalStatus, Dynamics};
use crate::error::{Error, Result};
use crate::wavefield::Wavefield;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpretation {
    Bi,
    Sqm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Population {
    Source,
    Inserted,
}

impl Interpretation {
    pub fn label(self) -> &'static str {
        match self {
            Interpretation::Bi => "bi",
            Interpretation::Sqm => "sqm",
        }
    }
}

impl Population {
    pub fn label(self) -> &'static str {
        match self {
            Population::Source => "source",
            Population::Inserted => "inserted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub interpretation: Interpretation,
    pub population: Population,
    pub count: u64,
    pub seed: u64,
    pub config_hash: String,
}

impl EnsembleSpec {
    /// Spec for one cell of the comparison, with count and seed taken from
    /// the configuration.
    pub fn for_config(cfg: &ExperimentConfig, interpretation: Interpretation, population: Population) -> Self {
        let count = match population {
            Population::Source => cfg.source_count,
            Population::Inserted => cfg.eitse.count,
        };
        Self { interpretation, population, count, seed: cfg.seed, config_hash: cfg.hash() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusCounts {
    pub arrived: u64,
    pub lost_side: u64,
    pub timeout: u64,
    pub node_abort: u64,
}

impl StatusCounts {
    pub fn record(&mut self, status: ArrivalStatus) {
        match status {
            ArrivalStatus::Arrived => self.arrived += 1,
            ArrivalStatus::LostSide => self.lost_side += 1,
            ArrivalStatus::Timeout => self.timeout += 1,
            ArrivalStatus::NodeAbort => self.node_abort += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.arrived + self.lost_side + self.timeout + self.node_abort
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub spec: EnsembleSpec,
    /// Detector positions of the arrived trajectories, in trajectory order.
    #[serde(skip)]
    pub arrivals: Vec<f64>,
    pub status_counts: StatusCounts,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl EnsembleResult {
    pub fn from_records(spec: EnsembleSpec, records: &[ArrivalRecord], wall_time: Duration) -> Self {
        let mut status_counts = StatusCounts::default();
        let mut arrivals = Vec::new();
        for r in records {
            status_counts.record(r.status);
            if let Some(x) = r.arrival_x {
                arrivals.push(x);
            }
        }
        Self { spec, arrivals, status_counts, wall_time }
    }

    /// Identical numeric content; wall time is ignored.
    pub fn same_content(&self, other: &Self) -> bool {
        self.spec == other.spec
            && self.status_counts == other.status_counts
            && self.arrivals.len() == other.arrivals.len()
            && self.arrivals.iter().zip(&other.arrivals).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Counter-based substream for trajectory `index` under `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Rejection sampler for `|ψ(x, t)|²` with the equal-weight two-Gaussian
/// mixture of the individual packet densities as proposal.
///
/// With `r = G₋/G₊` the target-to-proposal ratio is
/// `2N² |1 + r|² / (1 + |r|²)`, which never exceeds `4N²`.
#[derive(Debug, Clone)]
pub struct PacketMixtureSampler {
    half_sep: f64,
    spread: f64,
    // 2d / w, with w = 4 σ0 σ_t
    decay: num_complex::Complex64,
    norm2: f64,
    bound: f64,
    extent: f64,
}

impl PacketMixtureSampler {
    fn new(field: &Wavefield, t: f64, extent: f64) -> Self {
        let w = 4.0 * field.sigma0() * field.complex_width(t);
        let norm2 = field.norm().powi(2);
        Self {
            half_sep: field.slit_separation() / 2.0,
            spread: field.spread(t),
            decay: 2.0 * field.slit_separation() / w,
            norm2,
            bound: 4.0 * norm2,
            extent,
        }
    }

    /// Source electrons at the slit plane, `|ψ(·, 0)|²`, bounded by `4N²`.
    pub fn slit_plane(cfg: &ExperimentConfig) -> Self {
        Self::new(&Wavefield::new(cfg), 0.0, f64::INFINITY)
    }

    /// Born-rule arrivals `|ψ(·, T)|²` on the detector. The envelope bound is
    /// the grid-scanned peak ratio inflated by `BORN_SAFETY`.
    pub fn detector(cfg: &ExperimentConfig) -> Self {
        let mut s = Self::new(&Wavefield::new(cfg), cfg.flight_time(), cfg.x_extent);
        let n = 20_001;
        let peak = (0..n)
            .map(|i| -cfg.x_extent + 2.0 * cfg.x_extent * i as f64 / (n - 1) as f64)
            .map(|x| s.ratio(x))
            .fold(0.0, f64::max);
        s.bound = peak * BORN_SAFETY;
        s
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn ratio(&self, x: f64) -> f64 {
        let r = (-self.decay * x.abs()).exp();
        2.0 * self.norm2 * (1.0 + r).norm_sqr() / (1.0 + r.norm_sqr())
    }

    pub fn draw<R: Rng>(&self, rng: &mut R) -> Result<f64> {
        loop {
            let center = if rng.random::<bool>() { self.half_sep } else { -self.half_sep };
            let g: f64 = rng.sample(StandardNormal);
            let x = center + self.spread * g;
            if x.abs() > self.extent {
                continue;
            }
            let ratio = self.ratio(x);
            if ratio > self.bound {
                return Err(Error::ProposalDeficit { x, ratio, bound: self.bound });
            }
            if rng.random::<f64>() * self.bound < ratio {
                return Ok(x);
            }
        }
    }
}

pub const BORN_SAFETY: f64 = 1.05;

pub fn sample_source_initial(cfg: &ExperimentConfig, n: usize, seed: u64) -> Vec<f64> {
    let s = PacketMixtureSampler::slit_plane(cfg);
    (0..n as u64)
        .map(|i| s.draw(&mut substream(seed, i)).expect("slit-plane bound is exact"))
        .collect()
}

fn draw_insertion<R: Rng>(region: &Region, rng: &mut R) -> (f64, f64) {
    let x = region.x_min + (region.x_max - region.x_min) * rng.random::<f64>();
    let z = region.z_min + (region.z_max - region.z_min) * rng.random::<f64>();
    (x, z)
}

pub fn sample_insertions(cfg: &ExperimentConfig, n: usize, seed: u64) -> Vec<(f64, f64)> {
    let region = cfg.eitse.insertion_region;
    (0..n as u64).map(|i| draw_insertion(&region, &mut substream(seed, i))).collect()
}

pub fn sample_born_arrivals(cfg: &ExperimentConfig, n: usize, seed: u64) -> Result<Vec<f64>> {
    let s = PacketMixtureSampler::detector(cfg);
    (0..n as u64).map(|i| s.draw(&mut substream(seed, i))).collect()
}

fn pool(workers: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build().expect("thread pool")
}

/// Per-trajectory records of an ensemble, in trajectory order.
pub fn run_records(cfg: &ExperimentConfig, spec: &EnsembleSpec, workers: usize, trace: bool) -> Result<Vec<ArrivalRecord>> {
    if spec.config_hash != cfg.hash() {
        return Err(Error::ConfigMismatch(format!(
            "spec was built for config {} but the active config is {}",
            spec.config_hash,
            cfg.hash()
        )));
    }
    let dynamics = Dynamics::new(cfg);
    let region = cfg.eitse.insertion_region;
    let v0 = cfg.eitse.insertion_velocity;
    let seed = spec.seed;
    let source = PacketMixtureSampler::slit_plane(cfg);
    let born = (spec.interpretation, spec.population) == (Interpretation::Sqm, Population::Source);
    let detector = born.then(|| PacketMixtureSampler::detector(cfg));

    let one = |i: u64| -> Result<ArrivalRecord> {
        let mut rng = substream(seed, i);
        Ok(match (spec.interpretation, spec.population) {
            (Interpretation::Bi, Population::Source) => dynamics.integrate_source(source.draw(&mut rng)?, trace),
            (Interpretation::Bi, Population::Inserted) => {
                let (x0, z0) = draw_insertion(&region, &mut rng);
                dynamics.integrate_inserted_bi(x0, z0, v0, trace)
            }
            (Interpretation::Sqm, Population::Source) => {
                let x = detector.as_ref().expect("built for born arrivals").draw(&mut rng)?;
                ArrivalRecord {
                    status: ArrivalStatus::Arrived,
                    arrival_x: Some(x),
                    flight_time: cfg.flight_time(),
                    path: Vec::new(),
                    error_estimate: 0.0,
                    steps: 0,
                }
            }
            (Interpretation::Sqm, Population::Inserted) => {
                let (x0, z0) = draw_insertion(&region, &mut rng);
                dynamics.integrate_inserted_sqm(x0, z0, v0)
            }
        })
    };
    pool(workers).install(|| (0..spec.count).into_par_iter().map(one).collect())
}

pub fn run_ensemble(cfg: &ExperimentConfig, spec: &EnsembleSpec, workers: usize) -> Result<EnsembleResult> {
    let start = Instant::now();
    let records = run_records(cfg, spec, workers, false)?;
    Ok(EnsembleResult::from_records(spec.clone(), &records, start.elapsed()))
}

/// The four cells of the comparison under one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSet {
    pub bi_source: EnsembleResult,
    pub bi_inserted: EnsembleResult,
    pub sqm_source: EnsembleResult,
    pub sqm_inserted: EnsembleResult,
}

impl EnsembleSet {
    pub fn iter(&self) -> impl Iterator<Item = &EnsembleResult> {
        [&self.bi_source, &self.bi_inserted, &self.sqm_source, &self.sqm_inserted].into_iter()
    }
}

pub fn run_all(cfg: &ExperimentConfig, workers: usize) -> Result<EnsembleSet> {
    let run = |i, p| run_ensemble(cfg, &EnsembleSpec::for_config(cfg, i, p), workers);
    Ok(EnsembleSet {
        bi_source: run(Interpretation::Bi, Population::Source)?,
        bi_inserted: run(Interpretation::Bi, Population::Inserted)?,
        sqm_source: run(Interpretation::Sqm, Population::Source)?,
        sqm_inserted: run(Interpretation::Sqm, Population::Inserted)?,
    })
}
