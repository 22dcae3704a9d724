//! Free-particle propagation on a periodic grid, exact in Fourier space.
//!
//! Used only as an independent check of the closed-form wavefield: the `t = 0`
//! wave is sampled on a grid, multiplied mode by mode by
//! `exp(-iħk²t / (2m))` and compared pointwise to the analytic `ψ(·, t)`.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::wavefield::Wavefield;

/// Edge amplitude, relative to the peak, above which wrap-around is assumed.
pub const EDGE_LIMIT: f64 = 1e-12;
pub const MIN_GRID_SIZE: usize = 1 << 10;

#[derive(Debug, Clone, PartialEq)]
pub struct GridWave {
    /// Left end of the periodic cell; samples sit at `x_min + j·dx`.
    pub x_min: f64,
    pub dx: f64,
    pub amplitudes: Vec<Complex64>,
    pub time: f64,
}

impl GridWave {
    /// Sample `f` at `n` points spanning `[-half_width, half_width)`.
    pub fn sample(n: usize, half_width: f64, time: f64, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        if !n.is_power_of_two() || n < 2 {
            return Err(Error::GridSize(n, 2));
        }
        let dx = 2.0 * half_width / n as f64;
        let x_min = -half_width;
        let amplitudes = (0..n).map(|j| f(x_min + dx * j as f64)).collect();
        Ok(Self { x_min, dx, amplitudes, time })
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + self.dx * j as f64
    }

    /// Discrete norm `Σ|ψ_j|² dx`.
    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.dx
    }

    fn edge_ratio(&self) -> f64 {
        let peak = self.amplitudes.iter().map(|a| a.norm()).fold(0.0, f64::max);
        let n = self.len();
        let edge = self.amplitudes[0].norm().max(self.amplitudes[n - 1].norm());
        if peak == 0.0 {
            0.0
        } else {
            edge / peak
        }
    }
}

/// Evolve a grid wave freely by `dt` with the exact Fourier multiplier.
pub fn propagate_free(wave: &GridWave, dt: f64, hbar: f64, mass: f64) -> Result<GridWave> {
    assert!(dt >= 0.0, "negative propagation time");
    let edge = wave.edge_ratio();
    if edge >= EDGE_LIMIT {
        return Err(Error::EdgeLeakage { edge, limit: EDGE_LIMIT });
    }
    let n = wave.len();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);

    let mut buf = wave.amplitudes.clone();
    forward.process(&mut buf);
    let dk = 2.0 * std::f64::consts::PI / (n as f64 * wave.dx);
    let scale = 1.0 / n as f64;
    for (j, a) in buf.iter_mut().enumerate() {
        // FFT ordering: non-negative frequencies first, then negative
        let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
        let k = m * dk;
        let phase = -hbar * k * k * dt / (2.0 * mass);
        *a *= Complex64::from_polar(scale, phase);
    }
    inverse.process(&mut buf);
    Ok(GridWave { x_min: wave.x_min, dx: wave.dx, amplitudes: buf, time: wave.time + dt })
}

/// Half-width of the oracle grid relative to the detector half-width.
pub const ORACLE_SPAN: f64 = 4.0;

/// Max pointwise `|ψ_grid - ψ_analytic|` after spectral propagation from 0 to `t`.
pub fn max_deviation(cfg: &ExperimentConfig, grid_size: usize, t: f64) -> Result<f64> {
    if !grid_size.is_power_of_two() || grid_size < MIN_GRID_SIZE {
        return Err(Error::GridSize(grid_size, MIN_GRID_SIZE));
    }
    let field = Wavefield::new(cfg);
    let half = ORACLE_SPAN * cfg.x_extent;
    let initial = GridWave::sample(grid_size, half, 0.0, |x| field.evaluate(x, 0.0).psi)?;
    let evolved = propagate_free(&initial, t, cfg.hbar, cfg.mass)?;
    Ok(evolved
        .amplitudes
        .iter()
        .enumerate()
        .map(|(j, a)| (a - field.evaluate(evolved.x(j), t).psi).norm())
        .fold(0.0, f64::max))
}
