//! Closed-form two-slit wavefield.
//!
//! Each slit launches a free Gaussian packet of initial width `sigma0`,
//! centered at `±d/2`. With the complex width
//! `σ_t = σ0 (1 + iħt / (2mσ0²))` a single packet is
//!
//! ```text
//! G_c(x, t) = (2π σ_t²)^(-1/4) exp(-(x - c)² / (4 σ0 σ_t))
//! ```
//!
//! and the field is `ψ = N (G_{+d/2} + G_{-d/2})` with
//! `N = [2 (1 + exp(-d² / (8σ0²)))]^(-1/2)`.
//!
//! The longitudinal coordinate is mapped to time by `t = z / v_long`, so the
//! lab-frame field of a continuous beam is static.
//!
//! Ratio quantities (guidance velocity, quantum potential) are evaluated from
//! the logarithmic derivatives `ψ'/ψ` and `ψ''/ψ`. Writing the packet sum as
//! an envelope times `cosh(d x / (4σ0σ_t))` makes both ratios free of the
//! Gaussian factor, so they stay exact deep in the tails where `ψ` itself
//! underflows.

use std::io::{self, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};

/// Wavefunction value and its first two transverse derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveSample {
    pub psi: Complex64,
    pub dpsi: Complex64,
    pub d2psi: Complex64,
    pub density: f64,
}

/// `ψ'/ψ`, `ψ''/ψ` and the interference contrast ratio at one point.
#[derive(Debug, Clone, Copy)]
pub struct LogDerivatives {
    pub first: Complex64,
    pub second: Complex64,
    /// `|ψ|²` divided by its value under fully constructive interference of
    /// the two packets. In `(0, 1]`; small only close to an interference node.
    pub contrast: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    #[serde(rename = "Q")]
    Q,
    Density,
    Speed,
}

impl Quantity {
    pub fn label(self) -> &'static str {
        match self {
            Quantity::Q => "Q",
            Quantity::Density => "density",
            Quantity::Speed => "speed",
        }
    }
}

impl std::str::FromStr for Quantity {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "Q" | "q" => Ok(Quantity::Q),
            "density" => Ok(Quantity::Density),
            "speed" => Ok(Quantity::Speed),
            other => Err(format!("unknown quantity `{other}` (expected Q, density or speed)")),
        }
    }
}

/// Sampled field over the simulated rectangle. Masked cells are `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub x_samples: Vec<f64>,
    pub z_samples: Vec<f64>,
    /// Row-major, one row per `z` sample.
    pub values: Vec<f64>,
    pub config_hash: String,
    pub quantity: Quantity,
}

/// Default finite-difference step for the quantum force, in units of `sigma0`.
pub const FORCE_STEP: f64 = 1e-3;

/// The analytic wavefield of one experiment configuration.
#[derive(Debug, Clone)]
pub struct Wavefield {
    hbar: f64,
    mass: f64,
    sigma0: f64,
    half_sep: f64,
    norm: f64,
    v_long: f64,
    length: f64,
    x_extent: f64,
    node_floor: f64,
    force_step_x: f64,
    force_step_z: f64,
    config_hash: String,
}

impl Wavefield {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        let d = cfg.slit_separation;
        let s0 = cfg.sigma0;
        Self {
            hbar: cfg.hbar,
            mass: cfg.mass,
            sigma0: s0,
            half_sep: d / 2.0,
            norm: (2.0 * (1.0 + (-d * d / (8.0 * s0 * s0)).exp())).powf(-0.5),
            v_long: cfg.v_long,
            length: cfg.region_length,
            x_extent: cfg.x_extent,
            node_floor: cfg.integrator.node_floor,
            force_step_x: FORCE_STEP * s0,
            force_step_z: FORCE_STEP * s0 / cfg.v_long,
            config_hash: cfg.hash(),
        }
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    pub fn slit_separation(&self) -> f64 {
        2.0 * self.half_sep
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn node_floor(&self) -> f64 {
        self.node_floor
    }

    /// Lab time at longitudinal position `z`.
    pub fn time_at(&self, z: f64) -> f64 {
        z / self.v_long
    }

    /// Complex width `σ_t`.
    pub fn complex_width(&self, t: f64) -> Complex64 {
        let s0 = self.sigma0;
        Complex64::new(s0, self.hbar * t / (2.0 * self.mass * s0))
    }

    /// Real spreading width `s_t = |σ_t|` of a single packet's density.
    pub fn spread(&self, t: f64) -> f64 {
        let s0 = self.sigma0;
        s0 * (1.0 + (self.hbar * t / (2.0 * self.mass * s0 * s0)).powi(2)).sqrt()
    }

    /// One slit packet `G_c` and its first two derivatives.
    fn packet(&self, x: f64, t: f64, c: f64) -> [Complex64; 3] {
        let st = self.complex_width(t);
        let w = 4.0 * self.sigma0 * st;
        let amp = (2.0 * std::f64::consts::PI).powf(-0.25) / st.sqrt();
        let dx = x - c;
        let g = amp * (-(dx * dx) / w).exp();
        let s0st = self.sigma0 * st;
        let dg = -dx / (2.0 * s0st) * g;
        let d2g = (dx * dx / (4.0 * s0st * s0st) - 1.0 / (2.0 * s0st)) * g;
        [g, dg, d2g]
    }

    pub fn evaluate(&self, x: f64, t: f64) -> WaveSample {
        let [a, da, d2a] = self.packet(x, t, self.half_sep);
        let [b, db, d2b] = self.packet(x, t, -self.half_sep);
        let psi = self.norm * (a + b);
        WaveSample { psi, dpsi: self.norm * (da + db), d2psi: self.norm * (d2a + d2b), density: psi.norm_sqr() }
    }

    pub fn born_density(&self, x: f64, t: f64) -> f64 {
        self.evaluate(x, t).density
    }

    pub fn log_derivatives(&self, x: f64, t: f64) -> LogDerivatives {
        let st = self.complex_width(t);
        let w = 4.0 * self.sigma0 * st;
        let kappa = 2.0 * self.half_sep / w;
        let arg = kappa * x;
        let tau = tanh_stable(arg);
        let env1 = -2.0 * x / w;
        let first = env1 + kappa * tau;
        let second = env1 * env1 - 2.0 / w + 2.0 * env1 * kappa * tau + kappa * kappa;
        let (a, b) = (arg.re, arg.im);
        let sech = 1.0 / a.cosh();
        let contrast = a.tanh().powi(2) + (b.cos() * sech).powi(2);
        LogDerivatives { first, second, contrast }
    }

    /// Interference contrast ratio, see [`LogDerivatives::contrast`].
    pub fn contrast(&self, x: f64, t: f64) -> f64 {
        self.log_derivatives(x, t).contrast
    }

    fn node_check(&self, x: f64, t: f64, ld: &LogDerivatives) -> Result<()> {
        if ld.contrast < self.node_floor {
            return Err(Error::NodeProximity { x, t, ratio: ld.contrast, floor: self.node_floor });
        }
        Ok(())
    }

    /// Transverse Bohmian velocity `(ħ/m) Im(ψ'/ψ)`.
    pub fn guidance_velocity(&self, x: f64, t: f64) -> Result<f64> {
        let ld = self.log_derivatives(x, t);
        self.node_check(x, t, &ld)?;
        Ok(self.hbar / self.mass * ld.first.im)
    }

    fn potential_from(&self, ld: &LogDerivatives) -> f64 {
        // u = |ψ|²: u'/u = 2 Re(ψ'/ψ), u''/u = 2 Re(ψ''/ψ) + 2 |ψ'/ψ|²
        let du = 2.0 * ld.first.re;
        let d2u = 2.0 * ld.second.re + 2.0 * ld.first.norm_sqr();
        -(self.hbar * self.hbar) / (2.0 * self.mass) * (d2u / 2.0 - du * du / 4.0)
    }

    /// Quantum potential `Q = -(ħ²/2m) R''/R` with `R = |ψ|`.
    pub fn quantum_potential(&self, x: f64, t: f64) -> Result<f64> {
        let ld = self.log_derivatives(x, t);
        self.node_check(x, t, &ld)?;
        Ok(self.potential_from(&ld))
    }

    /// `Q` without the node guard; defined for any real `t` (the closed form is
    /// entire in `t`), which the force stencil uses at the region boundaries.
    pub fn quantum_potential_unchecked(&self, x: f64, t: f64) -> f64 {
        self.potential_from(&self.log_derivatives(x, t))
    }

    /// Lab-frame potential `Q(x, z / v_long)`.
    pub fn lab_potential(&self, x: f64, z: f64) -> Result<f64> {
        self.quantum_potential(x, self.time_at(z))
    }

    /// Quantum force `-∇Q_lab` at `(x, z)` by central differences.
    pub fn quantum_force(&self, x: f64, z: f64) -> Result<[f64; 2]> {
        self.quantum_force_with_steps(x, z, self.force_step_x, self.force_step_z)
    }

    pub fn quantum_force_with_steps(&self, x: f64, z: f64, hx: f64, hz: f64) -> Result<[f64; 2]> {
        if !(0.0..=self.length).contains(&z) {
            return Err(Error::OutOfRegion { z, length: self.length });
        }
        self.force_stencil(x, z, hx, hz)
    }

    /// Richardson extrapolation `(4 F_{h/2} - F_h) / 3` of the central
    /// difference force, accurate to `O(h⁴)`. No region check: integrator
    /// stages may step slightly past the slit or detector plane.
    ///
    /// The plain `O(h²)` force drifts the energy by about `1e-7` of the
    /// potential drop it is integrated through, which matters for the
    /// inserted electrons thrown back into the steep tails near the slits.
    pub fn quantum_force_extrapolated(&self, x: f64, z: f64) -> Result<[f64; 2]> {
        let (hx, hz) = (self.force_step_x, self.force_step_z);
        let coarse = self.force_stencil(x, z, hx, hz)?;
        let fine = self.force_stencil(x, z, 0.5 * hx, 0.5 * hz)?;
        Ok([(4.0 * fine[0] - coarse[0]) / 3.0, (4.0 * fine[1] - coarse[1]) / 3.0])
    }

    fn force_stencil(&self, x: f64, z: f64, hx: f64, hz: f64) -> Result<[f64; 2]> {
        let t = self.time_at(z);
        let stencil = [(x + hx, t), (x - hx, t), (x, self.time_at(z + hz)), (x, self.time_at(z - hz))];
        let mut q = [0.0; 4];
        for (slot, &(sx, st)) in q.iter_mut().zip(&stencil) {
            let ld = self.log_derivatives(sx, st);
            self.node_check(sx, st, &ld)?;
            *slot = self.potential_from(&ld);
        }
        Ok([-(q[0] - q[1]) / (2.0 * hx), -(q[2] - q[3]) / (2.0 * hz)])
    }

    pub fn dump_field(&self, quantity: Quantity, nx: usize, nz: usize) -> FieldGrid {
        assert!(nx >= 2 && nz >= 2, "field grid needs at least 2 samples per axis");
        let x_samples = linspace(-self.x_extent, self.x_extent, nx);
        let z_samples = linspace(0.0, self.length, nz);
        let mut values = Vec::with_capacity(nx * nz);
        for &z in &z_samples {
            let t = self.time_at(z);
            for &x in &x_samples {
                let v = match quantity {
                    Quantity::Density => self.born_density(x, t),
                    Quantity::Q => self.quantum_potential(x, t).unwrap_or(f64::NAN),
                    Quantity::Speed => self
                        .guidance_velocity(x, t)
                        .map(|vx| vx.hypot(self.v_long))
                        .unwrap_or(f64::NAN),
                };
                values.push(v);
            }
        }
        FieldGrid { x_samples, z_samples, values, config_hash: self.config_hash.clone(), quantity }
    }
}

/// `tanh` for complex arguments that does not overflow for large `|Re z|`.
pub(crate) fn tanh_stable(z: Complex64) -> Complex64 {
    if z.re < 0.0 {
        return -tanh_stable(-z);
    }
    let e = (-2.0 * z).exp();
    (1.0 - e) / (1.0 + e)
}

pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| if i + 1 == n { hi } else { lo + step * i as f64 }).collect()
}

impl FieldGrid {
    pub fn nx(&self) -> usize {
        self.x_samples.len()
    }

    pub fn nz(&self) -> usize {
        self.z_samples.len()
    }

    pub fn get(&self, ix: usize, iz: usize) -> f64 {
        self.values[iz * self.nx() + ix]
    }

    pub fn masked_fraction(&self) -> f64 {
        self.values.iter().filter(|v| v.is_nan()).count() as f64 / self.values.len() as f64
    }

    /// CSV with header `x,z,value`, one row per cell, masked cells as `NaN`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x,z,value")?;
        for (iz, z) in self.z_samples.iter().enumerate() {
            for (ix, x) in self.x_samples.iter().enumerate() {
                writeln!(out, "{x},{z},{}", self.get(ix, iz))?;
            }
        }
        Ok(())
    }

    /// Binary 8-bit PGM, one image row per `z` sample, min-max normalized over
    /// unmasked cells; masked cells are black.
    pub fn to_pgm(&self) -> Vec<u8> {
        let (lo, hi) = self
            .values
            .iter()
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let span = if hi > lo { hi - lo } else { 1.0 };
        let pixels = self.values.iter().map(|&v| {
            if v.is_finite() {
                (((v - lo) / span) * 255.0).round().clamp(0.0, 255.0) as u8
            } else {
                0
            }
        });
        pgm_bytes(self.nx(), self.nz(), pixels)
    }
}

pub(crate) fn pgm_bytes(width: usize, height: usize, pixels: impl Iterator<Item = u8>) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(pixels);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
    }

    fn reference() -> (ExperimentConfig, Wavefield) {
        let cfg = ExperimentConfig::reference();
        let f = Wavefield::new(&cfg);
        (cfg, f)
    }

    fn single_slit() -> Wavefield {
        Wavefield::new(&ExperimentConfig::reference().with_slit_separation(0.0))
    }

    fn trapezoid(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
        let h = (hi - lo) / (n - 1) as f64;
        let inner: f64 = (1..n - 1).map(|i| f(lo + h * i as f64)).sum();
        h * (inner + 0.5 * (f(lo) + f(hi)))
    }

    #[test]
    fn symmetric_point_has_zero_slope() {
        let (_, f) = reference();
        for t in [0.0, 3.0, 50.0] {
            let s = f.evaluate(0.0, t);
            assert_eq!(s.dpsi.norm(), 0.0);
            assert_eq!(f.guidance_velocity(0.0, t).unwrap(), 0.0);
        }
    }

    #[test]
    fn merged_slits_reduce_to_one_gaussian() {
        let f = single_slit();
        assert_eq!(f.norm(), 0.5);
        for x in [-2.5f64, -0.3, 0.0, 1.0, 4.0] {
            let expect = (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
            assert!(rel_close(f.born_density(x, 0.0), expect, 1e-14));
            assert_eq!(f.guidance_velocity(x, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn unit_norm_at_detector() {
        let (cfg, f) = reference();
        let t = cfg.flight_time();
        let norm = trapezoid(|x| f.born_density(x, t), -cfg.x_extent, cfg.x_extent, 4096);
        assert!((norm - 1.0).abs() < 1e-10, "norm {norm}");
    }

    #[test]
    fn normalization_over_time() {
        let (cfg, f) = reference();
        let t_end = cfg.flight_time();
        for t in [0.0, t_end / 2.0, t_end] {
            // wide enough for the tails, fine enough for the t=0 packets
            let norm = trapezoid(|x| f.born_density(x, t), -cfg.x_extent, cfg.x_extent, 40_001);
            assert!((norm - 1.0).abs() < 1e-9, "t={t} norm {norm}");
        }
    }

    #[test]
    fn velocity_matches_finite_difference() {
        let (_, f) = reference();
        let (x, t, h) = (5.0, 10.0, 1e-4);
        let fd = (f.evaluate(x + h, t).psi - f.evaluate(x - h, t).psi) / (2.0 * h * f.evaluate(x, t).psi);
        let v = f.guidance_velocity(x, t).unwrap();
        assert!(rel_close(v, fd.im, 1e-6), "{v} vs {}", fd.im);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let (_, f) = reference();
        let h = 1e-4;
        for t in [0.0, 1.0, 10.0, 50.0] {
            for i in -40..=40 {
                let x = i as f64 * 1.7;
                let s = f.evaluate(x, t);
                if s.density <= 1e-12 {
                    continue;
                }
                let (p, m) = (f.evaluate(x + h, t), f.evaluate(x - h, t));
                let d1 = (p.psi - m.psi) / (2.0 * h);
                let d2 = (p.dpsi - m.dpsi) / (2.0 * h);
                let scale1 = s.dpsi.norm().max(s.psi.norm());
                let scale2 = s.d2psi.norm().max(s.psi.norm());
                assert!((d1 - s.dpsi).norm() <= 1e-6 * scale1, "dpsi x={x} t={t}");
                assert!((d2 - s.d2psi).norm() <= 1e-6 * scale2, "d2psi x={x} t={t}");
            }
        }
    }

    #[test]
    fn log_derivatives_agree_with_direct_ratios() {
        let (_, f) = reference();
        for t in [0.5, 7.0, 50.0] {
            for i in -20..=20 {
                let x = i as f64 * 2.3;
                let s = f.evaluate(x, t);
                if s.density < 1e-200 {
                    continue;
                }
                let ld = f.log_derivatives(x, t);
                assert!((ld.first - s.dpsi / s.psi).norm() <= 1e-9 * (1.0 + ld.first.norm()));
                assert!((ld.second - s.d2psi / s.psi).norm() <= 1e-9 * (1.0 + ld.second.norm()));
            }
        }
    }

    #[test]
    fn single_gaussian_potential_closed_form() {
        let f = single_slit();
        assert!(rel_close(f.quantum_potential(0.0, 0.0).unwrap(), 0.25, 1e-14));
        for t in [0.0, 2.0, 50.0] {
            let s = f.spread(t);
            for x in [-30.0, -3.0, 0.5, 1.0, 12.0] {
                let closed = 1.0 / (4.0 * s * s) - x * x / (8.0 * s.powi(4));
                assert!(rel_close(f.quantum_potential(x, t).unwrap(), closed, 1e-9), "x={x} t={t}");
            }
        }
    }

    #[test]
    fn single_gaussian_potential_finite_differences() {
        // Q = -(1/2) R''/R with R = sqrt(density), by central differences of R
        let f = single_slit();
        let h = 1e-3;
        for t in [0.0, 4.0] {
            for x in [-2.0, 0.0, 0.7, 1.5] {
                let r = |x: f64| f.born_density(x, t).sqrt();
                let fd = -0.5 * (r(x + h) - 2.0 * r(x) + r(x - h)) / (h * h) / r(x);
                let q = f.quantum_potential(x, t).unwrap();
                assert!((fd - q).abs() < 1e-6 * (1.0 + q.abs()), "x={x} t={t}: {fd} vs {q}");
            }
        }
    }

    #[test]
    fn potential_is_even_and_velocity_odd() {
        let (_, f) = reference();
        for t in [0.3, 9.0, 50.0] {
            for x in [0.1, 2.0, 17.0, 26.17, 90.0, 199.0] {
                let (qp, qm) = (f.quantum_potential(x, t).unwrap(), f.quantum_potential(-x, t).unwrap());
                assert_eq!(qp, qm);
                assert_eq!(f.guidance_velocity(x, t).unwrap(), -f.guidance_velocity(-x, t).unwrap());
                let s = f.evaluate(x, t);
                let r = f.evaluate(-x, t);
                assert!((s.psi - r.psi).norm() <= 1e-15 * s.psi.norm().max(1e-300));
            }
        }
    }

    #[test]
    fn global_phase_leaves_observables_unchanged() {
        let (_, f) = reference();
        let phase = Complex64::from_polar(1.0, 0.83);
        for x in [-7.0, -1.0, 3.3, 20.0] {
            let s = f.evaluate(x, 12.0);
            let (psi, d1, d2) = (phase * s.psi, phase * s.dpsi, phase * s.d2psi);
            let v = (d1 / psi).im;
            let u = psi.norm_sqr();
            let du = 2.0 * (psi.conj() * d1).re;
            let d2u = 2.0 * (psi.conj() * d2).re + 2.0 * d1.norm_sqr();
            let q = -0.5 * (d2u / (2.0 * u) - du * du / (4.0 * u * u));
            assert!((v - f.guidance_velocity(x, 12.0).unwrap()).abs() < 1e-12);
            assert!((q - f.quantum_potential(x, 12.0).unwrap()).abs() < 1e-10);
            assert!((u - s.density).abs() <= 1e-15 * u);
        }
    }

    #[test]
    fn potential_landscape_at_detector() {
        // 1-D scan: Q peaks on the central bright fringe and drops into deep
        // wells on the first dark fringes.
        let (cfg, f) = reference();
        let t = cfg.flight_time();
        let xs = linspace(-60.0, 60.0, 120_001);
        let rho: Vec<f64> = xs.iter().map(|&x| f.born_density(x, t)).collect();
        let q: Vec<f64> = xs.iter().map(|&x| f.quantum_potential(x, t).unwrap()).collect();
        let local = |v: &[f64], min: bool| -> Vec<f64> {
            (1..v.len() - 1)
                .filter(|&i| if min { v[i] < v[i - 1] && v[i] < v[i + 1] } else { v[i] > v[i - 1] && v[i] > v[i + 1] })
                .map(|i| xs[i])
                .collect()
        };
        let rho_max = local(&rho, false);
        let rho_min = local(&rho, true);
        let q_max = local(&q, false);
        let q_min = local(&q, true);
        assert!(rho_max.iter().any(|x| x.abs() < 1e-6));
        assert!(q_max.iter().any(|x| x.abs() < 1e-6));
        let first_dark = rho_min.iter().cloned().filter(|x| *x > 0.0).fold(f64::INFINITY, f64::min);
        let nearest_well = q_min.iter().cloned().filter(|x| *x > 0.0).fold(f64::INFINITY, f64::min);
        assert!((first_dark - nearest_well).abs() < 0.05, "{first_dark} vs {nearest_well}");
        assert!(f.quantum_potential(first_dark, t).unwrap() < -0.4);
    }

    #[test]
    fn force_vanishes_on_axis_and_is_odd() {
        let (_, f) = reference();
        for z in [0.0, 5.0, 25.0, 50.0] {
            assert_eq!(f.quantum_force(0.0, z).unwrap()[0], 0.0);
            for x in [0.4, 13.0, 88.0] {
                let p = f.quantum_force(x, z).unwrap();
                let m = f.quantum_force(-x, z).unwrap();
                assert_eq!(p[0], -m[0]);
                assert_eq!(p[1], m[1]);
            }
        }
    }

    #[test]
    fn single_gaussian_force_closed_form() {
        // Q = ħ²/(4m s²) - ħ² x² / (8 m s⁴), s² = σ0² + (ħt/(2mσ0))²:
        // F_x = ħ² x / (4 m s⁴), F_z = -(dQ/ds²)(ds²/dt) / v_long
        let f = single_slit();
        for z in [1.0, 10.0, 40.0] {
            let t = z;
            let s2 = 1.0 + t * t / 4.0;
            for x in [1.0, -2.5, 6.0] {
                let fx = x / (4.0 * s2 * s2);
                let dq_ds2 = -1.0 / (4.0 * s2 * s2) + x * x / (4.0 * s2 * s2 * s2);
                let fz = -dq_ds2 * (t / 2.0);
                let got = f.quantum_force(x, z).unwrap();
                assert!(rel_close(got[0], fx, 1e-6), "fx z={z} x={x}: {} vs {fx}", got[0]);
                assert!(rel_close(got[1], fz, 1e-6), "fz z={z} x={x}: {} vs {fz}", got[1]);
                let ex = f.quantum_force_extrapolated(x, z).unwrap();
                assert!(rel_close(ex[0], fx, 1e-9) && rel_close(ex[1], fz, 1e-9), "extrapolated z={z} x={x}: {ex:?}");
            }
        }
        // positive at x = σ0: the single packet pushes outward
        assert!(f.quantum_force(1.0, 0.0).unwrap()[0] > 0.0);
    }

    #[test]
    fn force_outside_region() {
        let (_, f) = reference();
        assert!(matches!(f.quantum_force(0.0, -0.1), Err(Error::OutOfRegion { .. })));
        assert!(matches!(f.quantum_force(0.0, 50.1), Err(Error::OutOfRegion { .. })));
    }

    #[test]
    fn node_guard_trips_close_to_a_node() {
        // contrast falls like (π/t)² at the first dark fringe; a strict floor trips it
        let mut cfg = ExperimentConfig::reference();
        cfg.integrator.node_floor = 1e-2;
        let f = Wavefield::new(&cfg);
        let ld = f.log_derivatives(26.17, 50.0);
        assert!(ld.contrast < 1e-2);
        assert!(matches!(f.quantum_potential(26.17, 50.0), Err(Error::NodeProximity { .. })));
        assert!(f.quantum_potential(0.0, 50.0).is_ok());
    }

    #[test]
    fn tails_are_finite() {
        let (_, f) = reference();
        let q = f.quantum_potential(200.0, 0.0).unwrap();
        assert!(rel_close(q, 0.25 * (1.0 - 197.0_f64.powi(2) / 2.0), 1e-1));
        assert!(f.guidance_velocity(-200.0, 0.01).unwrap().is_finite());
        assert!(f.quantum_force(200.0, 0.0).unwrap().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn dump_field_corners_and_purity() {
        let (_, f) = reference();
        let g = f.dump_field(Quantity::Density, 2, 2);
        assert_eq!(g.values.len(), 4);
        assert!(g.values.iter().all(|v| v.is_finite()));
        assert_eq!(f.dump_field(Quantity::Q, 33, 17), f.dump_field(Quantity::Q, 33, 17));
    }

    #[test]
    fn q_mask_fraction_small_on_reference_grid() {
        let (_, f) = reference();
        let g = f.dump_field(Quantity::Q, 401, 101);
        assert!(g.masked_fraction() < 0.05, "{}", g.masked_fraction());
    }

    #[test]
    fn csv_and_pgm_layout() {
        let (_, f) = reference();
        let mut g = f.dump_field(Quantity::Speed, 3, 2);
        g.values[1] = f64::NAN;
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,z,value");
        assert_eq!(lines.len(), 7);
        assert_eq!(lines[2], "0,0,NaN");
        let pgm = g.to_pgm();
        assert!(pgm.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(pgm.len(), b"P5\n3 2\n255\n".len() + 6);
        assert_eq!(pgm[pgm.len() - 5], 0);
    }
}
