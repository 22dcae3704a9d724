//! Detector-plane statistics and the BI-vs-SQM verdict.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::config::{ExperimentConfig, VerdictThresholds};
use crate::error::{Error, Result};
use crate::montecarlo::{EnsembleResult, EnsembleSet, Interpretation, Population, StatusCounts};
use crate::wavefield::Wavefield;

/// Uniform histogram over the detector `[-x_extent, x_extent]`.
///
/// Bins are half-open `[edge_i, edge_{i+1})` except the last, which is closed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectorHistogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub total: u64,
    /// `count / (total · width)`; all zero for an empty histogram.
    pub densities: Vec<f64>,
}

impl DetectorHistogram {
    pub fn from_counts(lo: f64, hi: f64, counts: Vec<u64>) -> Self {
        let bins = counts.len();
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|i| if i == bins { hi } else { lo + width * i as f64 }).collect();
        let total = counts.iter().sum();
        let densities = counts
            .iter()
            .map(|&c| if total == 0 { 0.0 } else { c as f64 / (total as f64 * width) })
            .collect();
        Self { edges, counts, total, densities }
    }

    pub fn empty(cfg: &ExperimentConfig) -> Self {
        Self::from_counts(-cfg.x_extent, cfg.x_extent, vec![0; cfg.bins])
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn lo(&self) -> f64 {
        self.edges[0]
    }

    pub fn hi(&self) -> f64 {
        self.edges[self.bins()]
    }

    pub fn width(&self) -> f64 {
        (self.hi() - self.lo()) / self.bins() as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        0.5 * (self.edges[i] + self.edges[i + 1])
    }

    /// Bin holding `x`, or `None` outside the detector.
    pub fn bin_index(&self, x: f64) -> Option<usize> {
        let (lo, hi, n) = (self.lo(), self.hi(), self.bins());
        if !(lo..=hi).contains(&x) {
            return None;
        }
        let mut i = (((x - lo) / self.width()).floor() as usize).min(n - 1);
        // the float estimate may land one bin off around an edge
        while i > 0 && x < self.edges[i] {
            i -= 1;
        }
        while i + 1 < n && x >= self.edges[i + 1] {
            i += 1;
        }
        Some(i)
    }

    /// Count-wise sum of two histograms over the same bins.
    pub fn combined(&self, other: &Self) -> Self {
        assert_eq!(self.edges, other.edges, "combining histograms over different bins");
        let counts = self.counts.iter().zip(&other.counts).map(|(a, b)| a + b).collect();
        Self::from_counts(self.lo(), self.hi(), counts)
    }

    /// Probability mass per bin, `count / total`.
    pub fn masses(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| if self.total == 0 { 0.0 } else { c as f64 / self.total as f64 }).collect()
    }
}

pub fn histogram(arrivals: &[f64], cfg: &ExperimentConfig) -> Result<DetectorHistogram> {
    let mut h = DetectorHistogram::empty(cfg);
    let mut counts = vec![0u64; cfg.bins];
    for &x in arrivals {
        let i = h.bin_index(x).ok_or(Error::ArrivalOutOfRange { x, extent: cfg.x_extent })?;
        counts[i] += 1;
    }
    h = DetectorHistogram::from_counts(h.lo(), h.hi(), counts);
    Ok(h)
}

/// Extrema of the analytic detector density closest to the axis (`x ≥ 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FringeGeometry {
    pub central_max: f64,
    pub first_min: f64,
    pub secondary_max: Option<f64>,
}

const FRINGE_SCAN_POINTS: usize = 20_000;

/// Locate the central maximum, first minimum and secondary maximum of
/// `|ψ(·, T)|²` by a sign scan of `u'/u` refined by bisection.
pub fn fringe_geometry(cfg: &ExperimentConfig) -> Result<FringeGeometry> {
    let field = Wavefield::new(cfg);
    let t = cfg.flight_time();
    let slope = |x: f64| field.log_derivatives(x, t).first.re;
    let step = cfg.x_extent / FRINGE_SCAN_POINTS as f64;
    let bisect = |mut lo: f64, mut hi: f64| {
        let rising_at_lo = slope(lo) > 0.0;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if (slope(mid) > 0.0) == rising_at_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    // sign changes of the slope: (location, true if max)
    let mut extrema = Vec::new();
    if slope(step) < 0.0 {
        extrema.push((0.0, true));
    }
    let mut prev = slope(step);
    for i in 2..=FRINGE_SCAN_POINTS {
        let x = step * i as f64;
        let s = slope(x);
        if (prev > 0.0) != (s > 0.0) {
            extrema.push((bisect(x - step, x), prev > 0.0));
        }
        prev = s;
    }
    let max_at = extrema.iter().position(|e| e.1).ok_or(Error::DegenerateFringes)?;
    let central_max = extrema[max_at].0;
    let first_min = extrema[max_at + 1..].iter().find(|e| !e.1).map(|e| e.0).ok_or(Error::DegenerateFringes)?;
    let secondary_max = extrema.iter().find(|e| e.1 && e.0 > first_min).map(|e| e.0);
    Ok(FringeGeometry { central_max, first_min, secondary_max })
}

/// Half-width of the visibility probe windows, as a fraction of the distance
/// from the central maximum to the first minimum.
pub const VISIBILITY_WINDOW: f64 = 0.1;

pub enum Intensity<'a> {
    Histogram(&'a DetectorHistogram),
    /// The analytic Born density at the detector, probed at the extrema.
    Analytic,
}

fn window_mean(h: &DetectorHistogram, center: f64, half_width: f64) -> f64 {
    let picked: Vec<f64> = (0..h.bins()).filter(|&i| (h.center(i) - center).abs() <= half_width).map(|i| h.densities[i]).collect();
    if picked.is_empty() {
        h.bin_index(center).map_or(0.0, |i| h.densities[i])
    } else {
        picked.iter().sum::<f64>() / picked.len() as f64
    }
}

/// Fringe visibility `(I_max - I_min) / (I_max + I_min)` between the central
/// maximum and the first minima on both sides.
pub fn visibility(input: Intensity<'_>, cfg: &ExperimentConfig) -> Result<f64> {
    let g = fringe_geometry(cfg)?;
    let (i_max, i_min) = match input {
        Intensity::Analytic => {
            let field = Wavefield::new(cfg);
            let t = cfg.flight_time();
            (field.born_density(g.central_max, t), field.born_density(g.first_min, t))
        }
        Intensity::Histogram(h) => {
            if h.total == 0 {
                return Err(Error::EmptyHistogram);
            }
            let w = VISIBILITY_WINDOW * (g.first_min - g.central_max);
            let i_max = if g.central_max == 0.0 {
                window_mean(h, 0.0, w)
            } else {
                0.5 * (window_mean(h, g.central_max, w) + window_mean(h, -g.central_max, w))
            };
            let i_min = 0.5 * (window_mean(h, g.first_min, w) + window_mean(h, -g.first_min, w));
            (i_max, i_min)
        }
    };
    if i_max + i_min == 0.0 {
        return Ok(0.0);
    }
    Ok(((i_max - i_min) / (i_max + i_min)).clamp(0.0, 1.0))
}

/// Bins whose center density at the detector is below `theta_dark` of the
/// density's global maximum.
pub fn dark_mask(cfg: &ExperimentConfig) -> Vec<bool> {
    let field = Wavefield::new(cfg);
    let t = cfg.flight_time();
    let h = DetectorHistogram::empty(cfg);
    let centers: Vec<f64> = (0..h.bins()).map(|i| h.center(i)).collect();
    let scan = (0..=FRINGE_SCAN_POINTS).map(|i| -cfg.x_extent + 2.0 * cfg.x_extent * i as f64 / FRINGE_SCAN_POINTS as f64);
    let peak = scan.chain(centers.iter().copied()).map(|x| field.born_density(x, t)).fold(0.0, f64::max);
    centers.iter().map(|&x| field.born_density(x, t) < cfg.theta_dark * peak).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DarkZoneFill {
    /// Share of histogram mass in dark bins (0 for an empty histogram).
    pub dark_fraction: f64,
    /// Share of detector width covered by dark bins.
    pub uniform_expected: f64,
}

pub fn dark_zone_fill(h: &DetectorHistogram, cfg: &ExperimentConfig) -> DarkZoneFill {
    let mask = dark_mask(cfg);
    let dark_bins = mask.iter().filter(|&&d| d).count();
    let dark_counts: u64 = h.counts.iter().zip(&mask).filter(|(_, &d)| d).map(|(&c, _)| c).sum();
    DarkZoneFill {
        dark_fraction: if h.total == 0 { 0.0 } else { dark_counts as f64 / h.total as f64 },
        uniform_expected: dark_bins as f64 / mask.len() as f64,
    }
}

// 5-point Gauss–Legendre nodes and weights on [-1, 1]
const GL_NODES: [f64; 5] = [-0.906_179_845_938_664, -0.538_469_310_105_683, 0.0, 0.538_469_310_105_683, 0.906_179_845_938_664];
const GL_WEIGHTS: [f64; 5] = [0.236_926_885_056_189, 0.478_628_670_499_366, 0.568_888_888_888_889, 0.478_628_670_499_366, 0.236_926_885_056_189];

/// `∫ f` over `[a, b]` by composite 5-point Gauss–Legendre.
pub fn integrate(f: &impl Fn(f64) -> f64, a: f64, b: f64, pieces: usize) -> f64 {
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|k| {
            let mid = a + h * (k as f64 + 0.5);
            GL_NODES.iter().zip(&GL_WEIGHTS).map(|(n, w)| w * f(mid + 0.5 * h * n)).sum::<f64>() * 0.5 * h
        })
        .sum()
}

/// Analytic mass of each histogram bin under `density`.
pub fn bin_masses(h: &DetectorHistogram, density: impl Fn(f64) -> f64) -> Vec<f64> {
    (0..h.bins()).map(|i| integrate(&density, h.edges[i], h.edges[i + 1], 4)).collect()
}

/// `Σ |p̂_bin - ∫_bin density|`.
pub fn l1_distance(h: &DetectorHistogram, density: impl Fn(f64) -> f64) -> f64 {
    h.masses().iter().zip(bin_masses(h, density)).map(|(p, q)| (p - q).abs()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub p_value: f64,
    pub dof: usize,
}

/// Pearson chi-square of the histogram against equal expected counts.
pub fn uniformity_chi_square(h: &DetectorHistogram) -> Result<ChiSquare> {
    let bins = h.bins() as u64;
    if h.total < 10 * bins {
        return Err(Error::InsufficientData { have: h.total, need: 10 * bins });
    }
    let expected = h.total as f64 / bins as f64;
    let statistic = h.counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum::<f64>();
    let dof = h.bins() - 1;
    let p_value = ChiSquared::new(dof as f64).expect("dof > 0").sf(statistic);
    Ok(ChiSquare { statistic, p_value, dof })
}

/// One-sample Kolmogorov–Smirnov statistic against a continuous CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the KS statistic for `n` samples.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.627_6 / (n as f64).sqrt()
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioHistograms {
    pub source: DetectorHistogram,
    pub inserted: DetectorHistogram,
    pub combined: DetectorHistogram,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterpretationHistograms {
    pub bi: ScenarioHistograms,
    pub sqm: ScenarioHistograms,
}

/// Rise of the combined density in dark bins contributed by the inserted
/// arrivals: measured as the mean over dark bins of
/// `combined - N_s/(N_s+N_e) · source`, expected `N_e / ((N_s+N_e) W)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BackgroundRise {
    pub measured: f64,
    pub expected: f64,
    /// Multinomial standard error of `measured`.
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerdictFlags {
    pub bi_pattern_clearer: bool,
    pub sqm_dark_zones_filled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub config_hash: String,
    pub fringes: FringeGeometry,
    pub status_counts: ReportCounts,
    pub histograms: InterpretationHistograms,
    /// Visibility of the inserted-electron-free pattern (Born-rule source arrivals).
    pub visibility_source_only: f64,
    /// Visibility of the guided source electrons alone.
    pub visibility_bi_source: f64,
    pub visibility_bi_combined: f64,
    pub visibility_sqm_combined: f64,
    pub dark_fraction_bi_inserted: f64,
    pub dark_fraction_uniform_expected: f64,
    pub uniformity_sqm_inserted: Option<ChiSquare>,
    pub uniformity_p_sqm_inserted: Option<f64>,
    pub l1_equivariance: f64,
    pub sqm_background_rise: BackgroundRise,
    pub thresholds: VerdictThresholds,
    pub flags: VerdictFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReportCounts {
    pub bi_source: StatusCounts,
    pub bi_inserted: StatusCounts,
    pub sqm_source: StatusCounts,
    pub sqm_inserted: StatusCounts,
}

fn check_cell(r: &EnsembleResult, hash: &str, i: Interpretation, p: Population) -> Result<()> {
    if r.spec.config_hash != hash {
        return Err(Error::ConfigMismatch(format!(
            "{}/{} ensemble has config hash {}, expected {hash}",
            i.label(),
            p.label(),
            r.spec.config_hash
        )));
    }
    if (r.spec.interpretation, r.spec.population) != (i, p) {
        return Err(Error::ConfigMismatch(format!(
            "slot {}/{} holds a {}/{} ensemble",
            i.label(),
            p.label(),
            r.spec.interpretation.label(),
            r.spec.population.label()
        )));
    }
    Ok(())
}

fn background_rise(source: &DetectorHistogram, inserted: &DetectorHistogram, mask: &[bool], extent: f64) -> BackgroundRise {
    let (ns, ne) = (source.total as f64, inserted.total as f64);
    let dark: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
    let total = ns + ne;
    if dark.is_empty() || total == 0.0 {
        return BackgroundRise { measured: 0.0, expected: 0.0, sigma: 0.0 };
    }
    let width = source.width();
    let combined = source.combined(inserted);
    let scale = ns / total;
    let measured = dark.iter().map(|&i| combined.densities[i] - scale * source.densities[i]).sum::<f64>() / dark.len() as f64;
    let detector = 2.0 * extent;
    let q = dark.len() as f64 * width / detector;
    BackgroundRise {
        measured,
        expected: ne / (total * detector),
        sigma: (ne * q * (1.0 - q)).sqrt() / (dark.len() as f64 * total * width),
    }
}

pub fn build_report(cfg: &ExperimentConfig, set: &EnsembleSet) -> Result<ComparisonReport> {
    let hash = cfg.hash();
    check_cell(&set.bi_source, &hash, Interpretation::Bi, Population::Source)?;
    check_cell(&set.bi_inserted, &hash, Interpretation::Bi, Population::Inserted)?;
    check_cell(&set.sqm_source, &hash, Interpretation::Sqm, Population::Source)?;
    check_cell(&set.sqm_inserted, &hash, Interpretation::Sqm, Population::Inserted)?;

    let scenario = |source: &EnsembleResult, inserted: &EnsembleResult| -> Result<ScenarioHistograms> {
        let source = histogram(&source.arrivals, cfg)?;
        let inserted = histogram(&inserted.arrivals, cfg)?;
        let combined = source.combined(&inserted);
        Ok(ScenarioHistograms { source, inserted, combined })
    };
    let bi = scenario(&set.bi_source, &set.bi_inserted)?;
    let sqm = scenario(&set.sqm_source, &set.sqm_inserted)?;

    let fringes = fringe_geometry(cfg)?;
    let visibility_source_only = visibility(Intensity::Histogram(&sqm.source), cfg)?;
    let visibility_bi_source = visibility(Intensity::Histogram(&bi.source), cfg)?;
    let visibility_bi_combined = visibility(Intensity::Histogram(&bi.combined), cfg)?;
    let visibility_sqm_combined = visibility(Intensity::Histogram(&sqm.combined), cfg)?;
    let fill = dark_zone_fill(&bi.inserted, cfg);
    let uniformity = uniformity_chi_square(&sqm.inserted).ok();
    let field = Wavefield::new(cfg);
    let t = cfg.flight_time();
    let l1_equivariance = l1_distance(&bi.source, |x| field.born_density(x, t));
    let sqm_background_rise = background_rise(&sqm.source, &sqm.inserted, &dark_mask(cfg), cfg.x_extent);

    let th = cfg.verdict.clone();
    let flags = VerdictFlags {
        bi_pattern_clearer: visibility_bi_combined >= visibility_source_only - th.visibility_slack
            && fill.dark_fraction <= th.dark_ratio * fill.uniform_expected,
        sqm_dark_zones_filled: visibility_sqm_combined < visibility_source_only
            && uniformity.is_some_and(|u| u.p_value >= th.uniformity_p),
    };
    Ok(ComparisonReport {
        config_hash: hash,
        fringes,
        status_counts: ReportCounts {
            bi_source: set.bi_source.status_counts,
            bi_inserted: set.bi_inserted.status_counts,
            sqm_source: set.sqm_source.status_counts,
            sqm_inserted: set.sqm_inserted.status_counts,
        },
        histograms: InterpretationHistograms { bi, sqm },
        visibility_source_only,
        visibility_bi_source,
        visibility_bi_combined,
        visibility_sqm_combined,
        dark_fraction_bi_inserted: fill.dark_fraction,
        dark_fraction_uniform_expected: fill.uniform_expected,
        uniformity_p_sqm_inserted: uniformity.map(|u| u.p_value),
        uniformity_sqm_inserted: uniformity,
        l1_equivariance,
        sqm_background_rise,
        thresholds: th,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::{sample_born_arrivals, EnsembleSpec};
    use std::time::Duration;

    fn reference() -> ExperimentConfig {
        ExperimentConfig::reference()
    }

    #[test]
    fn empty_histogram() {
        let h = histogram(&[], &reference()).unwrap();
        assert_eq!(h.total, 0);
        assert!(h.counts.iter().all(|&c| c == 0));
        assert!(h.densities.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn interior_edge_goes_right() {
        let cfg = reference();
        let h = DetectorHistogram::empty(&cfg);
        for i in [1, 57, 100, 199] {
            let e = h.edges[i];
            assert_eq!(h.bin_index(e), Some(i), "edge {i} at {e}");
        }
        assert_eq!(h.bin_index(cfg.x_extent), Some(cfg.bins - 1));
        assert_eq!(h.bin_index(-cfg.x_extent), Some(0));
        let h = histogram(&[h.edges[100]], &cfg).unwrap();
        assert_eq!(h.counts[100], 1);
    }

    #[test]
    fn out_of_range_arrival() {
        assert!(matches!(histogram(&[200.5], &reference()), Err(Error::ArrivalOutOfRange { .. })));
    }

    #[test]
    fn densities_integrate_to_one() {
        let cfg = reference();
        let h = histogram(&[-3.0, 0.0, 0.5, 150.0, 199.9], &cfg).unwrap();
        assert!((h.densities.iter().sum::<f64>() * h.width() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fringe_geometry_of_reference() {
        let g = fringe_geometry(&reference()).unwrap();
        assert_eq!(g.central_max, 0.0);
        assert!((g.first_min - 26.2).abs() < 0.1, "{g:?}");
        assert!((g.secondary_max.unwrap() - 43.6).abs() < 0.1, "{g:?}");
    }

    #[test]
    fn analytic_visibility_is_high() {
        let v = visibility(Intensity::Analytic, &reference()).unwrap();
        assert!(v >= 0.9, "{v}");
    }

    #[test]
    fn uniform_histogram_has_zero_visibility() {
        let cfg = reference();
        let h = DetectorHistogram::from_counts(-cfg.x_extent, cfg.x_extent, vec![50; cfg.bins]);
        assert_eq!(visibility(Intensity::Histogram(&h), &cfg).unwrap(), 0.0);
    }

    #[test]
    fn single_slit_has_no_fringes() {
        let cfg = reference().with_slit_separation(0.0);
        assert!(matches!(visibility(Intensity::Analytic, &cfg), Err(Error::DegenerateFringes)));
    }

    #[test]
    fn born_arrivals_avoid_dark_zones() {
        let cfg = reference();
        let h = histogram(&sample_born_arrivals(&cfg, 100_000, 1).unwrap(), &cfg).unwrap();
        let fill = dark_zone_fill(&h, &cfg);
        assert!(fill.dark_fraction < cfg.theta_dark, "{fill:?}");
        assert!(l1_distance(&h, |x| Wavefield::new(&cfg).born_density(x, cfg.flight_time())) <= 0.02);
        let chi = uniformity_chi_square(&h).unwrap();
        assert!(chi.p_value < 1e-6);
    }

    #[test]
    fn uniform_counts_fill_dark_zones_proportionally() {
        let cfg = reference();
        let per_bin = 500;
        let h = DetectorHistogram::from_counts(-cfg.x_extent, cfg.x_extent, vec![per_bin; cfg.bins]);
        let fill = dark_zone_fill(&h, &cfg);
        let n = h.total as f64;
        let sigma = (fill.uniform_expected * (1.0 - fill.uniform_expected) / n).sqrt();
        assert!((fill.dark_fraction - fill.uniform_expected).abs() <= 3.0 * sigma);
    }

    #[test]
    fn l1_of_own_bin_masses_is_zero() {
        let cfg = reference();
        let field = Wavefield::new(&cfg);
        let t = cfg.flight_time();
        let density = |x: f64| field.born_density(x, t);
        let empty = DetectorHistogram::empty(&cfg);
        let masses = bin_masses(&empty, density);
        let counts: Vec<u64> = masses.iter().map(|m| (m * 1e13).round() as u64).collect();
        let h = DetectorHistogram::from_counts(empty.lo(), empty.hi(), counts);
        assert!(l1_distance(&h, density) < 1e-9);
    }

    #[test]
    fn l1_of_a_single_spike() {
        let cfg = reference();
        let field = Wavefield::new(&cfg);
        let t = cfg.flight_time();
        let h = histogram(&[0.5; 10], &cfg).unwrap();
        let bin = h.bin_index(0.5).unwrap();
        let mass = bin_masses(&h, |x| field.born_density(x, t))[bin];
        let l1 = l1_distance(&h, |x| field.born_density(x, t));
        assert!((l1 - 2.0 * (1.0 - mass)).abs() < 1e-6, "{l1} vs {}", 2.0 * (1.0 - mass));
    }

    #[test]
    fn chi_square_of_equal_counts() {
        let h = DetectorHistogram::from_counts(-1.0, 1.0, vec![40; 20]);
        let c = uniformity_chi_square(&h).unwrap();
        assert_eq!(c.statistic, 0.0);
        assert_eq!(c.p_value, 1.0);
        let thin = DetectorHistogram::from_counts(-1.0, 1.0, vec![9; 20]);
        assert!(matches!(uniformity_chi_square(&thin), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn chi_square_reference_value() {
        let h = DetectorHistogram::from_counts(0.0, 4.0, vec![46, 31, 40, 35]);
        let expected = 152.0 / 4.0;
        let stat = [46.0, 31.0, 40.0, 35.0].iter().map(|c: &f64| (c - expected).powi(2) / expected).sum::<f64>();
        // survival function of chi-square with 3 dof in closed form
        let sf3 = statrs::function::erf::erfc((stat / 2.0).sqrt()) + (2.0 * stat / std::f64::consts::PI).sqrt() * (-stat / 2.0).exp();
        let c = uniformity_chi_square(&h).unwrap();
        assert_eq!(c.dof, 3);
        assert!((c.statistic - stat).abs() < 1e-12);
        assert!((c.p_value - sf3).abs() < 1e-10, "{} vs {sf3}", c.p_value);
    }

    #[test]
    fn ks_detects_shifted_samples() {
        let xs: Vec<f64> = (0..2000).map(|i| (i as f64 + 0.5) / 2000.0).collect();
        assert!(ks_statistic(&xs, |x| x.clamp(0.0, 1.0)) < 1e-3);
        assert!(ks_statistic(&xs, |x| (x - 0.2).clamp(0.0, 1.0)) > 0.19);
    }

    fn empty_result(cfg: &ExperimentConfig, i: Interpretation, p: Population, arrivals: Vec<f64>) -> EnsembleResult {
        let mut spec = EnsembleSpec::for_config(cfg, i, p);
        spec.count = arrivals.len() as u64;
        let status_counts = StatusCounts { arrived: arrivals.len() as u64, ..Default::default() };
        EnsembleResult { spec, arrivals, status_counts, wall_time: Duration::ZERO }
    }

    #[test]
    fn zero_inserted_electrons() {
        let cfg = reference();
        let born = sample_born_arrivals(&cfg, 100_000, 3).unwrap();
        let born2 = sample_born_arrivals(&cfg, 100_000, 4).unwrap();
        let set = EnsembleSet {
            bi_source: empty_result(&cfg, Interpretation::Bi, Population::Source, born2),
            bi_inserted: empty_result(&cfg, Interpretation::Bi, Population::Inserted, vec![]),
            sqm_source: empty_result(&cfg, Interpretation::Sqm, Population::Source, born),
            sqm_inserted: empty_result(&cfg, Interpretation::Sqm, Population::Inserted, vec![]),
        };
        let r = build_report(&cfg, &set).unwrap();
        assert_eq!(r.histograms.bi.combined, r.histograms.bi.source);
        assert_eq!(r.histograms.sqm.combined, r.histograms.sqm.source);
        assert!(r.flags.bi_pattern_clearer);
        assert!(!r.flags.sqm_dark_zones_filled);
        assert_eq!(r.uniformity_p_sqm_inserted, None);
    }

    #[test]
    fn report_rejects_foreign_ensembles() {
        let cfg = reference();
        let mut other = cfg.clone();
        other.seed = 1;
        let set = EnsembleSet {
            bi_source: empty_result(&cfg, Interpretation::Bi, Population::Source, vec![0.0]),
            bi_inserted: empty_result(&other, Interpretation::Bi, Population::Inserted, vec![]),
            sqm_source: empty_result(&cfg, Interpretation::Sqm, Population::Source, vec![0.0]),
            sqm_inserted: empty_result(&cfg, Interpretation::Sqm, Population::Inserted, vec![]),
        };
        assert!(matches!(build_report(&cfg, &set), Err(Error::ConfigMismatch(_))));
    }

    #[test]
    fn metrics_are_mirror_invariant() {
        let cfg = reference();
        let mut xs = sample_born_arrivals(&cfg, 20_000, 8).unwrap();
        // clear of bin edges, where half-open bins break the mirror
        xs.extend((0..3000).map(|i| -149.9863 + 0.1 * i as f64));
        let mirrored: Vec<f64> = xs.iter().map(|x| -x).collect();
        let (a, b) = (histogram(&xs, &cfg).unwrap(), histogram(&mirrored, &cfg).unwrap());
        let va = visibility(Intensity::Histogram(&a), &cfg).unwrap();
        let vb = visibility(Intensity::Histogram(&b), &cfg).unwrap();
        assert!((va - vb).abs() < 1e-12);
        assert!((dark_zone_fill(&a, &cfg).dark_fraction - dark_zone_fill(&b, &cfg).dark_fraction).abs() < 1e-12);
        let (ca, cb) = (uniformity_chi_square(&a).unwrap(), uniformity_chi_square(&b).unwrap());
        assert!((ca.statistic - cb.statistic).abs() < 1e-9 * ca.statistic);
    }
}
