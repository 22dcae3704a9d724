//! Adaptive Dormand–Prince 5(4) stepper over fixed-size states.
//!
//! The right-hand side is fallible: an `Err` from it makes the stepper halve
//! the step and retry, and the error is surfaced only once the step would
//! drop below `min_step`.

/// Step-size controls for [`DormandPrince`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
    pub max_step: f64,
    pub min_step: f64,
}

/// One accepted step with everything needed for Hermite dense output.
#[derive(Debug, Clone, Copy)]
pub struct Accepted<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    pub f0: [f64; N],
    pub f1: [f64; N],
    /// Embedded error estimate per component (5th minus 4th order).
    pub error: [f64; N],
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepFailure<E> {
    /// The error controller wanted a step below `min_step`.
    MinStep,
    /// The right-hand side kept failing down to `min_step`.
    Rhs(E),
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// 5th-order weights minus the embedded 4th-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

#[derive(Debug, Clone)]
pub struct DormandPrince<const N: usize> {
    tol: Tolerances,
    h: f64,
}

impl<const N: usize> DormandPrince<N> {
    pub fn new(tol: Tolerances, initial_step: f64) -> Self {
        Self { tol, h: initial_step.min(tol.max_step) }
    }

    /// Step size the next attempt will start from.
    pub fn step_size(&self) -> f64 {
        self.h
    }

    fn attempt<F, E>(&self, f: &F, t: f64, y: &[f64; N], fy: &[f64; N], h: f64) -> Result<([f64; N], [f64; N], [f64; N], f64), E>
    where
        F: Fn(f64, &[f64; N]) -> Result<[f64; N], E>,
    {
        let mut k = [[0.0; N]; 7];
        k[0] = *fy;
        for s in 1..7 {
            let mut ys = *y;
            for (i, v) in ys.iter_mut().enumerate() {
                *v += h * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>();
            }
            if s == 6 {
                // stage 7 is evaluated at the 5th-order solution itself (FSAL)
                k[6] = f(t + h, &ys)?;
                let mut err = [0.0; N];
                for (i, e) in err.iter_mut().enumerate() {
                    *e = h * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>();
                }
                let norm = (err
                    .iter()
                    .enumerate()
                    .map(|(i, e)| {
                        let sc = self.tol.abs + self.tol.rel * y[i].abs().max(ys[i].abs());
                        (e / sc).powi(2)
                    })
                    .sum::<f64>()
                    / N as f64)
                    .sqrt();
                return Ok((ys, k[6], err, norm));
            }
            k[s] = f(t + C[s] * h, &ys)?;
        }
        unreachable!("loop returns at the final stage")
    }

    /// Take one accepted step from `(t, y)` with `fy = f(t, y)`, never
    /// stepping past `t_limit`.
    pub fn step<F, E>(&mut self, f: &F, t: f64, y: &[f64; N], fy: &[f64; N], t_limit: f64) -> Result<Accepted<N>, StepFailure<E>>
    where
        F: Fn(f64, &[f64; N]) -> Result<[f64; N], E>,
    {
        let mut h = self.h.min(self.tol.max_step);
        loop {
            let remaining = t_limit - t;
            let clipped = h >= remaining;
            let h_try = if clipped { remaining } else { h };
            match self.attempt(f, t, y, fy, h_try) {
                Err(e) => {
                    h = h_try / 2.0;
                    if h < self.tol.min_step {
                        return Err(StepFailure::Rhs(e));
                    }
                }
                Ok((y1, f1, error, norm)) if norm <= 1.0 => {
                    let factor = if norm == 0.0 { MAX_FACTOR } else { (SAFETY * norm.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR) };
                    // a step clipped to the limit says nothing about the natural size
                    self.h = if clipped { h.max(h_try * factor) } else { h_try * factor }.min(self.tol.max_step);
                    let t1 = if clipped { t_limit } else { t + h_try };
                    return Ok(Accepted { t0: t, t1, y0: *y, y1, f0: *fy, f1, error });
                }
                Ok((_, _, _, norm)) => {
                    h = h_try * (SAFETY * norm.powf(-0.2)).max(MIN_FACTOR);
                    if h < self.tol.min_step {
                        return Err(StepFailure::MinStep);
                    }
                }
            }
        }
    }
}

impl<const N: usize> Accepted<N> {
    /// Cubic Hermite interpolant of component `i` at time `t` in `[t0, t1]`.
    pub fn hermite(&self, i: usize, t: f64) -> f64 {
        hermite(self.t0, self.y0[i], self.f0[i], self.t1, self.y1[i], self.f1[i], t)
    }

    /// Time-derivative of the Hermite interpolant of component `i`.
    pub fn hermite_slope(&self, i: usize, t: f64) -> f64 {
        let h = self.t1 - self.t0;
        let s = (t - self.t0) / h;
        let (p0, p1, m0, m1) = (self.y0[i], self.y1[i], self.f0[i] * h, self.f1[i] * h);
        let d00 = 6.0 * s * s - 6.0 * s;
        let d10 = 3.0 * s * s - 4.0 * s + 1.0;
        let d01 = -6.0 * s * s + 6.0 * s;
        let d11 = 3.0 * s * s - 2.0 * s;
        (d00 * p0 + d10 * m0 + d01 * p1 + d11 * m1) / h
    }

    /// Time in `[t0, t1]` where the Hermite interpolant of component `i`
    /// crosses `level`, found by bisection. The endpoints must bracket it.
    pub fn crossing(&self, i: usize, level: f64) -> f64 {
        let (mut lo, mut hi) = (self.t0, self.t1);
        let below_at_lo = self.y0[i] < level;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if (self.hermite(i, mid) < level) == below_at_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

pub fn hermite(t0: f64, y0: f64, f0: f64, t1: f64, y1: f64, f1: f64, t: f64) -> f64 {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1
}
