//! Single-trajectory integration.
//!
//! * Source electrons follow the first-order guidance law, integrated in `z`:
//!   `dx/dz = v(x, z / v_long) / v_long`.
//! * Inserted electrons under BI obey `m a = -∇Q_lab` in lab time.
//! * Inserted electrons under SQM fly straight.
//!
//! Inserted electrons never act back on the wavefield and do not interact with
//! each other or with the source electrons.

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Velocity};
use crate::error::Error;
use crate::integrator::{DormandPrince, StepFailure, Tolerances};
use crate::wavefield::Wavefield;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArrivalStatus {
    Arrived,
    LostSide,
    Timeout,
    NodeAbort,
}

/// Phase-space sample along a traced path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathPoint {
    pub t: f64,
    pub x: f64,
    pub z: f64,
    pub vx: f64,
    pub vz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalRecord {
    pub status: ArrivalStatus,
    /// Transverse position at the detector plane, set iff `Arrived`.
    pub arrival_x: Option<f64>,
    pub flight_time: f64,
    /// Accepted integrator states; empty unless tracing was requested.
    pub path: Vec<PathPoint>,
    /// Sum of the embedded local error estimates on `x`.
    pub error_estimate: f64,
    pub steps: usize,
}

impl ArrivalRecord {
    fn closed_form(status: ArrivalStatus, arrival_x: Option<f64>, flight_time: f64) -> Self {
        Self { status, arrival_x, flight_time, path: Vec::new(), error_estimate: 0.0, steps: 0 }
    }
}

/// Integrates trajectories against one wavefield.
#[derive(Debug, Clone)]
pub struct Dynamics {
    field: Wavefield,
    mass: f64,
    v_long: f64,
    length: f64,
    x_extent: f64,
    t_max: f64,
    tol: Tolerances,
}

impl Dynamics {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        let ic = &cfg.integrator;
        Self {
            field: Wavefield::new(cfg),
            mass: cfg.mass,
            v_long: cfg.v_long,
            length: cfg.region_length,
            x_extent: cfg.x_extent,
            t_max: ic.t_max,
            tol: Tolerances { rel: ic.rel_tol, abs: ic.abs_tol, max_step: ic.max_step, min_step: 1e-10 },
        }
    }

    pub fn field(&self) -> &Wavefield {
        &self.field
    }

    /// Copy with a different integrator step cap.
    pub fn with_max_step(&self, max_step: f64) -> Self {
        let mut d = self.clone();
        d.tol.max_step = max_step;
        d
    }

    /// Copy with a different relative tolerance.
    pub fn with_rel_tol(&self, rel: f64) -> Self {
        let mut d = self.clone();
        d.tol.rel = rel;
        d
    }

    /// First-order guided source electron from `(x0, z = 0)`.
    pub fn integrate_source(&self, x0: f64, trace: bool) -> ArrivalRecord {
        if x0.abs() > self.x_extent {
            return ArrivalRecord::closed_form(ArrivalStatus::LostSide, None, 0.0);
        }
        let field = &self.field;
        let v_long = self.v_long;
        let rhs = |z: f64, y: &[f64; 1]| -> Result<[f64; 1], Error> {
            Ok([field.guidance_velocity(y[0], z / v_long)? / v_long])
        };
        let mut tol = self.tol;
        tol.min_step *= self.length;
        let mut dp = DormandPrince::<1>::new(tol, 1e-2 * self.length);

        let (mut z, mut y) = (0.0, [x0]);
        let mut path = Vec::new();
        let mut err = 0.0;
        let mut steps = 0;
        let mut fy = match rhs(z, &y) {
            Ok(f) => f,
            Err(_) => return ArrivalRecord::closed_form(ArrivalStatus::NodeAbort, None, 0.0),
        };
        let point = |z: f64, x: f64, dxdz: f64| PathPoint { t: z / v_long, x, z, vx: dxdz * v_long, vz: v_long };
        if trace {
            path.push(point(z, y[0], fy[0]));
        }
        let status = loop {
            match dp.step(&rhs, z, &y, &fy, self.length) {
                Ok(acc) => {
                    steps += 1;
                    err += acc.error[0].abs();
                    z = acc.t1;
                    y = acc.y1;
                    fy = acc.f1;
                    if trace {
                        path.push(point(z, y[0], fy[0]));
                    }
                    if y[0].abs() > self.x_extent {
                        break ArrivalStatus::LostSide;
                    }
                    if z >= self.length {
                        break ArrivalStatus::Arrived;
                    }
                }
                Err(_) => break ArrivalStatus::NodeAbort,
            }
        };
        ArrivalRecord {
            status,
            arrival_x: (status == ArrivalStatus::Arrived).then_some(y[0]),
            flight_time: z / v_long,
            path,
            error_estimate: err,
            steps,
        }
    }

    /// Inserted electron under BI: Newtonian motion in the static lab-frame
    /// quantum potential.
    pub fn integrate_inserted_bi(&self, x0: f64, z0: f64, v0: Velocity, trace: bool) -> ArrivalRecord {
        let field = &self.field;
        let inv_m = 1.0 / self.mass;
        // the closed form extends past [0, L]; region exits are detected on
        // accepted steps instead of inside stage evaluations
        let rhs = |_t: f64, s: &[f64; 4]| -> Result<[f64; 4], Error> {
            let [fx, fz] = field.quantum_force_extrapolated(s[0], s[1])?;
            Ok([s[2], s[3], fx * inv_m, fz * inv_m])
        };
        let mut dp = DormandPrince::<4>::new(self.tol, 1e-2);
        let (mut t, mut y) = (0.0, [x0, z0, v0.v_x0, v0.v_z0]);
        let mut path = Vec::new();
        let mut err = 0.0;
        let mut steps = 0;
        let mut fy = match rhs(t, &y) {
            Ok(f) => f,
            Err(_) => return ArrivalRecord::closed_form(ArrivalStatus::NodeAbort, None, 0.0),
        };
        let point = |t: f64, s: &[f64; 4]| PathPoint { t, x: s[0], z: s[1], vx: s[2], vz: s[3] };
        if trace {
            path.push(point(t, &y));
        }
        let mut arrival_x = None;
        let status = loop {
            match dp.step(&rhs, t, &y, &fy, self.t_max) {
                Ok(acc) => {
                    steps += 1;
                    err += acc.error[0].abs();
                    if acc.y1[1] >= self.length {
                        let tc = acc.crossing(1, self.length);
                        let xc = acc.hermite(0, tc);
                        t = tc;
                        if trace {
                            // last accepted state, just past the plane
                            path.push(point(acc.t1, &acc.y1));
                        }
                        if xc.abs() <= self.x_extent {
                            arrival_x = Some(xc);
                            break ArrivalStatus::Arrived;
                        }
                        break ArrivalStatus::LostSide;
                    }
                    t = acc.t1;
                    y = acc.y1;
                    fy = acc.f1;
                    if trace {
                        path.push(point(t, &y));
                    }
                    if y[0].abs() > self.x_extent || y[1] < 0.0 {
                        break ArrivalStatus::LostSide;
                    }
                    if t >= self.t_max {
                        break ArrivalStatus::Timeout;
                    }
                }
                Err(StepFailure::MinStep | StepFailure::Rhs(_)) => break ArrivalStatus::NodeAbort,
            }
        };
        ArrivalRecord { status, arrival_x, flight_time: t, path, error_estimate: err, steps }
    }

    /// Traced BI trajectory with at least `min_points` accepted states,
    /// re-integrating with a tighter step cap when the first pass is shorter.
    pub fn trace_inserted_bi(&self, x0: f64, z0: f64, v0: Velocity, min_points: usize) -> ArrivalRecord {
        let mut r = self.integrate_inserted_bi(x0, z0, v0, true);
        let mut cap = r.flight_time / min_points as f64;
        // a finer pass can exit a little earlier, so the cap may need to shrink again
        for _ in 0..8 {
            if r.path.len() >= min_points || r.flight_time <= 0.0 {
                break;
            }
            r = self.with_max_step(cap.min(self.tol.max_step)).integrate_inserted_bi(x0, z0, v0, true);
            cap /= 2.0;
        }
        r
    }

    /// Inserted electron under SQM: force-free straight line in closed form.
    pub fn integrate_inserted_sqm(&self, x0: f64, z0: f64, v0: Velocity) -> ArrivalRecord {
        assert!(v0.v_z0 > 0.0, "SQM insertion requires v_z0 > 0");
        let flight = (self.length - z0) / v0.v_z0;
        let x = x0 + v0.v_x0 * flight;
        if x.abs() <= self.x_extent {
            ArrivalRecord::closed_form(ArrivalStatus::Arrived, Some(x), flight)
        } else {
            // time at which the side wall is met
            let wall = self.x_extent.copysign(v0.v_x0);
            let t_side = if v0.v_x0 != 0.0 { ((wall - x0) / v0.v_x0).max(0.0) } else { 0.0 };
            ArrivalRecord::closed_form(ArrivalStatus::LostSide, None, t_side)
        }
    }

    /// Energy `½ m |v|² + Q_lab` of a phase-space point.
    pub fn energy(&self, p: &PathPoint) -> Result<f64, Error> {
        let q = self.field.quantum_potential(p.x, self.field.time_at(p.z))?;
        Ok(0.5 * self.mass * (p.vx * p.vx + p.vz * p.vz) + q)
    }
}
