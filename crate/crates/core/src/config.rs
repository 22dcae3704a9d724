//! Experiment parameterization: geometry, beam, inserted-electron probe,
//! numerical controls and verdict thresholds.
//!
//! Configurations are JSON documents. Geometry fields are required; everything
//! else has a default. [`validate_config`] turns a parsed document into an
//! [`ExperimentConfig`] or returns every violation found, not just the first.
//!
//! Coordinates: `x` is the transverse fringe axis, `z` the longitudinal axis
//! running from the slit plane (`z = 0`) to the detector (`z = region_length`).

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// The canonical reference arrangement shipped with the crate.
pub const REFERENCE_JSON: &str = include_str!("../configs/reference.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub hbar: f64,
    pub mass: f64,
    /// Initial Gaussian width of the packet leaving each slit.
    pub sigma0: f64,
    /// Center-to-center slit distance.
    pub slit_separation: f64,
    /// Longitudinal beam speed of the source electrons.
    pub v_long: f64,
    /// Slit-plane to detector distance.
    pub region_length: f64,
    /// Transverse half-width of the simulated region and detector.
    pub x_extent: f64,
    pub eitse: EitseConfig,
    pub source_count: u64,
    pub seed: u64,
    pub bins: usize,
    pub theta_dark: f64,
    pub integrator: IntegratorConfig,
    pub verdict: VerdictThresholds,
}

/// Externally inserted slow electrons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EitseConfig {
    pub count: u64,
    pub insertion_velocity: Velocity,
    pub insertion_region: Region,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Velocity {
    pub v_x0: f64,
    pub v_z0: f64,
}

/// Axis-aligned rectangle in the `(x, z)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x_min: f64,
    pub x_max: f64,
    pub z_min: f64,
    pub z_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// Lab-time budget for a single trajectory.
    pub t_max: f64,
    /// Contrast ratio below which a point counts as node-proximal.
    pub node_floor: f64,
}

/// Thresholds of the BI-vs-SQM decision rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictThresholds {
    pub visibility_slack: f64,
    pub dark_ratio: f64,
    pub uniformity_p: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-12, max_step: 1.0, t_max: 5000.0, node_floor: 1e-10 }
    }
}

impl Default for VerdictThresholds {
    fn default() -> Self {
        Self { visibility_slack: 0.02, dark_ratio: 0.5, uniformity_p: 0.01 }
    }
}

pub const DEFAULT_HBAR: f64 = 1.0;
pub const DEFAULT_MASS: f64 = 1.0;
pub const DEFAULT_BINS: usize = 200;
pub const DEFAULT_THETA_DARK: f64 = 0.1;
pub const DEFAULT_SOURCE_COUNT: u64 = 100_000;
pub const DEFAULT_EITSE_COUNT: u64 = 10_000;
pub const DEFAULT_INSERTION_VELOCITY: Velocity = Velocity { v_x0: 0.0, v_z0: 0.1 };

/// One configuration rule broken by a document.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    MissingField(String),
    OutOfRange { field: String, bound: String },
    InconsistentGeometry(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingField(name) => write!(f, "missing required field `{name}`"),
            Violation::OutOfRange { field, bound } => write!(f, "{field} must be {bound}"),
            Violation::InconsistentGeometry(msg) => write!(f, "inconsistent geometry: {msg}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<Violation>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

// Raw document shape: every field optional so that missing geometry is
// reported as a violation rather than a serde error.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    hbar: Option<f64>,
    mass: Option<f64>,
    sigma0: Option<f64>,
    slit_separation: Option<f64>,
    v_long: Option<f64>,
    region_length: Option<f64>,
    x_extent: Option<f64>,
    eitse: Option<RawEitse>,
    source_count: Option<u64>,
    seed: Option<u64>,
    bins: Option<usize>,
    theta_dark: Option<f64>,
    integrator: Option<RawIntegrator>,
    verdict: Option<RawVerdict>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEitse {
    count: Option<u64>,
    insertion_velocity: Option<RawVelocity>,
    insertion_region: Option<Region>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVelocity {
    v_x0: Option<f64>,
    v_z0: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIntegrator {
    rel_tol: Option<f64>,
    abs_tol: Option<f64>,
    max_step: Option<f64>,
    t_max: Option<f64>,
    node_floor: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVerdict {
    visibility_slack: Option<f64>,
    dark_ratio: Option<f64>,
    uniformity_p: Option<f64>,
}

struct Checker(Vec<Violation>);

impl Checker {
    fn required(&mut self, name: &str, v: Option<f64>) -> f64 {
        v.unwrap_or_else(|| {
            self.0.push(Violation::MissingField(name.to_string()));
            f64::NAN
        })
    }

    fn check(&mut self, ok: bool, field: &str, bound: &str) {
        if !ok {
            self.0.push(Violation::OutOfRange { field: field.to_string(), bound: bound.to_string() });
        }
    }

    fn positive(&mut self, field: &str, v: f64) {
        // NaN from a missing field is already reported
        if !v.is_nan() {
            self.check(v > 0.0 && v.is_finite(), field, "> 0");
        }
    }
}

/// Validate a parsed configuration document and fill defaults.
pub fn validate_config(raw: &Value) -> std::result::Result<ExperimentConfig, Error> {
    let raw: RawConfig = serde_json::from_value(raw.clone())?;
    let mut c = Checker(Vec::new());

    let hbar = raw.hbar.unwrap_or(DEFAULT_HBAR);
    let mass = raw.mass.unwrap_or(DEFAULT_MASS);
    let sigma0 = c.required("sigma0", raw.sigma0);
    let slit_separation = c.required("slit_separation", raw.slit_separation);
    let v_long = c.required("v_long", raw.v_long);
    let region_length = c.required("region_length", raw.region_length);
    let x_extent = c.required("x_extent", raw.x_extent);

    for (name, v) in [
        ("hbar", hbar),
        ("mass", mass),
        ("sigma0", sigma0),
        ("v_long", v_long),
        ("region_length", region_length),
        ("x_extent", x_extent),
    ] {
        c.positive(name, v);
    }
    if !slit_separation.is_nan() {
        c.check(slit_separation >= 0.0 && slit_separation.is_finite(), "slit_separation", ">= 0");
    }

    let bins = raw.bins.unwrap_or(DEFAULT_BINS);
    c.check(bins >= 16, "bins", ">= 16");
    let theta_dark = raw.theta_dark.unwrap_or(DEFAULT_THETA_DARK);
    c.check(theta_dark > 0.0 && theta_dark < 0.5, "theta_dark", "in (0, 0.5)");
    let source_count = raw.source_count.unwrap_or(DEFAULT_SOURCE_COUNT);
    c.check(source_count >= 1, "source_count", ">= 1");

    let re = raw.eitse.unwrap_or_default();
    let rv = re.insertion_velocity.unwrap_or_default();
    let insertion_velocity = Velocity {
        v_x0: rv.v_x0.unwrap_or(DEFAULT_INSERTION_VELOCITY.v_x0),
        v_z0: rv.v_z0.unwrap_or(DEFAULT_INSERTION_VELOCITY.v_z0),
    };
    c.check(insertion_velocity.v_x0.is_finite(), "eitse.insertion_velocity.v_x0", "finite");
    c.check(insertion_velocity.v_z0 > 0.0 && insertion_velocity.v_z0.is_finite(), "eitse.insertion_velocity.v_z0", "> 0");
    let full = Region { x_min: -x_extent, x_max: x_extent, z_min: 0.0, z_max: region_length };
    let insertion_region = re.insertion_region.unwrap_or(full);
    let r = insertion_region;
    if r.x_min > r.x_max || r.z_min > r.z_max {
        c.0.push(Violation::InconsistentGeometry("insertion region has min > max".into()));
    } else if !(x_extent.is_nan() || region_length.is_nan())
        && (r.x_min < -x_extent || r.x_max > x_extent || r.z_min < 0.0 || r.z_max > region_length)
    {
        c.0.push(Violation::InconsistentGeometry(format!(
            "insertion region [{}, {}] x [{}, {}] lies outside the simulated region [-{x_extent}, {x_extent}] x [0, {region_length}]",
            r.x_min, r.x_max, r.z_min, r.z_max
        )));
    }
    let eitse = EitseConfig { count: re.count.unwrap_or(DEFAULT_EITSE_COUNT), insertion_velocity, insertion_region };

    let d = IntegratorConfig::default();
    let ri = raw.integrator.unwrap_or_default();
    let integrator = IntegratorConfig {
        rel_tol: ri.rel_tol.unwrap_or(d.rel_tol),
        abs_tol: ri.abs_tol.unwrap_or(d.abs_tol),
        max_step: ri.max_step.unwrap_or(d.max_step),
        t_max: ri.t_max.unwrap_or(d.t_max),
        node_floor: ri.node_floor.unwrap_or(d.node_floor),
    };
    c.positive("integrator.rel_tol", integrator.rel_tol);
    c.positive("integrator.abs_tol", integrator.abs_tol);
    c.positive("integrator.max_step", integrator.max_step);
    c.positive("integrator.t_max", integrator.t_max);
    c.check(
        integrator.node_floor > 0.0 && integrator.node_floor < 1.0,
        "integrator.node_floor",
        "in (0, 1)",
    );
    if integrator.t_max > 0.0 && region_length > 0.0 && v_long > 0.0 && integrator.t_max < region_length / v_long {
        c.0.push(Violation::InconsistentGeometry(format!(
            "integrator.t_max={} is shorter than the source flight time {}",
            integrator.t_max,
            region_length / v_long
        )));
    }

    let dv = VerdictThresholds::default();
    let rvd = raw.verdict.unwrap_or_default();
    let verdict = VerdictThresholds {
        visibility_slack: rvd.visibility_slack.unwrap_or(dv.visibility_slack),
        dark_ratio: rvd.dark_ratio.unwrap_or(dv.dark_ratio),
        uniformity_p: rvd.uniformity_p.unwrap_or(dv.uniformity_p),
    };
    c.check(verdict.visibility_slack >= 0.0, "verdict.visibility_slack", ">= 0");
    c.check(verdict.dark_ratio > 0.0, "verdict.dark_ratio", "> 0");
    c.check(verdict.uniformity_p > 0.0 && verdict.uniformity_p < 1.0, "verdict.uniformity_p", "in (0, 1)");

    if !c.0.is_empty() {
        return Err(ConfigErrors(c.0).into());
    }
    Ok(ExperimentConfig {
        hbar,
        mass,
        sigma0,
        slit_separation,
        v_long,
        region_length,
        x_extent,
        eitse,
        source_count,
        seed: raw.seed.unwrap_or(0),
        bins,
        theta_dark,
        integrator,
        verdict,
    })
}

/// Overwrite one field of a configuration document addressed by a dotted
/// path, e.g. `eitse.count=5000`. The value is parsed as JSON when possible
/// and stored as a string otherwise.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw_value) = assignment.split_once('=').ok_or_else(|| {
        ConfigErrors(vec![Violation::OutOfRange {
            field: assignment.to_string(),
            bound: "of the form key.path=value".into(),
        }])
    })?;
    let value = serde_json::from_str(raw_value).unwrap_or_else(|_| Value::String(raw_value.to_string()));
    let mut node = doc;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        if !node.is_object() {
            *node = Value::Object(Default::default());
        }
        let obj = node.as_object_mut().expect("object ensured above");
        if i + 1 == keys.len() {
            obj.insert(key.to_string(), value);
            return Ok(());
        }
        node = obj.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn reference() -> Self {
        Self::from_json_str(REFERENCE_JSON).expect("bundled reference config is valid")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let doc: Value = serde_json::from_str(s)?;
        validate_config(&doc)
    }

    /// Read a JSON file, apply dotted overrides in order, then validate.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut doc: Value = serde_json::from_str(&text)?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        validate_config(&doc)
    }

    pub fn to_json_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Hex SHA-256 of the compact canonical serialization.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Flight time of a source electron from the slits to the detector.
    pub fn flight_time(&self) -> f64 {
        self.region_length / self.v_long
    }

    /// Same arrangement with a different slit separation.
    pub fn with_slit_separation(&self, d: f64) -> Self {
        Self { slit_separation: d, ..self.clone() }
    }
}
