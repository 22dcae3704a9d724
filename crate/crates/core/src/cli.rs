//! Command-line front end: `field`, `run`, `compare`, `sweep`, `validate`.
//!
//! Exit status is 0 on success, 1 when a check or sweep point fails, 2 on
//! usage, configuration or output-directory errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use crate::analysis::{build_report, ComparisonReport};
use crate::checks::validate_all;
use crate::config::{apply_override, validate_config, ExperimentConfig, REFERENCE_JSON};
use crate::error::{Error, Result};
use crate::montecarlo::{run_all, run_ensemble, run_records, EnsembleResult, EnsembleSet, EnsembleSpec, Interpretation, Population};
use crate::output::{arrivals_csv, comparison_plots, fig2_csv, RunDir, RunManifest};
use crate::wavefield::{Quantity, Wavefield};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const SCHEMA_HELP: &str = "\
configuration schema (JSON; see README for defaults):
  required: sigma0, slit_separation, v_long, region_length, x_extent
  optional: hbar, mass, source_count, seed, bins, theta_dark,
            eitse.{count, insertion_velocity.{v_x0, v_z0},
                   insertion_region.{x_min, x_max, z_min, z_max}},
            integrator.{rel_tol, abs_tol, max_step, t_max, node_floor},
            verdict.{visibility_slack, dark_ratio, uniformity_p}
  override any field with --set key.path=value";

#[derive(Debug, Parser)]
#[command(name = "pilotwave", version, about = "Double-slit pilot-wave simulator with inserted slow electrons")]
#[command(after_help = SCHEMA_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// JSON configuration file; the bundled reference config when omitted.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one field, e.g. `--set eitse.count=5000`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads for ensemble runs.
    #[arg(long, env = "PILOTWAVE_WORKERS", default_value_t = default_workers())]
    workers: usize,
}

#[derive(Debug, Args)]
struct OutArgs {
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "pilotwave-out")]
    out: PathBuf,
    /// Overwrite a directory that already holds a completed run.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InterpretationArg {
    Bi,
    Sqm,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PopulationArg {
    Source,
    Inserted,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample Q, density or speed over the simulated region (CSV + PGM heatmap).
    Field {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Q, density or speed.
        #[arg(long, default_value = "Q")]
        quantity: Quantity,
        #[arg(long, default_value_t = 401)]
        nx: usize,
        #[arg(long, default_value_t = 201)]
        nz: usize,
    },
    /// Run one ensemble (EnsembleResult JSON + arrivals CSV).
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long, value_enum)]
        interpretation: InterpretationArg,
        #[arg(long, value_enum)]
        population: PopulationArg,
        /// Write one `t,x,z` CSV per integrated trajectory under `trace/`.
        #[arg(long)]
        trace: bool,
    },
    /// Run all four ensembles and write the comparison report, CSV and plots.
    Compare {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Repeat `compare` over a parameter grid, one subdirectory per point.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Grid axis `key.path=lo:hi:n` (n evenly spaced values). Repeatable;
        /// several axes form their cartesian product.
        #[arg(long, value_name = "KEY=LO:HI:N", required = true)]
        vary: Vec<String>,
    },
    /// Run the numerical self-checks; prints one JSON line per check.
    Validate {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Parse `argv` (including the program name), run the subcommand and return
/// the process exit status.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            if code == EXIT_USAGE {
                eprintln!("\n{SCHEMA_HELP}");
            }
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("pilotwave: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Parse(_) | Error::Io { .. } | Error::OutputExists(_) => EXIT_USAGE,
        _ => EXIT_FAILED,
    }
}

fn config_document(args: &ConfigArgs) -> Result<Value> {
    let (text, origin) = match &args.config {
        Some(path) => (std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?, path.display().to_string()),
        None => (REFERENCE_JSON.to_string(), "reference config".to_string()),
    };
    let mut doc: Value = serde_json::from_str(&text).map_err(|e| {
        eprintln!("pilotwave: cannot parse {origin}");
        Error::Parse(e)
    })?;
    for o in &args.overrides {
        apply_override(&mut doc, o)?;
    }
    Ok(doc)
}

fn load(args: &ConfigArgs) -> Result<ExperimentConfig> {
    validate_config(&config_document(args)?)
}

fn workers(args: &ConfigArgs) -> usize {
    args.workers.max(1)
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Field { cfg, out, quantity, nx, nz } => field(&cfg, &out, quantity, nx, nz),
        Command::Run { cfg, out, interpretation, population, trace } => run(&cfg, &out, interpretation, population, trace),
        Command::Compare { cfg, out } => {
            let config = load(&cfg)?;
            let dir = RunDir::create(&out.out, out.force)?;
            compare_into(dir, &config, workers(&cfg)).map(|_| EXIT_OK)
        }
        Command::Sweep { cfg, out, vary } => sweep(&cfg, &out, &vary),
        Command::Validate { cfg } => {
            let config = load(&cfg)?;
            let outcomes = validate_all(&config, workers(&cfg));
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            for o in &outcomes {
                let _ = writeln!(lock, "{}", serde_json::to_string(o).expect("outcome serializes"));
            }
            Ok(if outcomes.iter().all(|o| o.pass) { EXIT_OK } else { EXIT_FAILED })
        }
    }
}

fn field(args: &ConfigArgs, out: &OutArgs, quantity: Quantity, nx: usize, nz: usize) -> Result<i32> {
    if nx < 2 || nz < 2 {
        return Err(crate::config::ConfigErrors(vec![crate::config::Violation::OutOfRange {
            field: "--nx/--nz".into(),
            bound: ">= 2".into(),
        }])
        .into());
    }
    let cfg = load(args)?;
    let mut dir = RunDir::create(&out.out, out.force)?;
    let mut manifest = RunManifest::new("field", &cfg);
    let start = Instant::now();
    let grid = Wavefield::new(&cfg).dump_field(quantity, nx, nz);
    manifest.timings.insert("field".into(), start.elapsed().as_secs_f64());
    let stem = format!("field_{}", quantity.label());
    dir.write_with(&format!("{stem}.csv"), |w| grid.write_csv(w))?;
    dir.write(&format!("{stem}.pgm"), &grid.to_pgm())?;
    dir.finish(manifest)?;
    Ok(EXIT_OK)
}

fn spec_of(cfg: &ExperimentConfig, i: InterpretationArg, p: PopulationArg) -> EnsembleSpec {
    let i = match i {
        InterpretationArg::Bi => Interpretation::Bi,
        InterpretationArg::Sqm => Interpretation::Sqm,
    };
    let p = match p {
        PopulationArg::Source => Population::Source,
        PopulationArg::Inserted => Population::Inserted,
    };
    EnsembleSpec::for_config(cfg, i, p)
}

fn cell_name(r: &EnsembleResult) -> String {
    format!("{}_{}", r.spec.interpretation.label(), r.spec.population.label())
}

fn write_ensemble(dir: &mut RunDir, r: &EnsembleResult) -> Result<()> {
    let name = cell_name(r);
    dir.write_json(&format!("ensemble_{name}.json"), r)?;
    dir.write(&format!("arrivals_{name}.csv"), &arrivals_csv(&r.arrivals))
}

fn run(args: &ConfigArgs, out: &OutArgs, i: InterpretationArg, p: PopulationArg, trace: bool) -> Result<i32> {
    let cfg = load(args)?;
    let spec = spec_of(&cfg, i, p);
    let mut dir = RunDir::create(&out.out, out.force)?;
    let mut manifest = RunManifest::new("run", &cfg);
    let start = Instant::now();
    let result = if trace {
        let records = run_records(&cfg, &spec, workers(args), true)?;
        for (idx, r) in records.iter().enumerate().filter(|(_, r)| !r.path.is_empty()) {
            let mut csv = String::from("t,x,z\n");
            for pt in &r.path {
                let _ = writeln!(csv, "{},{},{}", pt.t, pt.x, pt.z);
            }
            dir.write(&format!("trace/traj_{idx}.csv"), csv.as_bytes())?;
        }
        EnsembleResult::from_records(spec, &records, start.elapsed())
    } else {
        run_ensemble(&cfg, &spec, workers(args))?
    };
    manifest.timings.insert(cell_name(&result), result.wall_time.as_secs_f64());
    write_ensemble(&mut dir, &result)?;
    dir.finish(manifest)?;
    Ok(EXIT_OK)
}

/// Run all four ensembles under `cfg` and write the full comparison into `dir`.
pub fn compare_into(dir: RunDir, cfg: &ExperimentConfig, workers: usize) -> Result<ComparisonReport> {
    write_comparison(dir, cfg, &run_all(cfg, workers)?)
}

/// Write the report, Fig. 2 CSV, plots and per-ensemble files of `set`.
pub fn write_comparison(mut dir: RunDir, cfg: &ExperimentConfig, set: &EnsembleSet) -> Result<ComparisonReport> {
    let mut manifest = RunManifest::new("compare", cfg);
    let start = Instant::now();
    let report = build_report(cfg, set)?;
    for r in set.iter() {
        manifest.timings.insert(cell_name(r), r.wall_time.as_secs_f64());
        write_ensemble(&mut dir, r)?;
    }
    manifest.timings.insert("report".into(), start.elapsed().as_secs_f64());
    dir.write_json("report.json", &report)?;
    dir.write("fig2.csv", &fig2_csv(&report))?;
    for (name, bytes) in comparison_plots(&report) {
        dir.write(&name, &bytes)?;
    }
    dir.finish(manifest)?;
    Ok(report)
}

/// One sweep axis: `key.path=lo:hi:n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub key: String,
    pub values: Vec<f64>,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::from(crate::config::ConfigErrors(vec![crate::config::Violation::OutOfRange {
                field: format!("--vary {s}"),
                bound: "of the form key.path=lo:hi:n with n >= 1".into(),
            }]))
        };
        let (key, range) = s.split_once('=').ok_or_else(bad)?;
        let parts: Vec<&str> = range.split(':').collect();
        let [lo, hi, n] = parts[..] else { return Err(bad()) };
        let (lo, hi): (f64, f64) = (lo.parse().map_err(|_| bad())?, hi.parse().map_err(|_| bad())?);
        let n: usize = n.parse().map_err(|_| bad())?;
        if n == 0 || key.is_empty() {
            return Err(bad());
        }
        let values = if n == 1 {
            vec![lo]
        } else {
            (0..n).map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect()
        };
        Ok(Self { key: key.to_string(), values })
    }
}

/// JSON literal for a sweep value: integral values print without a fraction
/// so they also fit integer fields such as `bins` or `eitse.count`.
fn json_literal(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 9.0e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Cartesian product of the axes, first axis slowest.
pub fn sweep_points(axes: &[SweepAxis]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter().flat_map(|prefix| axis.values.iter().map(move |&v| [prefix.clone(), vec![v]].concat())).collect()
    })
}

fn sweep(args: &ConfigArgs, out: &OutArgs, vary: &[String]) -> Result<i32> {
    let axes = vary.iter().map(|v| v.parse()).collect::<Result<Vec<SweepAxis>>>()?;
    let base_doc = config_document(args)?;
    let base = validate_config(&base_doc)?;
    let mut top = RunDir::create(&out.out, out.force)?;
    let mut manifest = RunManifest::new("sweep", &base);

    let mut index = String::from("point");
    for a in &axes {
        index.push(',');
        index.push_str(&a.key);
    }
    index.push_str(",config_hash,bi_pattern_clearer,sqm_dark_zones_filled,status\n");
    let mut failures = 0;
    for (k, point) in sweep_points(&axes).iter().enumerate() {
        let name = format!("point_{k:03}");
        let mut doc = base_doc.clone();
        for (a, v) in axes.iter().zip(point) {
            apply_override(&mut doc, &format!("{}={}", a.key, json_literal(*v)))?;
        }
        let start = Instant::now();
        let outcome = validate_config(&doc).and_then(|cfg| {
            let dir = RunDir::create(&out.out.join(&name), out.force)?;
            compare_into(dir, &cfg, workers(args)).map(|r| (cfg.hash(), r.flags))
        });
        manifest.timings.insert(name.clone(), start.elapsed().as_secs_f64());
        let _ = write!(index, "{name}");
        for v in point {
            let _ = write!(index, ",{v}");
        }
        match outcome {
            Ok((hash, flags)) => {
                let _ = writeln!(index, ",{hash},{},{},ok", flags.bi_pattern_clearer, flags.sqm_dark_zones_filled);
            }
            Err(e @ (Error::OutputExists(_) | Error::Io { .. })) => return Err(e),
            Err(e) => {
                failures += 1;
                let msg = e.to_string().replace([',', '\n'], ";");
                let _ = writeln!(index, ",,,,error: {msg}");
            }
        }
    }
    top.write("index.csv", index.as_bytes())?;
    top.finish(manifest)?;
    Ok(if failures == 0 { EXIT_OK } else { EXIT_FAILED })
}
