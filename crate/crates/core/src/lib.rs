//! Double-slit pilot-wave simulator with externally inserted slow electrons.
//!
//! A continuous two-slit electron beam is modelled by a closed-form free
//! Gaussian wavefield. Extra slow electrons are inserted between the slits and
//! the detector and followed under two readings of quantum mechanics:
//!
//! * **BI** (Bohmian): source electrons ride the guidance law, inserted
//!   electrons are pushed around by the quantum potential of the beam.
//! * **SQM** (Born rule): source electrons land per `|ψ|²`, inserted electrons
//!   fly straight and add an uncorrelated background.
//!
//! [`analysis::build_report`] turns the four resulting ensembles into fringe
//! visibilities, dark-zone occupancy and a verdict for each reading.
//!
//! ```no_run
//! use pilotwave::{analysis, config::ExperimentConfig, montecarlo};
//!
//! let cfg = ExperimentConfig::reference();
//! let runs = montecarlo::run_all(&cfg, 4).unwrap();
//! let report = analysis::build_report(&cfg, &runs).unwrap();
//! println!("BI pattern clearer: {}", report.flags.bi_pattern_clearer);
//! ```

pub mod analysis;
pub mod checks;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod integrator;
pub mod montecarlo;
pub mod output;
pub mod spectral;
pub mod wavefield;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
