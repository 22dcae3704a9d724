//! BI dark-zone fill of the inserted electrons across insertion speeds.
//!
//! ```text
//! cargo run --release --example sweep_velocity -- [count]
//! ```

use pilotwave::analysis::{dark_zone_fill, histogram};
use pilotwave::cli::{sweep_points, SweepAxis};
use pilotwave::montecarlo::{run_ensemble, EnsembleSpec, Interpretation, Population};
use pilotwave::ExperimentConfig;

fn main() -> pilotwave::Result<()> {
    let count = std::env::args().nth(1).map_or(1000, |a| a.parse().expect("count"));
    let axis: SweepAxis = "eitse.insertion_velocity.v_z0=0.05:1.05:5".parse().expect("axis");
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    println!("{:>6} {:>8} {:>8} {:>8}", "v_z0", "arrived", "dark", "ratio");
    for point in sweep_points(std::slice::from_ref(&axis)) {
        let mut cfg = ExperimentConfig::reference();
        cfg.eitse.count = count;
        cfg.eitse.insertion_velocity.v_z0 = point[0];
        let spec = EnsembleSpec::for_config(&cfg, Interpretation::Bi, Population::Inserted);
        let res = run_ensemble(&cfg, &spec, workers)?;
        let fill = dark_zone_fill(&histogram(&res.arrivals, &cfg)?, &cfg);
        println!(
            "{:>6.2} {:>8} {:>8.4} {:>8.4}",
            point[0],
            res.status_counts.arrived,
            fill.dark_fraction,
            fill.dark_fraction / fill.uniform_expected
        );
    }
    Ok(())
}
