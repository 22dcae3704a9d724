//! Inserted slow electrons under Bohmian dynamics.
//!
//! Runs the BI inserted ensemble and reports where the electrons end up
//! relative to the dark fringes of the source pattern.
//!
//! ```text
//! cargo run --release --example eitse_bi -- [v_x0] [v_z0] [count] [z_min z_max]
//! ```

use pilotwave::analysis::{dark_zone_fill, histogram};
use pilotwave::montecarlo::{run_ensemble, EnsembleSpec, Interpretation, Population};
use pilotwave::ExperimentConfig;

fn main() -> pilotwave::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("numeric argument")).collect();
    let mut cfg = ExperimentConfig::reference();
    if let Some(&v) = args.first() {
        cfg.eitse.insertion_velocity.v_x0 = v;
    }
    if let Some(&v) = args.get(1) {
        cfg.eitse.insertion_velocity.v_z0 = v;
    }
    if let Some(&n) = args.get(2) {
        cfg.eitse.count = n as u64;
    }
    if let [.., z_min, z_max] = args[..] {
        if args.len() == 5 {
            cfg.eitse.insertion_region.z_min = z_min;
            cfg.eitse.insertion_region.z_max = z_max;
        }
    }
    let spec = EnsembleSpec::for_config(&cfg, Interpretation::Bi, Population::Inserted);
    let res = run_ensemble(&cfg, &spec, std::thread::available_parallelism().map_or(1, |n| n.get()))?;
    let fill = dark_zone_fill(&histogram(&res.arrivals, &cfg)?, &cfg);
    let v = cfg.eitse.insertion_velocity;
    println!("velocity       ({}, {})", v.v_x0, v.v_z0);
    println!("status         {:?}", res.status_counts);
    println!("dark fraction  {:.4}", fill.dark_fraction);
    println!("uniform share  {:.4}", fill.uniform_expected);
    println!("ratio          {:.4}", fill.dark_fraction / fill.uniform_expected);
    println!("wall time      {:.2?}", res.wall_time);
    Ok(())
}
