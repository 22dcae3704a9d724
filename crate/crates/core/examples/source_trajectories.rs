//! Guided source electrons: a handful of traced paths plus the arrival
//! histogram of a larger ensemble compared with |psi(x, T)|^2.
//!
//! ```text
//! cargo run --release --example source_trajectories -- [count]
//! ```

use pilotwave::analysis::{histogram, l1_distance, visibility, Intensity};
use pilotwave::dynamics::Dynamics;
use pilotwave::montecarlo::{run_ensemble, EnsembleSpec, Interpretation, Population};
use pilotwave::wavefield::Wavefield;
use pilotwave::ExperimentConfig;

fn main() -> pilotwave::Result<()> {
    let mut cfg = ExperimentConfig::reference();
    cfg.source_count = std::env::args().nth(1).map_or(20_000, |a| a.parse().expect("count"));

    let dynamics = Dynamics::new(&cfg);
    println!("{:>8} {:>10} {:>6}  status", "x0", "x(L)", "steps");
    for x0 in [-4.5, -3.5, -3.0, -2.5, -1.0, -0.1, 0.1, 1.0, 2.5, 3.0, 3.5, 4.5] {
        let r = dynamics.integrate_source(x0, true);
        let end = r.arrival_x.map_or("-".to_string(), |x| format!("{x:.3}"));
        println!("{x0:>8.2} {end:>10} {:>6}  {:?}", r.steps, r.status);
    }

    let spec = EnsembleSpec::for_config(&cfg, Interpretation::Bi, Population::Source);
    let res = run_ensemble(&cfg, &spec, std::thread::available_parallelism().map_or(1, |n| n.get()))?;
    let h = histogram(&res.arrivals, &cfg)?;
    let field = Wavefield::new(&cfg);
    let t = cfg.flight_time();
    println!();
    println!("{} electrons, {:?}", cfg.source_count, res.status_counts);
    println!("L1 to Born density  {:.4}", l1_distance(&h, |x| field.born_density(x, t)));
    println!("visibility          {:.4}", visibility(Intensity::Histogram(&h), &cfg)?);
    println!("analytic visibility {:.4}", visibility(Intensity::Analytic, &cfg)?);
    Ok(())
}
