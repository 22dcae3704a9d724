//! Inserted electrons without guidance: straight-line transport, uniform
//! background at the detector, and how much it washes out the fringes.

use pilotwave::analysis::{dark_zone_fill, histogram, uniformity_chi_square, visibility, Intensity};
use pilotwave::montecarlo::{run_ensemble, EnsembleSpec, Interpretation, Population};
use pilotwave::ExperimentConfig;

fn main() -> pilotwave::Result<()> {
    let cfg = ExperimentConfig::reference();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let run = |p| run_ensemble(&cfg, &EnsembleSpec::for_config(&cfg, Interpretation::Sqm, p), workers);
    let source = histogram(&run(Population::Source)?.arrivals, &cfg)?;
    let inserted = histogram(&run(Population::Inserted)?.arrivals, &cfg)?;

    let chi = uniformity_chi_square(&inserted)?;
    let fill = dark_zone_fill(&inserted, &cfg);
    println!("chi-square {:.1} on {} dof, p = {:.3}", chi.statistic, chi.dof, chi.p_value);
    println!("dark fraction {:.4} (uniform {:.4})", fill.dark_fraction, fill.uniform_expected);
    println!("visibility source only {:.4}", visibility(Intensity::Histogram(&source), &cfg)?);
    println!("visibility combined    {:.4}", visibility(Intensity::Histogram(&source.combined(&inserted)), &cfg)?);
    Ok(())
}
