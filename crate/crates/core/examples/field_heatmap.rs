//! Samples Q, the density or the guidance speed over the slit-to-detector
//! rectangle and writes a CSV plus a grayscale PGM next to it.
//!
//! ```text
//! cargo run --release --example field_heatmap -- [Q|density|speed] [out_stem]
//! ```

use std::fs;

use pilotwave::wavefield::{Quantity, Wavefield};
use pilotwave::ExperimentConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let quantity: Quantity = args.next().as_deref().unwrap_or("Q").parse()?;
    let stem = args.next().unwrap_or_else(|| format!("field_{}", quantity.label()));

    let cfg = ExperimentConfig::reference();
    let grid = Wavefield::new(&cfg).dump_field(quantity, 401, 201);
    let mut csv = Vec::new();
    grid.write_csv(&mut csv)?;
    fs::write(format!("{stem}.csv"), csv)?;
    fs::write(format!("{stem}.pgm"), grid.to_pgm())?;

    let finite: Vec<f64> = grid.values.iter().copied().filter(|v| v.is_finite()).collect();
    let (lo, hi) = finite.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    println!("{} on {}x{} grid: min {lo:.4e}, max {hi:.4e}", quantity.label(), grid.nx(), grid.nz());
    println!("masked near nodes: {:.2}%", 100.0 * grid.masked_fraction());
    println!("wrote {stem}.csv and {stem}.pgm");
    Ok(())
}
