//! Full four-ensemble comparison written to a run directory, the same
//! output as `pilotwave compare`.
//!
//! ```text
//! cargo run --release --example compare_interpretations -- [out_dir] [eitse_count]
//! ```

use std::path::PathBuf;

use pilotwave::cli::compare_into;
use pilotwave::output::RunDir;
use pilotwave::ExperimentConfig;

fn main() -> pilotwave::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "compare-out".into()));
    let mut cfg = ExperimentConfig::reference();
    if let Some(n) = args.next() {
        cfg.eitse.count = n.parse().expect("eitse count");
    }
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let report = compare_into(RunDir::create(&out, true)?, &cfg, workers)?;

    println!("config {}", report.config_hash);
    let f = report.fringes;
    println!("fringes: max {:.2}, min {:.2}, secondary {:?}", f.central_max, f.first_min, f.secondary_max);
    println!("{:<28}{:.4}", "visibility source only", report.visibility_source_only);
    println!("{:<28}{:.4}", "visibility bi combined", report.visibility_bi_combined);
    println!("{:<28}{:.4}", "visibility sqm combined", report.visibility_sqm_combined);
    println!("{:<28}{:.4} (uniform {:.4})", "bi inserted dark fraction", report.dark_fraction_bi_inserted, report.dark_fraction_uniform_expected);
    if let Some(p) = report.uniformity_p_sqm_inserted {
        println!("{:<28}{p:.4}", "sqm inserted uniformity p");
    }
    println!("bi pattern clearer: {}", report.flags.bi_pattern_clearer);
    println!("sqm dark zones filled: {}", report.flags.sqm_dark_zones_filled);
    println!("written to {}", out.display());
    Ok(())
}
