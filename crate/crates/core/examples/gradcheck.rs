//! Checks every analytic gradient against central differences on random
//! small models.
//!
//! cargo run --example gradcheck -p refgame

use anyhow::Result;
use refgame::gradcheck::{gradcheck, GradCheckConfig};

fn main() -> Result<()> {
    let config = GradCheckConfig {
        seeds: 20,
        ..GradCheckConfig::default()
    };
    let report = gradcheck(&config)?;
    print!("{}", report.to_tsv());
    println!(
        "\nmax relative error {:.2e} (tolerance {:.0e}): {}",
        report.max_rel_err,
        report.tolerance,
        if report.passed() { "pass" } else { "FAIL" }
    );
    Ok(())
}
