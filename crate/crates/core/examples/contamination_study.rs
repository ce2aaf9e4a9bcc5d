//! A small Monte Carlo study: bias and MSE under 10% contamination, then
//! level and power of the symmetry test.

use sn_mdpde::estimation::GdConfig;
use sn_mdpde::montecarlo::{bias_mse_study, level_power_study, ContaminationScheme, SchemePair};
use sn_mdpde::skew_normal::SnParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = GdConfig::default();
    let alphas = [0.0, 0.3, 0.5, 1.0];
    let scheme = ContaminationScheme::new(SnParams::new(0.0, 1.0, 5.0)?, SnParams::new(10.0, 1.0, 5.0)?, 0.1)?;
    let report = bias_mse_study(&scheme, 100, 100, &alphas, &cfg, 1)?;
    report.write_csv(std::io::stdout())?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }

    let pair = SchemePair::pure(SnParams::new(0.0, 1.0, 0.0)?, SnParams::new(0.0, 1.0, 1.0)?);
    let report = level_power_study(&pair, 100, 100, &alphas, 0.0, 0.05, &cfg, 1)?;
    println!();
    report.write_csv(std::io::stdout())?;
    println!("runtime {:.2}s", report.runtime_seconds);
    Ok(())
}
