//! Asymptotic relative efficiency of the MDPDE against the MLE.

use sn_mdpde::asymptotics::are_table_partial;
use sn_mdpde::quadrature::QuadratureSpec;
use sn_mdpde::skew_normal::SnParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let thetas = [SnParams::new(0.0, 1.0, 1.0)?, SnParams::new(0.0, 1.0, 3.0)?, SnParams::new(0.0, 1.0, 0.0)?];
    let alphas = [0.0, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0];
    let table = are_table_partial(&thetas, &alphas, &QuadratureSpec::default())?;
    table.write_csv(std::io::stdout())?;
    // gamma = 0 is a singular point of the information matrix
    for (theta, alpha, msg) in &table.failures {
        eprintln!("undefined at {theta}, alpha={alpha}: {msg}");
    }
    Ok(())
}
