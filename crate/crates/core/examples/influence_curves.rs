//! Influence functions of the estimator and the test, written as CSV for
//! plotting.
//!
//!     cargo run --example influence_curves > if.csv

use sn_mdpde::hypothesis::HypothesisSpec;
use sn_mdpde::robustness::{if_curve, linear_grid, write_curves_csv, IfExtras, IfKind};
use sn_mdpde::skew_normal::SnParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let theta = SnParams::new(0.0, 1.0, 1.0)?;
    let grid = linear_grid(-10.0, 10.0, 0.1)?;
    let extras = IfExtras {
        hypothesis: Some(HypothesisSpec::gamma_equals(1.0)?),
        d: Some([0.0, 0.0, 2.0]),
        tau0: Some(0.05),
    };
    let mut curves = Vec::new();
    for alpha in [0.0, 0.3, 0.5, 1.0] {
        curves.push(if_curve(IfKind::EstimatorIf, &theta, alpha, &grid, &extras)?);
        curves.push(if_curve(IfKind::TestPif, &theta, alpha, &grid, &extras)?);
    }
    for c in curves.iter().filter(|c| c.kind == IfKind::EstimatorIf) {
        let (y, v) = c.sup_norm();
        eprintln!("alpha {}: sup |IF| = {v:.3} at y = {y:.1}", c.alpha);
    }
    write_curves_csv(&curves, std::io::stdout())?;
    Ok(())
}
