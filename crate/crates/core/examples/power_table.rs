//! Asymptotic power of the symmetry test against contiguous alternatives
//! gamma = d / sqrt(n).

use sn_mdpde::hypothesis::{contiguous_power_with, HypothesisSpec, NuisanceTreatment};
use sn_mdpde::quadrature::QuadratureSpec;
use sn_mdpde::skew_normal::SnParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let theta0 = SnParams::new(0.0, 1.0, 0.0)?;
    let hyp = HypothesisSpec::gamma_equals(0.0)?;
    let alphas = [0.0, 0.1, 0.3, 0.5, 1.0];
    let q = QuadratureSpec::default();
    print!("{:>5}", "d");
    for a in alphas {
        print!("  a={a:<5}");
    }
    println!();
    for d in [1.0, 2.0, 3.0, 4.0, 5.0, 7.0] {
        print!("{d:>5}");
        for a in alphas {
            let r = contiguous_power_with(&theta0, a, &hyp, &[0.0, 0.0, d], 0.05, NuisanceTreatment::Auto, &q)?;
            print!("  {:.5}", r.power);
        }
        println!();
    }
    Ok(())
}
