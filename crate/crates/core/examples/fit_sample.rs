//! Fits a contaminated skew-normal sample by maximum likelihood and by the
//! MDPDE at several alphas.
//!
//!     cargo run --example fit_sample

use sn_mdpde::estimation::{fit, GdConfig};
use sn_mdpde::montecarlo::{contaminated_sample, ContaminationScheme};
use sn_mdpde::skew_normal::SnParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth = SnParams::new(0.0, 1.0, 5.0)?;
    let scheme = ContaminationScheme::new(truth, SnParams::new(10.0, 1.0, 5.0)?, 0.1)?;
    let data = contaminated_sample(&scheme, 200, 11)?;
    println!("truth {truth}, n = {}, 10% of points near 10", data.len());
    println!("{:>5}  {:>9} {:>9} {:>9}  {:>8} {:>8} {:>8}  conv", "alpha", "mu", "sigma", "gamma", "se_mu", "se_sig", "se_gam");
    for alpha in [0.0, 0.1, 0.3, 0.5, 0.7, 1.0] {
        let f = fit(&data, alpha, &GdConfig::default(), None)?;
        let [mu, sigma, gamma] = f.params.to_array();
        let [a, b, c] = f.std_errors;
        println!("{alpha:>5}  {mu:>9.4} {sigma:>9.4} {gamma:>9.3}  {a:>8.4} {b:>8.4} {c:>8.3}  {}", f.converged);
        for w in &f.warnings {
            println!("       warning: {w}");
        }
    }
    Ok(())
}
