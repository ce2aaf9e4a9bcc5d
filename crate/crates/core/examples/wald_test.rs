//! Wald-type tests of a composite null on synthetic data.

use sn_mdpde::estimation::GdConfig;
use sn_mdpde::hypothesis::{wald_test, HypothesisSpec};
use sn_mdpde::skew_normal::{sample, SnParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = sample(&SnParams::new(72.5, 3.0, 2.0)?, 250, 4)?;
    let cfg = GdConfig::default();
    for text in ["mu=72", "sigma=3", "gamma=2", "gamma=0"] {
        let hyp = HypothesisSpec::parse(text)?;
        println!("H0: {text}");
        for alpha in [0.0, 0.3, 0.5, 1.0] {
            let t = wald_test(&data, alpha, &hyp, &cfg)?;
            println!("  alpha {alpha:<4} W = {:>10.4}  p = {:.4e}  reject at 5%: {}", t.statistic, t.p_value, t.rejects(0.05));
        }
    }
    Ok(())
}
