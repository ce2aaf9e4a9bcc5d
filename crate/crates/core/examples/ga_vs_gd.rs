//! Genetic algorithm against gradient descent on the same objective.

use sn_mdpde::estimation::{fit_ga_traced, fit_gd, GaConfig, GdConfig};
use sn_mdpde::skew_normal::{sample, SnParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = sample(&SnParams::new(2.0, 1.5, -3.0)?, 300, 8)?;
    let alpha = 0.5;
    let gd = fit_gd(&data, alpha, &GdConfig::default(), None)?;
    let (ga, trace) = fit_ga_traced(&data, alpha, &GaConfig::default())?;
    println!("GD  {}  H = {:.10}  ({} iterations)", gd.params, gd.objective_value, gd.iterations);
    println!("GA  {}  H = {:.10}  ({} generations)", ga.params, ga.objective_value, trace.best_per_generation.len());
    println!("GA best before polishing: {}", trace.best_individual);
    for (g, h) in trace.best_per_generation.iter().enumerate().step_by(50).take(10) {
        println!("  generation {g:>4}: {h:.10}");
    }
    Ok(())
}
