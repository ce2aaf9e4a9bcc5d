//! Simulation studies: contaminated samples, bias/MSE of the estimators,
//! level and power of the Wald-type tests, and the relative-difference metric.

use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{fit, FitResult, GdConfig};
use crate::hypothesis::symmetry_test_from_fit;
use crate::sample::{quantile_sorted, Sample};
use crate::skew_normal::{draw, SnParams};

/// Fraction of failed fits above which a study carries a warning.
pub const FAILURE_WARNING_RATE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Exactly `floor(ε n)` contaminant draws.
    DeterministicCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContaminationScheme {
    pub base: SnParams,
    pub contaminant: SnParams,
    pub epsilon: f64,
    pub placement: Placement,
}

impl ContaminationScheme {
    pub fn new(base: SnParams, contaminant: SnParams, epsilon: f64) -> Result<Self> {
        let s = Self {
            base,
            contaminant,
            epsilon,
            placement: Placement::DeterministicCount,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn pure(base: SnParams) -> Self {
        Self {
            base,
            contaminant: base,
            epsilon: 0.0,
            placement: Placement::DeterministicCount,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        self.contaminant.validate()?;
        if !(0.0..0.5).contains(&self.epsilon) {
            return Err(Error::Config(format!("epsilon must lie in [0, 0.5), got {}", self.epsilon)));
        }
        Ok(())
    }

    pub fn contaminated_count(&self, n: usize) -> usize {
        (self.epsilon * n as f64 + 1e-9).floor() as usize
    }
}

fn draw_contaminated(scheme: &ContaminationScheme, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let k = scheme.contaminated_count(n);
    let mut v = draw(&scheme.base, n - k, rng)?;
    v.extend(draw(&scheme.contaminant, k, rng)?);
    v.shuffle(rng);
    Ok(v)
}

/// `n − ⌊εn⌋` base draws and `⌊εn⌋` contaminant draws, shuffled.
pub fn contaminated_sample(scheme: &ContaminationScheme, n: usize, seed: u64) -> Result<Sample> {
    scheme.validate()?;
    if n < 2 {
        return Err(Error::Config(format!("sample size must be at least 2, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Sample::new(
        draw_contaminated(scheme, n, &mut rng)?,
        format!("eps={}", scheme.epsilon),
        format!("simulated {} + {} (seed {seed})", scheme.base, scheme.contaminant),
    )
}

/// Seed of replication `index`: the first word of stream `index` of the
/// master generator.
pub fn replication_seed(master: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index as u64);
    rng.next_u64()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasMseCell {
    pub alpha: f64,
    pub parameter: String,
    pub bias: f64,
    pub mse: f64,
    pub successes: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelPowerCell {
    pub alpha: f64,
    pub level: f64,
    pub power: f64,
    pub level_successes: usize,
    pub power_successes: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Metrics {
    BiasMse { cells: Vec<BiasMseCell> },
    LevelPower { cells: Vec<LevelPowerCell> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub design: String,
    pub n: usize,
    pub replications: usize,
    pub alpha_grid: Vec<f64>,
    /// The data-generating scheme; for level/power studies the null scheme.
    pub scheme: ContaminationScheme,
    /// Alternative scheme of a level/power study.
    pub alt_scheme: Option<ContaminationScheme>,
    pub metrics: Metrics,
    pub seeds: Vec<u64>,
    pub runtime_seconds: f64,
    pub warnings: Vec<String>,
}

/// Replication scheduling; results are identical either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

fn check_study(reps: usize, n: usize, alpha_grid: &[f64]) -> Result<()> {
    if reps < 2 {
        return Err(Error::Config(format!("need at least 2 replications, got {reps}")));
    }
    if n < 2 {
        return Err(Error::Config(format!("sample size must be at least 2, got {n}")));
    }
    if alpha_grid.is_empty() || alpha_grid.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
        return Err(Error::Config("alpha grid must be nonempty with values >= 0".into()));
    }
    Ok(())
}

fn run_reps<T, F>(reps: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        Execution::Parallel => (0..reps).into_par_iter().map(&f).collect(),
        Execution::Sequential => (0..reps).map(f).collect(),
    }
}

/// A fit counts only when it succeeded and converged.
fn usable(r: Result<FitResult>) -> Option<FitResult> {
    r.ok().filter(|f| f.converged)
}

fn failure_warning(what: &str, failures: usize, attempts: usize) -> Option<String> {
    (attempts > 0 && failures as f64 > FAILURE_WARNING_RATE * attempts as f64)
        .then(|| format!("{what}: {failures} of {attempts} fits failed or did not converge"))
}

pub fn bias_mse_study(
    scheme: &ContaminationScheme,
    n: usize,
    reps: usize,
    alpha_grid: &[f64],
    fit_cfg: &GdConfig,
    seed: u64,
) -> Result<SimulationReport> {
    bias_mse_study_with(scheme, n, reps, alpha_grid, fit_cfg, seed, Execution::Parallel)
}

/// Bias and MSE of `θ̂` against `scheme.base`, per α and parameter, over
/// `reps` replications. Failed or non-converged fits are dropped and counted.
pub fn bias_mse_study_with(
    scheme: &ContaminationScheme,
    n: usize,
    reps: usize,
    alpha_grid: &[f64],
    fit_cfg: &GdConfig,
    seed: u64,
    exec: Execution,
) -> Result<SimulationReport> {
    scheme.validate()?;
    check_study(reps, n, alpha_grid)?;
    fit_cfg.validate()?;
    let start = Instant::now();
    let seeds: Vec<u64> = (0..reps).map(|i| replication_seed(seed, i)).collect();
    let per_rep: Vec<Vec<Option<[f64; 3]>>> = run_reps(reps, exec, |i| {
        let Ok(data) = contaminated_sample(scheme, n, seeds[i]) else {
            return vec![None; alpha_grid.len()];
        };
        alpha_grid
            .iter()
            .map(|&a| usable(fit(&data, a, fit_cfg, None)).map(|f| f.params.to_array()))
            .collect()
    });
    let truth = scheme.base.to_array();
    let mut cells = Vec::new();
    let mut warnings = Vec::new();
    for (ai, &alpha) in alpha_grid.iter().enumerate() {
        let ok: Vec<[f64; 3]> = per_rep.iter().filter_map(|r| r[ai]).collect();
        let failures = reps - ok.len();
        warnings.extend(failure_warning(&format!("alpha={alpha}"), failures, reps));
        for (k, name) in ["mu", "sigma", "gamma"].iter().enumerate() {
            let m = ok.len() as f64;
            let (bias, mse) = if ok.is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                (
                    ok.iter().map(|e| e[k] - truth[k]).sum::<f64>() / m,
                    ok.iter().map(|e| (e[k] - truth[k]).powi(2)).sum::<f64>() / m,
                )
            };
            cells.push(BiasMseCell {
                alpha,
                parameter: name.to_string(),
                bias,
                mse,
                successes: ok.len(),
                failures,
            });
        }
    }
    Ok(SimulationReport {
        design: format!(
            "bias/MSE: base {}, contaminant {}, eps={}",
            scheme.base, scheme.contaminant, scheme.epsilon
        ),
        n,
        replications: reps,
        alpha_grid: alpha_grid.to_vec(),
        scheme: *scheme,
        alt_scheme: None,
        metrics: Metrics::BiasMse { cells },
        seeds,
        runtime_seconds: start.elapsed().as_secs_f64(),
        warnings,
    })
}

/// Null and alternative data-generating schemes of a level/power study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemePair {
    pub null: ContaminationScheme,
    pub alt: ContaminationScheme,
}

impl SchemePair {
    /// Uncontaminated null and alternative.
    pub fn pure(null_theta: SnParams, alt_theta: SnParams) -> Self {
        Self {
            null: ContaminationScheme::pure(null_theta),
            alt: ContaminationScheme::pure(alt_theta),
        }
    }

    /// `ε` contamination of the null by `null_contaminant` and of the
    /// alternative by `alt_contaminant`.
    pub fn contaminated(
        null_theta: SnParams,
        alt_theta: SnParams,
        null_contaminant: SnParams,
        alt_contaminant: SnParams,
        epsilon: f64,
    ) -> Result<Self> {
        Ok(Self {
            null: ContaminationScheme::new(null_theta, null_contaminant, epsilon)?,
            alt: ContaminationScheme::new(alt_theta, alt_contaminant, epsilon)?,
        })
    }
}

#[allow(clippy::too_many_arguments)]
pub fn level_power_study(
    schemes: &SchemePair,
    n: usize,
    reps: usize,
    alpha_grid: &[f64],
    gamma0: f64,
    tau0: f64,
    fit_cfg: &GdConfig,
    seed: u64,
) -> Result<SimulationReport> {
    level_power_study_with(schemes, n, reps, alpha_grid, gamma0, tau0, fit_cfg, seed, Execution::Parallel)
}

/// Rejection rates of the test of `γ = γ₀` at level `τ₀` under the null and
/// alternative schemes. Replication `i` uses the same seed for both.
#[allow(clippy::too_many_arguments)]
pub fn level_power_study_with(
    schemes: &SchemePair,
    n: usize,
    reps: usize,
    alpha_grid: &[f64],
    gamma0: f64,
    tau0: f64,
    fit_cfg: &GdConfig,
    seed: u64,
    exec: Execution,
) -> Result<SimulationReport> {
    schemes.null.validate()?;
    schemes.alt.validate()?;
    check_study(reps, n, alpha_grid)?;
    fit_cfg.validate()?;
    if !(tau0 > 0.0 && tau0 < 1.0) {
        return Err(Error::Config(format!("tau0 must lie in (0, 1), got {tau0}")));
    }
    let start = Instant::now();
    let seeds: Vec<u64> = (0..reps).map(|i| replication_seed(seed, i)).collect();
    let decide = |scheme: &ContaminationScheme, s: u64| -> Vec<Option<bool>> {
        let Ok(data) = contaminated_sample(scheme, n, s) else {
            return vec![None; alpha_grid.len()];
        };
        alpha_grid
            .iter()
            .map(|&a| {
                let f = usable(fit(&data, a, fit_cfg, None))?;
                symmetry_test_from_fit(f, n, gamma0).ok().map(|t| t.p_value < tau0)
            })
            .collect()
    };
    let per_rep: Vec<(Vec<Option<bool>>, Vec<Option<bool>>)> =
        run_reps(reps, exec, |i| (decide(&schemes.null, seeds[i]), decide(&schemes.alt, seeds[i])));
    let mut cells = Vec::new();
    let mut warnings = Vec::new();
    for (ai, &alpha) in alpha_grid.iter().enumerate() {
        let rate = |pick: &dyn Fn(&(Vec<Option<bool>>, Vec<Option<bool>>)) -> Option<bool>| {
            let ok: Vec<bool> = per_rep.iter().filter_map(pick).collect();
            let r = ok.iter().filter(|b| **b).count() as f64 / ok.len().max(1) as f64;
            (if ok.is_empty() { f64::NAN } else { r }, ok.len())
        };
        let (level, ls) = rate(&|r| r.0[ai]);
        let (power, ps) = rate(&|r| r.1[ai]);
        let failures = 2 * reps - ls - ps;
        warnings.extend(failure_warning(&format!("alpha={alpha}"), failures, 2 * reps));
        cells.push(LevelPowerCell {
            alpha,
            level,
            power,
            level_successes: ls,
            power_successes: ps,
            failures,
        });
    }
    Ok(SimulationReport {
        design: format!(
            "level/power of gamma={gamma0} at tau0={tau0}: null {} (+{} eps={}), alt {} (+{} eps={})",
            schemes.null.base,
            schemes.null.contaminant,
            schemes.null.epsilon,
            schemes.alt.base,
            schemes.alt.contaminant,
            schemes.alt.epsilon
        ),
        n,
        replications: reps,
        alpha_grid: alpha_grid.to_vec(),
        scheme: schemes.null,
        alt_scheme: Some(schemes.alt),
        metrics: Metrics::LevelPower { cells },
        seeds,
        runtime_seconds: start.elapsed().as_secs_f64(),
        warnings,
    })
}

impl SimulationReport {
    pub fn bias_mse(&self, alpha: f64, parameter: usize) -> Option<&BiasMseCell> {
        match &self.metrics {
            Metrics::BiasMse { cells } => cells
                .iter()
                .filter(|c| c.alpha == alpha)
                .nth(parameter),
            _ => None,
        }
    }

    pub fn level_power(&self, alpha: f64) -> Option<&LevelPowerCell> {
        match &self.metrics {
            Metrics::LevelPower { cells } => cells.iter().find(|c| c.alpha == alpha),
            _ => None,
        }
    }

    /// Table layout: bias/MSE rows `epsilon,parameter,bias_<α>…,mse_<α>…`;
    /// level/power rows `quantity,n,epsilon,<α>…`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let num = crate::format::fmt_num;
        match &self.metrics {
            Metrics::BiasMse { cells } => {
                let mut header = vec!["epsilon".to_string(), "parameter".to_string()];
                header.extend(self.alpha_grid.iter().map(|a| format!("bias_{a}")));
                header.extend(self.alpha_grid.iter().map(|a| format!("mse_{a}")));
                wtr.write_record(&header)?;
                for name in ["mu", "sigma", "gamma"] {
                    let row: Vec<&BiasMseCell> = self
                        .alpha_grid
                        .iter()
                        .map(|a| cells.iter().find(|c| c.alpha == *a && c.parameter == name).unwrap())
                        .collect();
                    let mut rec = vec![format!("{}", self.scheme.epsilon), name.to_string()];
                    rec.extend(row.iter().map(|c| num(c.bias)));
                    rec.extend(row.iter().map(|c| num(c.mse)));
                    wtr.write_record(&rec)?;
                }
            }
            Metrics::LevelPower { cells } => {
                let mut header = vec!["quantity".to_string(), "n".to_string(), "epsilon".to_string()];
                header.extend(self.alpha_grid.iter().map(|a| format!("{a}")));
                wtr.write_record(&header)?;
                for (label, get) in [
                    ("level", (|c: &LevelPowerCell| c.level) as fn(&LevelPowerCell) -> f64),
                    ("power", |c: &LevelPowerCell| c.power),
                ] {
                    let mut rec = vec![label.to_string(), self.n.to_string(), format!("{}", self.scheme.epsilon)];
                    rec.extend(cells.iter().map(|c| num(get(c))));
                    wtr.write_record(&rec)?;
                }
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Smallest `|ν̂_full|` for which a relative difference is computed.
pub const RD_GUARD: f64 = 1e-8;

/// `|ν̂_full − ν̂_clean| / |ν̂_full| × 100` per parameter. Components whose
/// full-data estimate is below [`RD_GUARD`] in magnitude are reported as
/// `+∞` (flagged).
pub fn relative_difference(fit_full: &FitResult, fit_clean: &FitResult) -> Result<[f64; 3]> {
    if fit_full.alpha != fit_clean.alpha {
        return Err(Error::Config(format!(
            "fits use different alpha ({} vs {})",
            fit_full.alpha, fit_clean.alpha
        )));
    }
    let a = fit_full.params.to_array();
    let b = fit_clean.params.to_array();
    Ok([0, 1, 2].map(|k| {
        if a[k].abs() < RD_GUARD {
            f64::INFINITY
        } else {
            (a[k] - b[k]).abs() / a[k].abs() * 100.0
        }
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilteredSample {
    pub sample: Sample,
    /// Indices (into the input) of removed points, increasing.
    pub removed: Vec<usize>,
    pub lower_fence: f64,
    pub upper_fence: f64,
}

/// Drops points outside `[Q1 − 1.5 IQR, Q3 + 1.5 IQR]` (type-7 quartiles).
pub fn outlier_filter_boxplot(data: &Sample) -> Result<FilteredSample> {
    if data.len() < 5 {
        return Err(Error::Data(format!("boxplot filter needs at least 5 points, got {}", data.len())));
    }
    let mut sorted = data.values().to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q1 = quantile_sorted(&sorted, 0.25);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    let (lo, hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let mut kept = Vec::with_capacity(data.len());
    let mut removed = Vec::new();
    for (i, &x) in data.values().iter().enumerate() {
        if x < lo || x > hi {
            removed.push(i);
        } else {
            kept.push(x);
        }
    }
    if kept.is_empty() {
        return Err(Error::Data("every observation lies outside the boxplot fences".into()));
    }
    Ok(FilteredSample {
        sample: Sample::new(kept, data.label.clone(), format!("{} (boxplot-filtered)", data.source))?,
        removed,
        lower_fence: lo,
        upper_fence: hi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::fit_gd;

    fn p(mu: f64, sigma: f64, gamma: f64) -> SnParams {
        SnParams::new(mu, sigma, gamma).unwrap()
    }

    #[test]
    fn contamination_counts_and_determinism() {
        let base = p(0.0, 1.0, 5.0);
        let pure = contaminated_sample(&ContaminationScheme::pure(base), 50, 4).unwrap();
        assert_eq!(pure.len(), 50);
        let s = ContaminationScheme::new(base, p(100.0, 1.0, 5.0), 0.1).unwrap();
        assert_eq!(s.contaminated_count(100), 10);
        let x = contaminated_sample(&s, 100, 1).unwrap();
        assert_eq!(x.values().iter().filter(|v| **v > 50.0).count(), 10);
        assert_eq!(x, contaminated_sample(&s, 100, 1).unwrap());
        assert_ne!(x, contaminated_sample(&s, 100, 2).unwrap());
        assert!(ContaminationScheme::new(base, base, 0.5).is_err());
        assert!(contaminated_sample(&s, 1, 0).is_err());
    }

    #[test]
    fn mixture_mean_is_bracketed() {
        let s = ContaminationScheme::new(p(0.0, 1.0, 5.0), p(10.0, 1.0, 5.0), 0.1).unwrap();
        let m = contaminated_sample(&s, 10_000, 3).unwrap().mean();
        assert!(m > 0.79 && m < 10.8);
    }

    #[test]
    fn replication_seeds_are_distinct() {
        let seeds: Vec<u64> = (0..100).map(|i| replication_seed(7, i)).collect();
        let mut d = seeds.clone();
        d.sort();
        d.dedup();
        assert_eq!(d.len(), 100);
        assert_eq!(seeds[3], replication_seed(7, 3));
    }

    #[test]
    fn smoke_study_satisfies_jensen_and_is_reproducible() {
        let s = ContaminationScheme::new(p(0.0, 1.0, 5.0), p(10.0, 1.0, 5.0), 0.1).unwrap();
        let cfg = GdConfig::default();
        let a = bias_mse_study_with(&s, 50, 4, &[0.0, 0.5], &cfg, 9, Execution::Sequential).unwrap();
        let b = bias_mse_study_with(&s, 50, 4, &[0.0, 0.5], &cfg, 9, Execution::Parallel).unwrap();
        assert_eq!(format!("{:?}", a.metrics), format!("{:?}", b.metrics));
        if let Metrics::BiasMse { cells } = &a.metrics {
            assert_eq!(cells.len(), 6);
            for c in cells.iter().filter(|c| c.successes > 0) {
                assert!(c.mse >= c.bias * c.bias - 1e-12);
            }
        }
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("epsilon,parameter,bias_0,bias_0.5,mse_0,mse_0.5\n"));
        assert_eq!(text.lines().count(), 4);
        assert!(bias_mse_study(&s, 50, 1, &[0.5], &cfg, 0).is_err());
    }

    #[test]
    fn level_power_smoke() {
        let pair = SchemePair::pure(p(0.0, 1.0, 0.0), p(0.0, 1.0, 1.0));
        let r = level_power_study(&pair, 50, 3, &[0.5], 0.0, 0.05, &GdConfig::default(), 1).unwrap();
        let c = r.level_power(0.5).unwrap();
        assert!((0.0..=1.0).contains(&c.level) && (0.0..=1.0).contains(&c.power));
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("quantity,n,epsilon,0.5\nlevel,50,0,"));
    }

    #[test]
    fn relative_difference_arithmetic_and_guard() {
        let data = crate::skew_normal::sample(&p(2.0, 1.0, 1.0), 80, 3).unwrap();
        let f = fit_gd(&data, 0.5, &GdConfig::default(), None).unwrap();
        assert_eq!(relative_difference(&f, &f).unwrap(), [0.0; 3]);
        let mut full = f.clone();
        let mut clean = f.clone();
        full.params = p(2.0, 1.0, 1e-12);
        clean.params = p(1.0, 1.5, 0.3);
        let rd = relative_difference(&full, &clean).unwrap();
        assert_eq!(rd[0], 50.0);
        assert_eq!(rd[1], 50.0);
        assert!(rd[2].is_infinite());
        clean.alpha = 0.3;
        assert!(relative_difference(&full, &clean).is_err());
    }

    #[test]
    fn boxplot_filter() {
        let mut v = vec![0.0; 20];
        v.push(100.0);
        let r = outlier_filter_boxplot(&Sample::from_values(v).unwrap()).unwrap();
        assert_eq!(r.removed, vec![20]);
        assert_eq!(r.sample.len(), 20);
        let clean = Sample::from_values((0..50).map(|i| i as f64).collect()).unwrap();
        assert_eq!(outlier_filter_boxplot(&clean).unwrap().sample.values(), clean.values());
        assert!(outlier_filter_boxplot(&Sample::from_values(vec![1.0, 2.0]).unwrap()).is_err());
        let normal = crate::skew_normal::sample(&p(0.0, 1.0, 0.0), 10_000, 5).unwrap();
        let frac = outlier_filter_boxplot(&normal).unwrap().removed.len() as f64 / 100.0;
        assert!((frac - 0.7).abs() < 0.4, "{frac}%");
    }
}
