//! Wald-type tests built on the MDPDE, chi-square tail machinery and
//! asymptotic contiguous power.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;

use crate::asymptotics::{covariance, AsymptoticCovariance, CONDITION_LIMIT};
use crate::error::{Error, Result};
use crate::estimation::{fit, FitResult, GdConfig};
use crate::linalg;
use crate::quadrature::QuadratureSpec;
use crate::sample::Sample;
use crate::skew_normal::SnParams;

type Restriction = dyn Fn(&SnParams) -> Vec<f64> + Send + Sync;
type Jacobian = dyn Fn(&SnParams) -> Vec<Vec<f64>> + Send + Sync;

/// Composite null `m(θ) = 0` with `r` restrictions and Jacobian
/// `M(θ) = ∂mᵀ/∂θ` (3 × r).
#[derive(Clone)]
pub struct HypothesisSpec {
    restriction: Arc<Restriction>,
    jacobian: Arc<Jacobian>,
    pub r: usize,
    pub description: String,
}

impl fmt::Debug for HypothesisSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HypothesisSpec")
            .field("r", &self.r)
            .field("description", &self.description)
            .finish()
    }
}

const NAMES: [&str; 3] = ["mu", "sigma", "gamma"];

impl HypothesisSpec {
    pub fn new<M, J>(r: usize, description: impl Into<String>, restriction: M, jacobian: J) -> Result<Self>
    where
        M: Fn(&SnParams) -> Vec<f64> + Send + Sync + 'static,
        J: Fn(&SnParams) -> Vec<Vec<f64>> + Send + Sync + 'static,
    {
        if !(1..=3).contains(&r) {
            return Err(Error::Config(format!("number of restrictions must be 1, 2 or 3, got {r}")));
        }
        Ok(Self {
            restriction: Arc::new(restriction),
            jacobian: Arc::new(jacobian),
            r,
            description: description.into(),
        })
    }

    /// `θ_k = value` with the other two parameters free (`k` is 0-based).
    pub fn parameter_equals(k: usize, value: f64) -> Result<Self> {
        if k > 2 {
            return Err(Error::Domain(format!("parameter index {k} out of range")));
        }
        Self::new(
            1,
            format!("{}={value}", NAMES[k]),
            move |t| vec![t.to_array()[k] - value],
            move |_| (0..3).map(|i| vec![if i == k { 1.0 } else { 0.0 }]).collect(),
        )
    }

    pub fn gamma_equals(gamma0: f64) -> Result<Self> {
        Self::parameter_equals(2, gamma0)
    }

    /// Simple null `θ = θ₀`.
    pub fn point(theta0: SnParams) -> Result<Self> {
        let t0 = theta0.to_array();
        Self::new(
            3,
            format!("theta={theta0}"),
            move |t| {
                let v = t.to_array();
                (0..3).map(|k| v[k] - t0[k]).collect()
            },
            |_| (0..3).map(|i| (0..3).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect(),
        )
    }

    /// Parses `gamma=<v>`, `sigma=<v>` or `mu=<v>`.
    pub fn parse(text: &str) -> Result<Self> {
        let (name, value) = text
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("hypothesis '{text}' is not of the form name=value")))?;
        let k = NAMES
            .iter()
            .position(|n| *n == name.trim())
            .ok_or_else(|| Error::Config(format!("unknown parameter '{}' in hypothesis", name.trim())))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("cannot parse '{}' as a number", value.trim())))?;
        if !v.is_finite() || (k == 1 && v <= 0.0) {
            return Err(Error::Config(format!("invalid null value {v} for {}", NAMES[k])));
        }
        Self::parameter_equals(k, v)
    }

    /// Reparameterized restriction `A m(θ)` with Jacobian `M Aᵀ`.
    pub fn transformed(&self, a: Vec<Vec<f64>>) -> Result<Self> {
        let r = self.r;
        if a.len() != r || a.iter().any(|row| row.len() != r) {
            return Err(Error::Domain(format!("transform must be {r}x{r}")));
        }
        linalg::inverse(&a)?;
        let (m, j) = (self.restriction.clone(), self.jacobian.clone());
        let a2 = a.clone();
        Self::new(
            r,
            format!("A·({})", self.description),
            move |t| {
                let v = m(t);
                (0..r).map(|i| (0..r).map(|k| a[i][k] * v[k]).sum()).collect()
            },
            move |t| {
                let mm = j(t);
                (0..3)
                    .map(|i| (0..r).map(|c| (0..r).map(|k| mm[i][k] * a2[c][k]).sum()).collect())
                    .collect()
            },
        )
    }

    pub fn restriction(&self, theta: &SnParams) -> Vec<f64> {
        (self.restriction)(theta)
    }

    pub fn jacobian(&self, theta: &SnParams) -> Vec<Vec<f64>> {
        (self.jacobian)(theta)
    }

    /// Checks shape, rank `r`, and agreement of the Jacobian with central
    /// differences of the restriction (within 1e-5).
    pub fn check_at(&self, theta: &SnParams) -> Result<()> {
        let m = self.restriction(theta);
        let jm = self.jacobian(theta);
        if m.len() != self.r || jm.len() != 3 || jm.iter().any(|row| row.len() != self.r) {
            return Err(Error::Config(format!("{}: inconsistent restriction shapes", self.description)));
        }
        let mtm: Vec<Vec<f64>> = (0..self.r)
            .map(|a| (0..self.r).map(|b| (0..3).map(|k| jm[k][a] * jm[k][b]).sum()).collect())
            .collect();
        if linalg::symmetric_eigenvalues(&mtm)[0] <= 1e-12 {
            return Err(Error::Config(format!("{}: Jacobian is rank deficient", self.description)));
        }
        let base = theta.to_array();
        for k in 0..3 {
            let h = 1e-6 * base[k].abs().max(1.0);
            let (mut up, mut dn) = (base, base);
            up[k] += h;
            dn[k] -= h;
            let (mu, md) = (
                self.restriction(&SnParams::from_array(up)?),
                self.restriction(&SnParams::from_array(dn)?),
            );
            for c in 0..self.r {
                let fd = (mu[c] - md[c]) / (2.0 * h);
                if (fd - jm[k][c]).abs() > 1e-5 {
                    return Err(Error::Config(format!(
                        "{}: Jacobian entry ({k},{c}) is {} but finite differences give {fd}",
                        self.description, jm[k][c]
                    )));
                }
            }
        }
        Ok(())
    }

    /// 0-based coordinates on which `M(θ)` has a nonzero row.
    pub fn touched_coordinates(&self, theta: &SnParams) -> Vec<usize> {
        let jm = self.jacobian(theta);
        (0..3).filter(|&k| jm[k].iter().any(|v| *v != 0.0)).collect()
    }
}

/// `P(χ²_df > x)`.
pub fn chisq_sf(x: f64, df: f64) -> Result<f64> {
    if !(df > 0.0) || x.is_nan() {
        return Err(Error::Domain(format!("invalid chi-square arguments x={x}, df={df}")));
    }
    if x <= 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(gamma_ur(0.5 * df, 0.5 * x))
}

/// Upper-`tau` critical value `χ²_{df,τ}`: the `x` with `P(χ²_df > x) = τ`.
pub fn chisq_critical(df: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Domain(format!("tau must lie in (0, 1), got {tau}")));
    }
    let (mut lo, mut hi) = (0.0, df.max(1.0));
    while chisq_sf(hi, df)? > tau {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chisq_sf(mid, df)? > tau {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

const POISSON_TERM_CAP: usize = 100_000;

/// `P(χ²_{df,λ} > x)` as a Poisson(λ/2) mixture of central tails, summed
/// outward from the Poisson mode until the remaining weight is below 1e-15.
pub fn noncentral_chisq_sf(x: f64, df: f64, noncentrality: f64) -> Result<f64> {
    if !(noncentrality >= 0.0 && noncentrality.is_finite()) {
        return Err(Error::Domain(format!("noncentrality must be >= 0, got {noncentrality}")));
    }
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("x must be >= 0, got {x}")));
    }
    if noncentrality == 0.0 {
        return chisq_sf(x, df);
    }
    let lam = 0.5 * noncentrality;
    let ln_w = |j: usize| -lam + j as f64 * lam.ln() - statrs::function::gamma::ln_gamma(j as f64 + 1.0);
    let mode = lam.floor() as usize;
    let mut total = 0.0;
    let mut weight = 0.0;
    let mut terms = 0;
    let mut j = mode;
    loop {
        let w = ln_w(j).exp();
        total += w * chisq_sf(x, df + 2.0 * j as f64)?;
        weight += w;
        terms += 1;
        if w < 1e-17 || j == 0 {
            break;
        }
        j -= 1;
    }
    j = mode + 1;
    loop {
        let w = ln_w(j).exp();
        total += w * chisq_sf(x, df + 2.0 * j as f64)?;
        weight += w;
        terms += 1;
        if 1.0 - weight < 1e-15 || (w < 1e-17 && j > mode + 10) {
            break;
        }
        if terms > POISSON_TERM_CAP {
            return Err(Error::Numerical(format!(
                "noncentral chi-square series did not converge within {POISSON_TERM_CAP} terms"
            )));
        }
        j += 1;
    }
    Ok(total.clamp(0.0, 1.0))
}

/// `Q = M (Mᵀ Σ M)⁻¹ Mᵀ` (3 × 3), with `Mᵀ Σ M` returned alongside.
pub(crate) fn q_matrix(sigma: &[Vec<f64>], jm: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let p = sigma.len();
    let r = jm[0].len();
    let mut msm = vec![vec![0.0; r]; r];
    for a in 0..r {
        for b in 0..r {
            let mut s = 0.0;
            for i in 0..p {
                for k in 0..p {
                    s += jm[i][a] * sigma[i][k] * jm[k][b];
                }
            }
            msm[a][b] = s;
        }
    }
    let ev = linalg::symmetric_eigenvalues(&msm);
    if !(ev[0] > 0.0) || ev.iter().any(|v| !v.is_finite()) {
        return Err(Error::Conditioning {
            condition: f64::INFINITY,
            limit: CONDITION_LIMIT,
        });
    }
    let inv = linalg::inverse(&msm)?;
    let mut q = vec![vec![0.0; p]; p];
    for i in 0..p {
        for k in 0..p {
            let mut s = 0.0;
            for a in 0..r {
                for b in 0..r {
                    s += jm[i][a] * inv[a][b] * jm[k][b];
                }
            }
            q[i][k] = s;
        }
    }
    Ok((q, msm))
}

pub(crate) fn quad_form(q: &[Vec<f64>], x: &[f64]) -> f64 {
    (0..x.len()).map(|i| (0..x.len()).map(|k| x[i] * q[i][k] * x[k]).sum::<f64>()).sum()
}

/// Significance levels reported in `reject_at`.
pub const REPORTED_LEVELS: [f64; 3] = [0.01, 0.05, 0.10];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaldTestResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub alpha: f64,
    pub fit: FitResult,
    /// Keyed by the level printed with two decimals.
    pub reject_at: BTreeMap<String, bool>,
    pub hypothesis: String,
    pub warnings: Vec<String>,
}

impl WaldTestResult {
    pub fn rejects(&self, tau: f64) -> bool {
        self.p_value < tau
    }

    /// `{statistic, df, p_value, alpha, theta_hat, std_errors, hypothesis}`.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "statistic": self.statistic,
            "df": self.df,
            "p_value": self.p_value,
            "alpha": self.alpha,
            "theta_hat": self.fit.params,
            "std_errors": self.fit.std_errors,
            "hypothesis": self.hypothesis,
        })
    }
}

fn finish_test(statistic: f64, fit: FitResult, hyp_desc: String, df: usize, mut warnings: Vec<String>) -> Result<WaldTestResult> {
    let statistic = statistic.max(0.0);
    let p_value = chisq_sf(statistic, df as f64)?;
    let reject_at = REPORTED_LEVELS
        .iter()
        .map(|&t| (format!("{t:.2}"), p_value < t))
        .collect();
    if !(fit.covariance.j_condition <= CONDITION_LIMIT) {
        warnings.push(format!(
            "J is ill-conditioned at the estimate (condition {:.3e})",
            fit.covariance.j_condition
        ));
    }
    if !fit.converged {
        warnings.push("the unrestricted fit did not converge".into());
    }
    Ok(WaldTestResult {
        statistic,
        df,
        p_value,
        alpha: fit.alpha,
        fit,
        reject_at,
        hypothesis: hyp_desc,
        warnings,
    })
}

/// `W = n · m(θ̂)ᵀ [M(θ̂)ᵀ Σ_α(θ̂) M(θ̂)]⁻¹ m(θ̂)` from an existing fit.
pub fn wald_test_from_fit(fit: FitResult, n: usize, hyp: &HypothesisSpec) -> Result<WaldTestResult> {
    let theta = fit.params;
    let m = hyp.restriction(&theta);
    let jm = hyp.jacobian(&theta);
    let sigma = linalg::mat3_to_vec(&fit.covariance.sigma_matrix);
    let (_, msm) = q_matrix(&sigma, &jm)?;
    let inv = linalg::inverse(&msm)?;
    let w = n as f64 * quad_form(&inv, &m);
    finish_test(w, fit, hyp.description.clone(), hyp.r, Vec::new())
}

pub fn wald_test(data: &Sample, alpha: f64, hyp: &HypothesisSpec, fit_cfg: &GdConfig) -> Result<WaldTestResult> {
    let f = fit(data, alpha, fit_cfg, None)?;
    wald_test_from_fit(f, data.len(), hyp)
}

/// `W = n (γ̂ − γ₀)² / Σ_α^{(33)}(θ̂)` from an existing fit.
pub fn symmetry_test_from_fit(fit: FitResult, n: usize, gamma0: f64) -> Result<WaldTestResult> {
    let s33 = fit.covariance.sigma_matrix[2][2];
    if !(s33 > 0.0 && s33.is_finite()) {
        return Err(Error::Conditioning {
            condition: f64::INFINITY,
            limit: CONDITION_LIMIT,
        });
    }
    let d = fit.params.gamma - gamma0;
    let w = n as f64 * d * d / s33;
    finish_test(w, fit, format!("gamma={gamma0}"), 1, Vec::new())
}

pub fn symmetry_test(data: &Sample, alpha: f64, gamma0: f64, fit_cfg: &GdConfig) -> Result<WaldTestResult> {
    let f = fit(data, alpha, fit_cfg, None)?;
    symmetry_test_from_fit(f, data.len(), gamma0)
}

/// How the parameters not restricted by the null enter the power calculation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuisanceTreatment {
    /// Full sandwich `Σ_α(θ₀)`.
    Estimated,
    /// Sandwich of the block of coordinates touched by `M`, others held known.
    Known,
    /// `Estimated`, falling back to `Known` when `J_α(θ₀)` is ill-conditioned.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub power: f64,
    pub noncentrality: f64,
    pub critical_value: f64,
    /// `Estimated` or `Known`, never `Auto`.
    pub nuisance: NuisanceTreatment,
    pub warnings: Vec<String>,
}

/// Asymptotic power `1 − G_{χ²_{r,δ}}(χ²_{r,τ₀})` against `θ₀ + d/√n`, with
/// `δ = dᵀ Q_α(θ₀) d`.
pub fn contiguous_power(theta0: &SnParams, alpha: f64, hyp: &HypothesisSpec, d: &[f64; 3], tau0: f64) -> Result<f64> {
    Ok(contiguous_power_with(theta0, alpha, hyp, d, tau0, NuisanceTreatment::Auto, &QuadratureSpec::default())?.power)
}

pub fn contiguous_power_with(
    theta0: &SnParams,
    alpha: f64,
    hyp: &HypothesisSpec,
    d: &[f64; 3],
    tau0: f64,
    nuisance: NuisanceTreatment,
    quad: &QuadratureSpec,
) -> Result<PowerReport> {
    if !(tau0 > 0.0 && tau0 < 1.0) {
        return Err(Error::Domain(format!("tau0 must lie in (0, 1), got {tau0}")));
    }
    let m0 = hyp.restriction(theta0);
    if m0.iter().any(|v| v.abs() > 1e-10) {
        return Err(Error::Domain(format!("theta0 {theta0} does not satisfy {}", hyp.description)));
    }
    let mut warnings = Vec::new();
    let (delta, used) = noncentrality(theta0, alpha, hyp, d, nuisance, quad, &mut warnings)?;
    let delta = if delta < 0.0 {
        warnings.push(format!("negative noncentrality {delta:.3e} clamped to 0"));
        0.0
    } else {
        delta
    };
    let crit = chisq_critical(hyp.r as f64, tau0)?;
    let power = if delta == 0.0 {
        tau0
    } else {
        noncentral_chisq_sf(crit, hyp.r as f64, delta)?
    };
    Ok(PowerReport {
        power,
        noncentrality: delta,
        critical_value: crit,
        nuisance: used,
        warnings,
    })
}

fn noncentrality(
    theta0: &SnParams,
    alpha: f64,
    hyp: &HypothesisSpec,
    d: &[f64; 3],
    nuisance: NuisanceTreatment,
    quad: &QuadratureSpec,
    warnings: &mut Vec<String>,
) -> Result<(f64, NuisanceTreatment)> {
    let jm = hyp.jacobian(theta0);
    match nuisance {
        NuisanceTreatment::Estimated => {
            let cov = covariance(theta0, alpha, quad)?;
            let (q, _) = q_matrix(&linalg::mat3_to_vec(&cov.sigma_matrix), &jm)?;
            Ok((quad_form(&q, d), NuisanceTreatment::Estimated))
        }
        NuisanceTreatment::Known => {
            let cov = crate::asymptotics::covariance_unchecked(theta0, alpha, quad)?;
            Ok((known_block_delta(&cov, hyp, theta0, d, &jm)?, NuisanceTreatment::Known))
        }
        NuisanceTreatment::Auto => match covariance(theta0, alpha, quad) {
            Ok(cov) => {
                let (q, _) = q_matrix(&linalg::mat3_to_vec(&cov.sigma_matrix), &jm)?;
                Ok((quad_form(&q, d), NuisanceTreatment::Estimated))
            }
            Err(Error::Conditioning { condition, .. }) => {
                warnings.push(format!(
                    "J is singular at {theta0} (condition {condition:.3e}); unrestricted parameters treated as known"
                ));
                let cov = crate::asymptotics::covariance_unchecked(theta0, alpha, quad)?;
                Ok((known_block_delta(&cov, hyp, theta0, d, &jm)?, NuisanceTreatment::Known))
            }
            Err(e) => Err(e),
        },
    }
}

fn known_block_delta(
    cov: &AsymptoticCovariance,
    hyp: &HypothesisSpec,
    theta0: &SnParams,
    d: &[f64; 3],
    jm: &[Vec<f64>],
) -> Result<f64> {
    let idx = hyp.touched_coordinates(theta0);
    let sigma_s = cov.known_nuisance_sigma(&idx)?;
    let jm_s: Vec<Vec<f64>> = idx.iter().map(|&k| jm[k].clone()).collect();
    let d_s: Vec<f64> = idx.iter().map(|&k| d[k]).collect();
    let (q, _) = q_matrix(&sigma_s, &jm_s)?;
    Ok(quad_form(&q, &d_s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skew_normal::sample;

    fn p(mu: f64, sigma: f64, gamma: f64) -> SnParams {
        SnParams::new(mu, sigma, gamma).unwrap()
    }

    #[test]
    fn central_chisq_oracles() {
        // scipy.stats.chi2.sf
        assert!((chisq_sf(3.84, 1.0).unwrap() - 0.050043521248705).abs() < 1e-12);
        assert!((chisq_sf(3.84, 1.0).unwrap() - 0.05).abs() < 5e-4);
        assert!((chisq_sf(10.0, 3.0).unwrap() - 0.018566135463043).abs() < 1e-12);
        assert!((chisq_sf(0.5, 7.0).unwrap() - 0.9994464813904249).abs() < 1e-12);
        assert!((chisq_critical(1.0, 0.05).unwrap() - 3.8414588206941285).abs() < 1e-10);
        assert!((chisq_critical(3.0, 0.01).unwrap() - 11.344866730144368).abs() < 1e-9);
    }

    #[test]
    fn noncentral_chisq_oracles() {
        // scipy.stats.ncx2.sf
        let cases = [
            (3.841458820694124, 1.0, 9.0 * 2.0 / std::f64::consts::PI, 0.6677498010972116),
            (5.0, 2.0, 3.0, 0.4059391969218033),
            (50.0, 3.0, 40.0, 0.27541736639537334),
            (1.0, 1.0, 0.01, 0.31972618629314187),
        ];
        for (x, k, l, want) in cases {
            let got = noncentral_chisq_sf(x, k, l).unwrap();
            assert!((got - want).abs() < 1e-10, "({x},{k},{l}): {got} vs {want}");
        }
        for x in [0.5, 3.0, 12.0] {
            assert!((noncentral_chisq_sf(x, 2.0, 0.0).unwrap() - chisq_sf(x, 2.0).unwrap()).abs() < 1e-12);
        }
        let mut prev = 0.0;
        for i in 0..40 {
            let v = noncentral_chisq_sf(4.0, 1.0, i as f64 * 0.5).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn hypothesis_parsing() {
        let h = HypothesisSpec::parse("gamma=0").unwrap();
        assert_eq!(h.r, 1);
        assert_eq!(h.restriction(&p(0.0, 1.0, 2.5)), vec![2.5]);
        assert_eq!(HypothesisSpec::parse(" mu = 72 ").unwrap().restriction(&p(70.0, 1.0, 0.0)), vec![-2.0]);
        for bad in ["gamma", "beta=1", "sigma=-1", "mu=abc"] {
            assert!(matches!(HypothesisSpec::parse(bad), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn hypothesis_checks() {
        let th = p(0.3, 1.2, -0.7);
        HypothesisSpec::gamma_equals(0.0).unwrap().check_at(&th).unwrap();
        HypothesisSpec::point(th).unwrap().check_at(&th).unwrap();
        let wrong = HypothesisSpec::new(1, "bad", |t| vec![t.gamma * t.gamma], |_| vec![vec![0.0], vec![0.0], vec![1.0]]).unwrap();
        assert!(wrong.check_at(&th).is_err());
        let degenerate = HypothesisSpec::new(1, "flat", |_| vec![0.0], |_| vec![vec![0.0]; 3]).unwrap();
        assert!(degenerate.check_at(&th).is_err());
        assert!(HypothesisSpec::new(4, "x", |_| vec![], |_| vec![]).is_err());
    }

    #[test]
    fn contiguous_power_size_and_anchors() {
        let th0 = p(0.0, 1.0, 0.0);
        let h = HypothesisSpec::gamma_equals(0.0).unwrap();
        assert_eq!(contiguous_power(&th0, 0.5, &h, &[0.0; 3], 0.05).unwrap(), 0.05);
        let r = contiguous_power_with(&th0, 0.0, &h, &[0.0, 0.0, 3.0], 0.05, NuisanceTreatment::Auto, &QuadratureSpec::default()).unwrap();
        assert_eq!(r.nuisance, NuisanceTreatment::Known);
        assert!((r.power - 0.6685).abs() < 0.02);
        assert!((contiguous_power(&th0, 0.5, &h, &[0.0, 0.0, 5.0], 0.05).unwrap() - 0.9585).abs() < 0.02);
        assert!((contiguous_power(&th0, 1.0, &h, &[0.0, 0.0, 9.0], 0.05).unwrap() - 0.9999).abs() < 0.02);
        let est = contiguous_power_with(&th0, 0.0, &h, &[0.0, 0.0, 3.0], 0.05, NuisanceTreatment::Estimated, &QuadratureSpec::default());
        assert!(matches!(est, Err(Error::Conditioning { .. })));
        assert!(contiguous_power(&p(0.0, 1.0, 1.0), 0.5, &h, &[0.0, 0.0, 1.0], 0.05).is_err());
    }

    #[test]
    fn power_monotone_in_d_and_alpha() {
        let th0 = p(0.0, 1.0, 0.0);
        let h = HypothesisSpec::gamma_equals(0.0).unwrap();
        let ds = [3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0, 7.0, 8.0, 9.0];
        let alphas = [0.0, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0];
        let grid: Vec<Vec<f64>> = ds
            .iter()
            .map(|&d| alphas.iter().map(|&a| contiguous_power(&th0, a, &h, &[0.0, 0.0, d], 0.05).unwrap()).collect())
            .collect();
        for j in 0..alphas.len() {
            assert!((1..ds.len()).all(|i| grid[i][j] >= grid[i - 1][j]));
        }
        for row in &grid {
            assert!(row.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        }
        assert!(grid[9][0] > 0.9999);
    }

    #[test]
    fn wald_identities() {
        let cfg = GdConfig::default();
        for seed in 0..5 {
            let data = sample(&p(0.0, 1.0, 2.0), 150, seed).unwrap();
            let f = fit(&data, 0.3, &cfg, None).unwrap();
            let g = wald_test_from_fit(f.clone(), data.len(), &HypothesisSpec::gamma_equals(1.0).unwrap()).unwrap();
            let s = symmetry_test_from_fit(f.clone(), data.len(), 1.0).unwrap();
            assert!((g.statistic - s.statistic).abs() < 1e-10);
            assert!((g.p_value - chisq_sf(g.statistic, 1.0).unwrap()).abs() < 1e-15);
            for (k, v) in &g.reject_at {
                assert_eq!(*v, g.p_value < k.parse::<f64>().unwrap());
            }
        }
        let data = sample(&p(0.0, 1.0, 2.0), 120, 7).unwrap();
        let f = fit(&data, 0.5, &cfg, None).unwrap();
        let at_hat = wald_test_from_fit(f.clone(), 120, &HypothesisSpec::point(f.params).unwrap()).unwrap();
        assert_eq!(at_hat.statistic, 0.0);
        assert_eq!(at_hat.p_value, 1.0);
        let h = HypothesisSpec::point(p(0.1, 1.1, 1.5)).unwrap();
        let w1 = wald_test_from_fit(f.clone(), 120, &h).unwrap().statistic;
        let w2 = wald_test_from_fit(f.clone(), 240, &h).unwrap().statistic;
        assert!((w2 - 2.0 * w1).abs() < 1e-10 * w2);
        let a = vec![vec![2.0, 1.0, 0.0], vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 1.0]];
        let w3 = wald_test_from_fit(f.clone(), 120, &h.transformed(a).unwrap()).unwrap().statistic;
        assert!((w3 - w1).abs() < 1e-10 * w1.max(1.0));
        let v = at_hat.summary_json();
        for key in ["statistic", "df", "p_value", "alpha", "theta_hat", "std_errors", "hypothesis"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
