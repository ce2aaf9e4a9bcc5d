//! Density power divergence machinery for the skew-normal model.
//!
//! Every model integral is taken in the standardized variable `z = (x−μ)/σ`
//! over `[−L, L]` (`L = trunc_halfwidth`), so that
//!
//! ```text
//! ∫ f_θ^β dx       = σ^{1−β} ∫ g(z)^β dz,          g(z) = 2φ(z)Φ(γz)
//! ∫ u_θ f_θ^β dx   = σ^{1−β} (S₁/σ, S₂/σ, S₃),    S_k = ∫ s_k(z) g(z)^β dz
//! ```
//!
//! with `s(z)` the unit-scale score from [`crate::skew_normal`].

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadratureSpec};
use crate::sample::Sample;
use crate::skew_normal::{log_pdf_unchecked, log_standard_pdf, standard_score, SnParams};

pub const DEFAULT_TRUNC_HALFWIDTH: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpdConfig {
    pub alpha: f64,
    pub quad: QuadratureSpec,
    pub trunc_halfwidth: f64,
}

impl DpdConfig {
    pub fn new(alpha: f64) -> Result<Self> {
        let cfg = Self {
            alpha,
            quad: QuadratureSpec::default(),
            trunc_halfwidth: DEFAULT_TRUNC_HALFWIDTH,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(self.trunc_halfwidth >= 8.0 && self.trunc_halfwidth.is_finite()) {
            return Err(Error::Config(format!(
                "trunc_halfwidth must be >= 8, got {}",
                self.trunc_halfwidth
            )));
        }
        self.quad.validate()
    }
}

/// Initial partition of `[−L, L]` for standardized integrals. Fixed points
/// track the Gaussian factor; the `±k/|γ|` points follow the transition of
/// `Φ(γz)` and move continuously with γ.
pub(crate) fn standardized_partition(gamma: f64, halfwidth: f64) -> Vec<f64> {
    const BASE: [f64; 9] = [-8.0, -5.0, -3.0, -1.5, 0.0, 1.5, 3.0, 5.0, 8.0];
    let mut pts: Vec<f64> = vec![-halfwidth, halfwidth];
    pts.extend(BASE.iter().copied().filter(|p| p.abs() < halfwidth));
    if gamma != 0.0 {
        let g = gamma.abs();
        for k in [0.5, 1.5, 3.0, 6.0] {
            let p = k / g;
            if p < halfwidth {
                pts.push(p);
                pts.push(-p);
            }
        }
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    pts
}

/// `∫ f_θ^β` together with `∫ u_θ f_θ^β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelIntegrals {
    pub power: f64,
    pub weighted_score: [f64; 3],
}

pub(crate) fn model_integrals(
    theta: &SnParams,
    beta: f64,
    quad: &QuadratureSpec,
    halfwidth: f64,
) -> Result<ModelIntegrals> {
    theta.validate()?;
    let gamma = theta.gamma;
    let q = integrate(
        |z| {
            let w = (beta * log_standard_pdf(z, gamma)).exp();
            if w == 0.0 {
                return [0.0; 4];
            }
            let s = standard_score(z, gamma);
            [w, s[0] * w, s[1] * w, s[2] * w]
        },
        &standardized_partition(gamma, halfwidth),
        quad,
    )?;
    let sigma = theta.sigma;
    let scale = sigma.powf(1.0 - beta);
    Ok(ModelIntegrals {
        power: scale * q.value[0],
        weighted_score: [scale * q.value[1] / sigma, scale * q.value[2] / sigma, scale * q.value[3]],
    })
}

/// `∫ f_θ(x)^β dx`, evaluated on the default `±15` standardized window.
pub fn power_integral(theta: &SnParams, beta: f64, quad: &QuadratureSpec) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("beta must be > 0, got {beta}")));
    }
    Ok(model_integrals(theta, beta, quad, DEFAULT_TRUNC_HALFWIDTH)?.power)
}

/// `ξ_α(θ) = ∫ u_θ f_θ^{1+α}`.
pub fn xi(theta: &SnParams, alpha: f64, quad: &QuadratureSpec) -> Result<[f64; 3]> {
    if !(alpha >= 0.0) {
        return Err(Error::Domain(format!("alpha must be >= 0, got {alpha}")));
    }
    Ok(model_integrals(theta, 1.0 + alpha, quad, DEFAULT_TRUNC_HALFWIDTH)?.weighted_score)
}

fn require_positive_alpha(cfg: &DpdConfig) -> Result<()> {
    cfg.validate()?;
    if cfg.alpha <= 0.0 {
        return Err(Error::Config(
            "the DPD objective needs alpha > 0; use the likelihood path for alpha = 0".into(),
        ));
    }
    Ok(())
}

/// `H_n(θ) = ∫ f_θ^{1+α} − (1 + 1/α) (1/n) Σ f_θ(X_i)^α`.
pub fn objective(theta: &SnParams, data: &Sample, cfg: &DpdConfig) -> Result<f64> {
    require_positive_alpha(cfg)?;
    let mi = model_integrals(theta, 1.0 + cfg.alpha, &cfg.quad, cfg.trunc_halfwidth)?;
    Ok(objective_from_parts(theta, data, cfg.alpha, mi.power))
}

fn objective_from_parts(theta: &SnParams, data: &Sample, alpha: f64, power: f64) -> f64 {
    let n = data.len() as f64;
    let emp: f64 = data
        .values()
        .iter()
        .map(|&x| (alpha * log_pdf_unchecked(theta, x)).exp())
        .sum::<f64>()
        / n;
    power - (1.0 + 1.0 / alpha) * emp
}

/// Empirical mean of `u_θ(X_i) f_θ(X_i)^α`.
fn weighted_score_mean(theta: &SnParams, data: &Sample, alpha: f64) -> [f64; 3] {
    let mut acc = [0.0; 3];
    for &x in data.values() {
        let u = score_unchecked(theta, x);
        let w = (alpha * log_pdf_unchecked(theta, x)).exp();
        for k in 0..3 {
            acc[k] += u[k] * w;
        }
    }
    let n = data.len() as f64;
    acc.map(|a| a / n)
}

#[inline]
pub(crate) fn score_unchecked(theta: &SnParams, x: f64) -> [f64; 3] {
    let s = standard_score(theta.standardize(x), theta.gamma);
    [s[0] / theta.sigma, s[1] / theta.sigma, s[2]]
}

/// `∇H_n(θ) = (1+α) [ξ_α(θ) − (1/n) Σ u_θ(X_i) f_θ(X_i)^α]`.
pub fn objective_gradient(theta: &SnParams, data: &Sample, cfg: &DpdConfig) -> Result<[f64; 3]> {
    require_positive_alpha(cfg)?;
    let mi = model_integrals(theta, 1.0 + cfg.alpha, &cfg.quad, cfg.trunc_halfwidth)?;
    Ok(gradient_from_parts(theta, data, cfg.alpha, &mi.weighted_score))
}

fn gradient_from_parts(theta: &SnParams, data: &Sample, alpha: f64, xi: &[f64; 3]) -> [f64; 3] {
    let m = weighted_score_mean(theta, data, alpha);
    [0, 1, 2].map(|k| (1.0 + alpha) * (xi[k] - m[k]))
}

/// M-estimation function `ψ(x, θ) = u_θ(x) f_θ(x)^α − ξ_α(θ)`.
pub fn psi(x: f64, theta: &SnParams, cfg: &DpdConfig) -> Result<[f64; 3]> {
    cfg.validate()?;
    let xi = model_integrals(theta, 1.0 + cfg.alpha, &cfg.quad, cfg.trunc_halfwidth)?.weighted_score;
    let u = score_unchecked(theta, x);
    let w = (cfg.alpha * log_pdf_unchecked(theta, x)).exp();
    Ok([0, 1, 2].map(|k| u[k] * w - xi[k]))
}

/// `Σ_i ψ(X_i, θ)`; vanishes at the MDPDE.
pub fn psi_sum(theta: &SnParams, data: &Sample, cfg: &DpdConfig) -> Result<[f64; 3]> {
    cfg.validate()?;
    let xi = model_integrals(theta, 1.0 + cfg.alpha, &cfg.quad, cfg.trunc_halfwidth)?.weighted_score;
    let m = weighted_score_mean(theta, data, cfg.alpha);
    let n = data.len() as f64;
    Ok([0, 1, 2].map(|k| n * (m[k] - xi[k])))
}

/// Objective and gradient sharing one pass over the model integrals, with a
/// one-entry memo so repeated requests at the same θ (line search, final
/// diagnostics) do not re-integrate.
pub struct DpdObjective<'a> {
    data: &'a Sample,
    cfg: DpdConfig,
    memo: RefCell<Option<(SnParams, ModelIntegrals)>>,
}

impl<'a> DpdObjective<'a> {
    pub fn new(data: &'a Sample, cfg: DpdConfig) -> Result<Self> {
        require_positive_alpha(&cfg)?;
        Ok(Self {
            data,
            cfg,
            memo: RefCell::new(None),
        })
    }

    pub fn config(&self) -> &DpdConfig {
        &self.cfg
    }

    fn integrals(&self, theta: &SnParams) -> Result<ModelIntegrals> {
        if let Some((t, mi)) = *self.memo.borrow() {
            if t == *theta {
                return Ok(mi);
            }
        }
        let mi = model_integrals(theta, 1.0 + self.cfg.alpha, &self.cfg.quad, self.cfg.trunc_halfwidth)?;
        *self.memo.borrow_mut() = Some((*theta, mi));
        Ok(mi)
    }

    pub fn value(&self, theta: &SnParams) -> Result<f64> {
        let mi = self.integrals(theta)?;
        Ok(objective_from_parts(theta, self.data, self.cfg.alpha, mi.power))
    }

    pub fn value_and_gradient(&self, theta: &SnParams) -> Result<(f64, [f64; 3])> {
        let mi = self.integrals(theta)?;
        Ok((
            objective_from_parts(theta, self.data, self.cfg.alpha, mi.power),
            gradient_from_parts(theta, self.data, self.cfg.alpha, &mi.weighted_score),
        ))
    }
}

/// Density power divergence `d_α(g, f)` between two densities on ℝ, integrated
/// over `window`. At `α = 0` this is the Kullback–Leibler divergence `∫ g ln(g/f)`.
/// Fails when either density leaves more than `1e-8` of its mass outside the window.
pub fn dpd_divergence<G, F>(g_pdf: G, f_pdf: F, alpha: f64, quad: &QuadratureSpec, window: (f64, f64)) -> Result<f64>
where
    G: Fn(f64) -> f64,
    F: Fn(f64) -> f64,
{
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!("alpha must be >= 0, got {alpha}")));
    }
    let (lo, hi) = window;
    if !(hi > lo) {
        return Err(Error::Config(format!("empty window [{lo}, {hi}]")));
    }
    let panels = 64;
    let pts: Vec<f64> = (0..=panels).map(|i| lo + (hi - lo) * i as f64 / panels as f64).collect();
    let q = integrate(
        |x| {
            let g = g_pdf(x);
            let f = f_pdf(x);
            let term = if alpha == 0.0 {
                if g > 0.0 {
                    g * (g / f).ln()
                } else {
                    0.0
                }
            } else {
                f.powf(1.0 + alpha) - (1.0 + 1.0 / alpha) * g * f.powf(alpha) + g.powf(1.0 + alpha) / alpha
            };
            [g, f, term]
        },
        &pts,
        quad,
    )?;
    for (name, mass) in [("g", q.value[0]), ("f", q.value[1])] {
        if (mass - 1.0).abs() > 1e-8 {
            return Err(Error::Integration {
                reason: format!("density {name} has mass {mass} on [{lo}, {hi}]; widen the window"),
                abs_error: (mass - 1.0).abs(),
            });
        }
    }
    if !q.value[2].is_finite() {
        return Err(Error::Integration {
            reason: "divergence integrand is not integrable".into(),
            abs_error: f64::INFINITY,
        });
    }
    Ok(q.value[2])
}
