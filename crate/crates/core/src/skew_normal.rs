//! The three-parameter skew-normal family SN(μ, σ, γ):
//! `f(x) = (2/σ) φ((x−μ)/σ) Φ(γ(x−μ)/σ)`.

use std::f64::consts::{FRAC_2_PI, LN_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::sample::Sample;
use crate::special::{self, log_phi};

/// Location μ, scale σ > 0 and shape γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnParams {
    pub mu: f64,
    pub sigma: f64,
    pub gamma: f64,
}

impl SnParams {
    pub fn new(mu: f64, sigma: f64, gamma: f64) -> Result<Self> {
        let p = Self { mu, sigma, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.sigma.is_finite() && self.gamma.is_finite()) {
            return Err(Error::Parameter(format!("non-finite parameters {self:?}")));
        }
        if self.sigma <= 0.0 {
            return Err(Error::Parameter(format!("sigma must be > 0, got {}", self.sigma)));
        }
        Ok(())
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.mu, self.sigma, self.gamma]
    }

    pub fn from_array(v: [f64; 3]) -> Result<Self> {
        Self::new(v[0], v[1], v[2])
    }

    /// `δ = γ/√(1+γ²)`
    pub fn delta(&self) -> f64 {
        if self.gamma.abs() > 1e150 {
            self.gamma.signum()
        } else {
            self.gamma / (1.0 + self.gamma * self.gamma).sqrt()
        }
    }

    #[inline]
    pub(crate) fn standardize(&self, x: f64) -> f64 {
        (x - self.mu) / self.sigma
    }
}

impl std::fmt::Display for SnParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SN({}, {}, {})", self.mu, self.sigma, self.gamma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnMoments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub delta: f64,
}

pub fn pdf(theta: &SnParams, x: f64) -> Result<f64> {
    Ok(log_pdf(theta, x)?.exp())
}

pub fn log_pdf(theta: &SnParams, x: f64) -> Result<f64> {
    theta.validate()?;
    ensure_finite("x", x)?;
    Ok(log_pdf_unchecked(theta, x))
}

#[inline]
pub(crate) fn log_pdf_unchecked(theta: &SnParams, x: f64) -> f64 {
    let z = theta.standardize(x);
    log_standard_pdf(z, theta.gamma) - theta.sigma.ln()
}

/// `ln(2 φ(z) Φ(γz))`
#[inline]
pub(crate) fn log_standard_pdf(z: f64, gamma: f64) -> f64 {
    LN_2 + log_phi(z) + special::log_cdf(gamma * z)
}

pub fn cdf(theta: &SnParams, x: f64) -> Result<f64> {
    theta.validate()?;
    ensure_finite("x", x)?;
    let z = theta.standardize(x);
    let v = special::cdf(z) - 2.0 * special::owens_t(z, theta.gamma)?;
    Ok(v.clamp(0.0, 1.0))
}

/// Gradient of `ln f_θ(x)` with respect to (μ, σ, γ).
pub fn score(theta: &SnParams, x: f64) -> Result<[f64; 3]> {
    theta.validate()?;
    ensure_finite("x", x)?;
    let s = standard_score(theta.standardize(x), theta.gamma);
    Ok([s[0] / theta.sigma, s[1] / theta.sigma, s[2]])
}

/// Score at unit scale in the standardized variable: `(z − γm, z² − 1 − γzm, zm)`
/// with `m = φ(γz)/Φ(γz)`. Divide the first two entries by σ for the score in x.
#[inline]
pub(crate) fn standard_score(z: f64, gamma: f64) -> [f64; 3] {
    let m = special::mills(gamma * z);
    [z - gamma * m, z * z - 1.0 - gamma * z * m, z * m]
}

pub fn moments(theta: &SnParams) -> Result<SnMoments> {
    theta.validate()?;
    let delta = theta.delta();
    let b = FRAC_2_PI.sqrt();
    let g = theta.gamma;
    let skewness = if g.abs() > 1e100 {
        // δ → ±1 limit of (4−π)/2 · (δb)³ / (1 − δ²b²)^{3/2}
        g.signum() * 0.5 * (4.0 - PI) * (b / (1.0 - b * b).sqrt()).powi(3)
    } else {
        let half_pi = 0.5 * PI;
        (4.0 - PI) * g.powi(3) / (2.0 * (half_pi + (half_pi - 1.0) * g * g).powf(1.5))
    };
    Ok(SnMoments {
        mean: theta.mu + theta.sigma * delta * b,
        variance: theta.sigma * theta.sigma * (1.0 - 2.0 * delta * delta / PI),
        skewness,
        delta,
    })
}

/// `n` draws from SN(θ), deterministic in `seed`.
pub fn sample(theta: &SnParams, n: usize, rng_seed: u64) -> Result<Sample> {
    if n == 0 {
        return Err(Error::Data("sample size must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let values = draw(theta, n, &mut rng)?;
    Sample::new(values, format!("{theta}"), format!("simulated seed={rng_seed}"))
}

/// Draws via `X = μ + σ(δ|Z₀| + √(1−δ²) Z₁)`.
pub fn draw<R: Rng + ?Sized>(theta: &SnParams, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    theta.validate()?;
    let delta = theta.delta();
    let comp = (1.0 - delta * delta).max(0.0).sqrt();
    Ok((0..n)
        .map(|_| {
            let z0: f64 = rng.sample(StandardNormal);
            let z1: f64 = rng.sample(StandardNormal);
            theta.mu + theta.sigma * (delta * z0.abs() + comp * z1)
        })
        .collect())
}
