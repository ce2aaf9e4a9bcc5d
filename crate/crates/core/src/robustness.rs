//! Influence functions of the MDPDE and of the Wald-type test.

use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::asymptotics::covariance;
use crate::dpd::score_unchecked;
use crate::format::fmt_num;
use crate::error::{Error, Result};
use crate::hypothesis::{chisq_critical, chisq_sf, q_matrix, quad_form, HypothesisSpec};
use crate::linalg::{self, Mat3};
use crate::quadrature::QuadratureSpec;
use crate::skew_normal::{log_pdf_unchecked, SnParams};

/// Precomputed `J_α⁻¹` and `ξ_α` at a fixed θ; evaluating the IF at a point
/// is then closed form.
#[derive(Debug, Clone)]
pub struct IfEvaluator {
    theta: SnParams,
    alpha: f64,
    j_inv: Mat3,
    xi: [f64; 3],
    sigma: Mat3,
}

impl IfEvaluator {
    pub fn new(theta: &SnParams, alpha: f64, quad: &QuadratureSpec) -> Result<Self> {
        let cov = covariance(theta, alpha, quad)?;
        let xi = crate::dpd::xi(theta, alpha, quad)?;
        Ok(Self {
            theta: *theta,
            alpha,
            j_inv: linalg::inverse3(&cov.j_matrix)?,
            xi,
            sigma: cov.sigma_matrix,
        })
    }

    /// `J⁻¹ [u_θ(y) f_θ(y)^α − ξ_α]`.
    pub fn at(&self, y: f64) -> Result<[f64; 3]> {
        if !y.is_finite() {
            return Err(Error::Domain(format!("contamination point must be finite, got {y}")));
        }
        let u = score_unchecked(&self.theta, y);
        let w = (self.alpha * log_pdf_unchecked(&self.theta, y)).exp();
        let v = [0, 1, 2].map(|k| u[k] * w - self.xi[k]);
        Ok(linalg::matvec3(&self.j_inv, &v))
    }

    pub fn sigma_matrix(&self) -> &Mat3 {
        &self.sigma
    }
}

/// Influence function of the MDPDE functional at `y`.
pub fn estimator_if(y: f64, theta: &SnParams, alpha: f64) -> Result<[f64; 3]> {
    IfEvaluator::new(theta, alpha, &QuadratureSpec::default())?.at(y)
}

fn null_q(theta0: &SnParams, hyp: &HypothesisSpec, eval: &IfEvaluator) -> Result<Vec<Vec<f64>>> {
    if hyp.restriction(theta0).iter().any(|v| v.abs() > 1e-10) {
        return Err(Error::Domain(format!("{theta0} does not satisfy {}", hyp.description)));
    }
    Ok(q_matrix(&linalg::mat3_to_vec(eval.sigma_matrix()), &hyp.jacobian(theta0))?.0)
}

/// Second-order IF of the Wald statistic, `2 IFᵀ Q_α IF`.
pub fn test_if2(y: f64, theta0: &SnParams, alpha: f64, hyp: &HypothesisSpec) -> Result<f64> {
    let eval = IfEvaluator::new(theta0, alpha, &QuadratureSpec::default())?;
    let q = null_q(theta0, hyp, &eval)?;
    Ok(2.0 * quad_form(&q, &eval.at(y)?))
}

/// Power influence function `C*_r(dᵀQd) · dᵀQ · IF(y)`.
pub fn test_pif(y: f64, theta0: &SnParams, alpha: f64, hyp: &HypothesisSpec, d: &[f64; 3], tau0: f64) -> Result<f64> {
    let eval = IfEvaluator::new(theta0, alpha, &QuadratureSpec::default())?;
    let pif = PifParts::new(theta0, hyp, d, tau0, &eval)?;
    Ok(pif.at(&eval.at(y)?))
}

struct PifParts {
    scale: f64,
    qd: [f64; 3],
}

impl PifParts {
    fn new(theta0: &SnParams, hyp: &HypothesisSpec, d: &[f64; 3], tau0: f64, eval: &IfEvaluator) -> Result<Self> {
        if d.iter().all(|v| *v == 0.0) {
            return Err(Error::Domain("direction d must be nonzero".into()));
        }
        let q = null_q(theta0, hyp, eval)?;
        let s = quad_form(&q, d);
        let c = c_star(hyp.r, s, tau0)?.value;
        let qd = [0, 1, 2].map(|i| (0..3).map(|k| q[i][k] * d[k]).sum());
        Ok(Self { scale: c, qd })
    }

    fn at(&self, inf: &[f64; 3]) -> f64 {
        self.scale * (0..3).map(|k| self.qd[k] * inf[k]).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CStar {
    pub value: f64,
    pub terms: usize,
    /// Absolute value of the last term added.
    pub last_term: f64,
}

const C_STAR_TERM_CAP: usize = 500;

/// `C*_r(s) = e^{−s/2} Σ_{v≥0} s^{v−1} 2^{−v} (2v − s) P(χ²_{r+2v} > χ²_{r,τ₀}) / v!`,
/// where the `v = 0` term reduces to `−P(χ²_r > χ²_{r,τ₀})`.
pub fn c_star(r: usize, s: f64, tau0: f64) -> Result<CStar> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::Domain(format!("s must be >= 0, got {s}")));
    }
    let crit = chisq_critical(r as f64, tau0)?;
    let rf = r as f64;
    let mut sum = -chisq_sf(crit, rf)?;
    let mut last = sum.abs();
    let mut v = 1usize;
    if s > 0.0 {
        loop {
            let vf = v as f64;
            let log_mag = (vf - 1.0) * s.ln() - vf * std::f64::consts::LN_2 - ln_gamma(vf + 1.0);
            let term = log_mag.exp() * (2.0 * vf - s) * chisq_sf(crit, rf + 2.0 * vf)?;
            sum += term;
            last = term.abs();
            if vf > 0.5 * s && last < 1e-14 * sum.abs() {
                break;
            }
            v += 1;
            if v > C_STAR_TERM_CAP {
                return Err(Error::Numerical(format!("C* series did not converge within {C_STAR_TERM_CAP} terms")));
            }
        }
    }
    Ok(CStar {
        value: (-0.5 * s).exp() * sum,
        terms: v,
        last_term: (-0.5 * s).exp() * last,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IfKind {
    EstimatorIf,
    TestIf2,
    TestPif,
}

impl IfKind {
    fn label(self) -> &'static str {
        match self {
            IfKind::EstimatorIf => "if",
            IfKind::TestIf2 => "if2",
            IfKind::TestPif => "pif",
        }
    }
}

/// Inputs needed by the test-based curves; ignored for `EstimatorIf`.
#[derive(Debug, Clone, Default)]
pub struct IfExtras {
    pub hypothesis: Option<HypothesisSpec>,
    pub d: Option<[f64; 3]>,
    pub tau0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IfCurve {
    pub alpha: f64,
    pub at_theta: SnParams,
    pub grid: Vec<f64>,
    /// Three components per point for `EstimatorIf`, one otherwise.
    pub values: Vec<Vec<f64>>,
    pub kind: IfKind,
}

impl IfCurve {
    /// Largest `|value|` over the grid and component `k`, with its location.
    pub fn sup(&self, k: usize) -> (f64, f64) {
        self.grid
            .iter()
            .zip(&self.values)
            .map(|(y, v)| (*y, v[k].abs()))
            .fold((f64::NAN, -1.0), |acc, (y, a)| if a > acc.1 { (y, a) } else { acc })
    }

    /// Largest `‖value‖∞` over the grid, with its location.
    pub fn sup_norm(&self) -> (f64, f64) {
        self.grid
            .iter()
            .zip(&self.values)
            .map(|(y, v)| (*y, v.iter().fold(0.0f64, |m, x| m.max(x.abs()))))
            .fold((f64::NAN, -1.0), |acc, (y, a)| if a > acc.1 { (y, a) } else { acc })
    }

    fn column_names(&self) -> Vec<String> {
        let comps: &[&str] = if self.kind == IfKind::EstimatorIf {
            &["mu", "sigma", "gamma"]
        } else {
            &["value"]
        };
        comps
            .iter()
            .map(|c| format!("{}_alpha{}_{}", self.kind.label(), self.alpha, c))
            .collect()
    }
}

/// Evaluates the requested influence function over `grid`.
pub fn if_curve(kind: IfKind, theta: &SnParams, alpha: f64, grid: &[f64], extras: &IfExtras) -> Result<IfCurve> {
    if grid.is_empty() {
        return Err(Error::Domain("grid is empty".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("grid must be strictly increasing".into()));
    }
    let eval = IfEvaluator::new(theta, alpha, &QuadratureSpec::default())?;
    let hyp = || {
        extras
            .hypothesis
            .as_ref()
            .ok_or_else(|| Error::Config("test influence curves need a hypothesis".into()))
    };
    let values: Vec<Vec<f64>> = match kind {
        IfKind::EstimatorIf => grid.iter().map(|&y| eval.at(y).map(|v| v.to_vec())).collect::<Result<_>>()?,
        IfKind::TestIf2 => {
            let q = null_q(theta, hyp()?, &eval)?;
            grid.iter()
                .map(|&y| eval.at(y).map(|v| vec![2.0 * quad_form(&q, &v)]))
                .collect::<Result<_>>()?
        }
        IfKind::TestPif => {
            let d = extras.d.ok_or_else(|| Error::Config("power influence needs a direction d".into()))?;
            let tau0 = extras.tau0.unwrap_or(0.05);
            let parts = PifParts::new(theta, hyp()?, &d, tau0, &eval)?;
            grid.iter()
                .map(|&y| eval.at(y).map(|v| vec![parts.at(&v)]))
                .collect::<Result<_>>()?
        }
    };
    Ok(IfCurve {
        alpha,
        at_theta: *theta,
        grid: grid.to_vec(),
        values,
        kind,
    })
}

/// Writes curves sharing one grid as columns `y, <kind>_alpha<α>_<component>…`.
pub fn write_curves_csv<W: Write>(curves: &[IfCurve], w: W) -> Result<()> {
    let first = curves.first().ok_or_else(|| Error::Domain("no curves to write".into()))?;
    if curves.iter().any(|c| c.grid != first.grid) {
        return Err(Error::Domain("curves must share the same grid".into()));
    }
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["y".to_string()];
    for c in curves {
        header.extend(c.column_names());
    }
    wtr.write_record(&header)?;
    for (i, y) in first.grid.iter().enumerate() {
        let mut rec = vec![fmt_num(*y)];
        for c in curves {
            rec.extend(c.values[i].iter().map(|v| fmt_num(*v)));
        }
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

/// `lo, lo+step, …` up to and including `hi` (within rounding).
pub fn linear_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(hi > lo) {
        return Err(Error::Domain(format!("bad grid [{lo}, {hi}] step {step}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}
