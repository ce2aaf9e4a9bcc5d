//! Asymptotic covariance of the MDPDE and asymptotic relative efficiencies.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dpd::{standardized_partition, DEFAULT_TRUNC_HALFWIDTH};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat3};
use crate::quadrature::{integrate, QuadratureSpec};
use crate::skew_normal::{log_standard_pdf, standard_score, SnParams};

/// Largest condition number of `J_α` accepted by [`covariance`].
pub const CONDITION_LIMIT: f64 = 1e10;

pub const PARAMETER_NAMES: [&str; 3] = ["mu", "sigma", "gamma"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticCovariance {
    pub j_matrix: Mat3,
    pub k_matrix: Mat3,
    pub sigma_matrix: Mat3,
    pub alpha: f64,
    pub at_theta: SnParams,
    /// Spectral condition number of `j_matrix`.
    pub j_condition: f64,
}

/// `N_β = ∫ u uᵀ f^β` and `∫ u f^β` in one pass.
fn score_integrals(theta: &SnParams, beta: f64, quad: &QuadratureSpec, halfwidth: f64) -> Result<(Mat3, [f64; 3])> {
    theta.validate()?;
    let gamma = theta.gamma;
    let q = integrate(
        |z| {
            let w = (beta * log_standard_pdf(z, gamma)).exp();
            if w == 0.0 {
                return [0.0; 9];
            }
            let s = standard_score(z, gamma);
            [
                s[0] * s[0] * w,
                s[0] * s[1] * w,
                s[0] * s[2] * w,
                s[1] * s[1] * w,
                s[1] * s[2] * w,
                s[2] * s[2] * w,
                s[0] * w,
                s[1] * w,
                s[2] * w,
            ]
        },
        &standardized_partition(gamma, halfwidth),
        quad,
    )?;
    let v = q.value;
    let sigma = theta.sigma;
    let scale = sigma.powf(1.0 - beta);
    // μ and σ score components carry a 1/σ factor, γ does not.
    let unit = [1.0 / sigma, 1.0 / sigma, 1.0];
    let raw = [[v[0], v[1], v[2]], [v[1], v[3], v[4]], [v[2], v[4], v[5]]];
    let mut n = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            n[i][j] = scale * raw[i][j] * unit[i] * unit[j];
        }
    }
    let xi = [0, 1, 2].map(|k| scale * v[6 + k] * unit[k]);
    Ok((n, xi))
}

fn parse_index(i: usize) -> Result<usize> {
    if (1..=3).contains(&i) {
        Ok(i - 1)
    } else {
        Err(Error::Domain(format!("parameter index must be 1, 2 or 3, got {i}")))
    }
}

/// `N_α^{(ij)} = ∫ [u_θ]_i [u_θ]_j f_θ^{α+1}` with 1-based indices.
pub fn n_integral(theta: &SnParams, alpha: f64, i: usize, j: usize, quad: &QuadratureSpec) -> Result<f64> {
    n_integral_window(theta, alpha, i, j, quad, DEFAULT_TRUNC_HALFWIDTH)
}

/// [`n_integral`] with an explicit standardized half-window.
pub fn n_integral_window(
    theta: &SnParams,
    alpha: f64,
    i: usize,
    j: usize,
    quad: &QuadratureSpec,
    halfwidth: f64,
) -> Result<f64> {
    let (a, b) = (parse_index(i)?, parse_index(j)?);
    if !(alpha >= 0.0) {
        return Err(Error::Domain(format!("alpha must be >= 0, got {alpha}")));
    }
    Ok(score_integrals(theta, 1.0 + alpha, quad, halfwidth)?.0[a][b])
}

/// Builds `J`, `K` and the sandwich regardless of how well conditioned `J` is.
/// `sigma_matrix` is NaN-filled when `J` cannot be inverted at all.
pub fn covariance_unchecked(theta: &SnParams, alpha: f64, quad: &QuadratureSpec) -> Result<AsymptoticCovariance> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!("alpha must be >= 0, got {alpha}")));
    }
    let (j, xi) = score_integrals(theta, 1.0 + alpha, quad, DEFAULT_TRUNC_HALFWIDTH)?;
    let n2 = if alpha == 0.0 {
        j
    } else {
        score_integrals(theta, 1.0 + 2.0 * alpha, quad, DEFAULT_TRUNC_HALFWIDTH)?.0
    };
    let mut k = n2;
    for a in 0..3 {
        for b in 0..3 {
            k[a][b] -= xi[a] * xi[b];
        }
    }
    let j_condition = linalg::spd_condition(&linalg::mat3_to_vec(&j));
    let sigma_matrix = match linalg::inverse3(&j) {
        Ok(ji) => linalg::symmetrize3(&linalg::matmul3(&linalg::matmul3(&ji, &k), &ji)),
        Err(_) => [[f64::NAN; 3]; 3],
    };
    Ok(AsymptoticCovariance {
        j_matrix: j,
        k_matrix: k,
        sigma_matrix,
        alpha,
        at_theta: *theta,
        j_condition,
    })
}

/// `Σ_α(θ) = J⁻¹ K J⁻¹`; fails when `cond(J)` exceeds [`CONDITION_LIMIT`].
pub fn covariance(theta: &SnParams, alpha: f64, quad: &QuadratureSpec) -> Result<AsymptoticCovariance> {
    let cov = covariance_unchecked(theta, alpha, quad)?;
    if !(cov.j_condition <= CONDITION_LIMIT) {
        return Err(Error::Conditioning {
            condition: cov.j_condition,
            limit: CONDITION_LIMIT,
        });
    }
    Ok(cov)
}

impl AsymptoticCovariance {
    /// Sandwich restricted to the coordinates `idx` (0-based), treating the
    /// remaining parameters as known: `J_SS⁻¹ K_SS J_SS⁻¹`.
    pub fn known_nuisance_sigma(&self, idx: &[usize]) -> Result<Vec<Vec<f64>>> {
        if idx.is_empty() || idx.iter().any(|&i| i > 2) {
            return Err(Error::Domain(format!("bad coordinate subset {idx:?}")));
        }
        let sub = |m: &Mat3| -> Vec<Vec<f64>> { idx.iter().map(|&a| idx.iter().map(|&b| m[a][b]).collect()).collect() };
        let jss = sub(&self.j_matrix);
        let cond = linalg::spd_condition(&jss);
        if !(cond <= CONDITION_LIMIT) {
            return Err(Error::Conditioning {
                condition: cond,
                limit: CONDITION_LIMIT,
            });
        }
        let ji = linalg::inverse(&jss)?;
        let kss = sub(&self.k_matrix);
        let r = idx.len();
        let mut out = vec![vec![0.0; r]; r];
        for a in 0..r {
            for b in 0..r {
                let mut s = 0.0;
                for c in 0..r {
                    for d in 0..r {
                        s += ji[a][c] * kss[c][d] * ji[d][b];
                    }
                }
                out[a][b] = s;
            }
        }
        Ok(out)
    }
}

/// `√(diag(Σ)/n)`.
pub fn standard_errors(cov: &AsymptoticCovariance, n: usize) -> Result<[f64; 3]> {
    if n == 0 {
        return Err(Error::Domain("sample size must be positive".into()));
    }
    Ok([0, 1, 2].map(|k| (cov.sigma_matrix[k][k] / n as f64).sqrt()))
}

/// One row per (θ, parameter); `values[a]` pairs with `alphas[a]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreRow {
    pub theta: SnParams,
    pub parameter: String,
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreTable {
    pub alphas: Vec<f64>,
    pub rows: Vec<AreRow>,
    /// Cells that could not be computed, as `(θ, α, message)`.
    pub failures: Vec<(SnParams, f64, String)>,
}

impl AreTable {
    pub fn get(&self, theta: &SnParams, parameter: usize, alpha: f64) -> Option<f64> {
        let a = self.alphas.iter().position(|&x| x == alpha)?;
        self.rows
            .iter()
            .filter(|r| r.theta == *theta)
            .nth(parameter)
            .and_then(|r| r.values[a])
    }

    /// Rows `distribution,parameter,<α...>`; missing cells are written as `NA`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["distribution".to_string(), "parameter".to_string()];
        header.extend(self.alphas.iter().map(|a| format!("{a}")));
        wtr.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![
                format!("SN({},{},{})", row.theta.mu, row.theta.sigma, row.theta.gamma),
                row.parameter.clone(),
            ];
            rec.extend(row.values.iter().map(|v| match v {
                Some(x) => crate::format::fmt_num(*x),
                None => "NA".to_string(),
            }));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn are_cells(theta: &SnParams, alphas: &[f64], quad: &QuadratureSpec) -> Vec<Result<[f64; 3]>> {
    let base = covariance(theta, 0.0, quad);
    alphas
        .par_iter()
        .map(|&a| {
            let s0 = base.clone()?;
            let sa = covariance(theta, a, quad)?;
            Ok([0, 1, 2].map(|k| 100.0 * s0.sigma_matrix[k][k] / sa.sigma_matrix[k][k]))
        })
        .collect()
}

fn validate_lists(theta_list: &[SnParams], alpha_list: &[f64]) -> Result<()> {
    if theta_list.is_empty() || alpha_list.is_empty() {
        return Err(Error::Domain("ARE table needs at least one θ and one α".into()));
    }
    if let Some(a) = alpha_list.iter().find(|a| !(**a >= 0.0 && a.is_finite())) {
        return Err(Error::Domain(format!("alpha must be >= 0, got {a}")));
    }
    Ok(())
}

/// `100 · Σ₀^{(kk)}(θ) / Σ_α^{(kk)}(θ)` for every θ, α and parameter. Any
/// failing cell aborts the table.
pub fn are_table(theta_list: &[SnParams], alpha_list: &[f64], quad: &QuadratureSpec) -> Result<AreTable> {
    let t = are_table_partial(theta_list, alpha_list, quad)?;
    if let Some((theta, alpha, msg)) = t.failures.first() {
        return Err(Error::Numerical(format!("ARE at {theta}, alpha={alpha}: {msg}")));
    }
    Ok(t)
}

/// Like [`are_table`], but ill-conditioned cells are left empty and listed in
/// `failures`. Other errors still propagate.
pub fn are_table_partial(theta_list: &[SnParams], alpha_list: &[f64], quad: &QuadratureSpec) -> Result<AreTable> {
    validate_lists(theta_list, alpha_list)?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for theta in theta_list {
        let cells = are_cells(theta, alpha_list, quad);
        let mut vals = vec![vec![None; alpha_list.len()]; 3];
        for (a, cell) in cells.into_iter().enumerate() {
            match cell {
                Ok(v) => {
                    for k in 0..3 {
                        vals[k][a] = Some(v[k]);
                    }
                }
                Err(e @ Error::Conditioning { .. }) => failures.push((*theta, alpha_list[a], e.to_string())),
                Err(e) => return Err(e),
            }
        }
        for (k, values) in vals.into_iter().enumerate() {
            rows.push(AreRow {
                theta: *theta,
                parameter: PARAMETER_NAMES[k].to_string(),
                values,
            });
        }
    }
    Ok(AreTable {
        alphas: alpha_list.to_vec(),
        rows,
        failures,
    })
}
