//! Globally adaptive Gauss–Kronrod (10/21-point) integration over finite
//! intervals.
//!
//! The integrator is vector-valued: every integrand component shares the same
//! node set, so moment-type integrals (`∫ f^β`, `∫ u f^β`, `∫ u uᵀ f^β`) cost a
//! single pass. Callers supply an initial partition; the worst interval is
//! bisected until every component meets `max(abs_tol, rel_tol·|I_k|)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances for adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_subdivisions: 200,
        }
    }
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        let spec = Self {
            abs_tol,
            rel_tol,
            max_subdivisions,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::Config(format!("abs_tol must be > 0, got {}", self.abs_tol)));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::Config(format!("rel_tol must be > 0, got {}", self.rel_tol)));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::Config("max_subdivisions must be >= 1".into()));
        }
        Ok(())
    }
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature<const N: usize> {
    pub value: [f64; N],
    pub abs_error: [f64; N],
    pub evaluations: usize,
    pub subdivisions: usize,
}

// Kronrod abscissae (positive half, descending); odd indices are the Gauss nodes.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_814_528_721,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Clone, Copy)]
struct Panel<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    error: [f64; N],
}

fn gk21<const N: usize, F: FnMut(f64) -> [f64; N]>(f: &mut F, a: f64, b: f64) -> Panel<N> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = [0.0; N];
    let mut gauss = [0.0; N];
    let mut resabs = [0.0; N];
    for k in 0..N {
        kron[k] = WGK[10] * fc[k];
        resabs[k] = WGK[10] * fc[k].abs();
    }
    let mut fv = [[0.0; N]; 21];
    fv[10] = fc;
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv[j] = f1;
        fv[20 - j] = f2;
        for k in 0..N {
            kron[k] += WGK[j] * (f1[k] + f2[k]);
            resabs[k] += WGK[j] * (f1[k].abs() + f2[k].abs());
            if j % 2 == 1 {
                gauss[k] += WG[j / 2] * (f1[k] + f2[k]);
            }
        }
    }
    let mut value = [0.0; N];
    let mut error = [0.0; N];
    for k in 0..N {
        let mean = 0.5 * kron[k];
        let mut resasc = WGK[10] * (fc[k] - mean).abs();
        for j in 0..10 {
            resasc += WGK[j] * ((fv[j][k] - mean).abs() + (fv[20 - j][k] - mean).abs());
        }
        resasc *= half.abs();
        let resabs_k = resabs[k] * half.abs();
        let mut err = ((kron[k] - gauss[k]) * half).abs();
        if resasc != 0.0 && err != 0.0 {
            err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
        }
        let uflow = f64::MIN_POSITIVE / (50.0 * f64::EPSILON);
        if resabs_k > uflow {
            err = err.max(50.0 * f64::EPSILON * resabs_k);
        }
        value[k] = kron[k] * half;
        error[k] = if err.is_nan() { f64::INFINITY } else { err };
    }
    Panel { a, b, value, error }
}

/// Integrate a vector-valued function over the partition given by `breakpoints`
/// (at least two increasing points).
pub fn integrate<const N: usize, F: FnMut(f64) -> [f64; N]>(
    mut f: F,
    breakpoints: &[f64],
    spec: &QuadratureSpec,
) -> Result<Quadrature<N>> {
    if breakpoints.len() < 2 {
        return Err(Error::Config("need at least two breakpoints".into()));
    }
    if breakpoints.windows(2).any(|w| !(w[1] > w[0])) || breakpoints.iter().any(|x| !x.is_finite()) {
        return Err(Error::Config(format!(
            "breakpoints must be finite and strictly increasing: {breakpoints:?}"
        )));
    }
    let mut panels: Vec<Panel<N>> = breakpoints.windows(2).map(|w| gk21(&mut f, w[0], w[1])).collect();
    let mut evaluations = 21 * panels.len();
    let mut subdivisions = 0;

    loop {
        let mut total = [0.0; N];
        let mut total_err = [0.0; N];
        for p in &panels {
            for k in 0..N {
                total[k] += p.value[k];
                total_err[k] += p.error[k];
            }
        }
        let mut scale = [0.0; N];
        let mut done = true;
        for k in 0..N {
            scale[k] = spec.abs_tol.max(spec.rel_tol * total[k].abs());
            if !(total_err[k] <= scale[k]) {
                done = false;
            }
        }
        if done {
            return Ok(Quadrature {
                value: total,
                abs_error: total_err,
                evaluations,
                subdivisions,
            });
        }
        if subdivisions >= spec.max_subdivisions {
            let worst = total_err.iter().cloned().fold(0.0, f64::max);
            return Err(Error::Integration {
                reason: format!("tolerance not met after {subdivisions} subdivisions"),
                abs_error: worst,
            });
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let w = (0..N).map(|k| p.error[k] / scale[k]).fold(0.0, f64::max);
                (i, w)
            })
            .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        let p = panels.swap_remove(idx);
        let mid = 0.5 * (p.a + p.b);
        if !(mid > p.a && mid < p.b) {
            return Err(Error::Integration {
                reason: "interval too small to bisect".into(),
                abs_error: p.error.iter().cloned().fold(0.0, f64::max),
            });
        }
        panels.push(gk21(&mut f, p.a, mid));
        panels.push(gk21(&mut f, mid, p.b));
        evaluations += 42;
        subdivisions += 1;
    }
}

/// Scalar convenience wrapper over [`integrate`] on `[a, b]`.
pub fn integrate_scalar<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let q = integrate(|x| [f(x)], &[lo, hi], spec)?;
    Ok(sign * q.value[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_weights_sum_to_two() {
        let s: f64 = 2.0 * WGK[..10].iter().sum::<f64>() + WGK[10];
        assert!((s - 2.0).abs() < 1e-15);
        let g: f64 = 2.0 * WG.iter().sum::<f64>();
        assert!((g - 2.0).abs() < 1e-15);
    }

    #[test]
    fn exact_for_high_degree_polynomials() {
        let spec = QuadratureSpec::default();
        // x^30 on [-1, 1] integrates to 2/31 with a single panel
        let p = gk21(&mut |x: f64| [x.powi(30)], -1.0, 1.0);
        assert!((p.value[0] - 2.0 / 31.0).abs() < 1e-15);
        let v = integrate_scalar(|x| 3.0 * x * x, 0.0, 2.0, &spec).unwrap();
        assert!((v - 8.0).abs() < 1e-13);
    }

    #[test]
    fn gaussian_integral_over_wide_window() {
        let spec = QuadratureSpec::default();
        let v = integrate_scalar(|x| (-0.5 * x * x).exp(), -15.0, 15.0, &spec).unwrap();
        assert!((v - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let spec = QuadratureSpec::default();
        let v = integrate_scalar(|x| x.cos(), 1.0, 0.0, &spec).unwrap();
        assert!((v + 1f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn vector_components_share_nodes() {
        let spec = QuadratureSpec::default();
        let q = integrate(|x| [1.0, x, x * x], &[0.0, 0.5, 1.0], &spec).unwrap();
        assert!((q.value[0] - 1.0).abs() < 1e-15);
        assert!((q.value[1] - 0.5).abs() < 1e-15);
        assert!((q.value[2] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn reports_failure_when_budget_exhausted() {
        let spec = QuadratureSpec::new(1e-14, 1e-14, 3).unwrap();
        let err = integrate_scalar(|x| (1.0 / x).sin(), 1e-6, 1.0, &spec).unwrap_err();
        assert!(matches!(err, Error::Integration { .. }));
    }

    #[test]
    fn rejects_bad_specs_and_breakpoints() {
        assert!(QuadratureSpec::new(0.0, 1e-10, 10).is_err());
        assert!(QuadratureSpec::new(1e-10, -1.0, 10).is_err());
        assert!(QuadratureSpec::new(1e-10, 1e-10, 0).is_err());
        let spec = QuadratureSpec::default();
        assert!(integrate(|x| [x], &[1.0, 0.0], &spec).is_err());
        assert!(integrate(|x| [x], &[1.0], &spec).is_err());
    }
}
