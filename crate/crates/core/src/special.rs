//! Scalar special functions: the standard normal density and distribution
//! function, Owen's T function, and the ratio `φ(z)/Φ(z)`.

use std::f64::consts::PI;

use crate::error::{ensure_finite, Result};
use crate::quadrature::{integrate_scalar, QuadratureSpec};

/// `1/sqrt(2π)`
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_677_939_946_059_934;
/// `ln(sqrt(2π))`
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_741_780_329_736_406;

/// Below this argument `φ/Φ` switches from the direct ratio to a continued fraction.
const MILLS_SWITCH: f64 = -12.0;

pub fn std_normal_pdf(z: f64) -> Result<f64> {
    ensure_finite("z", z)?;
    Ok(phi(z))
}

pub fn std_normal_cdf(z: f64) -> Result<f64> {
    ensure_finite("z", z)?;
    Ok(cdf(z))
}

/// `ln Φ(z)`, accurate deep into the lower tail where `Φ` itself underflows.
pub fn log_std_normal_cdf(z: f64) -> Result<f64> {
    ensure_finite("z", z)?;
    Ok(log_cdf(z))
}

/// Owen's T function `T(h, a) = (1/2π) ∫₀^a exp(-h²(1+x²)/2)/(1+x²) dx`.
pub fn owens_t(h: f64, a: f64) -> Result<f64> {
    ensure_finite("h", h)?;
    ensure_finite("a", a)?;
    owens_t_nonneg(h.abs(), a.abs()).map(|t| if a < 0.0 { -t } else { t })
}

/// `φ(z)/Φ(z)` without `0/0` in the lower tail.
pub fn mills_ratio(z: f64) -> Result<f64> {
    ensure_finite("z", z)?;
    Ok(mills(z))
}

#[inline]
pub(crate) fn phi(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
}

#[inline]
pub(crate) fn log_phi(z: f64) -> f64 {
    -0.5 * z * z - LN_SQRT_2PI
}

/// `Φ(z)` by Cody's rational Chebyshev approximations.
pub(crate) fn cdf(z: f64) -> f64 {
    if z <= 0.0 {
        lower_tail(-z)
    } else {
        1.0 - lower_tail(z)
    }
}

/// `Φ(-y)` for `y >= 0`, with full relative accuracy.
fn lower_tail(y: f64) -> f64 {
    const A: [f64; 5] = [
        2.235_252_035_460_683_928_7,
        161.028_231_068_555_878_81,
        1_067.689_485_460_370_958_2,
        18_154.981_253_343_561_249,
        0.065_682_337_918_207_449_113,
    ];
    const B: [f64; 4] = [
        47.202_581_904_688_241_87,
        976.098_551_737_776_693_22,
        10_260.932_208_618_978_205,
        45_507.789_335_026_729_956,
    ];
    const C: [f64; 9] = [
        0.398_941_512_088_134_667_64,
        8.883_149_794_388_375_941_2,
        93.506_656_132_177_855_979,
        597.270_276_394_800_262_26,
        2_494.537_585_290_372_671_1,
        6_848.190_450_536_282_332_6,
        11_602.651_437_647_350_124,
        9_842.714_838_383_978_021_8,
        1.076_557_677_372_019_231_7e-8,
    ];
    const D: [f64; 8] = [
        22.266_688_044_328_115_691,
        235.387_901_782_624_998_61,
        1_519.377_599_407_554_805,
        6_485.558_298_266_760_755,
        18_615.571_640_885_098_091,
        34_900.952_721_145_977_266,
        38_912.003_286_093_271_411,
        19_685.429_676_859_990_727,
    ];
    const P: [f64; 6] = [
        0.215_898_534_057_956_99,
        0.127_401_161_160_247_363_9,
        0.022_235_277_870_649_807,
        0.001_421_619_193_227_893_466,
        2.911_287_495_116_879_2e-5,
        0.023_073_441_764_940_173_03,
    ];
    const Q: [f64; 5] = [
        1.284_260_096_144_911_21,
        0.468_238_212_480_865_118,
        0.065_988_137_868_928_551_5,
        0.003_782_396_332_027_582_44,
        7.297_515_550_839_662_05e-5,
    ];
    const SQRT32: f64 = 5.656_854_249_492_380_195_2;

    if y <= 0.674_489_75 {
        let (mut xnum, mut xden) = (0.0, 0.0);
        if y > 0.5 * f64::EPSILON {
            let xsq = y * y;
            xnum = A[4] * xsq;
            xden = xsq;
            for i in 0..3 {
                xnum = (xnum + A[i]) * xsq;
                xden = (xden + B[i]) * xsq;
            }
        }
        return 0.5 - y * (xnum + A[3]) / (xden + B[3]);
    }

    if y <= SQRT32 {
        let mut xnum = C[8] * y;
        let mut xden = y;
        for i in 0..7 {
            xnum = (xnum + C[i]) * y;
            xden = (xden + D[i]) * y;
        }
        let temp = (xnum + C[7]) / (xden + D[7]);
        split_exp(y) * temp
    } else {
        let xsq = 1.0 / (y * y);
        let mut xnum = P[5] * xsq;
        let mut xden = xsq;
        for i in 0..4 {
            xnum = (xnum + P[i]) * xsq;
            xden = (xden + Q[i]) * xsq;
        }
        let mut temp = xsq * (xnum + P[4]) / (xden + Q[4]);
        temp = (FRAC_1_SQRT_2PI - temp) / y;
        split_exp(y) * temp
    }
}

/// `exp(-y²/2)` with the argument split to keep relative accuracy for large `y`.
#[inline]
fn split_exp(y: f64) -> f64 {
    let xsq = (y * 16.0).trunc() / 16.0;
    let del = (y - xsq) * (y + xsq);
    (-xsq * xsq * 0.5).exp() * (-del * 0.5).exp()
}

pub(crate) fn log_cdf(z: f64) -> f64 {
    if z < MILLS_SWITCH {
        log_phi(z) - mills(z).ln()
    } else if z <= 0.0 {
        cdf(z).ln()
    } else {
        (-cdf(-z)).ln_1p()
    }
}

pub(crate) fn mills(z: f64) -> f64 {
    if z >= MILLS_SWITCH {
        return phi(z) / cdf(z);
    }
    // φ(z)/Φ(z) = x + 1/(x + 2/(x + 3/(x + ...))), x = -z
    let x = -z;
    let mut t = x;
    for k in (1..=40).rev() {
        t = x + k as f64 / t;
    }
    t
}

fn owens_t_nonneg(h: f64, a: f64) -> Result<f64> {
    if a == 0.0 {
        return Ok(0.0);
    }
    if a <= 1.0 {
        return owens_t_core(h, a);
    }
    // T(h,a) + T(ah,1/a) = ½Φ(h) + ½Φ(ah) − Φ(h)Φ(ah), h ≥ 0
    let ah = a * h;
    let head = 0.5 * (cdf(h) * cdf(-ah) + cdf(ah) * cdf(-h));
    Ok(head - owens_t_core(ah, 1.0 / a)?)
}

/// Defining integral for `h >= 0`, `0 < a <= 1`, with `exp(-h²/2)` factored out.
fn owens_t_core(h: f64, a: f64) -> Result<f64> {
    let outer = (-0.5 * h * h).exp();
    if outer == 0.0 {
        return Ok(0.0);
    }
    let spec = QuadratureSpec {
        abs_tol: 1e-300,
        rel_tol: 1e-13,
        max_subdivisions: 200,
    };
    let h2 = 0.5 * h * h;
    let inner = integrate_scalar(|x| (-h2 * x * x).exp() / (1.0 + x * x), 0.0, a, &spec)?;
    Ok(outer * inner / (2.0 * PI))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn pdf_values() {
        assert!((std_normal_pdf(0.0).unwrap() - 0.398_942_280_4).abs() < 1e-10);
        assert!((std_normal_pdf(1.0).unwrap() - 0.241_970_724_519_143_35).abs() < 1e-16);
        assert_eq!(std_normal_pdf(-1.0).unwrap(), std_normal_pdf(1.0).unwrap());
        assert!(std_normal_pdf(f64::NAN).is_err());
    }

    #[test]
    fn cdf_against_high_precision_values() {
        // mpmath ncdf at 40 digits
        let table = [
            (-37.0, 5.725_571_222_524_576_822_7e-300),
            (-30.0, 4.906_713_927_148_187_059_5e-198),
            (-20.0, 2.753_624_118_606_233_695_1e-89),
            (-12.5, 3.732_564_298_877_713_377_2e-36),
            (-8.0, 6.220_960_574_271_784_123_5e-16),
            (-3.0, 0.001_349_898_031_630_094_526_7),
            (-1.5, 0.066_807_201_268_858_066_004),
            (-0.5, 0.308_537_538_725_986_896_36),
            (0.0, 0.5),
            (0.3, 0.617_911_422_188_952_633_07),
            (0.67, 0.748_571_104_904_689_898_45),
            (1.0, 0.841_344_746_068_542_948_59),
            (1.96, 0.975_002_104_851_779_563_79),
            (3.0, 0.998_650_101_968_369_905_47),
            (5.5, 0.999_999_981_010_437_534_11),
            (8.0, 0.999_999_999_999_999_377_9),
        ];
        for (z, want) in table {
            let got = std_normal_cdf(z).unwrap();
            assert!(rel(got, want) <= 1e-14, "z={z}: {got:e} vs {want:e}");
        }
        assert!((std_normal_cdf(40.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cdf_reflection_on_grid() {
        for i in -400..=400 {
            let z = i as f64 * 0.025;
            let s = std_normal_cdf(z).unwrap() + std_normal_cdf(-z).unwrap();
            assert!((s - 1.0).abs() < 1e-14, "z={z}");
        }
    }

    #[test]
    fn cdf_is_monotone() {
        let mut prev = 0.0;
        for i in -3000..=3000 {
            let v = std_normal_cdf(i as f64 * 0.0125).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn owens_t_anchor_values() {
        assert_eq!(owens_t(5.0, 0.0).unwrap(), 0.0);
        assert!((owens_t(0.0, 1.0).unwrap() - 0.125).abs() < 1e-14);
        let p = cdf(1.0);
        assert!((owens_t(1.0, 1.0).unwrap() - 0.5 * p * (1.0 - p)).abs() < 1e-14);
        assert!((owens_t(1.0, 1.0).unwrap() - 0.066_741_8).abs() < 1e-7);
    }

    #[test]
    fn owens_t_against_direct_quadrature_oracle() {
        // mpmath quad of the defining integral at 40 digits
        let table = [
            (0.5, 0.3, 0.040_786_707_344_250_106_025),
            (1.0, 0.5, 0.043_064_691_120_785_365_632),
            (2.0, 0.9, 0.010_928_598_829_162_457_005),
            (0.3, 3.0, 0.179_083_797_215_505_279_67),
            (1.5, 2.0, 0.033_383_245_362_167_338_326),
            (3.0, 10.0, 0.000_674_949_015_815_047_263_33),
            (0.1, 50.0, 0.230_086_080_937_209_611_6),
            (5.0, 0.5, 1.419_254_962_106_927_171_9e-7),
            (8.0, 2.0, 3.110_480_287_135_892_061_8e-16),
            (-1.2, -0.7, -0.042_797_442_603_088_490_411),
        ];
        for (h, a, want) in table {
            let got = owens_t(h, a).unwrap();
            assert!((got - want).abs() < 1e-13 && rel(got, want) < 1e-10, "T({h},{a}) = {got:e} vs {want:e}");
        }
    }

    #[test]
    fn owens_t_symmetries_on_grid() {
        for i in 0..50 {
            for j in 0..50 {
                let h = -5.0 + 10.0 * i as f64 / 49.0;
                let a = -5.0 + 10.0 * j as f64 / 49.0;
                let t = owens_t(h, a).unwrap();
                assert!((t - owens_t(-h, a).unwrap()).abs() < 1e-12);
                assert_eq!(owens_t(h, -a).unwrap(), -t);
            }
        }
    }

    #[test]
    fn owens_t_rejects_non_finite() {
        assert!(owens_t(f64::NAN, 1.0).is_err());
        assert!(owens_t(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn mills_ratio_values() {
        let table = [
            (-38.0, 38.026_279_466_575_868_988),
            (-30.0, 30.033_259_667_433_677_037),
            (-25.0, 25.039_873_012_057_562_583),
            (-15.0, 15.066_086_827_167_822_035),
            (-12.1, 12.181_552_403_709_137_988),
            (-11.9, 11.982_886_633_486_248_414),
            (-5.0, 5.186_503_967_125_842_115_6),
            (-1.0, 1.525_135_276_160_981_209_1),
            (0.0, 0.797_884_560_802_865_355_88),
            (2.0, 0.055_247_862_678_989_959_102),
            (5.0, 1.486_719_940_904_905_712_4e-6),
            (10.0, 7.694_598_626_706_419_346_3e-23),
            (30.0, 1.473_646_134_878_547_519e-196),
        ];
        for (z, want) in table {
            let got = mills_ratio(z).unwrap();
            assert!(rel(got, want) < 1e-12, "z={z}: {got:e} vs {want:e}");
        }
    }

    #[test]
    fn mills_ratio_matches_naive_ratio_where_safe() {
        for i in 0..=2480 {
            let z = -25.0 + i as f64 * 0.025;
            let naive = phi(z) / cdf(z);
            assert!(rel(mills(z), naive) < 1e-10, "z={z}");
        }
    }

    #[test]
    fn mills_ratio_positive_and_decreasing() {
        let mut prev = f64::INFINITY;
        for i in 0..=7500 {
            let z = -40.0 + i as f64 * 0.01;
            let m = mills(z);
            assert!(m > 0.0 && m < prev, "z={z}");
            prev = m;
        }
    }

    #[test]
    fn log_cdf_matches_log_of_cdf() {
        for i in -300..=300 {
            let z = i as f64 * 0.1;
            assert!((log_cdf(z) - cdf(z).ln()).abs() < 1e-12 * (1.0 + cdf(z).ln().abs()), "z={z}");
        }
        // far tail where Φ underflows
        let l = log_cdf(-60.0);
        let asym = -1800.0 - 60f64.ln() - LN_SQRT_2PI + (1.0 - 1.0 / 3600.0 + 3.0 / 3600f64.powi(2)).ln();
        assert!((l - asym).abs() < 1e-9);
    }
}
