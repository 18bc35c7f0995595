//! Log-gamma, signed gamma and gamma ratios.
//!
//! `log_gamma` uses the Stirling series above 15 with upward recurrence
//! below, and a Taylor expansion around the zeros of ln Γ at 1 and 2 so
//! that relative accuracy holds there too.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;
const STIRLING_THRESHOLD: f64 = 15.0;

// ζ(2), ζ(3), ..., ζ(31)
const ZETA: [f64; 30] = [
    1.644_934_066_848_226_4,
    1.202_056_903_159_594_2,
    1.082_323_233_711_138_1,
    1.036_927_755_143_37,
    1.017_343_061_984_449_2,
    1.008_349_277_381_922_9,
    1.004_077_356_197_944_4,
    1.002_008_392_826_082_1,
    1.000_994_575_127_818,
    1.000_494_188_604_119_4,
    1.000_246_086_553_308,
    1.000_122_713_347_578_5,
    1.000_061_248_135_058_8,
    1.000_030_588_236_307,
    1.000_015_282_259_408_6,
    1.000_007_637_197_637_9,
    1.000_003_817_293_265,
    1.000_001_908_212_716_5,
    1.000_000_953_962_033_8,
    1.000_000_476_932_986_9,
    1.000_000_238_450_502_7,
    1.000_000_119_219_925_9,
    1.000_000_059_608_189,
    1.000_000_029_803_503_4,
    1.000_000_014_901_554_9,
    1.000_000_007_450_711_8,
    1.000_000_003_725_334,
    1.000_000_001_862_659_8,
    1.000_000_000_931_327_5,
    1.000_000_000_465_662_8,
];

// B_{2k} / (2k (2k-1)) for k = 1..8
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

// Taylor coefficients of 1/Γ(1+x) around 0.
const RGAMMA1P: [f64; 29] = [
    1.0,
    5.772_156_649_015_328_66e-1,
    -6.558_780_715_202_539_02e-1,
    -4.200_263_503_409_523_7e-2,
    1.665_386_113_822_914_79e-1,
    -4.219_773_455_554_433_34e-2,
    -9.621_971_527_876_973_03e-3,
    7.218_943_246_663_099_9e-3,
    -1.165_167_591_859_065_17e-3,
    -2.152_416_741_149_509_75e-4,
    1.280_502_823_881_161_96e-4,
    -2.013_485_478_078_823_87e-5,
    -1.250_493_482_142_670_63e-6,
    1.133_027_231_981_695_93e-6,
    -2.056_338_416_977_607_07e-7,
    6.116_095_104_481_416_09e-9,
    5.002_007_644_469_222_95e-9,
    -1.181_274_570_487_020_04e-9,
    1.043_426_711_691_100_54e-10,
    7.782_263_439_905_070_81e-12,
    -3.696_805_618_642_205_98e-12,
    5.100_370_287_454_475_75e-13,
    -2.058_326_053_566_506_64e-14,
    -5.348_122_539_423_017_82e-15,
    1.226_778_628_238_260_84e-15,
    -1.181_259_301_697_458_83e-16,
    1.186_692_254_751_600_37e-18,
    1.412_380_655_318_031_86e-18,
    -2.298_745_684_435_370_22e-19,
];

fn stirling(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut corr = 0.0;
    let mut p = inv;
    for c in STIRLING {
        corr += c * p;
        p *= inv2;
    }
    (x - 0.5) * x.ln() - x + HALF_LN_2PI + corr
}

fn zeta_int(k: usize) -> f64 {
    if k - 2 < ZETA.len() {
        ZETA[k - 2]
    } else {
        1.0 + (2..=12).map(|n| (n as f64).powi(-(k as i32))).sum::<f64>()
    }
}

/// ln Γ(1 + eps) for |eps| <= 1/2.
fn ln_gamma_1p_small(eps: f64) -> f64 {
    let mut sum = -EULER_GAMMA * eps;
    let mut p = -eps;
    for k in 2..80 {
        p *= -eps;
        let term = zeta_int(k) * p / k as f64;
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

fn ln_gamma_positive(x: f64) -> f64 {
    if x >= STIRLING_THRESHOLD {
        return stirling(x);
    }
    if x < 0.5 {
        return ln_gamma_1p_small(x) - x.ln();
    }
    if x < 1.5 {
        return ln_gamma_1p_small(x - 1.0);
    }
    // reduce to [1.5, 2.5) where ln Γ(2 + eps) = ln Γ(1 + eps) + ln(1 + eps)
    let mut y = x;
    let mut prod = 1.0;
    while y >= 2.5 {
        y -= 1.0;
        prod *= y;
    }
    let eps = y - 2.0;
    ln_gamma_1p_small(eps) + eps.ln_1p() + prod.ln()
}

/// ln Γ(x) for x > 0.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(
            "log_gamma",
            format!("x = {x} must be positive and finite"),
        ));
    }
    Ok(ln_gamma_positive(x))
}

/// sin(πx) with exact zeros at the integers.
pub fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (x / 2.0).round();
    let (r, sign) = if r < 0.0 { (-r, -1.0) } else { (r, 1.0) };
    let r = if r > 0.5 { 1.0 - r } else { r };
    sign * (PI * r).sin()
}

/// ln|Γ(x)| together with the sign of Γ(x), for any real x that is not a
/// non-positive integer.
pub fn ln_gamma_signed(x: f64) -> Result<(f64, f64)> {
    if !x.is_finite() {
        return Err(Error::domain("ln_gamma_signed", "non-finite argument"));
    }
    if x > 0.0 {
        return Ok((ln_gamma_positive(x), 1.0));
    }
    if x == x.floor() {
        return Err(Error::domain("ln_gamma_signed", format!("pole at x = {x}")));
    }
    // reflection: Γ(x) Γ(1-x) = π / sin(πx)
    let s = sin_pi(x);
    let lg = PI.ln() - s.abs().ln() - ln_gamma_positive(1.0 - x);
    Ok((lg, s.signum()))
}

/// Γ(x) for real x off the poles.
pub fn gamma(x: f64) -> Result<f64> {
    let (lg, sign) = ln_gamma_signed(x)?;
    Ok(sign * lg.exp())
}

/// Γ(a)/Γ(b), evaluated in log space.
pub fn gamma_ratio(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0) || !(b > 0.0) {
        return Err(Error::domain(
            "gamma_ratio",
            format!("arguments ({a}, {b}) must be positive"),
        ));
    }
    if a == b {
        return Ok(1.0);
    }
    Ok((ln_gamma_positive(a) - ln_gamma_positive(b)).exp())
}

/// Temme's auxiliary functions for |mu| <= 1/2:
/// γ1 = (1/Γ(1-μ) - 1/Γ(1+μ)) / (2μ), γ2 = (1/Γ(1-μ) + 1/Γ(1+μ)) / 2.
pub(crate) fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    let mut odd = 0.0;
    let mut even = 0.0;
    let m2 = mu * mu;
    let mut p = 1.0;
    for (k, c) in RGAMMA1P.iter().enumerate() {
        if k % 2 == 0 {
            even += c * p;
        } else {
            odd += c * p;
            p *= m2;
        }
    }
    // 1/Γ(1+μ) = even + μ·odd, 1/Γ(1-μ) = even - μ·odd
    let gampl = even + mu * odd;
    let gammi = even - mu * odd;
    (-odd, even, gampl, gammi)
}

/// Digamma ψ(x) = Γ'(x)/Γ(x) off the poles.
pub fn digamma(x: f64) -> Result<f64> {
    if !x.is_finite() || (x <= 0.0 && x == x.floor()) {
        return Err(Error::domain("digamma", format!("x = {x} is a pole or non-finite")));
    }
    if x < 0.0 {
        // ψ(x) = ψ(1 − x) − π cot(πx)
        let r = x - x.floor();
        let cot = (PI * r).cos() / (PI * r).sin();
        return Ok(digamma(1.0 - x)? - PI * cot);
    }
    let mut y = x;
    let mut acc = 0.0;
    while y < 10.0 {
        acc -= 1.0 / y;
        y += 1.0;
    }
    // ln y − 1/(2y) − Σ B_{2k}/(2k y^{2k})
    const C: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 120.0,
        1.0 / 252.0,
        -1.0 / 240.0,
        1.0 / 132.0,
        -691.0 / 32760.0,
        1.0 / 12.0,
    ];
    let inv2 = 1.0 / (y * y);
    let mut series = 0.0;
    for c in C.iter().rev() {
        series = series * inv2 + c;
    }
    Ok(acc + y.ln() - 0.5 / y - series * inv2)
}

/// ln B(a, b).
pub fn ln_beta(a: f64, b: f64) -> Result<f64> {
    Ok(log_gamma(a)? + log_gamma(b)? - log_gamma(a + b)?)
}
