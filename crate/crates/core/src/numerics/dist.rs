#![allow(clippy::excessive_precision)]

use super::NumericsError;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + LANCZOS_G + 0.5;
    let series = LANCZOS[1..]
        .iter()
        .enumerate()
        .fold(LANCZOS[0], |acc, (i, c)| acc + c / (x + (i + 1) as f64));
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + series.ln()
}

/// Shapes at or above this use Stirling's series for the gamma ratios.
const STIRLING_MIN: f64 = 15.0;

/// `ln Γ(z) − [(z − ½) ln z − z + ½ ln 2π]` for `z ≥ STIRLING_MIN`.
fn stirling_correction(z: f64) -> f64 {
    let z2 = 1.0 / (z * z);
    (1.0 / 12.0
        + z2 * (-1.0 / 360.0 + z2 * (1.0 / 1260.0 + z2 * (-1.0 / 1680.0 + z2 * (1.0 / 1188.0)))))
        / z
}

/// `ln[x^a (1−x)^b / B(a, b)]`.
///
/// Large shapes are combined analytically so the huge `ln Γ` terms never
/// cancel numerically; this keeps the result near full precision for shapes
/// up to ~1e4.
fn ln_prefactor(a: f64, b: f64, x: f64) -> f64 {
    let y = 1.0 - x;
    match (a >= STIRLING_MIN, b >= STIRLING_MIN) {
        (true, true) => {
            let s = a + b;
            // x s / a = 1 + (x b − y a) / a, and symmetrically for b
            let d = x.mul_add(b, -(y * a));
            0.5 * (a * b / (2.0 * std::f64::consts::PI * s)).ln()
                + a * (d / a).ln_1p()
                + b * (-d / b).ln_1p()
                + stirling_correction(s)
                - stirling_correction(a)
                - stirling_correction(b)
        }
        (true, false) => large_small(a, b, x, y),
        (false, true) => large_small(b, a, y, x),
        (false, false) => a * x.ln() + b * y.ln() + ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b),
    }
}

/// Prefactor with `big` ≥ STIRLING_MIN paired to `xb`, `small` paired to `xs`.
fn large_small(big: f64, small: f64, xb: f64, xs: f64) -> f64 {
    let s = big + small;
    // ln Γ(s) − ln Γ(big) via Stirling, without forming either term
    let ratio = (big - 0.5) * (small / big).ln_1p() + small * s.ln() - small
        + stirling_correction(s)
        - stirling_correction(big);
    big * xb.ln() + small * xs.ln() + ratio - ln_gamma(small)
}

/// Regularized incomplete beta `I_x(a, b)`.
///
/// Continued fraction (modified Lentz), evaluated directly when
/// `x < (a + 1) / (a + b + 2)` and through `1 − I_{1−x}(b, a)` otherwise.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> Result<f64, NumericsError> {
    if !(a > 0.0 && a.is_finite()) || !(b > 0.0 && b.is_finite()) {
        return Err(NumericsError::Domain(format!(
            "incomplete beta shape parameters must be positive, got ({a}, {b})"
        )));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(NumericsError::Domain(format!(
            "incomplete beta argument {x} outside [0, 1]"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let ln_front = ln_prefactor(a, b, x);
    let value = if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_cf(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_cf(b, a, 1.0 - x) / b
    };
    Ok(value.clamp(0.0, 1.0))
}

fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    const MAX_ITER: usize = 20_000;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let guard = |v: f64| if v.abs() < TINY { TINY } else { v };

    let mut c = 1.0;
    let mut d = 1.0 / guard(1.0 - qab * x / qap);
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / guard(1.0 + aa * d);
        c = guard(1.0 + aa / c);
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / guard(1.0 + aa * d);
        c = guard(1.0 + aa / c);
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Two-sided p-value of a t statistic with `df` degrees of freedom.
pub fn t_p_two_sided(t: f64, df: usize) -> Result<f64, NumericsError> {
    if df == 0 {
        return Err(NumericsError::Domain("t distribution needs df >= 1".into()));
    }
    if t.is_nan() {
        return Err(NumericsError::Domain("t statistic is NaN".into()));
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    let df = df as f64;
    regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))
}

/// Upper-tail probability `P(F ≥ f)` for an F(df1, df2) variable.
pub fn f_p_upper(f: f64, df1: usize, df2: usize) -> Result<f64, NumericsError> {
    if df1 == 0 || df2 == 0 {
        return Err(NumericsError::Domain("F distribution needs df >= 1".into()));
    }
    if f.is_nan() || f < 0.0 {
        return Err(NumericsError::Domain(format!(
            "F statistic {f} must be >= 0"
        )));
    }
    if f.is_infinite() {
        return Ok(0.0);
    }
    let (d1, d2) = (df1 as f64, df2 as f64);
    regularized_incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f))
}
