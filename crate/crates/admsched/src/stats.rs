//! Small statistics helpers used by tests, detectors, and the oracle battery.

use num_bigint::BigUint;
use num_traits::ToPrimitive;

/// Natural log of an arbitrary-precision positive integer.
pub fn big_ln(x: &BigUint) -> f64 {
    assert!(!num_traits::Zero::is_zero(x), "log of zero");
    let bits = x.bits();
    if bits <= 64 {
        return (x.to_u64().unwrap() as f64).ln();
    }
    // top 64 bits carry full f64 precision; the rest is exponent
    let top = (x >> (bits - 64)).to_u64().unwrap();
    (top as f64).ln() + (bits - 64) as f64 * std::f64::consts::LN_2
}

/// `num/den` as f64 for 0 <= num <= den, accurate to an ulp even when both
/// exceed f64 range.
pub fn big_ratio_f64(num: &BigUint, den: &BigUint) -> f64 {
    assert!(!num_traits::Zero::is_zero(den), "zero denominator");
    assert!(num <= den, "ratio above one");
    let scaled = (num << 64u32) / den;
    scaled.to_f64().unwrap() / 2.0f64.powi(64)
}

/// Least-squares line fit. Returns `(slope, r_squared)`.
///
/// Degenerate inputs follow the conventions used by the stability detectors:
/// fewer than two points, or a constant response, fit slope 0 with R^2 = 0.
pub fn linear_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    if points.len() < 2 {
        return (0.0, 0.0);
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for &(x, y) in points {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return (0.0, 0.0);
    }
    let slope = sxy / sxx;
    let r2 = (sxy * sxy) / (sxx * syy);
    (slope, r2)
}

/// Mean of a slice; 0 for empty input.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard error of the mean; 0 for fewer than two points.
pub fn std_error(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Pearson chi-square statistic against given expected cell counts.
///
/// Cells with zero expectation must have zero observations; this panics
/// otherwise since it indicates a broken test setup.
pub fn chi_square_stat(observed: &[u64], expected: &[f64]) -> f64 {
    assert_eq!(observed.len(), expected.len());
    let mut stat = 0.0;
    for (&o, &e) in observed.iter().zip(expected) {
        if e == 0.0 {
            assert_eq!(o, 0, "observation in zero-probability cell");
            continue;
        }
        let d = o as f64 - e;
        stat += d * d / e;
    }
    stat
}

/// Upper quantile of the chi-square distribution via the Wilson-Hilferty cube
/// approximation. Relative error is below 0.5% for df >= 10, which is ample
/// for the goodness-of-fit gates in this crate (all df >= 20, significance
/// 1e-3, statistics far from the boundary under the null).
pub fn chi_square_critical(df: usize, significance: f64) -> f64 {
    assert!(df >= 1);
    assert!(significance > 0.0 && significance < 1.0);
    let z = normal_quantile(1.0 - significance);
    let k = df as f64;
    let t = 1.0 - 2.0 / (9.0 * k) + z * (2.0 / (9.0 * k)).sqrt();
    k * t * t * t
}

/// Standard normal quantile (Acklam's rational approximation, |error| < 1.2e-9).
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0);
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -normal_quantile(1.0 - p)
    }
}

/// Kolmogorov-Smirnov distance between a sample and the uniform law on [0, 1).
pub fn ks_distance_uniform(sample: &[f64]) -> f64 {
    if sample.is_empty() {
        return 0.0;
    }
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let hi = (i as f64 + 1.0) / n - x;
        let lo = x - i as f64 / n;
        d = d.max(hi).max(lo);
    }
    d
}
