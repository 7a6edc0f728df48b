//! `ln` and `exp` built only from IEEE-754 basic operations, so that
//! generator draws do not depend on the platform math library.

const LN2_HI: f64 = 6.931_471_803_691_238_2e-1;
const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;

/// Natural logarithm for finite `x > 0`.
pub(crate) fn ln(x: f64) -> f64 {
    debug_assert!(x > 0.0 && x.is_finite());
    let mut x = x;
    let mut e: i64 = 0;
    if x < f64::MIN_POSITIVE {
        x *= 2f64.powi(54);
        e -= 54;
    }
    let bits = x.to_bits();
    e += ((bits >> 52) & 0x7ff) as i64 - 1023;
    let mut m = f64::from_bits((bits & 0x000f_ffff_ffff_ffff) | 0x3ff0_0000_0000_0000);
    // m in [1, 2); shift to [sqrt(1/2), sqrt(2))
    if m > std::f64::consts::SQRT_2 {
        m *= 0.5;
        e += 1;
    }
    // ln(m) = 2 atanh(s), s = (m-1)/(m+1), |s| < 0.172
    let s = (m - 1.0) / (m + 1.0);
    let s2 = s * s;
    let mut term = s;
    let mut sum = 0.0;
    let mut k = 1.0;
    while k < 60.0 {
        let add = term / k;
        sum += add;
        if add.abs() < 1e-18 * sum.abs() {
            break;
        }
        term *= s2;
        k += 2.0;
    }
    let ef = e as f64;
    ef * LN2_HI + (2.0 * sum + ef * LN2_LO)
}

/// Exponential for finite `x`; underflows to 0 below about -745.
pub(crate) fn exp(x: f64) -> f64 {
    if x < -745.2 {
        return 0.0;
    }
    if x > 709.7 {
        return f64::INFINITY;
    }
    let n = (x / std::f64::consts::LN_2).round();
    let r = (x - n * LN2_HI) - n * LN2_LO;
    // Taylor series on |r| <= ln2/2
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while k < 30.0 {
        term *= r / k;
        sum += term;
        if term.abs() < 1e-18 {
            break;
        }
        k += 1.0;
    }
    let n = n as i32;
    // split the scaling to stay clear of overflow/underflow in 2^n
    let half = n / 2;
    sum * 2f64.powi(half) * 2f64.powi(n - half)
}
