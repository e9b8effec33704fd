//! Special functions: the imaginary error function and log-factorials.

use crate::error::{Error, Result};

/// Largest |x| accepted by [`erfi`].
pub const ERFI_SUPPORT: f64 = 10.0;

const TWO_OVER_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// Unevaluated sum `hi + lo` with |lo| <= ulp(hi)/2.
#[derive(Debug, Clone, Copy, Default)]
struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        let err = (a - (s - bb)) + (b - bb);
        Self { hi: s, lo: err }
    }

    fn quick_two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        Self { hi: s, lo: b - (s - a) }
    }

    fn add(self, other: Self) -> Self {
        let s = Self::two_sum(self.hi, other.hi);
        let t = Self::two_sum(self.lo, other.lo);
        let s = Self::quick_two_sum(s.hi, s.lo + t.hi);
        Self::quick_two_sum(s.hi, s.lo + t.lo)
    }

    fn mul_f64(self, b: f64) -> Self {
        let p = self.hi * b;
        let err = self.hi.mul_add(b, -p);
        Self::quick_two_sum(p, err + self.lo * b)
    }

    fn div_f64(self, b: f64) -> Self {
        let q1 = self.hi / b;
        // remainder self - q1*b, computed exactly in the leading part
        let p = q1 * b;
        let p_err = q1.mul_add(b, -p);
        let r = Self::two_sum(self.hi, -p);
        let rem = r.hi + (r.lo - p_err + self.lo);
        Self::quick_two_sum(q1, rem / b)
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Imaginary error function `erfi(x) = -i erf(ix)`.
///
/// Evaluated from the Maclaurin series `2/sqrt(pi) * sum x^(2k+1) / (k! (2k+1))`.
/// Terms and partial sums are carried in double-double arithmetic; every term
/// has the sign of `x`, so there is no cancellation and the result is good to
/// a few ulp on the whole support.
pub fn erfi(x: f64) -> Result<f64> {
    if !x.is_finite() || x.abs() > ERFI_SUPPORT {
        return Err(Error::OutOfSupport { x, limit: ERFI_SUPPORT });
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let x2 = x * x;
    // power_k = x^(2k+1)/k!
    let mut power = DoubleDouble::from_f64(x);
    let mut sum = power;
    for k in 1..2000u32 {
        power = power.mul_f64(x2).div_f64(f64::from(k));
        let term = power.div_f64(f64::from(2 * k + 1));
        sum = sum.add(term);
        if f64::from(k) > x2 && term.hi.abs() < 1e-34 * sum.hi.abs() {
            break;
        }
    }
    Ok(TWO_OVER_SQRT_PI * sum.to_f64())
}

/// The series truncated to exactly `terms` terms.
pub fn erfi_series(x: f64, terms: usize) -> f64 {
    let x2 = x * x;
    let mut power = DoubleDouble::from_f64(x);
    let mut sum = DoubleDouble::default();
    for k in 0..terms {
        if k > 0 {
            power = power.mul_f64(x2).div_f64(k as f64);
        }
        sum = sum.add(power.div_f64((2 * k + 1) as f64));
    }
    TWO_OVER_SQRT_PI * sum.to_f64()
}

/// `ln n!`: exact products below 30, Stirling's series above.
pub fn ln_factorial(n: u64) -> f64 {
    if n < 30 {
        let mut f = 1.0f64;
        for i in 2..=n {
            f *= i as f64;
        }
        return f.ln();
    }
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0))));
    x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln() + series
}

/// `ln C(n, k)`; negative infinity when `k < 0` or `k > n` (the binomial is zero).
pub fn log_binomial(n: u64, k: i64) -> f64 {
    if k < 0 || k as u64 > n {
        return f64::NEG_INFINITY;
    }
    let k = k as u64;
    if k == 0 || k == n {
        return 0.0;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Poisson probability mass `e^-mean mean^n / n!`, evaluated in log space.
pub fn poisson_pmf(n: u64, mean: f64) -> f64 {
    if mean == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    (n as f64 * mean.ln() - mean - ln_factorial(n)).exp()
}

/// `sum_{n <= n_max} c(n) e^mean Pois(n; mean) = sum c(n) mean^n / n!`.
///
/// The Poisson normalization `e^-mean` is divided out, so the sum carries no
/// exponential prefactor. Terms and partial sums use double-double
/// arithmetic; with alternating `c` the cancellation costs no accuracy.
pub fn scaled_poisson_sum(mean: f64, n_max: u64, c: impl Fn(u64) -> f64) -> f64 {
    let mut term = DoubleDouble::from_f64(1.0);
    let mut sum = DoubleDouble::default();
    for n in 0..=n_max {
        if n > 0 {
            term = term.mul_f64(mean).div_f64(n as f64);
        }
        let cn = c(n);
        if cn != 0.0 {
            sum = sum.add(term.mul_f64(cn));
        }
    }
    sum.to_f64()
}
