//! Numerical forms of the two auxiliary estimates behind the false-alarm
//! asymptotics: the second-order remainder of the binomial expansion and
//! `1 - (1 - z)^(N²)` for `z = N^(-2 C lambda)`.
//!
//! Logarithms are natural throughout.

use serde::Serialize;

use crate::error::{Error, Result};

/// Both sides of `|(1+x)^n - 1 - n x| <= n(n-1)/2 |x|^2 (1+|x|)^(n-2)`.
pub fn binomial_remainder_bound(x: f64, n: u32) -> Result<(f64, f64)> {
    if !(x.abs() < 1.0) {
        return Err(Error::Domain(format!("|x| must be below 1, got {x}")));
    }
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    if n == 1 {
        return Ok((0.0, 0.0));
    }
    let nf = f64::from(n);
    // (1+x)^n - 1 - nx >= 0 by convexity.
    let lhs = if x >= 0.0 || n <= 8 || (nf - 1.0) * x.abs() < 0.5 {
        // sum_{k>=2} C(n,k) x^k: positive terms, few terms, or alternating
        // ones that shrink at least geometrically; n = 2 then equals rhs exactly
        let mut term = nf * (nf - 1.0) / 2.0 * x * x;
        let mut sum = term;
        for k in 3..=n {
            term *= f64::from(n - k + 1) / f64::from(k) * x;
            sum += term;
            if term.abs() <= 1e-17 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        (nf * x.ln_1p()).exp_m1() - nf * x
    };
    let rhs = nf * (nf - 1.0) / 2.0 * x * x * (1.0 + x.abs()).powi(n as i32 - 2);
    Ok((lhs.abs(), rhs))
}

/// `N^(2(1 - C lambda))`, the leading false-alarm term.
pub fn false_alarm_leading(n: f64, c: f64, lambda: f64) -> f64 {
    n.powf(2.0 * (1.0 - c * lambda))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FalseAlarmAsymptotics {
    pub exact: f64,
    pub leading: f64,
    pub ratio: f64,
    /// `exact - leading`.
    pub remainder: f64,
}

/// `1 - (1 - z_N)^(N²)` against its leading term, with
/// `z_N = exp(-lambda * C * ln N²)`.
pub fn false_alarm_exact_vs_leading(n: f64, c: f64, lambda: f64) -> Result<FalseAlarmAsymptotics> {
    if !(c > 0.0 && lambda > 0.0) {
        return Err(Error::Domain("C and lambda must be positive".into()));
    }
    if !(c * lambda > 1.0) {
        return Err(Error::Domain(format!("C * lambda = {} must exceed 1", c * lambda)));
    }
    if !(n >= 2.0) {
        return Err(Error::Domain(format!("N must be at least 2, got {n}")));
    }
    let ln_n = n.ln();
    let sites = n * n;
    let z = (-2.0 * c * lambda * ln_n).exp();
    // u = N² ln(1 - z); exact = -expm1(u)
    let u = sites * (-z).ln_1p();
    let exact = -u.exp_m1();
    let leading = false_alarm_leading(n, c, lambda);
    // exact - leading = -expm1(u) - N² z, expanded where cancellation bites
    let remainder = if u.abs() < 1e-3 {
        let w = u + sites * z; // = N² (ln(1-z) + z) = -N² (z²/2 + z³/3 + ...)
        let ln_part = if z < 1e-4 {
            -sites * z * z * (0.5 + z / 3.0 + z * z / 4.0)
        } else {
            w
        };
        // -expm1(u) = -u - u²/2 - u³/6 - ...
        -ln_part - u * u / 2.0 - u * u * u / 6.0 - u.powi(4) / 24.0
    } else {
        exact - leading
    };
    Ok(FalseAlarmAsymptotics { exact, leading, ratio: exact / leading, remainder })
}
