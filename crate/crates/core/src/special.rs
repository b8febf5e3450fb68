//! Special functions shared by the spectral and analytic routines.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Below this magnitude `coth` is evaluated from its Laurent expansion.
pub const COTH_SERIES_THRESHOLD: f64 = 1e-4;

/// Largest `n` accepted by [`bernoulli_even`] (returns up to `B_60`).
pub const BERNOULLI_MAX_INDEX: usize = 30;

/// Hyperbolic cotangent with a cancellation-free small-argument branch.
///
/// `coth(0)` is a pole and is reported as a domain error; callers that need
/// the removable product `x coth x` should use [`x_coth_x`].
pub fn coth_stable(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("coth of non-finite argument {x}")));
    }
    if x == 0.0 {
        return Err(Error::Domain("coth has a pole at 0".into()));
    }
    let a = x.abs();
    let value = if a < COTH_SERIES_THRESHOLD {
        let a2 = a * a;
        1.0 / a + a / 3.0 - a * a2 / 45.0
    } else {
        1.0 / a.tanh()
    };
    Ok(value.copysign(x))
}

/// `x coth(x)`, continued to 1 at the origin. Even in `x`, never below 1.
pub fn x_coth_x(x: f64) -> f64 {
    let a = x.abs();
    if a < COTH_SERIES_THRESHOLD {
        let a2 = a * a;
        1.0 + a2 / 3.0 - a2 * a2 / 45.0
    } else {
        a / a.tanh()
    }
}

fn bernoulli_table() -> &'static [BigRational] {
    static TABLE: OnceLock<Vec<BigRational>> = OnceLock::new();
    TABLE.get_or_init(|| {
        // Akiyama-Tanigawa. It yields B_1 = +1/2, which does not matter here:
        // only even indices are kept.
        let top = 2 * BERNOULLI_MAX_INDEX;
        let mut row: Vec<BigRational> = Vec::with_capacity(top + 1);
        let mut out = Vec::with_capacity(BERNOULLI_MAX_INDEX + 1);
        for m in 0..=top {
            row.push(BigRational::new(BigInt::from(1), BigInt::from(m as u64 + 1)));
            for j in (1..=m).rev() {
                let diff = &row[j - 1] - &row[j];
                row[j - 1] = diff * BigRational::from_integer(BigInt::from(j as u64));
            }
            if m % 2 == 0 {
                out.push(row[0].clone());
            }
        }
        out
    })
}

/// Exact even-index Bernoulli numbers `[B_0, B_2, ..., B_{2 n_max}]`.
pub fn bernoulli_even(n_max: usize) -> Result<Vec<BigRational>> {
    if n_max > BERNOULLI_MAX_INDEX {
        return Err(Error::Argument(format!(
            "bernoulli_even: n_max = {n_max} exceeds the cap {BERNOULLI_MAX_INDEX}"
        )));
    }
    Ok(bernoulli_table()[..=n_max].to_vec())
}

/// Floating-point view of [`bernoulli_even`].
pub fn bernoulli_even_f64(n_max: usize) -> Result<Vec<f64>> {
    Ok(bernoulli_even(n_max)?
        .iter()
        .map(|b| b.to_f64().unwrap_or(f64::NAN))
        .collect())
}

/// Coefficients `B_{2n} / (2n)!` of `(x/2) coth(x/2) = sum_n c_n x^{2n}`.
pub(crate) fn half_coth_series_coefficients() -> &'static [f64] {
    static COEFFS: OnceLock<Vec<f64>> = OnceLock::new();
    COEFFS.get_or_init(|| {
        let mut factorial = BigInt::from(1);
        bernoulli_table()
            .iter()
            .enumerate()
            .map(|(n, b)| {
                if n > 0 {
                    let k = 2 * n as u64;
                    factorial *= BigInt::from(k - 1) * BigInt::from(k);
                }
                if b.is_zero() {
                    0.0
                } else {
                    (b / BigRational::from_integer(factorial.clone()))
                        .to_f64()
                        .unwrap_or(0.0)
                }
            })
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binomial(n: u64, k: u64) -> BigInt {
        let mut r = BigInt::from(1);
        for i in 0..k {
            r = r * BigInt::from(n - i) / BigInt::from(i + 1);
        }
        r
    }

    // Oracle: sum_{k=0}^{n} C(n+1, k) B_k = 0 with B_0 = 1.
    fn recurrence_bernoulli(n: usize) -> Vec<BigRational> {
        let mut b: Vec<BigRational> = vec![BigRational::from_integer(1.into())];
        for m in 1..=n {
            let mut acc = BigRational::zero();
            for (k, bk) in b.iter().enumerate() {
                acc += BigRational::from_integer(binomial(m as u64 + 1, k as u64)) * bk;
            }
            b.push(-acc / BigRational::from_integer(BigInt::from(m as u64 + 1)));
        }
        b
    }

    #[test]
    fn coth_reference_values() {
        assert!((coth_stable(20.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(coth_stable(-0.7).unwrap(), -coth_stable(0.7).unwrap());
        assert!((coth_stable(1.0).unwrap() - 1.313_035_285_499_331_2).abs() < 1e-15);
        assert!(coth_stable(0.0).is_err());
        assert!(coth_stable(f64::NAN).is_err());
    }

    #[test]
    fn coth_branches_agree_at_threshold() {
        let t = COTH_SERIES_THRESHOLD;
        let below = coth_stable(t * (1.0 - 1e-9)).unwrap();
        let above = coth_stable(t * (1.0 + 1e-9)).unwrap();
        assert!((below - above).abs() / above < 1e-8);
        let laurent = 1.0 / t + t / 3.0 - t.powi(3) / 45.0;
        assert!((laurent - 1.0 / t.tanh()).abs() * t < 1e-14);
    }

    #[test]
    fn coth_monotone_decreasing() {
        let mut prev = f64::INFINITY;
        for i in 1..4000 {
            let x = 1e-6 * 1.005f64.powi(i);
            let v = coth_stable(x).unwrap();
            assert!(v <= prev, "not monotone at x = {x}");
            prev = v;
        }
    }

    #[test]
    fn x_coth_x_small_argument_limit() {
        for x in [1e-3, 1e-6, 1e-9] {
            let expected = 1.0 + x * x / 3.0;
            assert!((x_coth_x(x) - expected).abs() / expected < 1e-12);
            assert!((x * coth_stable(x).unwrap() - expected).abs() / expected < 1e-12);
        }
        assert_eq!(x_coth_x(0.0), 1.0);
    }

    #[test]
    fn bernoulli_small_cases() {
        let b = bernoulli_even(0).unwrap();
        assert_eq!(b, vec![BigRational::from_integer(1.into())]);
        let b = bernoulli_even(2).unwrap();
        assert_eq!(b[1], BigRational::new(1.into(), 6.into()));
        assert_eq!(b[2], BigRational::new((-1).into(), 30.into()));
        let b = bernoulli_even(3).unwrap();
        assert_eq!(b[3], BigRational::new(1.into(), 42.into()));
        assert!(bernoulli_even(31).is_err());
        let f = bernoulli_even_f64(2).unwrap();
        assert!((f[1] - 1.0 / 6.0).abs() < 1e-17);
    }

    #[test]
    fn bernoulli_matches_recurrence_oracle() {
        let oracle = recurrence_bernoulli(2 * BERNOULLI_MAX_INDEX);
        let ours = bernoulli_even(BERNOULLI_MAX_INDEX).unwrap();
        for (n, b) in ours.iter().enumerate() {
            assert_eq!(*b, oracle[2 * n], "B_{}", 2 * n);
        }
    }

    #[test]
    fn series_coefficients_reproduce_half_coth() {
        let c = half_coth_series_coefficients();
        assert_eq!(c[0], 1.0);
        assert!((c[1] - 1.0 / 12.0).abs() < 1e-17);
        let x: f64 = 1.3;
        let sum: f64 = c
            .iter()
            .enumerate()
            .map(|(n, c)| c * x.powi(2 * n as i32))
            .sum();
        assert!((sum - x_coth_x(x / 2.0)).abs() < 1e-14);
    }
}
