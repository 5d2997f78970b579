//! Snapping floating-point probabilities to exact rationals.
//!
//! Probabilities in the models handled here are small rationals (1/12, 1/8,
//! 1/4, …) or irrationals like (2±√2)/8 that admit close rational
//! approximations. Snapping picks the rational with the smallest denominator
//! inside a tolerance window, so 0.08333333333333333 becomes exactly 1/12.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Largest denominator considered when snapping.
pub const MAX_DENOMINATOR: u64 = 1_000_000;
/// Half-width of the snap window around the floating-point value.
pub const SNAP_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum SnapError {
    #[error("no rational with denominator ≤ {max_den} lies within {tol:.1e} of {value}")]
    NoRational { value: f64, max_den: u64, tol: f64 },
    #[error("cannot snap non-finite value")]
    NonFinite,
}

/// Simplest rational (smallest denominator) within `tol` of `value`. Errors
/// when that rational needs a denominator above `max_den`.
pub fn snap(value: f64, max_den: u64, tol: f64) -> Result<BigRational, SnapError> {
    if !value.is_finite() {
        return Err(SnapError::NonFinite);
    }
    let negative = value < 0.0;
    let x = value.abs();
    let lo = (x - tol).max(0.0);
    let hi = x + tol;
    let r = simplest_between(lo, hi);
    if r.denom() > &BigInt::from(max_den) {
        return Err(SnapError::NoRational {
            value,
            max_den,
            tol,
        });
    }
    Ok(if negative { -r } else { r })
}

/// Continued-fraction construction of the simplest rational in `[lo, hi]`,
/// for `0 ≤ lo ≤ hi`.
fn simplest_between(lo: f64, hi: f64) -> BigRational {
    let floor = lo.floor();
    // An integer inside the interval is always simplest.
    let candidate = if floor >= lo { floor } else { floor + 1.0 };
    if candidate <= hi {
        return BigRational::from_integer(BigInt::from(candidate as i64));
    }
    // lo and hi share the integer part; recurse on the reciprocal tail.
    let tail = simplest_between(1.0 / (hi - floor), 1.0 / (lo - floor));
    let n = BigInt::from(floor as i64);
    BigRational::from_integer(n) + tail.recip()
}

/// Snap with the module defaults.
pub fn snap_probability(value: f64) -> Result<BigRational, SnapError> {
    snap(value, MAX_DENOMINATOR, SNAP_TOL)
}

/// Render a rational as `p/q` (or a bare integer).
pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn is_nonnegative(r: &BigRational) -> bool {
    !r.is_negative()
}

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rational_zero() -> BigRational {
    BigRational::zero()
}

pub fn rational_one() -> BigRational {
    BigRational::one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snaps_small_fractions_exactly() {
        assert_eq!(snap_probability(1.0 / 12.0).unwrap(), rational(1, 12));
        assert_eq!(snap_probability(0.25).unwrap(), rational(1, 4));
        assert_eq!(snap_probability(0.0).unwrap(), rational(0, 1));
        assert_eq!(snap_probability(1.0).unwrap(), rational(1, 1));
        assert_eq!(snap_probability(2.0 / 3.0).unwrap(), rational(2, 3));
    }

    #[test]
    fn snaps_tsirelson_cells_within_bounds() {
        let cell = (2.0 - std::f64::consts::SQRT_2) / 8.0;
        let r = snap_probability(cell).unwrap();
        assert!(r.denom() <= &BigInt::from(MAX_DENOMINATOR));
        assert!((to_f64(&r) - cell).abs() <= SNAP_TOL);
    }

    #[test]
    fn snap_fails_in_a_farey_gap() {
        // 5e-7 sits between 0 and 1/999999 with nothing of denominator ≤ 1e6
        // within 1e-9 of it.
        assert!(matches!(
            snap_probability(5e-7),
            Err(SnapError::NoRational { .. })
        ));
    }

    #[test]
    fn snap_prefers_smallest_denominator() {
        // Anything within the window of 1/3 should come back as exactly 1/3.
        assert_eq!(snap_probability(0.333333333).unwrap(), rational(1, 3));
    }

    #[test]
    fn snap_handles_values_above_one() {
        assert_eq!(snap(7.0 / 3.0, 1000, 1e-9).unwrap(), rational(7, 3));
        assert_eq!(snap(-0.5, 1000, 1e-9).unwrap(), rational(-1, 2));
    }

    #[test]
    fn formats_fractions() {
        assert_eq!(format_rational(&rational(1, 12)), "1/12");
        assert_eq!(format_rational(&rational(3, 1)), "3");
    }
}
