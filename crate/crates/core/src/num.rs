//! Exact rational helpers shared by every module.

use alloc::format;
use alloc::string::String;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational number used for all geometry and exact masses.
pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// `2^e` as an exact big integer.
pub fn pow2_int(e: u64) -> BigInt {
    BigInt::one() << (e as usize)
}

/// `2^e` as an exact rational; `e` may be negative.
pub fn pow2(e: i64) -> Rational {
    if e >= 0 {
        Rational::from_integer(pow2_int(e as u64))
    } else {
        Rational::new(BigInt::one(), pow2_int(e.unsigned_abs()))
    }
}

/// `2^e` for a big exponent.
pub fn pow2_big(e: &BigInt) -> Rational {
    let mag = e
        .magnitude()
        .to_u64()
        .expect("exponent of 2 does not fit in 64 bits");
    if e.sign() == Sign::Minus {
        Rational::new(BigInt::one(), pow2_int(mag))
    } else {
        Rational::from_integer(pow2_int(mag))
    }
}

/// `log2(n)` accurate to double precision for arbitrarily large `n`.
pub fn log2_biguint(n: &BigUint) -> f64 {
    if n.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = n.bits();
    if bits <= 64 {
        return libm::log2(n.to_u64().unwrap() as f64);
    }
    let shift = bits - 64;
    let top: BigUint = n >> (shift as usize);
    libm::log2(top.to_u64().unwrap() as f64) + shift as f64
}

/// `log2(x)` for a nonnegative rational; `-inf` at zero.
pub fn log2_rational(x: &Rational) -> f64 {
    debug_assert!(!x.is_negative());
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    log2_biguint(x.numer().magnitude()) - log2_biguint(x.denom().magnitude())
}

pub fn to_f64(x: &Rational) -> f64 {
    match x.to_f64() {
        Some(v) if v.is_finite() && (v != 0.0 || x.is_zero()) => v,
        // Outside double range: go through log2.
        _ => {
            let l = log2_rational(&x.abs());
            let v = libm::exp2(l);
            if x.is_negative() {
                -v
            } else {
                v
            }
        }
    }
}

pub fn floor_int(x: &Rational) -> BigInt {
    x.floor().to_integer()
}

pub fn ceil_int(x: &Rational) -> BigInt {
    x.ceil().to_integer()
}

/// Parses `num/den`, an integer, or a finite decimal such as `0.125`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational number: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((ip, fp)) = s.split_once('.') {
        if fp.is_empty() || !fp.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = ip.starts_with('-');
        let ip_digits = ip.trim_start_matches(['-', '+']);
        let whole: BigInt = if ip_digits.is_empty() {
            BigInt::zero()
        } else {
            ip_digits.parse().map_err(|_| bad())?
        };
        let frac: BigInt = fp.parse().map_err(|_| bad())?;
        let scale = num_traits::pow(BigInt::from(10u32), fp.len());
        let mag = Rational::new(whole * &scale + frac, scale);
        return Ok(if neg { -mag } else { mag });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(n))
}

/// Always `num/den`, including integers (`1/1`).
pub fn format_rational(x: &Rational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Largest `e` with `2^e` dividing the denominator, if the value is dyadic.
pub fn dyadic_exponent(x: &Rational) -> Option<u64> {
    let den = x.denom().magnitude();
    let tz = den.trailing_zeros().unwrap_or(0);
    if (den >> (tz as usize)).is_one() {
        Some(tz)
    } else {
        None
    }
}

/// Compares `x` with `base^e` for positive `x`, `base` and rational `e`,
/// exactly: with `e = a/b`, `b > 0`, compares `x^b` with `base^a`.
pub fn cmp_pow(x: &Rational, base: &Rational, e: &Rational) -> core::cmp::Ordering {
    debug_assert!(x.is_positive() && base.is_positive());
    let b = e
        .denom()
        .to_usize()
        .expect("exponent denominator too large");
    let a = e.numer();
    let mag = a
        .magnitude()
        .to_usize()
        .expect("exponent numerator too large");
    let lhs = num_traits::pow(x.clone(), b);
    let p = num_traits::pow(base.clone(), mag);
    if a.is_negative() {
        (lhs * p).cmp(&Rational::one())
    } else {
        lhs.cmp(&p)
    }
}

/// Compares `x` with `2^e` exactly.
pub fn cmp_pow2(x: &Rational, e: &Rational) -> core::cmp::Ordering {
    cmp_pow(x, &int(2), e)
}

/// Greatest common divisor helper for building common denominators.
pub fn lcm(a: &BigInt, b: &BigInt) -> BigInt {
    a.lcm(b)
}
