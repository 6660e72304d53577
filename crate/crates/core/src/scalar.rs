//! Exact scalars: arbitrary precision rationals and small helpers.

use num::{BigInt, BigRational, One, Zero};

use crate::error::{CalcError, Result};

/// The scalar field of the whole library: exact rationals.
pub type Scalar = BigRational;

/// Scalar from an integer.
pub fn int(n: i64) -> Scalar {
    BigRational::from_integer(BigInt::from(n))
}

/// Scalar `n/d`.
pub fn ratio(n: i64, d: i64) -> Scalar {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Parse a scalar from `"n"` or `"n/d"`.
pub fn parse(s: &str) -> Result<Scalar> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = num
        .parse()
        .map_err(|_| CalcError::Parse(format!("bad numerator in {s:?}")))?;
    let d: BigInt = den
        .parse()
        .map_err(|_| CalcError::Parse(format!("bad denominator in {s:?}")))?;
    if d.is_zero() {
        return Err(CalcError::Parse(format!("zero denominator in {s:?}")));
    }
    Ok(BigRational::new(n, d))
}

/// Render a scalar as `"n"` or `"n/d"` in lowest terms.
pub fn render(x: &Scalar) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// `k!` as a scalar.
pub fn factorial(k: u32) -> Scalar {
    let mut acc = BigInt::one();
    for i in 2..=k {
        acc *= BigInt::from(i);
    }
    BigRational::from_integer(acc)
}

/// Generalized binomial coefficient `binom(a, k) = a (a-1) ... (a-k+1) / k!`
/// for a rational upper argument.
pub fn binomial(a: &Scalar, k: u32) -> Scalar {
    let mut acc = Scalar::one();
    for i in 0..k {
        acc *= a - int(i as i64);
    }
    acc / factorial(k)
}

/// Binomial coefficient with integer arguments, zero when `k > n` or `n < 0`.
pub fn binomial_int(n: i64, k: i64) -> Scalar {
    if k < 0 || n < 0 || k > n {
        return Scalar::zero();
    }
    binomial(&int(n), k as u32)
}

/// Approximate a scalar by a 64-bit float.  Only used by the numerical
/// quadrature module.
pub fn to_f64(x: &Scalar) -> f64 {
    use num::ToPrimitive;
    x.to_f64().unwrap_or_else(|| {
        // Fall back to a quotient of approximations for very large entries.
        let n = x.numer().to_f64().unwrap_or(f64::NAN);
        let d = x.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_render_round_trip() {
        for s in ["0", "5", "-3", "2/3", "-7/4"] {
            let x = parse(s).unwrap();
            assert_eq!(render(&x), s);
        }
        assert_eq!(render(&parse("4/6").unwrap()), "2/3");
        assert!(parse("1/0").is_err());
        assert!(parse("x").is_err());
    }

    #[test]
    fn generalized_binomial_values() {
        // binom(-2, 3) = (-2)(-3)(-4)/6 = -4
        assert_eq!(binomial(&int(-2), 3), int(-4));
        // binom(1/2, 2) = (1/2)(-1/2)/2 = -1/8
        assert_eq!(binomial(&ratio(1, 2), 2), ratio(-1, 8));
        // binom(a, 0) = 1
        assert_eq!(binomial(&ratio(-9, 7), 0), int(1));
        // integer binomials
        assert_eq!(binomial_int(5, 2), int(10));
        assert_eq!(binomial_int(3, 5), int(0));
    }
}
