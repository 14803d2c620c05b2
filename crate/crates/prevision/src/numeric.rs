//! Exact rational scalars used throughout constraint compilation.
//!
//! Realm values, assertion constants and constraint coefficients are kept as
//! arbitrary-precision rationals so that compiling assertions introduces no
//! representation error. Floating point enters only inside the solvers, where
//! tolerances are explicit.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact scalar for realm values, assertion constants and constraint rows.
pub type Rational = BigRational;

/// A numeric literal that could not be read as a rational.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot parse `{literal}` as a rational number")]
pub struct ParseRationalError {
    /// The offending literal.
    pub literal: String,
}

/// `num / den` as an exact rational. Panics if `den == 0`.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Integer constant as a rational.
pub fn integer(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Nearest `f64`, used when handing compiled constraint data to the solvers.
pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Converts a whole row at once.
pub fn row_to_f64(row: &[Rational]) -> Vec<f64> {
    row.iter().map(to_f64).collect()
}

/// Parses decimal (`0.0504`, `-.5`, `12`, `3e-2`) and fraction (`63/1250`)
/// literals exactly.
pub fn parse_rational(s: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError {
        literal: s.to_string(),
    };
    let t = s.trim();
    if t.is_empty() {
        return Err(err());
    }
    if let Some((num, den)) = t.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(|_| err())?;
        let d: BigInt = den.trim().parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(n, d));
    }
    // Decimal form with optional exponent: [sign] digits [. digits] [e exp]
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(pos) => {
            let e: i32 = t[pos + 1..].parse().map_err(|_| err())?;
            (&t[..pos], e)
        }
        None => (t, 0),
    };
    let (sign, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit())
    {
        return Err(err());
    }
    let mut numer: BigInt = if int_part.is_empty() {
        BigInt::zero()
    } else {
        int_part.parse().map_err(|_| err())?
    };
    let ten = BigInt::from(10);
    for b in frac_part.bytes() {
        numer = numer * &ten + BigInt::from(b - b'0');
    }
    let mut value = Rational::new(numer * BigInt::from(sign), ten.pow(frac_part.len() as u32));
    if exp != 0 {
        let scale = Rational::new(ten.pow(exp.unsigned_abs()), BigInt::one());
        if exp > 0 {
            value *= scale;
        } else {
            value /= scale;
        }
    }
    Ok(value)
}

/// Shortest faithful text form: a decimal when the denominator is 2^a * 5^b,
/// a fraction otherwise. Round-trips through [`parse_rational`].
pub fn to_literal(x: &Rational) -> String {
    let denom = x.denom();
    if denom.is_one() {
        return x.numer().to_string();
    }
    // Count factors of 2 and 5 in the denominator.
    let mut rest = denom.clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let mut twos = 0u32;
    let mut fives = 0u32;
    while (&rest % &two).is_zero() {
        rest /= &two;
        twos += 1;
    }
    while (&rest % &five).is_zero() {
        rest /= &five;
        fives += 1;
    }
    if !rest.is_one() {
        return format!("{}/{}", x.numer(), x.denom());
    }
    let places = twos.max(fives);
    let scaled = (x.numer() * BigInt::from(10).pow(places) / denom).abs();
    let digits = format!("{:0>width$}", scaled, width = places as usize + 1);
    let split = digits.len() - places as usize;
    let sign = if x.is_negative() { "-" } else { "" };
    format!("{}{}.{}", sign, &digits[..split], &digits[split..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(parse_rational("0.0504").unwrap(), ratio(504, 10_000));
        assert_eq!(parse_rational(".42").unwrap(), ratio(42, 100));
        assert_eq!(parse_rational("-.5").unwrap(), ratio(-1, 2));
        assert_eq!(parse_rational("12").unwrap(), integer(12));
        assert_eq!(parse_rational("3e-2").unwrap(), ratio(3, 100));
        assert_eq!(parse_rational("1.5e2").unwrap(), integer(150));
    }

    #[test]
    fn parses_fractions() {
        assert_eq!(parse_rational("63/1250").unwrap(), ratio(63, 1250));
        assert_eq!(parse_rational("-7/10").unwrap(), ratio(-7, 10));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn literal_round_trips() {
        for r in [
            ratio(504, 10_000),
            ratio(-1, 2),
            integer(3),
            ratio(1, 3),
            ratio(12, 100),
            ratio(-22, 7),
        ] {
            assert_eq!(parse_rational(&to_literal(&r)).unwrap(), r);
        }
        assert_eq!(to_literal(&ratio(504, 10_000)), "0.0504");
        assert_eq!(to_literal(&ratio(1, 3)), "1/3");
        assert_eq!(to_literal(&ratio(-1, 2)), "-0.5");
    }
}
