//! Exact rational numbers and their text form.
//!
//! All arithmetic in this crate is exact: utilities, shares, probabilities
//! and LP pivots are `BigRational`s, never floats.  The canonical text form
//! is `p/q` in lowest terms with a positive denominator, shortened to `p`
//! when the denominator is one.  Parsing additionally accepts exact decimal
//! literals such as `4.5`, which denote `9/2`.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::Error;

/// Exact rational number used throughout the crate.
pub type Rational = num_rational::BigRational;

/// Shorthand for `n/d` from machine integers.  Panics on `d == 0`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Shorthand for the integer rational `n`.
pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Shorthand for the integer rational `n` from an unsigned count.
pub fn rat_u(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `p/q`, plain integers, and exact decimals (`-4.25`) into a
/// rational in lowest terms.
pub fn parse_rational(text: &str) -> Result<Rational, Error> {
    let bad = || Error::ParseRational(text.to_string());
    let s = text.trim();
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(|_| bad())?;
        let d: BigInt = den.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        // Exact decimal: sign applies to both parts; the fraction digits
        // scale by a power of ten.
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = whole.starts_with('-');
        let whole_mag = whole.trim_start_matches(['-', '+']);
        if !whole_mag.bytes().all(|b| b.is_ascii_digit()) || whole_mag.is_empty() {
            return Err(bad());
        }
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let units: BigInt = whole_mag.parse().map_err(|_| bad())?;
        let cents: BigInt = frac.parse().map_err(|_| bad())?;
        let magnitude = units * &scale + cents;
        let signed = if negative { -magnitude } else { magnitude };
        return Ok(Rational::new(signed, scale));
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(n))
}

/// Renders a rational canonically: lowest terms, positive denominator,
/// `p` when integral and `p/q` otherwise.
pub fn render_rational(value: &Rational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Floor of a non-negative rational as a machine integer.
///
/// Used for quota windows, whose sums are bounded by the item count.
pub fn floor_u64(value: &Rational) -> Result<u64, Error> {
    if value.is_negative() {
        return Err(Error::Invariant(format!(
            "expected a non-negative quantity, got {}",
            render_rational(value)
        )));
    }
    let f = value.floor();
    let digits = f.numer().to_string();
    digits
        .parse()
        .map_err(|_| Error::Invariant(format!("quantity {digits} too large for a quota")))
}

/// Ceiling counterpart of [`floor_u64`].
pub fn ceil_u64(value: &Rational) -> Result<u64, Error> {
    if value.is_negative() {
        return Err(Error::Invariant(format!(
            "expected a non-negative quantity, got {}",
            render_rational(value)
        )));
    }
    let c = value.ceil();
    let digits = c.numer().to_string();
    digits
        .parse()
        .map_err(|_| Error::Invariant(format!("quantity {digits} too large for a quota")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_integers_and_decimals() {
        assert_eq!(parse_rational("9/2").unwrap(), rat(9, 2));
        assert_eq!(parse_rational("-3/6").unwrap(), rat(-1, 2));
        assert_eq!(parse_rational("7").unwrap(), rat_int(7));
        assert_eq!(parse_rational("-12").unwrap(), rat_int(-12));
        assert_eq!(parse_rational("4.5").unwrap(), rat(9, 2));
        assert_eq!(parse_rational("-0.25").unwrap(), rat(-1, 4));
        assert_eq!(parse_rational("0.125").unwrap(), rat(1, 8));
        assert_eq!(parse_rational(" 2/4 ").unwrap(), rat(1, 2));
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "1/0", "a", "1.2.3", "1/", ".5", "2.", "--3", "1e3"] {
            assert!(parse_rational(bad).is_err(), "accepted {bad:?}");
        }
    }

    #[test]
    fn renders_canonically() {
        assert_eq!(render_rational(&rat(9, 2)), "9/2");
        assert_eq!(render_rational(&rat(-9, 2)), "-9/2");
        assert_eq!(render_rational(&rat(4, 2)), "2");
        assert_eq!(render_rational(&rat_int(0)), "0");
        // Negative denominators normalise away inside BigRational.
        assert_eq!(
            render_rational(&Rational::new(3.into(), (-4).into())),
            "-3/4"
        );
    }

    #[test]
    fn floor_and_ceil_are_exact() {
        assert_eq!(floor_u64(&rat(7, 3)).unwrap(), 2);
        assert_eq!(ceil_u64(&rat(7, 3)).unwrap(), 3);
        assert_eq!(floor_u64(&rat_int(4)).unwrap(), 4);
        assert_eq!(ceil_u64(&rat_int(4)).unwrap(), 4);
        assert!(floor_u64(&rat(-1, 2)).is_err());
    }

    #[test]
    fn round_trip_is_identity() {
        for (n, d) in [(0, 1), (5, 1), (-5, 1), (9, 2), (-7, 12), (22, 7)] {
            let q = rat(n, d);
            assert_eq!(parse_rational(&render_rational(&q)).unwrap(), q);
        }
    }
}
