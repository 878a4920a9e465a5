//! Exact arithmetic helpers. All solver state is kept in `BigRational`;
//! no floating point appears anywhere in the algorithmic core.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Rat = BigRational;

/// Integer literal as a rational.
pub fn rat(n: i64) -> Rat {
    BigRational::from_integer(BigInt::from(n))
}

/// `p/q` as a rational; panics on q = 0 (internal use with constant args).
pub fn ratio(p: i64, q: i64) -> Rat {
    assert!(q != 0, "zero denominator");
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

pub fn zero() -> Rat {
    Rat::zero()
}

pub fn one() -> Rat {
    Rat::one()
}

/// Ceiling of a nonnegative rational as u64 (saturating).
pub fn ceil_u64(r: &Rat) -> u64 {
    use num_traits::ToPrimitive;
    r.ceil().to_integer().to_u64().unwrap_or(u64::MAX)
}

/// Parse "p/q" or "p" into an exact rational.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let make = |p: &str, q: &str| -> Result<Rat> {
        let num: BigInt = p
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad numerator in rational '{s}'")))?;
        let den: BigInt = q
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad denominator in rational '{s}'")))?;
        if den.is_zero() {
            return Err(Error::InvalidArgument(format!(
                "zero denominator in rational '{s}'"
            )));
        }
        Ok(BigRational::new(num, den))
    };
    match s.split_once('/') {
        Some((p, q)) => make(p, q),
        None => make(s, "1"),
    }
}

/// Render as "p/q", or just "p" for integers.
pub fn format_rat(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// True when `r` is a nonnegative integer.
pub fn is_nonneg_integer(r: &Rat) -> bool {
    r.is_integer() && !r.is_negative()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_round_trip() {
        for s in ["3", "5/2", "-7/3", "0"] {
            let r = parse_rat(s).unwrap();
            assert_eq!(format_rat(&r), s);
        }
        assert_eq!(format_rat(&parse_rat("4/2").unwrap()), "2");
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("x").is_err());
    }

    #[test]
    fn ceil_of_ratio() {
        assert_eq!(ceil_u64(&ratio(7, 2)), 4);
        assert_eq!(ceil_u64(&rat(3)), 3);
    }
}
