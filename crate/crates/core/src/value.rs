//! Exact rational values.

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use thiserror::Error;

/// Exact rational used for valuations and transfers.
pub type Q = Ratio<i64>;

/// Numerators and denominators read from text are capped so that sums over
/// desk-scale instances cannot overflow `i64`.
pub const MAGNITUDE_CAP: i64 = 1_000_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("invalid rational `{0}`")]
pub struct ParseValueError(pub String);

/// Parses `"p/q"` or an integer.
pub fn parse_q(s: &str) -> Result<Q, ParseValueError> {
    let err = || ParseValueError(s.to_string());
    let t = s.trim();
    let (n, d) = match t.split_once('/') {
        Some((n, d)) => (n.trim().parse::<i64>().map_err(|_| err())?, d.trim().parse::<i64>().map_err(|_| err())?),
        None => (t.parse::<i64>().map_err(|_| err())?, 1),
    };
    if d == 0 || n.abs() > MAGNITUDE_CAP || d.abs() > MAGNITUDE_CAP {
        return Err(err());
    }
    Ok(Q::new(n, d))
}

/// Canonical text form: integer when the denominator is 1, else `p/q`.
pub fn format_q(q: &Q) -> String {
    if *q.denom() == 1 {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Decimal rendering with six fractional digits, for annotation only.
pub fn decimal_q(q: &Q) -> String {
    let scale: i128 = 1_000_000;
    let n = *q.numer() as i128;
    let d = *q.denom() as i128;
    let scaled = (n * scale * 2 + d).div_euclid(2 * d);
    let neg = scaled < 0;
    let a = scaled.abs();
    format!("{}{}.{:06}", if neg { "-" } else { "" }, a / scale, a % scale)
}

/// `true` when `q` is strictly negative.
pub fn is_negative(q: &Q) -> bool {
    q.is_negative()
}

/// Sum of an iterator of values.
pub fn sum<I: IntoIterator<Item = Q>>(it: I) -> Q {
    it.into_iter().fold(Q::zero(), |a, b| a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_q("-80").unwrap(), Q::from_integer(-80));
        assert_eq!(parse_q("6/4").unwrap(), Q::new(3, 2));
        assert_eq!(format_q(&Q::new(3, 2)), "3/2");
        assert_eq!(format_q(&Q::from_integer(-7)), "-7");
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("x").is_err());
        assert!(parse_q("99999999999").is_err());
    }

    #[test]
    fn decimals() {
        assert_eq!(decimal_q(&Q::new(1, 3)), "0.333333");
        assert_eq!(decimal_q(&Q::new(-2, 3)), "-0.666667");
        assert_eq!(decimal_q(&Q::from_integer(-80)), "-80.000000");
    }
}
