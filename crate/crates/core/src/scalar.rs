//! Scalar backends: exact rationals and binary floats behind one trait.
//!
//! Everything downstream (series, linear algebra, the ladder solvers) is
//! generic over [`Scalar`], so every quantity can be computed either exactly
//! or in f64 with the same code path.

use crate::error::{Error, Result};
use num::bigint::BigInt;
use num::rational::Ratio;
use num::{Signed, ToPrimitive, Zero};

pub type Rat = Ratio<BigInt>;

/// Commutative ring interface shared by scalars and truncated series.
///
/// `zero_like`/`one_like` exist because truncated series need an order to
/// build constants; scalars ignore the template.
pub trait Ring: Clone + std::fmt::Debug + PartialEq {
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn is_zero(&self) -> bool;
    /// Multiplicative inverse where one exists.
    fn try_inv(&self) -> Result<Self>;
    /// Magnitude proxy for pivot selection. Exactness of elimination does not
    /// depend on it; it only orders pivot candidates.
    fn pivot_mag(&self) -> f64;
}

/// A scalar coefficient field.
pub trait Scalar: Ring + Send + Sync + 'static {
    /// True when arithmetic is exact (rational backend).
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn from_int(n: i64) -> Self {
        Self::from_ratio(n, 1)
    }
    fn to_f64(&self) -> f64;
    /// Render for CSV/JSON output: `num/den` for rationals, 17 significant
    /// digits for floats.
    fn render(&self) -> String;
}

impl Ring for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn one_like(&self) -> Self {
        1.0
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn try_inv(&self) -> Result<Self> {
        if *self == 0.0 {
            return Err(Error::NotAUnit);
        }
        Ok(1.0 / self)
    }
    fn pivot_mag(&self) -> f64 {
        self.abs()
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn render(&self) -> String {
        format!("{:.16e}", self)
    }
}

impl Ring for Rat {
    fn zero_like(&self) -> Self {
        <Rat as Zero>::zero()
    }
    fn one_like(&self) -> Self {
        Rat::from_integer(BigInt::from(1))
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn try_inv(&self) -> Result<Self> {
        if Zero::is_zero(self) {
            return Err(Error::NotAUnit);
        }
        Ok(self.recip())
    }
    fn pivot_mag(&self) -> f64 {
        ToPrimitive::to_f64(self).map(f64::abs).unwrap_or(f64::INFINITY)
    }
}

impl Scalar for Rat {
    const EXACT: bool = true;

    fn zero() -> Self {
        <Rat as Zero>::zero()
    }
    fn one() -> Self {
        Rat::from_integer(BigInt::from(1))
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Rat::new(BigInt::from(num), BigInt::from(den))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn render(&self) -> String {
        format!("{}", self)
    }
}

/// Parse a probability string rational-first: `a/b`, a decimal like `0.25`
/// (converted exactly), or an integer.
pub fn parse_prob<S: Scalar>(text: &str) -> Result<S> {
    let t = text.trim();
    if let Some((n, d)) = t.split_once('/') {
        let n: i64 = n
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad numerator in {t:?}")))?;
        let d: i64 = d
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad denominator in {t:?}")))?;
        if d == 0 {
            return Err(Error::Parse(format!("zero denominator in {t:?}")));
        }
        return Ok(S::from_ratio(n, d));
    }
    if let Some((int, frac)) = t.split_once('.') {
        let neg = int.starts_with('-');
        let int_part: i64 = if int.is_empty() || int == "-" {
            0
        } else {
            int.parse()
                .map_err(|_| Error::Parse(format!("bad decimal {t:?}")))?
        };
        if frac.is_empty() || frac.len() > 15 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::Parse(format!("bad decimal {t:?}")));
        }
        let digits: i64 = frac.parse().unwrap();
        let den = 10i64.pow(frac.len() as u32);
        let num = int_part.abs() * den + digits;
        let num = if neg { -num } else { num };
        return Ok(S::from_ratio(num, den));
    }
    let n: i64 = t
        .parse()
        .map_err(|_| Error::Parse(format!("expected a/b, decimal, or integer, got {t:?}")))?;
    Ok(S::from_int(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_rational_first() {
        let x: Rat = parse_prob("3/8").unwrap();
        assert_eq!(x, Rat::from_ratio(3, 8));
        let y: Rat = parse_prob("0.25").unwrap();
        assert_eq!(y, Rat::from_ratio(1, 4));
        let z: Rat = parse_prob("1").unwrap();
        assert_eq!(z, Rat::one());
        let f: f64 = parse_prob("1/5").unwrap();
        assert_eq!(f, 0.2);
        assert!(parse_prob::<Rat>("1/0").is_err());
        assert!(parse_prob::<Rat>("abc").is_err());
    }

    #[test]
    fn render_formats() {
        assert_eq!(Rat::from_ratio(3, 8).render(), "3/8");
        assert_eq!(Rat::from_ratio(2, 1).render(), "2");
        // 17 significant digits for floats
        assert_eq!(0.375f64.render(), "3.7500000000000000e-1");
    }

    #[test]
    fn rational_inverse_exact() {
        let x = Rat::from_ratio(7, 3);
        assert_eq!(x.try_inv().unwrap(), Rat::from_ratio(3, 7));
        assert!(<Rat as Scalar>::zero().try_inv().is_err());
    }
}
