//! Exact scalars for the Grassmann engine: the field Q(i, sqrt 2), stored as
//! a + b i + (c + d i) sqrt(2) with big-rational a, b, c, d. Every superspace
//! identity in this crate is checked in this field, so sign-sensitive
//! cancellations are exact.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Coeff {
    re: BigRational,
    im: BigRational,
    re_rt: BigRational,
    im_rt: BigRational,
}

fn br(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl Coeff {
    pub fn zero() -> Self {
        Self {
            re: BigRational::zero(),
            im: BigRational::zero(),
            re_rt: BigRational::zero(),
            im_rt: BigRational::zero(),
        }
    }

    pub fn one() -> Self {
        Self {
            re: BigRational::one(),
            ..Self::zero()
        }
    }

    pub fn i() -> Self {
        Self {
            im: BigRational::one(),
            ..Self::zero()
        }
    }

    /// sqrt(2) as an exact adjoined symbol.
    pub fn sqrt2() -> Self {
        Self {
            re_rt: BigRational::one(),
            ..Self::zero()
        }
    }

    /// 1 / sqrt(2) = sqrt(2) / 2.
    pub fn inv_sqrt2() -> Self {
        Self {
            re_rt: br(1, 2),
            ..Self::zero()
        }
    }

    pub fn from_int(n: i64) -> Self {
        Self {
            re: br(n, 1),
            ..Self::zero()
        }
    }

    pub fn from_ratio(n: i64, d: i64) -> Self {
        Self {
            re: br(n, d),
            ..Self::zero()
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero() && self.re_rt.is_zero() && self.im_rt.is_zero()
    }

    pub fn conj(&self) -> Self {
        Self {
            re: self.re.clone(),
            im: -self.im.clone(),
            re_rt: self.re_rt.clone(),
            im_rt: -self.im_rt.clone(),
        }
    }

    /// Numeric value, for cross-checks against floating-point code.
    pub fn to_complex(&self) -> num_complex::Complex64 {
        fn f(x: &BigRational) -> f64 {
            let n = x.numer().to_string().parse::<f64>().unwrap_or(f64::NAN);
            let d = x.denom().to_string().parse::<f64>().unwrap_or(f64::NAN);
            n / d
        }
        let rt = std::f64::consts::SQRT_2;
        num_complex::Complex64::new(f(&self.re) + rt * f(&self.re_rt), f(&self.im) + rt * f(&self.im_rt))
    }
}

impl Add for Coeff {
    type Output = Coeff;
    fn add(self, rhs: Coeff) -> Coeff {
        Coeff {
            re: self.re + rhs.re,
            im: self.im + rhs.im,
            re_rt: self.re_rt + rhs.re_rt,
            im_rt: self.im_rt + rhs.im_rt,
        }
    }
}

impl AddAssign for Coeff {
    fn add_assign(&mut self, rhs: Coeff) {
        self.re += rhs.re;
        self.im += rhs.im;
        self.re_rt += rhs.re_rt;
        self.im_rt += rhs.im_rt;
    }
}

impl Sub for Coeff {
    type Output = Coeff;
    fn sub(self, rhs: Coeff) -> Coeff {
        self + (-rhs)
    }
}

impl Neg for Coeff {
    type Output = Coeff;
    fn neg(self) -> Coeff {
        Coeff {
            re: -self.re,
            im: -self.im,
            re_rt: -self.re_rt,
            im_rt: -self.im_rt,
        }
    }
}

impl Mul for Coeff {
    type Output = Coeff;
    fn mul(self, rhs: Coeff) -> Coeff {
        self.mul_ref(&rhs)
    }
}

impl Coeff {
    pub fn mul_ref(&self, rhs: &Coeff) -> Coeff {
        // (a1 + b1 i + (c1 + d1 i) r)(a2 + b2 i + (c2 + d2 i) r), r^2 = 2.
        let (a1, b1, c1, d1) = (&self.re, &self.im, &self.re_rt, &self.im_rt);
        let (a2, b2, c2, d2) = (&rhs.re, &rhs.im, &rhs.re_rt, &rhs.im_rt);
        let two = br(2, 1);
        Coeff {
            re: a1 * a2 - b1 * b2 + &two * (c1 * c2 - d1 * d2),
            im: a1 * b2 + b1 * a2 + &two * (c1 * d2 + d1 * c2),
            re_rt: a1 * c2 + c1 * a2 - (b1 * d2 + d1 * b2),
            im_rt: a1 * d2 + d1 * a2 + b1 * c2 + c1 * b2,
        }
    }
}

impl fmt::Display for Coeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn part(f: &mut fmt::Formatter<'_>, first: &mut bool, x: &BigRational, tag: &str) -> fmt::Result {
            if x.is_zero() {
                return Ok(());
            }
            if *first {
                if x.is_negative() {
                    write!(f, "-")?;
                }
            } else if x.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            *first = false;
            let a = x.abs();
            if a.is_one() && !tag.is_empty() {
                write!(f, "{tag}")
            } else if tag.is_empty() {
                write!(f, "{a}")
            } else {
                write!(f, "{a}{tag}")
            }
        }
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        part(f, &mut first, &self.re, "")?;
        part(f, &mut first, &self.im, "i")?;
        part(f, &mut first, &self.re_rt, "r2")?;
        part(f, &mut first, &self.im_rt, "i*r2")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt2_squares_to_two() {
        assert_eq!(Coeff::sqrt2() * Coeff::sqrt2(), Coeff::from_int(2));
        assert_eq!(Coeff::inv_sqrt2() * Coeff::sqrt2(), Coeff::one());
        assert_eq!(Coeff::i() * Coeff::i(), -Coeff::one());
        let x = Coeff::i() * Coeff::inv_sqrt2();
        assert_eq!(x.clone() * x, Coeff::from_ratio(-1, 2));
    }

    #[test]
    fn conjugation_is_an_involution() {
        let x = Coeff::from_ratio(3, 7) + Coeff::i() * Coeff::from_int(2) + Coeff::sqrt2();
        assert_eq!(x.conj().conj(), x);
        assert_eq!((x.clone() * x.conj()).conj(), x.clone() * x.conj());
    }
}
