//! Exact Gaussian-rational scalars: `re + im*i` with arbitrary-precision
//! rational parts. All arithmetic is exact; nothing here ever rounds.

use num::bigint::BigInt;
use num::traits::Signed;
use num::{BigRational, One, Zero};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// An exact complex scalar `re + im*i` over the rationals.
///
/// This is the coefficient field for every polynomial and expression in the
/// crate. Both parts are arbitrary-precision rationals, so equality is exact
/// and decidable.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GaussianRational {
    re: BigRational,
    im: BigRational,
}

impl GaussianRational {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        GaussianRational { re, im }
    }

    pub fn zero() -> Self {
        GaussianRational::new(BigRational::zero(), BigRational::zero())
    }

    pub fn one() -> Self {
        GaussianRational::new(BigRational::one(), BigRational::zero())
    }

    /// The imaginary unit.
    pub fn i() -> Self {
        GaussianRational::new(BigRational::zero(), BigRational::one())
    }

    pub fn from_int(n: i64) -> Self {
        GaussianRational::new(BigRational::from_integer(BigInt::from(n)), BigRational::zero())
    }

    /// `n/d` as a real rational. Panics if `d == 0`.
    pub fn from_ratio(n: i64, d: i64) -> Self {
        assert!(d != 0, "zero denominator");
        GaussianRational::new(
            BigRational::new(BigInt::from(n), BigInt::from(d)),
            BigRational::zero(),
        )
    }

    pub fn re(&self) -> &BigRational {
        &self.re
    }

    pub fn im(&self) -> &BigRational {
        &self.im
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    /// True when the imaginary part vanishes.
    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        GaussianRational::new(self.re.clone(), -self.im.clone())
    }

    /// `re^2 + im^2`, the square of the complex modulus.
    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    /// Multiplicative inverse. Panics on zero; callers must check first.
    pub fn inv(&self) -> Self {
        assert!(!self.is_zero(), "inverse of zero");
        let n = self.norm_sqr();
        GaussianRational::new(&self.re / &n, -&self.im / &n)
    }

    /// Integer power, with negative exponents going through `inv`.
    /// Panics on `0^n` for `n < 0`.
    pub fn pow(&self, n: i32) -> Self {
        if n < 0 {
            return self.inv().pow(-n);
        }
        let mut acc = GaussianRational::one();
        let mut base = self.clone();
        let mut k = n as u32;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            k >>= 1;
        }
        acc
    }

    /// Exact square root in Q(i), if one exists.
    ///
    /// For `x + i*y` this solves `(a + i*b)^2 = x + i*y`; a root exists iff
    /// the modulus `sqrt(x^2 + y^2)` is rational and the induced `a^2` is a
    /// rational square.
    pub fn sqrt(&self) -> Option<Self> {
        if self.is_zero() {
            return Some(GaussianRational::zero());
        }
        if self.im.is_zero() {
            // Real case: sqrt(x) for x > 0, i*sqrt(-x) for x < 0.
            if self.re.is_negative() {
                let r = rational_sqrt(&-self.re.clone())?;
                return Some(GaussianRational::new(BigRational::zero(), r));
            }
            let r = rational_sqrt(&self.re)?;
            return Some(GaussianRational::new(r, BigRational::zero()));
        }
        let norm = rational_sqrt(&self.norm_sqr())?;
        let two = BigRational::from_integer(BigInt::from(2));
        let a2 = (&self.re + &norm) / &two;
        let a = rational_sqrt(&a2)?;
        if a.is_zero() {
            return None;
        }
        let b = &self.im / &(&a * &two);
        let cand = GaussianRational::new(a, b);
        if &(&cand * &cand) == self {
            Some(cand)
        } else {
            None
        }
    }
}

/// Exact rational square root: both numerator and denominator must be
/// perfect squares of non-negative integers.
pub fn rational_sqrt(r: &BigRational) -> Option<BigRational> {
    if r.is_negative() {
        return None;
    }
    let sn = r.numer().sqrt();
    let sd = r.denom().sqrt();
    if &(&sn * &sn) == r.numer() && &(&sd * &sd) == r.denom() {
        Some(BigRational::new(sn, sd))
    } else {
        None
    }
}

impl Add for &GaussianRational {
    type Output = GaussianRational;
    fn add(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational::new(&self.re + &rhs.re, &self.im + &rhs.im)
    }
}

impl Sub for &GaussianRational {
    type Output = GaussianRational;
    fn sub(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational::new(&self.re - &rhs.re, &self.im - &rhs.im)
    }
}

impl Mul for &GaussianRational {
    type Output = GaussianRational;
    fn mul(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational::new(
            &self.re * &rhs.re - &self.im * &rhs.im,
            &self.re * &rhs.im + &self.im * &rhs.re,
        )
    }
}

impl Div for &GaussianRational {
    type Output = GaussianRational;
    fn div(self, rhs: &GaussianRational) -> GaussianRational {
        self * &rhs.inv()
    }
}

impl Neg for &GaussianRational {
    type Output = GaussianRational;
    fn neg(self) -> GaussianRational {
        GaussianRational::new(-self.re.clone(), -self.im.clone())
    }
}

impl fmt::Display for GaussianRational {
    /// Prints in the expression grammar: `3`, `-1/2`, `i`, `-2*i`, `1 + i`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut parts = Vec::new();
        if !self.re.is_zero() {
            parts.push(self.re.to_string());
        }
        if !self.im.is_zero() {
            let im = if self.im.is_one() {
                "i".to_string()
            } else if (-&self.im).is_one() {
                "-i".to_string()
            } else {
                format!("{}*i", self.im)
            };
            parts.push(im);
        }
        let mut out = String::new();
        for (k, p) in parts.iter().enumerate() {
            if k == 0 {
                out.push_str(p);
            } else if let Some(rest) = p.strip_prefix('-') {
                out.push_str(" - ");
                out.push_str(rest);
            } else {
                out.push_str(" + ");
                out.push_str(p);
            }
        }
        write!(f, "{}", out)
    }
}

impl fmt::Debug for GaussianRational {
    /// Debug matches Display: the canonical text reads best in assertions.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn g(re: (i64, i64), im: (i64, i64)) -> GaussianRational {
        GaussianRational::new(q(re.0, re.1), q(im.0, im.1))
    }

    #[test]
    fn i_squares_to_minus_one() {
        let i = GaussianRational::i();
        assert_eq!(&i * &i, GaussianRational::from_int(-1));
    }

    #[test]
    fn field_ops_are_exact() {
        let a = g((1, 2), (3, 1));
        let b = g((-2, 3), (1, 5));
        let prod = &a * &b;
        assert_eq!(&prod / &b, a);
        let s = &a + &b;
        assert_eq!(&s - &b, a);
    }

    #[test]
    fn inverse_against_norm() {
        let a = g((3, 4), (-2, 7));
        let inv = a.inv();
        assert!(( &a * &inv ).is_one());
    }

    #[test]
    fn pow_handles_negative_exponents() {
        let a = g((2, 1), (1, 1));
        let p = a.pow(-3);
        assert!((&p * &a.pow(3)).is_one());
        assert!(GaussianRational::from_int(7).pow(0).is_one());
    }

    #[test]
    fn sqrt_of_squares() {
        for c in [g((9, 4), (0, 1)), g((0, 1), (2, 1)), g((3, 5), (-7, 2)), GaussianRational::i()] {
            let sq = &c * &c;
            let r = sq.sqrt().expect("square must have a root");
            assert!(&(&r * &r) == &sq);
        }
        // 2 is not a rational square, and 1 + i has irrational modulus.
        assert!(GaussianRational::from_int(2).sqrt().is_none());
        assert!(g((1, 1), (1, 1)).sqrt().is_none());
        // -4 has the purely imaginary root 2i.
        let r = GaussianRational::from_int(-4).sqrt().unwrap();
        assert_eq!(r, g((0, 1), (2, 1)));
    }

    #[test]
    fn display_is_grammar_compatible() {
        assert_eq!(g((3, 1), (0, 1)).to_string(), "3");
        assert_eq!(g((0, 1), (1, 1)).to_string(), "i");
        assert_eq!(g((0, 1), (-2, 1)).to_string(), "-2*i");
        assert_eq!(g((1, 2), (1, 1)).to_string(), "1/2 + i");
        assert_eq!(g((-1, 1), (-1, 3)).to_string(), "-1 - 1/3*i");
        assert_eq!(GaussianRational::zero().to_string(), "0");
    }
}
