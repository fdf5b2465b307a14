//! Exact dyadic rational arithmetic and residue arithmetic mod 2^n - 1.
//!
//! A [`Dyadic`] is a rational of the form m / 2^e kept in canonical form
//! (e = 0 or m odd). These are the coordinates of every breakpoint and
//! value in the library; no floating point appears anywhere.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::ParseError;

/// An exact dyadic rational m / 2^e with m an arbitrary-precision integer
/// and e >= 0. Canonical form: e = 0, or m is odd.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    mantissa: BigInt,
    exponent: u64,
}

impl Dyadic {
    /// Builds the canonical dyadic with value `mantissa / 2^exponent`.
    pub fn new(mantissa: impl Into<BigInt>, exponent: u64) -> Self {
        let mut d = Dyadic {
            mantissa: mantissa.into(),
            exponent,
        };
        d.normalize();
        d
    }

    pub fn zero() -> Self {
        Dyadic {
            mantissa: BigInt::zero(),
            exponent: 0,
        }
    }

    pub fn one() -> Self {
        Dyadic {
            mantissa: BigInt::one(),
            exponent: 0,
        }
    }

    pub fn from_int(v: impl Into<BigInt>) -> Self {
        Dyadic {
            mantissa: v.into(),
            exponent: 0,
        }
    }

    /// 1 / 2^e.
    pub fn pow2_inv(e: u64) -> Self {
        Dyadic::new(BigInt::one(), e)
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mantissa
    }

    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    fn normalize(&mut self) {
        if self.mantissa.is_zero() {
            self.exponent = 0;
            return;
        }
        let tz = self.mantissa.trailing_zeros().unwrap_or(0);
        let shift = tz.min(self.exponent);
        if shift > 0 {
            self.mantissa >>= shift;
            self.exponent -= shift;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.exponent == 0
    }

    pub fn is_negative(&self) -> bool {
        self.mantissa.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.mantissa.is_positive()
    }

    /// Multiplies by 2^k for any integer k (exact).
    pub fn mul_pow2(&self, k: i64) -> Self {
        if k >= 0 {
            Dyadic::new(&self.mantissa << (k as u64), self.exponent)
        } else {
            Dyadic::new(self.mantissa.clone(), self.exponent + (-k) as u64)
        }
    }

    pub fn abs(&self) -> Self {
        Dyadic {
            mantissa: self.mantissa.abs(),
            exponent: self.exponent,
        }
    }

    /// Largest integer <= self.
    pub fn floor(&self) -> BigInt {
        if self.exponent == 0 {
            return self.mantissa.clone();
        }
        self.mantissa.div_floor(&(BigInt::one() << self.exponent))
    }

    /// Smallest integer >= self.
    pub fn ceil(&self) -> BigInt {
        if self.exponent == 0 {
            return self.mantissa.clone();
        }
        self.mantissa.div_ceil(&(BigInt::one() << self.exponent))
    }

    /// Exact midpoint of self and other.
    pub fn midpoint(&self, other: &Dyadic) -> Dyadic {
        (self.clone() + other.clone()).mul_pow2(-1)
    }

    /// Compares the values exactly.
    fn cmp_value(&self, other: &Dyadic) -> Ordering {
        let e = self.exponent.max(other.exponent);
        let a = &self.mantissa << (e - self.exponent);
        let b = &other.mantissa << (e - other.exponent);
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_value(other)
    }
}

impl Add for Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: Dyadic) -> Dyadic {
        &self + &rhs
    }
}

impl Add for &Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: &Dyadic) -> Dyadic {
        let e = self.exponent.max(rhs.exponent);
        let a = &self.mantissa << (e - self.exponent);
        let b = &rhs.mantissa << (e - rhs.exponent);
        Dyadic::new(a + b, e)
    }
}

impl Sub for Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: Dyadic) -> Dyadic {
        &self - &rhs
    }
}

impl Sub for &Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: &Dyadic) -> Dyadic {
        let e = self.exponent.max(rhs.exponent);
        let a = &self.mantissa << (e - self.exponent);
        let b = &rhs.mantissa << (e - rhs.exponent);
        Dyadic::new(a - b, e)
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic {
            mantissa: -self.mantissa,
            exponent: self.exponent,
        }
    }
}

impl Neg for &Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic {
            mantissa: -self.mantissa.clone(),
            exponent: self.exponent,
        }
    }
}

impl Mul for &Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: &Dyadic) -> Dyadic {
        Dyadic::new(&self.mantissa * &rhs.mantissa, self.exponent + rhs.exponent)
    }
}

impl Mul for Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: Dyadic) -> Dyadic {
        &self * &rhs
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponent == 0 {
            write!(f, "{}", self.mantissa)
        } else {
            write!(f, "{}/2^{}", self.mantissa, self.exponent)
        }
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl FromStr for Dyadic {
    type Err = ParseError;

    /// Parses the textual form "m/2^e" (e omitted when 0), e.g. "3/2^8", "-1/2^2", "5".
    fn from_str(s: &str) -> Result<Self, ParseError> {
        let s = s.trim();
        if let Some((m, rest)) = s.split_once('/') {
            let e = rest
                .strip_prefix("2^")
                .ok_or_else(|| ParseError::Dyadic(s.to_string()))?;
            let mantissa =
                BigInt::from_str(m.trim()).map_err(|_| ParseError::Dyadic(s.to_string()))?;
            let exponent =
                u64::from_str(e.trim()).map_err(|_| ParseError::Dyadic(s.to_string()))?;
            Ok(Dyadic::new(mantissa, exponent))
        } else {
            let mantissa =
                BigInt::from_str(s).map_err(|_| ParseError::Dyadic(s.to_string()))?;
            Ok(Dyadic::from_int(mantissa))
        }
    }
}

/// A residue class mod 2^n - 1, the codomain of [`theta`].
///
/// Residue 0 is displayed as orbit index 2^n - 1: the orbits are indexed
/// by the transversal {1, ..., 2^n - 1}.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Residue {
    value: u64,
    modulus: u64,
}

impl Residue {
    pub fn new(value: impl Into<BigInt>, n: u32) -> Self {
        let modulus = (1u64 << n) - 1;
        let v: BigInt = value.into();
        let m = BigInt::from(modulus);
        let r = v.mod_floor(&m);
        Residue {
            value: u64::try_from(r).expect("reduced residue fits u64"),
            modulus,
        }
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// The orbit index in {1, ..., 2^n - 1}; residue 0 maps to 2^n - 1.
    pub fn orbit_index(&self) -> u64 {
        if self.value == 0 {
            self.modulus
        } else {
            self.value
        }
    }
}

impl Add for Residue {
    type Output = Residue;
    fn add(self, rhs: Residue) -> Residue {
        assert_eq!(self.modulus, rhs.modulus);
        Residue {
            value: (self.value + rhs.value) % self.modulus,
            modulus: self.modulus,
        }
    }
}

impl fmt::Display for Residue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (orbit O_{})", self.value, self.orbit_index())
    }
}

/// The invariant x = k/(2^n)^m -> k mod (2^n - 1).
///
/// Well defined because 2^n = 1 mod 2^n - 1, so enlarging m multiplies k
/// by a power of 2^n without changing the residue.
pub fn theta(x: &Dyadic, n: u32) -> Residue {
    let e = x.exponent();
    // minimal m with n*m >= e
    let m = e.div_ceil(n as u64);
    let k = x.mantissa() << (n as u64 * m - e);
    Residue::new(k, n)
}

/// The signed count of integers crossed moving from x to y:
/// |(x, y] ∩ Z| when x <= y, and -|(y, x] ∩ Z| when y < x. The
/// half-open convention makes the count additive along paths.
pub fn int_count(x: &Dyadic, y: &Dyadic) -> BigInt {
    y.floor() - x.floor()
}
