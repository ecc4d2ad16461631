//! Exact dyadic numbers and outward-rounded interval arithmetic.
//!
//! A [`Dyadic`] is `mantissa * 2^exponent` with an arbitrary-precision
//! integer mantissa. The representation is canonical: the mantissa is odd or
//! zero (zero forces exponent 0), so equality is structural. Addition,
//! subtraction, and multiplication are exact; only [`Dyadic::round_to`]
//! loses information, and it does so with a documented rule (ties toward
//! plus infinity).
//!
//! Text form: `<sign><mantissa-decimal>p<exponent>`, e.g. `3p-2` for 3/4.

use alloc::string::ToString;
use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// An exact dyadic rational `mantissa * 2^exponent`, canonical form.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    mantissa: BigInt,
    exponent: i64,
}

impl Dyadic {
    /// Builds a dyadic, canonicalizing (mantissa odd or zero).
    pub fn new(mantissa: BigInt, exponent: i64) -> Self {
        let mut d = Dyadic { mantissa, exponent };
        d.canonicalize();
        d
    }

    fn canonicalize(&mut self) {
        if self.mantissa.is_zero() {
            self.exponent = 0;
            return;
        }
        let tz = self.mantissa.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            self.mantissa >>= tz;
            self.exponent += tz as i64;
        }
    }

    pub fn zero() -> Self {
        Dyadic { mantissa: BigInt::zero(), exponent: 0 }
    }

    pub fn one() -> Self {
        Dyadic { mantissa: BigInt::one(), exponent: 0 }
    }

    /// `2^e` as a dyadic.
    pub fn pow2(e: i64) -> Self {
        Dyadic { mantissa: BigInt::one(), exponent: e }
    }

    pub fn from_int(v: i64) -> Self {
        Dyadic::new(BigInt::from(v), 0)
    }

    pub fn from_bigint(v: BigInt) -> Self {
        Dyadic::new(v, 0)
    }

    /// `numerator / 2^denom_exp`.
    pub fn from_ratio_pow2(numerator: i64, denom_exp: i64) -> Self {
        Dyadic::new(BigInt::from(numerator), -denom_exp)
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mantissa.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.mantissa.is_positive()
    }

    /// -1, 0, or 1.
    pub fn signum(&self) -> i32 {
        match self.mantissa.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mantissa
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    pub fn abs(&self) -> Self {
        Dyadic { mantissa: self.mantissa.abs(), exponent: self.exponent }
    }

    /// Exact multiplication by `2^shift`.
    pub fn mul_pow2(&self, shift: i64) -> Self {
        if self.is_zero() {
            return Dyadic::zero();
        }
        Dyadic { mantissa: self.mantissa.clone(), exponent: self.exponent + shift }
    }

    /// Exact doubling-free scale by a small integer.
    pub fn mul_int(&self, k: i64) -> Self {
        Dyadic::new(&self.mantissa * k, self.exponent)
    }

    /// `floor(self * 2^shift)` as an exact integer.
    pub fn floor_shifted(&self, shift: i64) -> BigInt {
        let e = self.exponent + shift;
        if e >= 0 {
            &self.mantissa << e as u64
        } else {
            // BigInt shr rounds toward negative infinity, which is floor.
            &self.mantissa >> (-e) as u64
        }
    }

    /// `ceil(self * 2^shift)` as an exact integer.
    pub fn ceil_shifted(&self, shift: i64) -> BigInt {
        -((-self.clone()).floor_shifted(shift))
    }

    /// Nearest multiple of `2^-n`, ties toward plus infinity.
    /// `round_to(3/4, 1) = 1`.
    pub fn round_to(&self, n: i64) -> Self {
        let e = self.exponent + n;
        if self.is_zero() || e >= 0 {
            return self.clone();
        }
        let shift = (-e) as u64;
        let floor = &self.mantissa >> shift;
        let rem = &self.mantissa - (&floor << shift);
        debug_assert!(!rem.is_negative());
        let half = BigInt::one() << (shift - 1);
        let m = if rem >= half { floor + 1 } else { floor };
        Dyadic::new(m, -n)
    }

    /// Round toward minus infinity to a multiple of `2^-n`.
    pub fn floor_to(&self, n: i64) -> Self {
        Dyadic::new(self.floor_shifted(n), -n)
    }

    /// Round toward plus infinity to a multiple of `2^-n`.
    pub fn ceil_to(&self, n: i64) -> Self {
        Dyadic::new(self.ceil_shifted(n), -n)
    }

    /// Is this an integer multiple of `2^-n`?
    pub fn is_multiple_of_pow2(&self, n: i64) -> bool {
        self.is_zero() || self.exponent >= -n
    }

    /// Number of significant mantissa bits.
    pub fn mantissa_bits(&self) -> u64 {
        self.mantissa.magnitude().bits()
    }

    /// Exponent `e` with `2^(e-1) <= |self| < 2^e`; None for zero.
    pub fn magnitude_exponent(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.exponent + self.mantissa.magnitude().bits() as i64)
        }
    }

    /// Parses the `<sign><mantissa>p<exponent>` form; accepts non-canonical
    /// input (e.g. `4p-2` becomes `1p0`).
    pub fn parse(s: &str) -> Result<Self> {
        let err = |msg: &str| Error::Parse { line: 1, col: 1, msg: msg.to_string() };
        let body = s.trim();
        let p = body.find('p').ok_or_else(|| err("missing 'p' separator"))?;
        let (mant_s, exp_s) = (&body[..p], &body[p + 1..]);
        let mantissa: BigInt =
            mant_s.parse().map_err(|_| err("bad mantissa"))?;
        let exponent: i64 = exp_s.parse().map_err(|_| err("bad exponent"))?;
        Ok(Dyadic::new(mantissa, exponent))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}p{}", self.mantissa, self.exponent)
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dyadic({self})")
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.signum(), other.signum()) {
            (a, b) if a != b => a.cmp(&b),
            (0, 0) => Ordering::Equal,
            _ => {
                // Same nonzero sign; compare magnitudes via exponents first.
                let ea = self.magnitude_exponent().unwrap();
                let eb = other.magnitude_exponent().unwrap();
                if ea != eb {
                    if self.signum() > 0 {
                        ea.cmp(&eb)
                    } else {
                        eb.cmp(&ea)
                    }
                } else {
                    let shift = self.exponent - other.exponent;
                    let (ma, mb) = if shift >= 0 {
                        (&self.mantissa << shift as u64, other.mantissa.clone())
                    } else {
                        (self.mantissa.clone(), &other.mantissa << (-shift) as u64)
                    };
                    ma.cmp(&mb)
                }
            }
        }
    }
}

impl Add for &Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: &Dyadic) -> Dyadic {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let e = self.exponent.min(rhs.exponent);
        let ma = &self.mantissa << (self.exponent - e) as u64;
        let mb = &rhs.mantissa << (rhs.exponent - e) as u64;
        Dyadic::new(ma + mb, e)
    }
}

impl Sub for &Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: &Dyadic) -> Dyadic {
        self + &(-rhs.clone())
    }
}

impl Mul for &Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: &Dyadic) -> Dyadic {
        if self.is_zero() || rhs.is_zero() {
            return Dyadic::zero();
        }
        Dyadic {
            mantissa: &self.mantissa * &rhs.mantissa,
            exponent: self.exponent + rhs.exponent,
        }
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic { mantissa: -self.mantissa, exponent: self.exponent }
    }
}

macro_rules! forward_owned {
    ($trait_:ident, $method:ident) => {
        impl $trait_ for Dyadic {
            type Output = Dyadic;
            fn $method(self, rhs: Dyadic) -> Dyadic {
                (&self).$method(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// Directed division `a / b` rounded to a multiple of `2^-w`.
/// `Down` rounds toward minus infinity, `Up` toward plus infinity.
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Rounding {
    Down,
    Up,
}

pub fn div_dir(a: &Dyadic, b: &Dyadic, w: i64, dir: Rounding) -> Result<Dyadic> {
    if b.is_zero() {
        return Err(Error::Parameter("division by zero".into()));
    }
    if a.is_zero() {
        return Ok(Dyadic::zero());
    }
    // a / b * 2^w = (ma / mb) * 2^(ea - eb + w); compute floor/ceil of the
    // integer quotient after aligning shifts.
    let shift = a.exponent() - b.exponent() + w;
    let (num, den) = if shift >= 0 {
        (a.mantissa() << shift as u64, b.mantissa().clone())
    } else {
        (a.mantissa().clone(), b.mantissa() << (-shift) as u64)
    };
    let q = match dir {
        Rounding::Down => num.div_floor(&den),
        Rounding::Up => num.div_ceil(&den),
    };
    Ok(Dyadic::new(q, -w))
}

/// A closed interval `[lo, hi]` with dyadic endpoints. Arithmetic is exact
/// on endpoints (dyadic ops are exact); use [`DyadicInterval::round_out`] to
/// trade precision for shorter mantissas, always outward.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DyadicInterval {
    lo: Dyadic,
    hi: Dyadic,
}

impl DyadicInterval {
    pub fn new(lo: Dyadic, hi: Dyadic) -> Result<Self> {
        if lo > hi {
            return Err(Error::Parameter("interval endpoints out of order".into()));
        }
        Ok(DyadicInterval { lo, hi })
    }

    pub fn point(d: Dyadic) -> Self {
        DyadicInterval { lo: d.clone(), hi: d }
    }

    pub fn lo(&self) -> &Dyadic {
        &self.lo
    }

    pub fn hi(&self) -> &Dyadic {
        &self.hi
    }

    pub fn width(&self) -> Dyadic {
        &self.hi - &self.lo
    }

    pub fn contains(&self, d: &Dyadic) -> bool {
        self.lo <= *d && *d <= self.hi
    }

    pub fn contains_interval(&self, other: &DyadicInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn add(&self, rhs: &Self) -> Self {
        DyadicInterval { lo: &self.lo + &rhs.lo, hi: &self.hi + &rhs.hi }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        DyadicInterval { lo: &self.lo - &rhs.hi, hi: &self.hi - &rhs.lo }
    }

    pub fn neg(&self) -> Self {
        DyadicInterval { lo: -self.hi.clone(), hi: -self.lo.clone() }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let c: [Dyadic; 4] = [
            &self.lo * &rhs.lo,
            &self.lo * &rhs.hi,
            &self.hi * &rhs.lo,
            &self.hi * &rhs.hi,
        ];
        let mut lo = c[0].clone();
        let mut hi = c[0].clone();
        for v in &c[1..] {
            if *v < lo {
                lo = v.clone();
            }
            if *v > hi {
                hi = v.clone();
            }
        }
        DyadicInterval { lo, hi }
    }

    /// Exact scale by `2^shift`.
    pub fn mul_pow2(&self, shift: i64) -> Self {
        DyadicInterval { lo: self.lo.mul_pow2(shift), hi: self.hi.mul_pow2(shift) }
    }

    pub fn mul_int(&self, k: i64) -> Self {
        if k >= 0 {
            DyadicInterval { lo: self.lo.mul_int(k), hi: self.hi.mul_int(k) }
        } else {
            DyadicInterval { lo: self.hi.mul_int(k), hi: self.lo.mul_int(k) }
        }
    }

    /// Interval division; errors if `rhs` straddles or touches zero.
    pub fn div(&self, rhs: &Self, w: i64) -> Result<Self> {
        if rhs.lo.signum() * rhs.hi.signum() <= 0 {
            return Err(Error::Parameter("interval division by zero-straddling interval".into()));
        }
        // Quotient extremes are among the four directed endpoint quotients.
        let lo = [
            div_dir(&self.lo, &rhs.lo, w, Rounding::Down)?,
            div_dir(&self.lo, &rhs.hi, w, Rounding::Down)?,
            div_dir(&self.hi, &rhs.lo, w, Rounding::Down)?,
            div_dir(&self.hi, &rhs.hi, w, Rounding::Down)?,
        ];
        let hi = [
            div_dir(&self.lo, &rhs.lo, w, Rounding::Up)?,
            div_dir(&self.lo, &rhs.hi, w, Rounding::Up)?,
            div_dir(&self.hi, &rhs.lo, w, Rounding::Up)?,
            div_dir(&self.hi, &rhs.hi, w, Rounding::Up)?,
        ];
        let min = lo.iter().min().unwrap().clone();
        let max = hi.iter().max().unwrap().clone();
        Ok(DyadicInterval { lo: min, hi: max })
    }

    /// Outward rounding to multiples of `2^-n`.
    pub fn round_out(&self, n: i64) -> Self {
        DyadicInterval { lo: self.lo.floor_to(n), hi: self.hi.ceil_to(n) }
    }

    /// Midpoint rounded to a multiple of `2^-n` (not outward; convenience
    /// for turning an enclosure into a single approximant).
    pub fn mid_round(&self, n: i64) -> Dyadic {
        (&(&self.lo + &self.hi).mul_pow2(-1)).round_to(n)
    }

    /// Upper bound on `|x|` over the interval.
    pub fn abs_hi(&self) -> Dyadic {
        let a = self.lo.abs();
        let b = self.hi.abs();
        if a > b {
            a
        } else {
            b
        }
    }

    pub fn hull(&self, rhs: &Self) -> Self {
        DyadicInterval {
            lo: if self.lo < rhs.lo { self.lo.clone() } else { rhs.lo.clone() },
            hi: if self.hi > rhs.hi { self.hi.clone() } else { rhs.hi.clone() },
        }
    }
}

/// `Y mod 2^r` with a mathematical (non-negative) result.
pub fn mod_pow2(y: &BigInt, r: u64) -> BigUint {
    let modulus = BigInt::one() << r;
    y.mod_floor(&modulus).to_biguint().expect("mod_floor of positive modulus is non-negative")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(m: i64, e: i64) -> Dyadic {
        Dyadic::new(BigInt::from(m), e)
    }

    #[test]
    fn canonical_forms() {
        assert_eq!(d(4, -2), d(1, 0));
        assert_eq!(d(0, 5), Dyadic::zero());
        assert_eq!(d(6, 0), d(3, 1));
        assert_eq!(d(-8, -3).to_string(), "-1p0");
    }

    #[test]
    fn text_round_trip() {
        for s in ["3p-2", "-1p0", "0p0", "17p5", "-123p-40"] {
            let v = Dyadic::parse(s).unwrap();
            assert_eq!(v.to_string(), s);
        }
        // Non-canonical input is accepted and canonicalized.
        assert_eq!(Dyadic::parse("4p-2").unwrap().to_string(), "1p0");
    }

    #[test]
    fn ordering() {
        assert!(d(3, -2) < d(1, 0));
        assert!(d(-3, -2) > d(-1, 0));
        assert!(d(1, 10) > d(1023, 0));
        assert_eq!(d(2, -1), d(1, 0));
    }

    #[test]
    fn arithmetic_exact() {
        let a = d(3, -2); // 3/4
        let b = d(1, -2); // 1/4
        assert_eq!(&a + &b, d(1, 0));
        assert_eq!(&a - &b, d(1, -1));
        assert_eq!(&a * &b, d(3, -4));
    }

    #[test]
    fn round_ties_up() {
        // 3/4 to multiples of 1/2: tie between 1/2 and 1, toward +inf -> 1.
        assert_eq!(d(3, -2).round_to(1), d(1, 0));
        // -3/4 to multiples of 1/2: tie between -1 and -1/2 -> -1/2.
        assert_eq!(d(-3, -2).round_to(1), d(-1, -1));
        // 5/8 to quarters: tie between 1/2 and 3/4 -> 3/4.
        assert_eq!(d(5, -3).round_to(2), d(3, -2));
        // Idempotent once on the grid.
        assert_eq!(d(3, -2).round_to(2), d(3, -2));
    }

    #[test]
    fn floor_ceil_shifted() {
        assert_eq!(d(3, -2).floor_shifted(0), BigInt::from(0));
        assert_eq!(d(3, -2).ceil_shifted(0), BigInt::from(1));
        assert_eq!(d(-3, -2).floor_shifted(0), BigInt::from(-1));
        assert_eq!(d(-3, -2).ceil_shifted(0), BigInt::from(0));
        assert_eq!(d(3, -2).floor_shifted(2), BigInt::from(3));
    }

    #[test]
    fn interval_mul_signs() {
        let a = DyadicInterval::new(d(-1, 0), d(2, 0)).unwrap();
        let b = DyadicInterval::new(d(-3, 0), d(1, 0)).unwrap();
        let p = a.mul(&b);
        assert_eq!(p.lo(), &d(-6, 0));
        assert_eq!(p.hi(), &d(3, 0));
    }

    #[test]
    fn interval_div_directed() {
        let a = DyadicInterval::point(d(1, 0));
        let b = DyadicInterval::point(d(3, 0));
        let q = a.div(&b, 8).unwrap();
        assert!(q.lo() <= &d(85, -8) && &d(86, -8) <= q.hi());
        assert!((&q.width()) <= &d(2, -8));
    }

    #[test]
    fn mod_pow2_negative() {
        assert_eq!(mod_pow2(&BigInt::from(-1), 4), BigUint::from(15u32));
        assert_eq!(mod_pow2(&BigInt::from(21), 4), BigUint::from(5u32));
    }
}
