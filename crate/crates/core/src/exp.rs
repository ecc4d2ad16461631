//! Rigorous enclosures of `e^x`.
//!
//! Strategy: argument reduction `e^t = (e^(t/2^m))^(2^m)` with
//! `|t/2^m| <= 2^-(1+extra)`, Taylor series with an explicit Lagrange tail,
//! interval term evaluation with directed rounding, then `m` interval
//! squarings. Reduction depth balances series length against squarings:
//! with `extra` near the square root of the working precision `w`, each
//! term buys `extra` bits and the total multiplication count drops from
//! about `w / log w` to about `2 sqrt(w)`, which matters at the
//! tens-of-thousands-of-bits precisions the packing scales demand. Every
//! squaring doubles the relative error, so the working precision pre-pays
//! one bit per squaring (the existing `w = n + m + ...` budget). A shortcut
//! handles very negative arguments (`e^t <= 2^t` for `t <= 0`), so
//! enclosures of astronomically small values cost nothing.

use num_bigint::BigUint;
use num_traits::One;

use crate::dyadic::{div_dir, Dyadic, DyadicInterval, Rounding};
use crate::error::{Error, Result};

/// Hard ceiling on internal working precision in bits.
pub const PRECISION_CAP: i64 = 1 << 16;

/// Extra argument-reduction depth for a working precision near `w`: about
/// `sqrt(w)`, the point where the shorter series and the added squarings
/// cost the same.
fn extra_reduction(w: i64) -> i64 {
    (w.max(16) as u64).isqrt() as i64
}

/// Enclosure of `{e^t : t in x}`; the result's width is at most `2^-n` plus
/// the spread of the image itself (for point inputs, at most `2^-n`).
pub fn exp_enclosure(x: &DyadicInterval, n: i64) -> Result<DyadicInterval> {
    let lo = exp_point(x.lo(), n + 1)?;
    let hi = exp_point(x.hi(), n + 1)?;
    // exp is monotone increasing.
    DyadicInterval::new(lo.lo().clone(), hi.hi().clone())
}

/// Enclosure of `e^t` for a single dyadic `t`, width at most `2^-n`.
pub fn exp_point(t: &Dyadic, n: i64) -> Result<DyadicInterval> {
    if t.is_zero() {
        return Ok(DyadicInterval::point(Dyadic::one()));
    }
    // e^t <= 2^t for t <= 0 (e > 2), so once t <= -(n+1) the enclosure
    // [0, 2^-(n+1)] is already tight enough.
    if t.is_negative() {
        let neg = t.abs();
        if neg >= Dyadic::from_int(n.max(0) + 1) {
            return DyadicInterval::new(Dyadic::zero(), Dyadic::pow2(-(n + 1)));
        }
    }

    // Argument reduction: m halvings bring |t| / 2^m <= 2^-(1+extra).
    let mag = t.magnitude_exponent().expect("nonzero");
    // Positive t inflates the result by e^t <= 2^(1.5 t); budget for it.
    let growth = if t.is_positive() { (3 * (mag.max(0) + 1)) / 2 + 2 } else { 0 };
    let extra = extra_reduction(n + (mag + 1).max(0) + growth + 16);
    let m = (mag + 1).max(0) + extra;
    let w = n + m + growth + 16;
    if w > PRECISION_CAP {
        return Err(Error::Capacity {
            what: "exp working precision",
            limit: PRECISION_CAP as u64,
            got: w as u64,
        });
    }

    let z = t.mul_pow2(-m); // exact
    let z_iv = DyadicInterval::point(z);

    // Smallest N with 2 * (2^-(1+extra))^N / N! <= 2^-(w+2), i.e.
    // N (1 + extra) + bits(N!) >= w + 3.
    let mut fact = BigUint::one();
    let mut nterms: u64 = 1;
    while (nterms as i64) * (1 + extra) + (fact.bits() as i64) < w + 3 {
        nterms += 1;
        fact *= nterms;
    }

    // Taylor sum with interval terms; "term" holds z^i / i!.
    let mut sum = DyadicInterval::point(Dyadic::one());
    let mut term = DyadicInterval::point(Dyadic::one());
    for i in 1..=nterms {
        term = term.mul(&z_iv);
        let lo = div_dir(term.lo(), &Dyadic::from_int(i as i64), w + 8, Rounding::Down)?;
        let hi = div_dir(term.hi(), &Dyadic::from_int(i as i64), w + 8, Rounding::Up)?;
        term = DyadicInterval::new(lo, hi)?;
        sum = sum.add(&term);
    }
    let tail = Dyadic::pow2(-(w + 1));
    let mut enc = sum.add(&DyadicInterval::new(-tail.clone(), tail)?);

    // m interval squarings; values stay positive, clamp the low end at 0
    // against rounding dips.
    for _ in 0..m {
        enc = enc.mul(&enc).round_out(w + 4);
        if enc.lo().is_negative() {
            enc = DyadicInterval::new(Dyadic::zero(), enc.hi().clone())?;
        }
    }
    Ok(enc)
}

/// Enclosure of `e^t` with *relative* width about `2^-rel`. Unlike
/// `exp_point`, large negative arguments keep full relative precision: the
/// mantissa stays around `rel` bits while the exponent carries the size, so
/// `e^-4096` comes back as a tight interval around `2^-5909` instead of
/// `[0, eps]`. The argument magnitude is capped because the cost of the
/// final squarings grows with it.
pub fn exp_point_rel(t: &Dyadic, rel: i64) -> Result<DyadicInterval> {
    if t.is_zero() {
        return Ok(DyadicInterval::point(Dyadic::one()));
    }
    let mag = t.magnitude_exponent().expect("nonzero");
    if mag > 24 {
        return Err(Error::Capacity {
            what: "exp argument magnitude",
            limit: 24,
            got: mag as u64,
        });
    }
    let extra = extra_reduction(rel + 2 * (mag + 1).max(1) + 24);
    let m = (mag + 1).max(1) + extra;
    // Each squaring doubles the relative error, so pre-pay m bits plus slack.
    let w = rel + 2 * m + 24;
    if w > PRECISION_CAP {
        return Err(Error::Capacity {
            what: "exp working precision",
            limit: PRECISION_CAP as u64,
            got: w as u64,
        });
    }

    let z = t.mul_pow2(-m); // exact, |z| <= 2^-(1+extra)
    let z_iv = DyadicInterval::point(z);

    let mut fact = BigUint::one();
    let mut nterms: u64 = 1;
    while (nterms as i64) * (1 + extra) + (fact.bits() as i64) < w + 3 {
        nterms += 1;
        fact *= nterms;
    }
    let mut sum = DyadicInterval::point(Dyadic::one());
    let mut term = DyadicInterval::point(Dyadic::one());
    for i in 1..=nterms {
        term = term.mul(&z_iv);
        let lo = div_dir(term.lo(), &Dyadic::from_int(i as i64), w + 8, Rounding::Down)?;
        let hi = div_dir(term.hi(), &Dyadic::from_int(i as i64), w + 8, Rounding::Up)?;
        term = DyadicInterval::new(lo, hi)?;
        sum = sum.add(&term);
    }
    let tail = Dyadic::pow2(-(w + 1));
    let mut enc = sum.add(&DyadicInterval::new(-tail.clone(), tail)?);

    // Interval squarings with rounding on a grid scaled to the current
    // magnitude, so the mantissa stays near w bits however small the value.
    for _ in 0..m {
        enc = enc.mul(&enc);
        let scale = enc.hi().magnitude_exponent().unwrap_or(0);
        enc = enc.round_out(w - scale);
        if enc.lo().is_negative() {
            enc = DyadicInterval::new(Dyadic::zero(), enc.hi().clone())?;
        }
    }
    Ok(enc)
}

/// Enclosure of `1/t` for dyadic `t != 0`, endpoints rounded at `w` bits.
pub fn recip_point(t: &Dyadic, w: i64) -> Result<DyadicInterval> {
    let one = Dyadic::one();
    let lo = div_dir(&one, t, w, Rounding::Down)?;
    let hi = div_dir(&one, t, w, Rounding::Up)?;
    DyadicInterval::new(lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    // First 50 decimal digits of e, scaled: floor(e * 10^49).
    const E_DIGITS: &str = "27182818284590452353602874713526624977572470936999";

    #[test]
    fn exp_zero_is_one() {
        let e = exp_point(&Dyadic::zero(), 64).unwrap();
        assert_eq!(e.lo(), &Dyadic::one());
        assert_eq!(e.hi(), &Dyadic::one());
    }

    #[test]
    fn exp_one_matches_decimal_constant() {
        use num_bigint::BigInt;
        let enc = exp_point(&Dyadic::one(), 140).unwrap();
        assert!((&enc.width()) <= &Dyadic::pow2(-140));
        // Compare against floor(e * 10^49) by scaling the enclosure.
        let digits: BigInt = E_DIGITS.parse().unwrap();
        let scale: BigInt = BigInt::from(10u32).pow(49u32);
        let lo_scaled = enc.lo() * &Dyadic::from_bigint(scale.clone());
        let hi_scaled = enc.hi() * &Dyadic::from_bigint(scale);
        assert!(lo_scaled.floor_shifted(0) <= digits);
        assert!(hi_scaled.ceil_shifted(0) >= digits);
    }

    #[test]
    fn exp_minus_hundred_is_tiny() {
        let enc = exp_point(&Dyadic::from_int(-100), 101).unwrap();
        assert!(!enc.lo().is_negative());
        assert!(enc.hi() <= &Dyadic::pow2(-100));
    }

    #[test]
    fn exp_very_negative_shortcut() {
        let enc = exp_point(&Dyadic::from_int(-40000), 64).unwrap();
        assert!(!enc.lo().is_negative());
        assert!(enc.hi() <= &Dyadic::pow2(-64));
    }

    #[test]
    fn exp_rel_keeps_precision_for_large_negative_args() {
        // e^-1000 = 2^(-1000/ln 2) = 2^-1442.695..; a relative enclosure must
        // land strictly inside [2^-1443, 2^-1442] with a positive low end.
        let enc = exp_point_rel(&Dyadic::from_int(-1000), 64).unwrap();
        assert!(enc.lo().is_positive());
        assert!(enc.lo() > &Dyadic::pow2(-1443));
        assert!(enc.hi() < &Dyadic::pow2(-1442));
        // Relative width: hi - lo <= lo * 2^-60.
        assert!(enc.width() <= enc.lo().mul_pow2(-60));
    }

    #[test]
    fn exp_rel_agrees_with_absolute_version() {
        let t = Dyadic::from_ratio_pow2(-13, 2); // -13/4
        let a = exp_point(&t, 80).unwrap();
        let b = exp_point_rel(&t, 80).unwrap();
        assert!(a.lo() <= b.hi() && b.lo() <= a.hi());
    }

    #[test]
    fn exp_monotone_pair() {
        let a = exp_point(&Dyadic::from_ratio_pow2(-1, 1), 80).unwrap(); // e^(-1/2)
        let b = exp_point(&Dyadic::from_ratio_pow2(1, 1), 80).unwrap(); // e^(1/2)
        assert!(a.hi() < b.lo());
    }

    #[test]
    fn recip_encloses() {
        let t = Dyadic::from_int(3);
        let r = recip_point(&t, 64).unwrap();
        // 1/3 is in [lo, hi] and the width is tiny.
        let three = Dyadic::from_int(3);
        assert!((r.lo() * &three) <= Dyadic::one());
        assert!((r.hi() * &three) >= Dyadic::one());
        assert!((&r.width()) <= &Dyadic::pow2(-63));
    }
}
