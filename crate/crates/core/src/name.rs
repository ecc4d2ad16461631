//! Names of real numbers: precision-indexed query functions.
//!
//! A name of `x` answers `query(n)` with a dyadic `a_n` that is an integer
//! multiple of `2^-n` and equals `floor(x * 2^n) * 2^-n` or
//! `ceil(x * 2^n) * 2^-n` (so `|a_n - x| <= 2^-n`). Queries are pure and
//! repeatable. The wrapper checks the integrality half of the contract on
//! every query and reports violations as errors, which is how adversarial
//! oracles are caught.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;

use crate::dyadic::{Dyadic, DyadicInterval};
use crate::error::{Error, Result};
use crate::polynomial::Polynomial;

type QueryFn = dyn Fn(i64) -> Result<Dyadic> + Send + Sync;

#[derive(Clone)]
pub struct RealName {
    query: Arc<QueryFn>,
}

impl RealName {
    /// Queries the name at precision `n`, checking that the answer is a
    /// multiple of `2^-n`.
    pub fn query(&self, n: i64) -> Result<Dyadic> {
        let a = (self.query)(n)?;
        if !a.is_multiple_of_pow2(n) {
            return Err(Error::NameContract(format!(
                "query({n}) returned {a}, not a multiple of 2^-{n}"
            )));
        }
        Ok(a)
    }

    /// The name of an exact dyadic: queries round it onto the `2^-n` grid
    /// (nearest is always floor or ceil).
    pub fn from_exact(d: Dyadic) -> Self {
        RealName { query: Arc::new(move |n| Ok(d.round_to(n))) }
    }

    /// Builds a name from an enclosure refiner: `refine(w)` must return an
    /// interval containing `x` with width at most `2^-w`.
    pub fn from_refiner<F>(refine: F) -> Self
    where
        F: Fn(i64) -> Result<DyadicInterval> + Send + Sync + 'static,
    {
        RealName {
            query: Arc::new(move |n| {
                let enc = refine(n + 1)?;
                Ok(conforming_multiple(&enc, n))
            }),
        }
    }

    /// Wraps a raw query function without any conformance guarantees.
    /// Intended for adversarial oracles in tests; `query` still checks.
    pub fn from_query_raw<F>(f: F) -> Self
    where
        F: Fn(i64) -> Result<Dyadic> + Send + Sync + 'static,
    {
        RealName { query: Arc::new(f) }
    }
}

/// Given an enclosure of `x` with width strictly below `2^-n`, returns a
/// valid name answer at precision `n`: `floor(hi * 2^n) * 2^-n` is always
/// `floor(x * 2^n) * 2^-n` or `ceil(x * 2^n) * 2^-n`.
pub fn conforming_multiple(enc: &DyadicInterval, n: i64) -> Dyadic {
    Dyadic::new(enc.hi().floor_shifted(n), -n)
}

/// Outcome of a modulus-of-continuity check.
#[derive(Clone, Debug)]
pub struct ModulusReport {
    pub trials: u64,
    pub pass: bool,
    /// Worst observed pair, as display strings (x, y, n, gap).
    pub worst: Option<(String, String, i64, String)>,
}

/// Checks that `p` is a modulus of continuity for the function presented by
/// `fname`: whenever `|x - y| <= 2^-p(n)`, the values differ by at most
/// `2^-n` (up to query slack `2^(-n-1)`). Pairs are sampled on a
/// deterministic bit-reversal grid over `[0, 1]`.
pub fn check_modulus(
    fname: &dyn Fn(&Dyadic) -> Result<RealName>,
    p: &Polynomial,
    ns: &[i64],
    pairs_per_n: u32,
) -> Result<ModulusReport> {
    let mut trials = 0u64;
    let mut pass = true;
    let mut worst: Option<(Dyadic, Dyadic, i64, Dyadic)> = None;
    let grid_bits = 10u32;
    for &n in ns {
        let pn = p.eval(n.max(0) as u64)? as i64;
        let delta = Dyadic::pow2(-pn);
        for j in 0..pairs_per_n {
            let x = bit_reversal_unit(j, grid_bits);
            // Step inward so both endpoints stay in [0,1].
            let y = if x <= Dyadic::from_ratio_pow2(1, 1) { &x + &delta } else { &x - &delta };
            let a = fname(&x)?.query(n + 2)?;
            let b = fname(&y)?.query(n + 2)?;
            let gap = (&a - &b).abs();
            let tol = &Dyadic::pow2(-n) + &Dyadic::pow2(-n - 1);
            trials += 1;
            if gap > tol {
                pass = false;
            }
            let record = match &worst {
                None => true,
                Some((_, _, wn, wgap)) => {
                    // Track the worst slack-relative gap.
                    gap.mul_pow2(*wn) > wgap.mul_pow2(n)
                }
            };
            if record {
                worst = Some((x.clone(), y.clone(), n, gap));
            }
        }
    }
    Ok(ModulusReport {
        trials,
        pass,
        worst: worst.map(|(x, y, n, g)| (format!("{x}"), format!("{y}"), n, format!("{g}"))),
    })
}

/// `j`-th point of the bit-reversal (van der Corput) sequence on `[0,1)`
/// with the given resolution.
pub(crate) fn bit_reversal_unit(j: u32, bits: u32) -> Dyadic {
    let mut rev = 0u64;
    for b in 0..bits {
        if (j >> b) & 1 == 1 {
            rev |= 1 << (bits - 1 - b);
        }
    }
    Dyadic::new(rev.into(), -(bits as i64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{div_dir, Rounding};
    use num_bigint::BigInt;

    #[test]
    fn exact_name_answers_are_conforming() {
        let x = Dyadic::from_ratio_pow2(3, 2); // 3/4
        let name = RealName::from_exact(x.clone());
        let a10 = name.query(10).unwrap();
        assert_eq!(a10, x);
        let a1 = name.query(1).unwrap();
        // 3/4 at precision 1: floor gives 1/2, ceil gives 1; nearest-up gives 1.
        assert_eq!(a1, Dyadic::one());
    }

    #[test]
    fn refined_name_of_one_third() {
        // Enclose 1/3 by directed division at increasing precision.
        let name = RealName::from_refiner(|w| {
            let lo = div_dir(&Dyadic::one(), &Dyadic::from_int(3), w + 2, Rounding::Down)?;
            let hi = div_dir(&Dyadic::one(), &Dyadic::from_int(3), w + 2, Rounding::Up)?;
            DyadicInterval::new(lo, hi)
        });
        let a2 = name.query(2).unwrap();
        // Valid answers at precision 2 are 1/4 and 1/2.
        assert!(a2 == Dyadic::from_ratio_pow2(1, 2) || a2 == Dyadic::from_ratio_pow2(1, 1));
        // Conformance: multiple of 2^-2.
        assert!(a2.is_multiple_of_pow2(2));
        // Coherence along precisions.
        for n in 0..40 {
            let a = name.query(n).unwrap();
            let approx_err = (&a - &Dyadic::from_ratio_pow2(1, 2)).abs();
            // 1/3 is within 2^-n of a, and |1/3 - 1/2| = 1/6 < 1/4.
            assert!(approx_err <= &Dyadic::pow2(-n) + &Dyadic::from_ratio_pow2(1, 2));
        }
    }

    #[test]
    fn adversarial_name_is_caught() {
        let bad = RealName::from_query_raw(|n| Ok(Dyadic::pow2(-n - 1)));
        let err = bad.query(4).unwrap_err();
        assert!(matches!(err, Error::NameContract(_)));
    }

    #[test]
    fn exact_dyadic_on_grid_is_returned_exactly() {
        // If x * 2^n is an integer the name must answer exactly x.
        let x = Dyadic::from_ratio_pow2(5, 3); // 5/8
        let name = RealName::from_exact(x.clone());
        assert_eq!(name.query(3).unwrap(), x);
        assert_eq!(name.query(20).unwrap(), x);
    }

    #[test]
    fn conforming_multiple_straddles() {
        // Enclosure straddling a grid point m*2^-n must return that point.
        let enc = DyadicInterval::new(
            Dyadic::parse("127p-8").unwrap(),  // just below 1/2
            Dyadic::parse("129p-8").unwrap(),  // just above 1/2
        )
        .unwrap();
        assert_eq!(conforming_multiple(&enc, 1), Dyadic::from_ratio_pow2(1, 1));
    }

    #[test]
    fn modulus_identity_function() {
        let f = |x: &Dyadic| Ok(RealName::from_exact(x.clone()));
        let p = Polynomial::new(alloc::vec![0, 1]); // p(n) = n
        let report = check_modulus(&f, &p, &[4, 8, 16], 16).unwrap();
        assert!(report.pass);
        assert_eq!(report.trials, 48);
    }

    #[test]
    fn modulus_constant_function() {
        let c = Dyadic::from_ratio_pow2(1, 2);
        let f = move |_x: &Dyadic| Ok(RealName::from_exact(c.clone()));
        let p = Polynomial::zero();
        let report = check_modulus(&f, &p, &[4, 10], 8).unwrap();
        assert!(report.pass);
    }

    #[test]
    fn modulus_violation_detected() {
        // A step function has no modulus of continuity: values jump by 1
        // across x = 1/2 no matter how close the pair.
        let f = |x: &Dyadic| {
            let v = if x < &Dyadic::from_ratio_pow2(1, 1) { Dyadic::zero() } else { Dyadic::one() };
            Ok(RealName::from_exact(v))
        };
        let p = Polynomial::new(alloc::vec![0, 1]);
        let report = check_modulus(&f, &p, &[4], 64).unwrap();
        assert!(!report.pass);
    }

    #[test]
    fn bit_reversal_points_are_distinct() {
        let mut seen = alloc::vec::Vec::new();
        for j in 0..64 {
            let x = bit_reversal_unit(j, 10);
            assert!(!seen.contains(&x));
            seen.push(x);
        }
        let _ = BigInt::from(0); // keep import used
    }
}
