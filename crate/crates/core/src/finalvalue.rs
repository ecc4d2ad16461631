//! Packs a whole family of decision answers into a single real number.
//!
//! Given a tally language `T` (a decidable subset of `{0}^*`) and a
//! reduction `F` taking `0^n` to a counting instance whose truth is
//! `T(0^n)`, the encoded value is the series
//!
//! ```text
//!   x = sum_n  b_n 2^-e_n,    e_n = 2n + gamma(n) + rho_bar(n+1),
//! ```
//!
//! where `rho_bar(n)` adds up the output scales `rho` of the first `n`
//! reduced instances and `gamma` is the final-value budget polynomial
//! built from the family's width exponent and the certified bump table.
//! The bit `b_n` is not copied from the tally: the reduced instance is
//! compiled, normalized, and solved, and its recognized output enters the
//! series. Decoding bit `n` needs one name query just past `e_n`; the
//! schedule keeps consecutive exponents at least four apart, so the
//! rounded query answer at scale `e_n` has parity `b_n` regardless of the
//! other terms.
//!
//! At desk scale the series is truncated at a configurable horizon; asking
//! for bits beyond the horizon is an error rather than a wrong answer.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use num_integer::Integer as _;

use crate::bump::BumpFunction;
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::formula::{parse_instance, CountingInstance};
use crate::gadget::{GadgetInstance, Mode};
use crate::name::RealName;
use crate::polynomial::Polynomial;

pub const DEFAULT_HORIZON: usize = 8;

/// Horizon cap: every level compiles and solves one instance, so the
/// schedule stays cheap only for short prefixes.
pub const MAX_HORIZON: usize = 24;

/// Scaling-length polynomial of the final-value layer.
pub fn lambda_fv_poly() -> Polynomial {
    Polynomial::new(alloc::vec![1, 1])
}

/// The exponent schedule and the polynomials that produced it.
#[derive(Clone, Debug)]
pub struct FinalValueParams {
    pub lambda: Polynomial,
    /// `gamma(x) = (x+1) q_hat + s_hat(x+1) + x lambda(x)`, with `q_hat`
    /// the largest width exponent among the reduced instances.
    pub gamma: Polynomial,
    pub horizon: usize,
    /// Output scale `rho` of each reduced instance.
    pub rho: Vec<i64>,
    /// Digit positions `e_0 < e_1 < ...`, one per horizon level.
    pub exponents: Vec<i64>,
}

impl FinalValueParams {
    pub fn exponent(&self, n: usize) -> Result<i64> {
        self.exponents.get(n).copied().ok_or_else(|| {
            Error::Parameter(format!(
                "bit index {n} beyond the configured horizon {}",
                self.horizon
            ))
        })
    }
}

/// A truncated encoded series: the schedule, the solved bits, and the exact
/// dyadic value of the partial sum.
#[derive(Clone, Debug)]
pub struct FinalValue {
    pub params: FinalValueParams,
    pub bits: Vec<bool>,
    pub value: Dyadic,
}

impl FinalValue {
    /// A name of the truncated series value.
    pub fn name(&self) -> RealName {
        RealName::from_exact(self.value.clone())
    }
}

/// Builds the truncated series for a reduction, solving every reduced
/// instance along the way.
pub fn build_final_value(
    reduction: &dyn Fn(usize) -> Result<CountingInstance>,
    bump: &Arc<BumpFunction>,
    k: u32,
    horizon: usize,
) -> Result<FinalValue> {
    if horizon == 0 || horizon > MAX_HORIZON {
        return Err(Error::Parameter(format!(
            "horizon must be between 1 and {MAX_HORIZON}"
        )));
    }
    let mut bits = Vec::with_capacity(horizon);
    let mut rho = Vec::with_capacity(horizon);
    let mut q_hat = 0u64;
    for n in 0..horizon {
        let inst = reduction(n)?;
        let gi = GadgetInstance::build(&inst, bump.clone(), k, Mode::Faithful)?;
        let out = gi.output();
        if out != 0 && out != 1 {
            return Err(Error::Parameter(
                "reduced instance output is not a bit".to_owned(),
            ));
        }
        bits.push(out == 1);
        rho.push(gi.params().rho);
        q_hat = q_hat.max(gi.params().q as u64);
    }
    let lambda = lambda_fv_poly();
    let s_max = bump.s_max() as u64;
    // (x+1) q_hat + (s_max + x + 1) + x (x+1), collected by degree.
    let gamma = Polynomial::new(alloc::vec![q_hat + s_max + 1, q_hat + 2, 1]);
    let mut exponents = Vec::with_capacity(horizon);
    let mut rho_bar = 0i64;
    for (n, r) in rho.iter().enumerate() {
        rho_bar += r;
        exponents.push(2 * n as i64 + gamma.eval(n as u64)? as i64 + rho_bar);
    }
    for pair in exponents.windows(2) {
        if pair[1] - pair[0] < 4 {
            return Err(Error::Parameter(
                "final-value exponent schedule too tight to decode".to_owned(),
            ));
        }
    }
    let mut value = Dyadic::zero();
    for (n, &b) in bits.iter().enumerate() {
        if b {
            value = &value + &Dyadic::pow2(-exponents[n]);
        }
    }
    Ok(FinalValue {
        params: FinalValueParams { lambda, gamma, horizon, rho, exponents },
        bits,
        value,
    })
}

/// Reads bit `n` off any name of the encoded value: one query at precision
/// `e_n + 2`, scale by `2^e_n`, round to the nearest integer, take parity.
/// Terms with smaller exponents contribute an even integer, later terms and
/// the query error together stay below one half.
pub fn decode_tally(params: &FinalValueParams, name: &RealName, n: usize) -> Result<bool> {
    let e = params.exponent(n)?;
    let answer = name.query(e + 2)?;
    let rounded = answer.mul_pow2(e).round_to(0);
    Ok(rounded.floor_shifted(0).is_odd())
}

/// The canonical reduction used by the test tallies and the CLI: level `n`
/// becomes a one-variable instance (variable name of length `n + 1`, so
/// sizes grow strictly) with threshold 1 when `0^n` is in the language and
/// the unachievable threshold 2 when it is not.
pub fn canonical_reduction(
    tally: Arc<dyn Fn(usize) -> bool + Send + Sync>,
) -> impl Fn(usize) -> Result<CountingInstance> {
    move |n| {
        let var: String = core::iter::repeat('a').take(n + 1).collect();
        let threshold = if tally(n) { 1 } else { 2 };
        let text =
            format!("blocks 1\nblock 1 vars {var} threshold {threshold}\nformula {var}\n");
        parse_instance(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump() -> Arc<BumpFunction> {
        Arc::new(BumpFunction::with_table(8).unwrap())
    }

    fn tally_fn(f: fn(usize) -> bool) -> Arc<dyn Fn(usize) -> bool + Send + Sync> {
        Arc::new(f)
    }

    #[test]
    fn single_bit_series_has_the_advertised_exponent() {
        let red = canonical_reduction(tally_fn(|n| n == 0));
        let fv = build_final_value(&red, &bump(), 1, 4).unwrap();
        // Only bit 0 is set: the value is exactly 2^-(gamma(0) + rho_bar(1)).
        let e0 = fv.params.gamma.eval(0).unwrap() as i64 + fv.params.rho[0];
        assert_eq!(fv.params.exponents[0], e0);
        assert_eq!(fv.value, Dyadic::pow2(-e0));
    }

    #[test]
    fn schedule_is_strictly_increasing_with_wide_gaps() {
        let red = canonical_reduction(tally_fn(|_| true));
        let fv = build_final_value(&red, &bump(), 1, 6).unwrap();
        for pair in fv.params.exponents.windows(2) {
            assert!(pair[1] - pair[0] >= 4);
        }
        // Each gap includes a whole fresh rho, thousands of bits here.
        assert!(fv.params.exponents[1] - fv.params.exponents[0] > 1000);
    }

    #[test]
    fn bits_come_from_the_solved_instances() {
        let primes = tally_fn(|n| matches!(n, 2 | 3 | 5 | 7));
        let red = canonical_reduction(primes);
        let fv = build_final_value(&red, &bump(), 1, 8).unwrap();
        let expect: Vec<bool> = (0..8).map(|n| matches!(n, 2 | 3 | 5 | 7)).collect();
        assert_eq!(fv.bits, expect);
    }

    #[test]
    fn round_trip_for_the_four_test_tallies() {
        let tallies: [(&str, fn(usize) -> bool); 4] = [
            ("zeros", |_| false),
            ("ones", |_| true),
            ("evens", |n| n % 2 == 0),
            ("primes", |n| matches!(n, 2 | 3 | 5 | 7)),
        ];
        let b = bump();
        for (label, t) in tallies {
            let red = canonical_reduction(tally_fn(t));
            let fv = build_final_value(&red, &b, 1, DEFAULT_HORIZON).unwrap();
            let name = fv.name();
            for n in 0..DEFAULT_HORIZON {
                let got = decode_tally(&fv.params, &name, n).unwrap();
                assert_eq!(got, t(n), "{label} bit {n}");
            }
        }
    }

    #[test]
    fn horizon_is_enforced() {
        let red = canonical_reduction(tally_fn(|_| true));
        let fv = build_final_value(&red, &bump(), 1, 3).unwrap();
        let name = fv.name();
        assert!(decode_tally(&fv.params, &name, 3).is_err());
        assert!(build_final_value(&red, &bump(), 1, 0).is_err());
        assert!(build_final_value(&red, &bump(), 1, MAX_HORIZON + 1).is_err());
    }

    #[test]
    fn decoding_tolerates_any_conforming_name() {
        // Wrap the exact value in a refiner-backed name that answers with
        // outward-rounded enclosures instead of exact rounding.
        let red = canonical_reduction(tally_fn(|n| n % 2 == 0));
        let fv = build_final_value(&red, &bump(), 1, 4).unwrap();
        let v = fv.value.clone();
        let name = RealName::from_refiner(move |w| {
            crate::dyadic::DyadicInterval::new(
                &v - &Dyadic::pow2(-w - 1),
                &v + &Dyadic::pow2(-w - 1),
            )
        });
        for n in 0..4 {
            assert_eq!(decode_tally(&fv.params, &name, n).unwrap(), n % 2 == 0);
        }
    }
}
