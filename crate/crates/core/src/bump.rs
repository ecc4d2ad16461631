//! The smooth step `f(t) = A(t) / (A(t) + A(1-t))` with `A(t) = e^(-1/t)`,
//! its exact symbolic derivatives, and certified sup-norm exponents.
//!
//! Every derivative of `f` is a finite signed sum of terms
//!
//! ```text
//!   c * x^E * y^F * u^a * v^b / (u + v)^(m+1)
//! ```
//!
//! with `x = 1/t`, `y = 1/(1-t)`, `u = e^-x`, `v = e^-y`, integer `c`, and
//! `b = m + 1 - a`. Differentiating term-by-term stays inside this family,
//! and for `m >= 1` every term has `a >= 1` and `b >= 1`, so every
//! derivative vanishes at both endpoints *exactly*. That is the property the
//! rest of the construction leans on: solutions glued from `f` take exact
//! dyadic values on the grid and all smoothness lives in this one function.
//!
//! Certification produces, for each order `m`, an integer `s(m)` with
//! `sup |D^m f| <= 2^s(m)` over `[0, 1]`: adaptive interval bisection over
//! the middle of the domain plus closed-form tail bounds on the two end
//! cells, where every term decays like `e^(-a/t)`.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::dyadic::{div_dir, Dyadic, DyadicInterval, Rounding};
use crate::error::{Error, Result};
use crate::exp::{exp_point_rel, PRECISION_CAP};
use crate::polynomial::Polynomial;

/// Term key `(a, E, F)`; the power of `v` is implied by the order.
type TermKey = (u32, u32, u32);

/// One derivative of `f` in closed form: a signed integer combination of
/// terms `x^E y^F u^a v^(order+1-a)` over the common denominator
/// `(u+v)^(order+1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivExpr {
    order: usize,
    terms: BTreeMap<TermKey, BigInt>,
}

impl DerivExpr {
    /// The order-zero expression: `f` itself, the single term `u / (u+v)`.
    pub fn f() -> Self {
        let mut terms = BTreeMap::new();
        terms.insert((1, 0, 0), BigInt::one());
        DerivExpr { order: 0, terms }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&TermKey, &BigInt)> {
        self.terms.iter()
    }

    /// Symbolic derivative. With `x' = -x^2`, `y' = y^2`, `u' = x^2 u`,
    /// `v' = -y^2 v` and the quotient rule against `(u+v)^(m+1)`, each term
    /// fans out into at most ten successors over `(u+v)^(m+2)`: the four
    /// numerator pieces each appear once with an extra `u` (key `a+1`) and
    /// once with an extra `v` (key unchanged), plus the two pieces from the
    /// derivative of the denominator.
    pub fn differentiate(&self) -> Self {
        let m = self.order as i64;
        let mut out: BTreeMap<TermKey, BigInt> = BTreeMap::new();
        let add = |map: &mut BTreeMap<TermKey, BigInt>, key: TermKey, c: BigInt| {
            if !c.is_zero() {
                *map.entry(key).or_insert_with(BigInt::zero) += c;
            }
        };
        for (&(a, e, f), c) in &self.terms {
            let b = self.order as u32 + 1 - a;
            if e > 0 {
                for da in [1u32, 0] {
                    add(&mut out, (a + da, e + 1, f), c * -(e as i64));
                }
            }
            if f > 0 {
                for da in [1u32, 0] {
                    add(&mut out, (a + da, e, f + 1), c * (f as i64));
                }
            }
            if a > 0 {
                for da in [1u32, 0] {
                    add(&mut out, (a + da, e + 2, f), c * (a as i64));
                }
            }
            if b > 0 {
                for da in [1u32, 0] {
                    add(&mut out, (a + da, e, f + 2), c * -(b as i64));
                }
            }
            add(&mut out, (a + 1, e + 2, f), c * -(m + 1));
            add(&mut out, (a, e, f + 2), c * (m + 1));
        }
        out.retain(|_, c| !c.is_zero());
        DerivExpr { order: self.order + 1, terms: out }
    }
}

/// Builds `[f, Df, D^2 f, ..., D^max f]`.
pub fn derivative_table(max_order: usize) -> Vec<DerivExpr> {
    let mut table = vec![DerivExpr::f()];
    for _ in 0..max_order {
        table.push(table.last().expect("nonempty").differentiate());
    }
    table
}

/// Once `x = 1/t` has magnitude exponent at least this, `e^-x` is replaced
/// by the coarse bound `[0, 2^-K]` with `K = 2^(mag-1)` (capped). Such
/// factors only ever crush terms to irrelevance, so tightness is wasted on
/// them, and the cap keeps every exponent inside `i64`.
const HUGE_MAG: i64 = 16;
const HUGE_EXP_CAP_LOG: i64 = 50;

/// `e^-z` over a positive interval `z`; exp is monotone decreasing.
fn exp_of_neg(z: &DyadicInterval, w: i64) -> Result<DyadicInterval> {
    let lo_mag = z.lo().magnitude_exponent().unwrap_or(0);
    if lo_mag >= HUGE_MAG {
        let k = 1i64 << ((lo_mag - 1).min(HUGE_EXP_CAP_LOG) as u64);
        return DyadicInterval::new(Dyadic::zero(), Dyadic::pow2(-k));
    }
    let hi_mag = z.hi().magnitude_exponent().unwrap_or(0);
    let lo_end = if hi_mag >= HUGE_MAG {
        Dyadic::zero()
    } else {
        exp_point_rel(&-z.hi().clone(), w)?.lo().clone()
    };
    let hi_end = exp_point_rel(&-z.lo().clone(), w)?.hi().clone();
    DyadicInterval::new(lo_end, hi_end)
}

/// Rounds an interval outward on a grid scaled to its magnitude, keeping
/// roughly `w` significant bits however large or small the value.
fn round_rel(iv: &DyadicInterval, w: i64) -> DyadicInterval {
    match iv.abs_hi().magnitude_exponent() {
        None => iv.clone(),
        Some(mag) => iv.round_out(w - mag),
    }
}

/// Per-endpoint relative rounding: each endpoint keeps about `w` significant
/// bits of *its own* magnitude. Outward, so a positive low end stays
/// positive, which grid rounding at the interval's overall scale would not
/// guarantee; the denominator chain needs exactly that.
fn round_endpoints_rel(iv: &DyadicInterval, w: i64) -> DyadicInterval {
    let lo = match iv.lo().magnitude_exponent() {
        None => Dyadic::zero(),
        Some(mag) => iv.lo().floor_to(w - mag),
    };
    let hi = match iv.hi().magnitude_exponent() {
        None => Dyadic::zero(),
        Some(mag) => iv.hi().ceil_to(w - mag),
    };
    DyadicInterval::new(lo, hi).expect("outward rounding keeps order")
}

/// Interval addition after coarsening both operands onto a grid just below
/// the larger magnitude. Dyadic addition aligns mantissas across the whole
/// exponent gap, so adding `2^-huge` to `e^-1` without this would build a
/// mantissa with `huge` bits.
fn harmonized_add(a: &DyadicInterval, b: &DyadicInterval, w: i64) -> DyadicInterval {
    let mag = match (a.abs_hi().magnitude_exponent(), b.abs_hi().magnitude_exponent()) {
        (Some(x), Some(y)) => x.max(y),
        (Some(x), None) => x,
        (None, Some(y)) => y,
        (None, None) => return a.add(b),
    };
    a.round_out(w + 16 - mag).add(&b.round_out(w + 16 - mag))
}

/// `base^k` with per-endpoint rounding, preserving a positive low end.
fn pow_endpoints(base: &DyadicInterval, k: usize, w: i64) -> DyadicInterval {
    let mut acc = DyadicInterval::point(Dyadic::one());
    for _ in 0..k {
        acc = round_endpoints_rel(&acc.mul(base), w);
    }
    acc
}

/// `[base^0, base^1, ..., base^kmax]` for a nonnegative interval.
fn pow_table(base: &DyadicInterval, kmax: u32, w: i64) -> Vec<DyadicInterval> {
    let mut out = Vec::with_capacity(kmax as usize + 1);
    out.push(DyadicInterval::point(Dyadic::one()));
    for _ in 0..kmax {
        let next = round_rel(&out.last().expect("nonempty").mul(base), w);
        out.push(next);
    }
    out
}

/// Interval evaluation of `expr` over `t`, `0 < t <= t' < 1` required.
/// Sound for any working precision `w`; larger `w` tightens the result.
///
/// Terms whose magnitude falls more than a window below the largest term
/// are absorbed into a slack interval rather than added exactly; without
/// this, one astronomically small term (think `u^a` with `t ~ 2^-100000`)
/// would force alignment of dyadic mantissas across the whole exponent gap.
pub fn eval_expr(expr: &DerivExpr, t: &DyadicInterval, w: i64) -> Result<DyadicInterval> {
    if !t.lo().is_positive() || t.hi() >= &Dyadic::one() {
        return Err(Error::Parameter(
            "bump expression argument must lie strictly inside (0, 1)".to_owned(),
        ));
    }
    let one = Dyadic::one();
    // Reciprocals carry as many mantissa bits as the exponent gap; cut them
    // back to w significant bits before they enter any power.
    let x = round_endpoints_rel(
        &DyadicInterval::new(
            div_dir(&one, t.hi(), w, Rounding::Down)?,
            div_dir(&one, t.lo(), w, Rounding::Up)?,
        )?,
        w,
    );
    let omt_lo = &one - t.hi();
    let omt_hi = &one - t.lo();
    let y = round_endpoints_rel(
        &DyadicInterval::new(
            div_dir(&one, &omt_hi, w, Rounding::Down)?,
            div_dir(&one, &omt_lo, w, Rounding::Up)?,
        )?,
        w,
    );
    let u = exp_of_neg(&x, w)?;
    let v = exp_of_neg(&y, w)?;

    let (mut max_e, mut max_f, mut max_a, mut max_b) = (0u32, 0u32, 0u32, 0u32);
    for &(a, e, f) in expr.terms.keys() {
        let b = expr.order as u32 + 1 - a;
        max_e = max_e.max(e);
        max_f = max_f.max(f);
        max_a = max_a.max(a);
        max_b = max_b.max(b);
    }
    let xp = pow_table(&x, max_e, w);
    let yp = pow_table(&y, max_f, w);
    let up = pow_table(&u, max_a, w);
    let vp = pow_table(&v, max_b, w);
    let den = pow_endpoints(&harmonized_add(&u, &v, w), expr.order + 1, w);

    // First pass: evaluate every term and track the largest magnitude.
    let mut evaluated: Vec<DyadicInterval> = Vec::with_capacity(expr.terms.len());
    let mut max_mag: Option<i64> = None;
    for (&(a, e, f), c) in &expr.terms {
        let b = expr.order as u32 + 1 - a;
        let t1 = round_rel(&xp[e as usize].mul(&yp[f as usize]), w);
        let t2 = round_rel(&t1.mul(&up[a as usize]), w);
        let t3 = round_rel(&t2.mul(&vp[b as usize]), w);
        let c_iv = DyadicInterval::point(Dyadic::from_bigint(c.clone()));
        let term = round_rel(&t3.mul(&c_iv), w);
        if let Some(mag) = term.abs_hi().magnitude_exponent() {
            max_mag = Some(max_mag.map_or(mag, |m: i64| m.max(mag)));
        }
        evaluated.push(term);
    }
    let max_mag = match max_mag {
        Some(m) => m,
        None => return DyadicInterval::point(Dyadic::zero()).div(&den, w),
    };

    // Second pass: sum the terms inside the window, absorb the rest.
    let count_bits = 64 - (expr.terms.len() as u64).leading_zeros() as i64;
    let floor_mag = max_mag - (w + 24 + count_bits);
    let mut sum = DyadicInterval::point(Dyadic::zero());
    let mut absorbed = 0u64;
    for term in &evaluated {
        let mag = term.abs_hi().magnitude_exponent().unwrap_or(i64::MIN);
        if mag < floor_mag {
            absorbed += 1;
        } else {
            sum = round_rel(&sum.add(term), w + 24 + count_bits);
        }
    }
    if absorbed > 0 {
        let slack = Dyadic::pow2(floor_mag).mul_int(absorbed as i64);
        sum = sum.add(&DyadicInterval::new(-slack.clone(), slack)?);
    }
    sum.div(&den, w)
}

/// Point evaluation driven to absolute width `2^-(n+1)`, doubling the
/// working precision as needed.
fn eval_point_driven(expr: &DerivExpr, t: &Dyadic, n: i64) -> Result<DyadicInterval> {
    let t_iv = DyadicInterval::point(t.clone());
    let target = Dyadic::pow2(-(n + 1));
    let mut w = n.max(0) + 32;
    loop {
        let enc = eval_expr(expr, &t_iv, w)?;
        if enc.width() <= target {
            return Ok(enc);
        }
        w *= 2;
        if w > PRECISION_CAP {
            return Err(Error::Capacity {
                what: "bump evaluation precision",
                limit: PRECISION_CAP as u64,
                got: w as u64,
            });
        }
    }
}

/// Subdivision depth for certification; also fixes the end-cell width at
/// `2^-MAX_DEPTH`, where the closed-form tail bounds take over.
const MAX_DEPTH: u32 = 12;
const CERTIFY_W: i64 = 64;

/// Largest value `|x| >= lower` consistent with an enclosure of `x`:
/// a rigorous lower bound on `|x|`, zero if the enclosure straddles zero.
fn abs_lower(enc: &DyadicInterval) -> Dyadic {
    if enc.lo().is_positive() {
        enc.lo().clone()
    } else if enc.hi().is_negative() {
        enc.hi().abs()
    } else {
        Dyadic::zero()
    }
}

/// Closed-form bound on `sup |expr|` over the end cell `(0, 2^-MAX_DEPTH]`
/// (`left`) or `[1 - 2^-MAX_DEPTH, 1)` (`right`, by the `x <-> y` mirror).
///
/// On the left cell `x >= 4096` and `y in [1, 4096/4095]`, so per term:
/// `x^E u^a <= 4096^E e^(-4096 a)` (since `x^E e^(-ax)` decreases past
/// `E/a <= 4096`), `y^F <= y1^F`, `v^b <= e^-b`, and
/// `(u+v)^-(m+1) <= e^((m+1) y1)`. Requires `a, b >= 1`, which holds for
/// every order-`m >= 1` term.
fn tail_bound(expr: &DerivExpr, left: bool) -> Result<Dyadic> {
    let m = expr.order;
    let w = 48;
    let x0_log = MAX_DEPTH as i64; // the end cell starts at x = 2^MAX_DEPTH
    let x0 = 1i64 << x0_log;
    let y1 = div_dir(
        &Dyadic::from_int(x0),
        &Dyadic::from_int(x0 - 1),
        w,
        Rounding::Up,
    )?;
    let mut total = Dyadic::zero();
    for (&(a, e, f), c) in &expr.terms {
        let b = m as u32 + 1 - a;
        let (big_pow, big_coef, small_pow, small_coef) =
            if left { (e, a, f, b) } else { (f, b, e, a) };
        if big_coef == 0 {
            return Err(Error::Parameter(
                "endpoint tail bound needs exponential decay in every term".to_owned(),
            ));
        }
        let decay = exp_point_rel(&Dyadic::from_int(-(x0 * big_coef as i64)), w)?;
        let pow_big = Dyadic::pow2(x0_log * big_pow as i64);
        let mut small_side = Dyadic::one();
        for _ in 0..small_pow {
            small_side = &small_side * &y1;
        }
        let v_dec = exp_point_rel(&Dyadic::from_int(-(small_coef as i64)), w)?;
        let inv_den = exp_point_rel(&y1.mul_int(m as i64 + 1), w)?;
        let mut term = Dyadic::from_bigint(c.abs());
        term = &term * &pow_big;
        term = &term * decay.hi();
        term = &term * &small_side;
        term = &term * v_dec.hi();
        term = &term * inv_den.hi();
        total = &total + &term;
    }
    Ok(total)
}

/// Rigorous upper bound on `sup over (0, 1) of |expr|` for `order >= 1`.
///
/// End cells get the closed-form tail bound. The middle strip is adaptive
/// bisection: a cell is dropped once its enclosure cannot beat the best
/// rigorous lower bound on the sup, split while depth allows, and otherwise
/// contributes its enclosure ceiling to the answer.
fn certify_sup(expr: &DerivExpr) -> Result<Dyadic> {
    let left = tail_bound(expr, true)?;
    let right = tail_bound(expr, false)?;

    let mut lower = Dyadic::zero();
    for i in 1..32i64 {
        let t = Dyadic::from_ratio_pow2(i, 5); // i/32
        let enc = eval_point_driven(expr, &t, 16)?;
        let lb = abs_lower(&enc);
        if lb > lower {
            lower = lb;
        }
    }

    let t0 = Dyadic::pow2(-(MAX_DEPTH as i64));
    let strip = DyadicInterval::new(t0.clone(), &Dyadic::one() - &t0)?;
    let mut stack: Vec<(DyadicInterval, u32)> = vec![(strip, 0)];
    let mut forced = Dyadic::zero();
    while let Some((cell, depth)) = stack.pop() {
        // On very wide cells the independent enclosures of u and v both
        // bottom out near zero and the denominator cannot be divided by;
        // that only means the cell is too wide to say anything, so split.
        let ceiling = match eval_expr(expr, &cell, CERTIFY_W) {
            Ok(enc) => Some(enc.abs_hi()),
            Err(_) if depth < MAX_DEPTH => None,
            Err(e) => return Err(e),
        };
        if let Some(cap) = ceiling {
            if cap <= lower {
                continue;
            }
            if depth >= MAX_DEPTH {
                if cap > forced {
                    forced = cap;
                }
                continue;
            }
        }
        let mid = (cell.lo() + cell.hi()).mul_pow2(-1);
        if depth <= 8 {
            let enc_mid = eval_point_driven(expr, &mid, 16)?;
            let lb = abs_lower(&enc_mid);
            if lb > lower {
                lower = lb;
            }
        }
        stack.push((DyadicInterval::new(cell.lo().clone(), mid.clone())?, depth + 1));
        stack.push((DyadicInterval::new(mid, cell.hi().clone())?, depth + 1));
    }

    let mut sup = lower;
    for c in [left, right, forced] {
        if c > sup {
            sup = c;
        }
    }
    Ok(sup)
}

/// Smallest integer `e` with `value <= 2^e` (for positive `value`).
fn exponent_bound(value: &Dyadic) -> i64 {
    match value.magnitude_exponent() {
        None => 0,
        Some(mag) => {
            if value.mantissa() == &BigInt::one() {
                value.exponent()
            } else {
                mag
            }
        }
    }
}

/// Certified exponents produced by `certify_sup` at the default depth, for
/// orders `0..=8`. `build` recomputes this table from scratch; tests and
/// the verification suite check that the recomputation agrees and that the
/// bounds dominate dense sampling.
pub const CERTIFIED_S: [i64; 9] = [0, 2, 4, 7, 12, 18, 26, 34, 43];

/// The smooth step together with its symbolic derivatives up to some order
/// and a certified sup-norm exponent table `s(m)`:
/// `sup |D^m f| <= 2^s(m)`, nondecreasing, `s(0) = 0` (exactly
/// `0 <= f <= 1`).
#[derive(Clone, Debug)]
pub struct BumpFunction {
    derivs: Vec<DerivExpr>,
    s_table: Vec<i64>,
}

impl BumpFunction {
    /// Builds the derivative table symbolically and certifies every order
    /// up to `max_order` from scratch.
    pub fn build(max_order: usize) -> Result<Self> {
        let derivs = derivative_table(max_order);
        let mut s_table = vec![0i64];
        for expr in derivs.iter().skip(1) {
            let sup = certify_sup(expr)?;
            let e = exponent_bound(&sup);
            let prev = *s_table.last().expect("nonempty");
            s_table.push(e.max(prev));
        }
        Ok(BumpFunction { derivs, s_table })
    }

    /// Builds the derivative table but reuses the stored `CERTIFIED_S`
    /// exponents instead of re-running branch-and-bound. `build` must agree
    /// with the stored table; tests and the verification suite check that
    /// it does.
    pub fn with_table(max_order: usize) -> Result<Self> {
        if max_order >= CERTIFIED_S.len() {
            return Err(Error::Parameter(
                "requested order beyond the stored certified table".to_owned(),
            ));
        }
        Ok(BumpFunction {
            derivs: derivative_table(max_order),
            s_table: CERTIFIED_S[..=max_order].to_vec(),
        })
    }

    /// Replaces the exponent table wholesale. Exists for the fault-injection
    /// side of the verification suite; nothing else should want it.
    pub fn override_table(&mut self, table: Vec<i64>) {
        self.s_table = table;
    }

    pub fn max_order(&self) -> usize {
        self.derivs.len() - 1
    }

    /// Certified exponent `s(m)`.
    pub fn s(&self, m: usize) -> Result<i64> {
        self.s_table.get(m).copied().ok_or_else(|| {
            Error::Parameter("derivative order beyond the certified table".to_owned())
        })
    }

    pub fn s_table(&self) -> &[i64] {
        &self.s_table
    }

    pub fn s_max(&self) -> i64 {
        *self.s_table.last().expect("nonempty")
    }

    /// Linear majorant of the certified table: `s_max + x` dominates `s(m)`
    /// for every certified order and extends monotonically past the table.
    pub fn s_hat(&self) -> Polynomial {
        Polynomial::new(vec![self.s_max() as u64, 1])
    }

    /// The symbolic expression for `D^m f`.
    pub fn deriv(&self, m: usize) -> Result<&DerivExpr> {
        self.derivs.get(m).ok_or_else(|| {
            Error::Parameter("derivative order beyond the symbolic table".to_owned())
        })
    }

    /// `f(t)` to absolute error `2^-n`; exact `0` and `1` at the endpoints.
    pub fn f_eval(&self, t: &Dyadic, n: i64) -> Result<Dyadic> {
        self.df_eval(0, t, n)
    }

    /// `D^m f(t)` to absolute error `2^-n`; exactly zero at both endpoints
    /// for `m >= 1`.
    pub fn df_eval(&self, m: usize, t: &Dyadic, n: i64) -> Result<Dyadic> {
        Ok(self.df_enclosure(m, t, n)?.mid_round(n + 1))
    }

    /// Verified enclosure of `D^m f(t)` with width at most `2^-n`; exact
    /// points at the endpoints.
    pub fn df_enclosure(&self, m: usize, t: &Dyadic, n: i64) -> Result<DyadicInterval> {
        let expr = self.deriv(m)?;
        if t.is_negative() || t > &Dyadic::one() {
            return Err(Error::Parameter("bump argument outside [0, 1]".to_owned()));
        }
        if t.is_zero() {
            return Ok(DyadicInterval::point(Dyadic::zero()));
        }
        if t == &Dyadic::one() {
            let v = if m == 0 { Dyadic::one() } else { Dyadic::zero() };
            return Ok(DyadicInterval::point(v));
        }
        eval_point_driven(expr, t, n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half() -> Dyadic {
        Dyadic::from_ratio_pow2(1, 1)
    }

    #[test]
    fn derivative_of_f_matches_closed_form() {
        // Df = (x^2 + y^2) u v / (u+v)^2.
        let df = DerivExpr::f().differentiate();
        assert_eq!(df.order(), 1);
        let mut expect = BTreeMap::new();
        expect.insert((1u32, 2u32, 0u32), BigInt::one());
        expect.insert((1, 0, 2), BigInt::one());
        assert_eq!(df.terms, expect);
    }

    #[test]
    fn derivatives_have_positive_exponential_factors() {
        // a >= 1 and b >= 1 in every term of every D^m f with m >= 1; this
        // is exactly why all derivatives vanish at the endpoints.
        for expr in derivative_table(8).iter().skip(1) {
            for (&(a, _, _), _) in expr.terms() {
                let b = expr.order() as u32 + 1 - a;
                assert!(a >= 1 && b >= 1, "order {} term ({}, b {})", expr.order(), a, b);
            }
        }
    }

    #[test]
    fn mirror_symmetry_of_term_tables() {
        // f(t) = 1 - f(1-t) gives D^m f(t) = (-1)^(m+1) D^m f(1-t); on term
        // keys the reflection swaps (a, E, F) -> (order+1-a, F, E).
        for expr in derivative_table(4).iter().skip(1) {
            let sign = if expr.order() % 2 == 1 { 1 } else { -1 };
            for (&(a, e, f), c) in expr.terms() {
                let mirror = (expr.order() as u32 + 1 - a, f, e);
                let mc = expr.terms.get(&mirror).expect("mirror term present");
                assert_eq!(mc * sign, c.clone(), "order {}", expr.order());
            }
        }
    }

    #[test]
    fn endpoint_values_are_exact() {
        let bump = BumpFunction::with_table(4).unwrap();
        let zero = Dyadic::zero();
        let one = Dyadic::one();
        assert_eq!(bump.f_eval(&zero, 10).unwrap(), Dyadic::zero());
        assert_eq!(bump.f_eval(&one, 10).unwrap(), Dyadic::one());
        for m in 1..=4 {
            assert_eq!(bump.df_eval(m, &zero, 10).unwrap(), Dyadic::zero());
            assert_eq!(bump.df_eval(m, &one, 10).unwrap(), Dyadic::zero());
        }
    }

    #[test]
    fn midpoint_value_is_half() {
        let bump = BumpFunction::with_table(2).unwrap();
        let v = bump.f_eval(&half(), 48).unwrap();
        let err = (&v - &Dyadic::from_ratio_pow2(1, 1)).abs();
        assert!(err <= Dyadic::pow2(-40), "f(1/2) = {}", v);
    }

    #[test]
    fn first_derivative_at_half_is_two() {
        // Df(1/2) = (4+4) e^-4 / (2 e^-2)^2 = 2 exactly.
        let bump = BumpFunction::with_table(2).unwrap();
        let v = bump.df_eval(1, &half(), 48).unwrap();
        let err = (&v - &Dyadic::from_int(2)).abs();
        assert!(err <= Dyadic::pow2(-40), "Df(1/2) = {}", v);
    }

    #[test]
    fn second_derivative_at_half_is_zero() {
        let bump = BumpFunction::with_table(2).unwrap();
        let v = bump.df_eval(2, &half(), 48).unwrap();
        assert!(v.abs() <= Dyadic::pow2(-40), "D2f(1/2) = {}", v);
    }

    #[test]
    fn symmetry_sampled() {
        let bump = BumpFunction::with_table(1).unwrap();
        let one = Dyadic::one();
        for i in 1..16i64 {
            let t = Dyadic::from_ratio_pow2(i, 4);
            let a = bump.f_eval(&t, 50).unwrap();
            let b = bump.f_eval(&(&one - &t), 50).unwrap();
            let err = (&(&a + &b) - &one).abs();
            assert!(err <= Dyadic::pow2(-48), "t = {t}");
        }
    }

    #[test]
    fn values_increase_across_samples() {
        let bump = BumpFunction::with_table(1).unwrap();
        let pts: [(i64, i64); 4] = [(1, 3), (1, 2), (1, 1), (3, 2)]; // 1/8, 1/4, 1/2, 3/4
        let mut prev = Dyadic::zero();
        for (num, log_den) in pts {
            let v = bump.f_eval(&Dyadic::from_ratio_pow2(num, log_den), 40).unwrap();
            assert!(v > prev);
            prev = v;
        }
        assert!(prev < Dyadic::one());
    }

    #[test]
    fn finite_difference_matches_first_derivative() {
        // |(f(t+h) - f(t-h)) / 2h - Df(t)| <= h^2 sup|D^3 f| / 6.
        let bump = BumpFunction::with_table(3).unwrap();
        let h_log = 12i64;
        let h = Dyadic::pow2(-h_log);
        let tol_log = -(2 * h_log) + bump.s(3).unwrap() - 2;
        for (num, log_den) in [(5i64, 4i64), (1, 1), (11, 4)] {
            let t = Dyadic::from_ratio_pow2(num, log_den);
            let fp = bump.f_eval(&(&t + &h), 64).unwrap();
            let fm = bump.f_eval(&(&t - &h), 64).unwrap();
            let fd = (&fp - &fm).mul_pow2(h_log - 1);
            let df = bump.df_eval(1, &t, 64).unwrap();
            let err = (&fd - &df).abs();
            assert!(err <= Dyadic::pow2(tol_log), "t = {t}, err = {err}");
        }
    }

    #[test]
    fn certified_table_matches_recomputation_low_orders() {
        let fresh = BumpFunction::build(3).unwrap();
        assert_eq!(fresh.s_table(), &CERTIFIED_S[..=3]);
    }

    #[test]
    fn certified_bounds_dominate_sampling_low_orders() {
        let bump = BumpFunction::with_table(3).unwrap();
        for m in 1..=3usize {
            let cap = Dyadic::pow2(bump.s(m).unwrap());
            for i in 1..64i64 {
                let t = Dyadic::from_ratio_pow2(i, 6);
                let v = bump.df_eval(m, &t, 24).unwrap().abs();
                assert!(v <= cap, "order {m}, t = {t}, |D^m f| = {v}");
            }
        }
    }

    #[test]
    fn table_shape() {
        let bump = BumpFunction::with_table(8).unwrap();
        assert_eq!(bump.s(0).unwrap(), 0);
        for m in 1..=8 {
            assert!(bump.s(m).unwrap() >= bump.s(m - 1).unwrap());
        }
        let hat = bump.s_hat();
        for m in 0..=8u64 {
            assert!(hat.eval(m).unwrap() as i64 >= bump.s(m as usize).unwrap());
        }
    }

    #[test]
    fn rejects_out_of_range_queries() {
        let bump = BumpFunction::with_table(2).unwrap();
        assert!(bump.df_eval(9, &half(), 10).is_err());
        assert!(bump.f_eval(&Dyadic::from_int(2), 10).is_err());
        assert!(bump.f_eval(&Dyadic::from_int(-1), 10).is_err());
    }
}
