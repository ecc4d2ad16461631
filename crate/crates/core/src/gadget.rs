//! Lifts a normalized difference equation into a smooth scalar ODE right
//! hand side with certified derivative bounds.
//!
//! The whole solution grid is packed into one real number. At time
//! `t = (T + theta) 2^-q` the intended solution is
//!
//! ```text
//!   h(t) = sum_i H(i, T) B^-d(i)  +  f(theta) B^-d(j+1) G(j, T, H(j, T))
//! ```
//!
//! where `j` is the single active row of column `T`, `B = 2^be`, `d` is a
//! strictly increasing scale ladder, and `f` is the certified smooth step.
//! The right hand side recovers the active cell from `y` with a floor,
//! steps it with the difference equation, and shapes the transition with
//! `f`, so `h` solves `y' = g(t, y)` exactly, takes exact dyadic values on
//! the grid, and `h(1) = L 2^-rho` encodes the recognized output `L`.
//!
//! Between the cell windows (`eta` past a quarter) the two neighboring
//! branches are blended by `f((4 eta - 1)/2)`; inside a window (`eta` below
//! a quarter) the right hand side is locally constant in `y`, which is what
//! makes all pure and mixed `y`-derivatives vanish there exactly.

use alloc::borrow::ToOwned;
use alloc::sync::Arc;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};

use crate::bump::BumpFunction;
use crate::diffeq::{build_gadget, normalize, solve, BitLayout, NormalizedGadget, RawGadget, SolutionGrid};
use crate::dyadic::{mod_pow2, Dyadic, DyadicInterval};
use crate::error::{Error, Result};
use crate::formula::CountingInstance;
use crate::glue::lambda_poly;
use crate::polynomial::Polynomial;

/// Faithful mode uses the full smoothness budget; toy mode zeroes the
/// budget polynomial and shrinks the cell scale so that dumped values stay
/// readable as floats. Toy parameters void every certified bound and exist
/// for inspection only.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize), serde(rename_all = "lowercase"))]
pub enum Mode {
    Faithful,
    Toy,
}

/// Scale ladder `d(0) .. d(p)` for smoothness degree `k`, plus the top
/// scale `sigma = d(p)`. Linear for `k = 1`, geometric in `k + 1` above:
/// the derivative bounds need `be (d(j+1) - j d(j))` to clear the budget
/// for every `j <= k`, and the linear ladder only manages that for `k = 1`.
pub fn scale_ladder(k: u32, p: usize) -> (Vec<u64>, u64) {
    let d: Vec<u64> = if k == 1 {
        (0..=p as u64).collect()
    } else {
        (0..=p as u32).map(|i| (k as u64 + 1).pow(i)).collect()
    };
    let sigma = *d.last().expect("nonempty ladder");
    (d, sigma)
}

/// Smoothness budget polynomial
/// `gamma(x) = (x+1) q + s_hat(x+1) + x lambda(x)`:
/// one width-exponent plus bump-bound term per scale level, plus the
/// magnification cost of gluing an instance of padded length `x`.
pub fn smoothness_budget(q: u32, s_hat: &Polynomial, lambda: &Polynomial) -> Polynomial {
    let linear_q = Polynomial::new(alloc::vec![q as u64, q as u64]);
    let xl = lambda.mul(&Polynomial::monomial(1, 1));
    linear_q.add(&s_hat.shift_one()).add(&xl)
}

#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct GadgetParams {
    pub mode: Mode,
    /// Smoothness degree; the solution is C^k across cell windows.
    pub k: u32,
    /// Output row index; the grid has rows `0..=p`.
    pub p: usize,
    /// Width exponent of the normalized equation.
    pub q: u32,
    /// Extraction modulus exponent: cells are read as `Y mod 2^r`.
    pub r: u64,
    /// Padded instance length `|u|`.
    pub u_len: u64,
    /// Scale ladder, `d[0..=p]`.
    pub d: Vec<u64>,
    /// Top scale `d[p]`.
    pub sigma: u64,
    /// Budget polynomial; `be` and the bound exponents come from it.
    pub gamma: Polynomial,
    /// `gamma` evaluated at `|u|`.
    pub gamma_val: i64,
    /// Base-two log of the packing base `B`.
    pub be: i64,
    /// `be * sigma`: the output arrives as `h(1) = L 2^-rho`.
    pub rho: i64,
    /// Certified bump exponent `s(k)`.
    pub s_k: i64,
}

/// Derives the continuous-layer parameters for one instance.
pub fn make_params(
    inst: &CountingInstance,
    norm: &NormalizedGadget,
    bump: &BumpFunction,
    k: u32,
    mode: Mode,
) -> Result<GadgetParams> {
    if !(1..=3).contains(&k) {
        return Err(Error::Parameter("smoothness degree k must be 1, 2, or 3".to_owned()));
    }
    if bump.max_order() < 5 {
        return Err(Error::Parameter(
            "bump table must cover derivative order 5 for the gadget bounds".to_owned(),
        ));
    }
    let p = norm.p;
    let q = norm.q;
    let u_len = inst.padded_length();
    let (d, sigma) = scale_ladder(k, p);
    let s_k = bump.s(k as usize)?;
    let (gamma, r) = match mode {
        Mode::Faithful => {
            // The extraction modulus is capped at the cell word size; cells
            // are far smaller than either bound.
            (smoothness_budget(q, &bump.s_hat(), &lambda_poly()), u_len.min(63))
        }
        Mode::Toy => {
            let s_n = *inst.s_values().last().expect("at least one block") as u64;
            (Polynomial::zero(), s_n + 1)
        }
    };
    let gamma_val = gamma.eval(u_len)? as i64;
    let be = gamma_val + r as i64 + s_k + k as i64 + 3;
    let rho = be * sigma as i64;
    Ok(GadgetParams {
        mode,
        k,
        p,
        q,
        r,
        u_len,
        d,
        sigma,
        gamma,
        gamma_val,
        be,
        rho,
        s_k,
    })
}

/// One instance lifted all the way to the continuous layer: the raw and
/// normalized difference equations, the solved grid, and the parameters
/// needed to evaluate `g`, `h`, and their derivatives.
#[derive(Clone)]
pub struct GadgetInstance {
    inst: Arc<CountingInstance>,
    raw: RawGadget,
    norm: NormalizedGadget,
    grid: SolutionGrid,
    params: GadgetParams,
    bump: Arc<BumpFunction>,
}

impl GadgetInstance {
    pub fn build(
        inst: &CountingInstance,
        bump: Arc<BumpFunction>,
        k: u32,
        mode: Mode,
    ) -> Result<Self> {
        let raw = build_gadget(inst, BitLayout::PinnedSpareBit)?;
        let norm = normalize(&raw)?;
        let grid = solve(&norm.eq)?;
        let params = make_params(inst, &norm, &bump, k, mode)?;
        Ok(GadgetInstance { inst: raw.inst.clone(), raw, norm, grid, params, bump })
    }

    /// Assembles an instance from parts the caller has prepared. The
    /// verification suite uses this to re-solve with a tampered step
    /// function or altered parameters when exercising fault injection.
    pub(crate) fn from_parts(
        raw: RawGadget,
        norm: NormalizedGadget,
        grid: SolutionGrid,
        params: GadgetParams,
        bump: Arc<BumpFunction>,
    ) -> Self {
        GadgetInstance { inst: raw.inst.clone(), raw, norm, grid, params, bump }
    }

    pub fn inst(&self) -> &CountingInstance {
        &self.inst
    }

    pub fn raw(&self) -> &RawGadget {
        &self.raw
    }

    pub fn norm(&self) -> &NormalizedGadget {
        &self.norm
    }

    pub fn grid(&self) -> &SolutionGrid {
        &self.grid
    }

    pub fn params(&self) -> &GadgetParams {
        &self.params
    }

    pub fn bump(&self) -> &BumpFunction {
        &self.bump
    }

    /// The recognized output `L`, read off the solved normalized grid.
    pub fn output(&self) -> i64 {
        self.grid.output()
    }

    /// `t in [0, 1]` split as `t 2^q = T + theta` with integer `T` and
    /// `theta in [0, 1)` (`t = 1` gives `T = 2^q`, `theta = 0`).
    pub fn decompose_t(&self, t: &Dyadic) -> Result<(u64, Dyadic)> {
        if t.is_negative() || t > &Dyadic::one() {
            return Err(Error::Parameter("time outside [0, 1]".to_owned()));
        }
        let scaled = t.mul_pow2(self.params.q as i64);
        let tt_big = scaled.floor_shifted(0);
        let tt = tt_big.to_u64().expect("bounded by the width");
        let theta = &scaled - &Dyadic::from_bigint(tt_big);
        Ok((tt, theta))
    }

    /// Splits `y` at the scale of row `j`: `Y = floor(y B^d(j) + 1/4)` and
    /// `eta = y B^d(j) - Y in [-1/4, 3/4)`.
    pub fn decompose_y(&self, y: &Dyadic, j: usize) -> (BigInt, Dyadic) {
        let z = y.mul_pow2(self.params.be * self.params.d[j] as i64);
        let yy = (&z + &Dyadic::from_ratio_pow2(1, 2)).floor_shifted(0);
        let eta = &z - &Dyadic::from_bigint(yy.clone());
        (yy, eta)
    }

    /// Active row for the step leaving micro-column `T`.
    pub fn active_row(&self, tt: u64) -> usize {
        self.norm.j_u(tt)
    }

    /// Step value with the cell taken from a `y`-decomposition, reduced
    /// mod `2^r`. On or near the trajectory the reduction recovers the
    /// active cell exactly: lower rows contribute multiples of `2^be` and
    /// higher rows plus the transition term vanish into the floor.
    pub fn step_at(&self, j: usize, tt: u64, yy: &BigInt) -> i8 {
        let reduced = mod_pow2(yy, self.params.r);
        let cell = reduced.to_i64().expect("modulus capped at the word size");
        (self.norm.eq.step)(j, tt, cell)
    }

    /// `mu(i) = (i+1) q + s(i+1)`: certified exponent bound for the i-th
    /// time derivative of the transition scale, before the budget discount.
    pub fn mu_exponent(&self, i: usize) -> Result<i64> {
        Ok((i as i64 + 1) * self.params.q as i64 + self.bump.s(i + 1)?)
    }

    /// Exponent bound on `|D_t^i D_y^jy g|` at columns driven by row `j`;
    /// the verification suite compares this against `mu(i) - gamma`.
    pub fn deriv_magnitude_exponent(&self, i: usize, jy: usize, j: usize) -> Result<i64> {
        let pr = &self.params;
        let base = (i as i64 + 1) * pr.q as i64 + self.bump.s(i + 1)? + 1
            - pr.be * pr.d[j + 1] as i64;
        if jy == 0 {
            Ok(base)
        } else {
            Ok(base + jy as i64 * (1 + pr.be * pr.d[j] as i64) + self.bump.s(jy)?)
        }
    }

    /// Exact grid value `sum_i H(i, T) B^-d(i)`.
    pub fn h_grid_exact(&self, tt: u64) -> Dyadic {
        let pr = &self.params;
        let mut acc = Dyadic::zero();
        for i in 0..=pr.p {
            let c = self.grid.cell(i, tt);
            if c != 0 {
                acc = &acc + &Dyadic::from_int(c).mul_pow2(-(pr.be * pr.d[i] as i64));
            }
        }
        acc
    }

    /// Enclosure of `h(t)` with width at most `2^-n`; exact at grid points.
    pub fn h_enclosure(&self, t: &Dyadic, n: i64) -> Result<DyadicInterval> {
        let (tt, theta) = self.decompose_t(t)?;
        let exact = self.h_grid_exact(tt);
        if theta.is_zero() {
            return Ok(DyadicInterval::point(exact));
        }
        let j = self.active_row(tt);
        let cell = self.grid.cell(j, tt);
        let gval = (self.norm.eq.step)(j, tt, cell) as i64;
        if gval == 0 {
            return Ok(DyadicInterval::point(exact));
        }
        let scale = -(self.params.be * self.params.d[j + 1] as i64);
        if scale < -(n + 1) {
            let pad = Dyadic::pow2(scale);
            return DyadicInterval::new(&exact - &pad, &exact + &pad);
        }
        // The transition factor is scaled down by `2^scale`, so its absolute
        // precision only needs to reach `n` net of that shift.
        let fenc = self.bump.df_enclosure(0, &theta, (n + 2 + scale).max(4))?;
        Ok(fenc.mul_pow2(scale).mul_int(gval).add(&DyadicInterval::point(exact)))
    }

    pub fn h_eval(&self, t: &Dyadic, n: i64) -> Result<Dyadic> {
        Ok(self.h_enclosure(t, n + 2)?.mid_round(n + 1))
    }

    /// Enclosure of the branch value
    /// `D^i gtilde = 2^((i+1)q) D^(i+1) f(theta) B^-d(j+1) G(j, T, Y mod 2^r)`.
    fn gtilde_enclosure(
        &self,
        i: usize,
        j: usize,
        tt: u64,
        yy: &BigInt,
        theta: &Dyadic,
        n: i64,
    ) -> Result<DyadicInterval> {
        let gval = self.step_at(j, tt, yy) as i64;
        if gval == 0 || theta.is_zero() {
            return Ok(DyadicInterval::point(Dyadic::zero()));
        }
        let pr = &self.params;
        let scale = (i as i64 + 1) * pr.q as i64 - pr.be * pr.d[j + 1] as i64;
        let order = i + 1;
        if scale + self.bump.s(order)? < -(n + 2) {
            let pad = Dyadic::pow2(scale + self.bump.s(order)?);
            return DyadicInterval::new(-pad.clone(), pad);
        }
        // `mul_pow2(scale)` rescales the factor's width along with its value,
        // so the request tracks `scale` in both directions: a branch far below
        // the target precision needs only a coarse factor, while a magnified
        // one needs correspondingly more.
        let fenc = self.bump.df_enclosure(order, theta, (n + 1 + scale).max(4))?;
        Ok(fenc.mul_pow2(scale).mul_int(gval))
    }

    /// Enclosure of `D_t^i D_y^jy g(t, y)` with width at most `2^-n`.
    ///
    /// Exact-zero paths: at grid times every branch carries a derivative of
    /// `f` at 0; inside a cell window every `jy >= 1` derivative is zero
    /// because `g` is locally constant in `y`.
    pub fn deriv_g_enclosure(
        &self,
        i: usize,
        jy: usize,
        t: &Dyadic,
        y: &Dyadic,
        n: i64,
    ) -> Result<DyadicInterval> {
        let (tt, theta) = self.decompose_t(t)?;
        if theta.is_zero() {
            // Every branch carries a derivative of f at 0, so the right hand
            // side and all its derivatives vanish identically at grid times.
            return Ok(DyadicInterval::point(Dyadic::zero()));
        }
        let j = self.active_row(tt);
        let (yy, eta) = self.decompose_y(y, j);
        let quarter = Dyadic::from_ratio_pow2(1, 2);
        if eta < quarter {
            if jy >= 1 {
                return Ok(DyadicInterval::point(Dyadic::zero()));
            }
            return self.gtilde_enclosure(i, j, tt, &yy, &theta, n);
        }
        let pr = &self.params;
        let a_arg = &eta.mul_pow2(1) - &Dyadic::from_ratio_pow2(1, 1);
        let d_branch = (i as i64 + 1) * pr.q as i64 + self.bump.s(i + 1)? + 1
            - pr.be * pr.d[j + 1] as i64;
        if jy == 0 {
            // gtilde_Y + f(A) (gtilde_{Y+1} - gtilde_Y)
            let g0 = self.gtilde_enclosure(i, j, tt, &yy, &theta, n + 2)?;
            let g1 = self.gtilde_enclosure(i, j, tt, &(&yy + BigInt::one()), &theta, n + 2)?;
            let delta = g1.sub(&g0);
            let fenc = self.bump.df_enclosure(0, &a_arg, (n + 2 + d_branch).max(4))?;
            return Ok(g0.add(&fenc.mul(&delta)));
        }
        let scale_y = jy as i64 * (1 + pr.be * pr.d[j] as i64);
        let bound = scale_y + self.bump.s(jy)? + d_branch;
        if bound < -(n + 1) {
            let pad = Dyadic::pow2(bound);
            return DyadicInterval::new(-pad.clone(), pad);
        }
        let g0 = self.gtilde_enclosure(i, j, tt, &yy, &theta, n + 3 + scale_y + self.bump.s(jy)?)?;
        let g1 = self.gtilde_enclosure(
            i,
            j,
            tt,
            &(&yy + BigInt::one()),
            &theta,
            n + 3 + scale_y + self.bump.s(jy)?,
        )?;
        let delta = g1.sub(&g0);
        let fd = self.bump.df_enclosure(jy, &a_arg, (n + 3 + scale_y + d_branch).max(4))?;
        Ok(fd.mul(&delta).mul_pow2(scale_y))
    }

    /// Enclosure of the right hand side `g(t, y)`.
    pub fn g_enclosure(&self, t: &Dyadic, y: &Dyadic, n: i64) -> Result<DyadicInterval> {
        self.deriv_g_enclosure(0, 0, t, y, n)
    }

    pub fn g_eval(&self, t: &Dyadic, y: &Dyadic, n: i64) -> Result<Dyadic> {
        Ok(self.g_enclosure(t, y, n + 2)?.mid_round(n + 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_instance;

    fn tiny() -> CountingInstance {
        parse_instance("blocks 1\nblock 1 vars a threshold 1\nformula a\n").unwrap()
    }

    fn bump() -> Arc<BumpFunction> {
        Arc::new(BumpFunction::with_table(8).unwrap())
    }

    #[test]
    fn parameters_for_the_smallest_instance() {
        let gi = GadgetInstance::build(&tiny(), bump(), 1, Mode::Faithful).unwrap();
        let pr = gi.params();
        // Serialization is 46 bytes, one block: |u| = 2 + 46.
        assert_eq!(pr.u_len, 48);
        assert_eq!(pr.r, 48);
        // s_1 = 2, so 5 raw steps over 2 rows: 15 micro-columns, width 16.
        assert_eq!(pr.q, 4);
        assert_eq!(pr.p, 2);
        assert_eq!(pr.d, vec![0, 1, 2]);
        assert_eq!(pr.sigma, 2);
        // gamma(48) = 49*4 + (43 + 49) + 48*98 = 4992, be = gamma + 48+2+1+3.
        assert_eq!(pr.gamma_val, 4992);
        assert_eq!(pr.be, 5046);
        assert_eq!(pr.rho, 10092);
    }

    #[test]
    fn output_scale_is_exact_at_one() {
        let gi = GadgetInstance::build(&tiny(), bump(), 1, Mode::Faithful).unwrap();
        assert_eq!(gi.output(), 1);
        let enc = gi.h_enclosure(&Dyadic::one(), 16).unwrap();
        assert_eq!(enc.lo(), enc.hi());
        assert_eq!(enc.lo(), &Dyadic::pow2(-10092));
    }

    #[test]
    fn solution_starts_at_zero_exactly() {
        let gi = GadgetInstance::build(&tiny(), bump(), 1, Mode::Faithful).unwrap();
        let enc = gi.h_enclosure(&Dyadic::zero(), 16).unwrap();
        assert!(enc.lo().is_zero() && enc.hi().is_zero());
    }

    #[test]
    fn right_hand_side_on_trajectory_matches_closed_form() {
        // Micro-column 5 drives row 0 with step value +1; at theta = 1/2 the
        // transition speed is 2^q Df(1/2) B^-d(1) = 16 * 2 * 2^-5046.
        let gi = GadgetInstance::build(&tiny(), bump(), 1, Mode::Faithful).unwrap();
        let t = Dyadic::from_ratio_pow2(11, 5); // (5 + 1/2) / 16
        let y = gi.h_eval(&t, 5200).unwrap();
        let g = gi.g_eval(&t, &y, 5100).unwrap();
        let expect = Dyadic::pow2(-5041);
        assert!((&g - &expect).abs() <= Dyadic::pow2(-5090), "g = {g}");
    }

    #[test]
    fn g_vanishes_at_grid_times_exactly() {
        let gi = GadgetInstance::build(&tiny(), bump(), 1, Mode::Faithful).unwrap();
        for tt in [0u64, 3, 5, 8] {
            let t = Dyadic::new(tt.into(), -(gi.params().q as i64));
            let y = gi.h_eval(&t, 64).unwrap();
            let enc = gi.g_enclosure(&t, &y, 16).unwrap();
            assert!(enc.lo().is_zero() && enc.hi().is_zero(), "column {tt}");
        }
    }

    #[test]
    fn y_derivatives_vanish_inside_cell_windows() {
        let gi = GadgetInstance::build(&tiny(), bump(), 1, Mode::Faithful).unwrap();
        let t = Dyadic::from_ratio_pow2(11, 5);
        let y = gi.h_eval(&t, 5200).unwrap();
        for jy in 1..=1usize {
            let enc = gi.deriv_g_enclosure(0, jy, &t, &y, 32).unwrap();
            assert!(enc.lo().is_zero() && enc.hi().is_zero());
        }
    }

    #[test]
    fn blend_zone_averages_the_two_branches() {
        // Micro-column 8 drives row 1 (threshold row) at raw column 4 with a
        // positive sign. With y = (0 + 1/2) B^-d(1), the extraction sits half
        // way between the branches G = 0 (count 0) and G = 1 (count 1), and
        // f(1/2) = 1/2 makes g exactly half the upper branch:
        // g = 16 * 2 * 2^-2 be / 2 = 2^-10088.
        let gi = GadgetInstance::build(&tiny(), bump(), 1, Mode::Faithful).unwrap();
        let pr = gi.params();
        assert_eq!(gi.active_row(8), 1);
        let t = Dyadic::from_ratio_pow2(17, 5); // (8 + 1/2) / 16
        let y = Dyadic::from_ratio_pow2(1, 1).mul_pow2(-pr.be);
        let g = gi.g_eval(&t, &y, 10150).unwrap();
        let expect = Dyadic::pow2(-10088);
        assert!((&g - &expect).abs() <= Dyadic::pow2(-10140), "g = {g}");
    }

    #[test]
    fn blend_zone_first_y_derivative_matches_closed_form() {
        // Same point as above; d/dy carries 2 B^d(1) Df(1/2) = 2^(be+2), so
        // the derivative is 2^(be+2) * (2^-10087 - 0) = 2^-5039.
        let gi = GadgetInstance::build(&tiny(), bump(), 1, Mode::Faithful).unwrap();
        let pr = gi.params();
        let t = Dyadic::from_ratio_pow2(17, 5);
        let y = Dyadic::from_ratio_pow2(1, 1).mul_pow2(-pr.be);
        let enc = gi.deriv_g_enclosure(0, 1, &t, &y, 5100).unwrap();
        let expect = Dyadic::pow2(-5039);
        let mid = enc.mid_round(5090);
        assert!((&mid - &expect).abs() <= Dyadic::pow2(-5080), "got {mid}");
    }

    #[test]
    fn derivative_magnitudes_stay_under_the_budget() {
        let gi = GadgetInstance::build(&tiny(), bump(), 1, Mode::Faithful).unwrap();
        let pr = gi.params();
        for i in 0..=3usize {
            let margin = gi.mu_exponent(i).unwrap() - pr.gamma_val;
            for jy in 0..=pr.k as usize {
                for j in 0..pr.p {
                    let mag = gi.deriv_magnitude_exponent(i, jy, j).unwrap();
                    assert!(mag <= margin, "i {i} jy {jy} row {j}: {mag} > {margin}");
                }
            }
        }
    }

    #[test]
    fn toy_mode_shrinks_the_scales() {
        let gi = GadgetInstance::build(&tiny(), bump(), 1, Mode::Toy).unwrap();
        let pr = gi.params();
        assert_eq!(pr.gamma_val, 0);
        assert_eq!(pr.r, 3); // s_1 + 1
        assert_eq!(pr.be, 3 + 2 + 1 + 3);
        let enc = gi.h_enclosure(&Dyadic::one(), 16).unwrap();
        assert_eq!(enc.lo(), &Dyadic::pow2(-(2 * pr.be)));
    }

    #[test]
    fn geometric_ladder_for_higher_smoothness() {
        let gi = GadgetInstance::build(&tiny(), bump(), 2, Mode::Faithful).unwrap();
        let pr = gi.params();
        assert_eq!(pr.d, vec![1, 3, 9]);
        assert_eq!(pr.sigma, 9);
        assert_eq!(pr.be, pr.gamma_val + 48 + CERTIFIED_S_2 + 2 + 3);
    }

    const CERTIFIED_S_2: i64 = 4;

    #[test]
    fn rejects_bad_parameters() {
        assert!(GadgetInstance::build(&tiny(), bump(), 0, Mode::Faithful).is_err());
        assert!(GadgetInstance::build(&tiny(), bump(), 4, Mode::Faithful).is_err());
        let short = Arc::new(BumpFunction::with_table(3).unwrap());
        assert!(GadgetInstance::build(&tiny(), short, 1, Mode::Faithful).is_err());
        let gi = GadgetInstance::build(&tiny(), bump(), 1, Mode::Faithful).unwrap();
        assert!(gi.decompose_t(&Dyadic::from_int(2)).is_err());
    }
}
