//! Glues the per-instance smooth systems into one pair `(g, h)` on `[0, 1]`.
//!
//! Every instance `u` owns a closed slot of radius `2^-lambda(ell)` centered
//! at `c_u = 1 - 2^-ell + (2 ubar + 1) 2^-lambda(ell)`, where `ell` is the
//! padded bit length of `u` and `ubar` its payload value. Slots of one
//! length form a cluster just right of `1 - 2^-ell`, clusters of different
//! lengths are disjoint, and everything accumulates only at `1`.
//!
//! On the left half of its slot the glued system runs a time-magnified copy
//! of the instance system forward; on the right half it runs the mirror
//! image backward. The glued solution is the instance solution shrunk by
//! `Lambda = 2^lambda(ell)`: it rises from `0` at the left edge to
//! `L(u) 2^-rho / Lambda` at the center and returns to `0` at the right
//! edge. Outside every slot the right hand side is identically zero, and
//! since the instance right hand side vanishes to all orders at local times
//! `0` and `1`, the pieces meet smoothly.
//!
//! `reduce` turns the construction back into a decision procedure: the truth
//! of `u` is read off a single query to a name of `h` at the slot center.

use alloc::borrow::ToOwned;
use alloc::sync::Arc;
use alloc::vec::Vec;

use num_bigint::BigInt;

use crate::bump::BumpFunction;
use crate::diffeq::{build_gadget, normalize, BitLayout};
use crate::dyadic::{Dyadic, DyadicInterval};
use crate::error::{Error, Result};
use crate::formula::CountingInstance;
use crate::gadget::{make_params, GadgetInstance, Mode};
use crate::name::RealName;
use crate::polynomial::Polynomial;

/// Scaling-length polynomial for the glued family: an instance whose padded
/// bit length is `x` occupies an interval of radius `2^-lambda(x)` and its
/// local coordinates are magnified by `2^lambda(x)`.
pub fn lambda_poly() -> Polynomial {
    Polynomial::new(alloc::vec![2, 2])
}

/// Which half of a slot a time falls in. The center belongs to both halves;
/// both orientations give local time `1` there and agree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    Forward,
    Reverse,
}

/// Where one instance sits inside `[0, 1]`.
#[derive(Clone, Debug)]
pub struct GlueLayout {
    /// Padded bit length `ell` of the instance.
    pub ell: u64,
    /// `lambda(ell)`: log of the local magnification.
    pub lambda: i64,
    pub left: Dyadic,
    pub center: Dyadic,
    pub right: Dyadic,
}

/// Computes the slot of an instance and checks the containment invariant
/// (the whole slot must sit strictly inside the length cluster).
pub fn layout(inst: &CountingInstance) -> Result<GlueLayout> {
    let ell = inst.padded_bit_length();
    let lambda = lambda_poly().eval(ell)? as i64;
    let two_ubar_plus_one = BigInt::from(inst.payload_value()) * 2 + 1;
    let base = &Dyadic::one() - &Dyadic::pow2(-(ell as i64));
    let center = &base + &Dyadic::new(two_ubar_plus_one, -lambda);
    let radius = Dyadic::pow2(-lambda);
    let left = &center - &radius;
    let right = &center + &radius;
    if right >= Dyadic::one() {
        return Err(Error::Parameter(
            "slot containment violated: payload too large for its length".to_owned(),
        ));
    }
    Ok(GlueLayout { ell, lambda, left, center, right })
}

#[derive(Clone)]
pub struct GlueMember {
    pub gadget: GadgetInstance,
    pub layout: GlueLayout,
}

/// A finite glued family, sorted by slot position. Slots may touch at their
/// endpoints (adjacent payloads of one length do); interiors must be
/// disjoint, which fails exactly when an instance appears twice.
#[derive(Clone)]
pub struct GlueCorpus {
    members: Arc<Vec<GlueMember>>,
}

impl GlueCorpus {
    pub fn new(gadgets: Vec<GadgetInstance>) -> Result<Self> {
        let mut members = Vec::with_capacity(gadgets.len());
        for g in gadgets {
            let lay = layout(g.inst())?;
            members.push(GlueMember { gadget: g, layout: lay });
        }
        if let Some(first) = members.first() {
            let k = first.gadget.params().k;
            let mode = first.gadget.params().mode;
            for m in &members {
                if m.gadget.params().k != k || m.gadget.params().mode != mode {
                    return Err(Error::Parameter(
                        "glued family must share smoothness degree and mode".to_owned(),
                    ));
                }
            }
        }
        members.sort_by(|a, b| a.layout.left.cmp(&b.layout.left));
        for pair in members.windows(2) {
            if pair[0].layout.right > pair[1].layout.left {
                return Err(Error::Parameter("slot interiors overlap".to_owned()));
            }
        }
        Ok(GlueCorpus { members: Arc::new(members) })
    }

    pub fn members(&self) -> &[GlueMember] {
        &self.members
    }

    /// Finds the slot containing `t`, if any.
    pub fn locate(&self, t: &Dyadic) -> Result<Option<(usize, Orientation)>> {
        if t.is_negative() || t > &Dyadic::one() {
            return Err(Error::Parameter("time outside [0, 1]".to_owned()));
        }
        let idx = self.members.partition_point(|m| &m.layout.left <= t);
        if idx == 0 {
            return Ok(None);
        }
        let m = &self.members[idx - 1];
        if t > &m.layout.right {
            return Ok(None);
        }
        let orient = if t <= &m.layout.center { Orientation::Forward } else { Orientation::Reverse };
        Ok(Some((idx - 1, orient)))
    }

    /// Local slot time in `[0, 1]`; exact because the magnification is a
    /// power of two.
    fn local_time(&self, idx: usize, orient: Orientation, t: &Dyadic) -> Dyadic {
        let lay = &self.members[idx].layout;
        match orient {
            Orientation::Forward => (t - &lay.left).mul_pow2(lay.lambda),
            Orientation::Reverse => (&lay.right - t).mul_pow2(lay.lambda),
        }
    }

    /// Enclosure of `D_t^i D_y^jy g(t, y)` for the glued right hand side,
    /// width at most `2^-n`. Gaps between slots give exact zero.
    pub fn deriv_g_enclosure(
        &self,
        i: usize,
        jy: usize,
        t: &Dyadic,
        y: &Dyadic,
        n: i64,
    ) -> Result<DyadicInterval> {
        let Some((idx, orient)) = self.locate(t)? else {
            return Ok(DyadicInterval::point(Dyadic::zero()));
        };
        let m = &self.members[idx];
        let lam = m.layout.lambda;
        let tl = self.local_time(idx, orient, t);
        let yl_raw = y.mul_pow2(lam);
        // Outside the strip |y| <= 1 / Lambda the degree-k Taylor extension
        // in y around the strip edge applies. At the edge the local value
        // decomposition lands exactly on an integer, deep in the dead zone,
        // so every y-derivative there is exactly zero and the extension
        // collapses to its constant term: evaluate at the edge, and report
        // exact zero for the y-derivatives.
        let one = Dyadic::one();
        let (yl, beyond) = if yl_raw > one {
            (Dyadic::one(), true)
        } else if yl_raw < -Dyadic::one() {
            (-Dyadic::one(), true)
        } else {
            (yl_raw, false)
        };
        if beyond && jy >= 1 {
            return Ok(DyadicInterval::point(Dyadic::zero()));
        }
        let scale = lam * (i + jy) as i64;
        let inner = m.gadget.deriv_g_enclosure(i, jy, &tl, &yl, n + scale)?;
        let scaled = inner.mul_pow2(scale);
        Ok(match orient {
            Orientation::Forward => scaled,
            // Time reflection contributes (-Lambda)^i, the outer sign -1.
            Orientation::Reverse => {
                if i % 2 == 0 {
                    scaled.neg()
                } else {
                    scaled
                }
            }
        })
    }

    pub fn g_enclosure(&self, t: &Dyadic, y: &Dyadic, n: i64) -> Result<DyadicInterval> {
        self.deriv_g_enclosure(0, 0, t, y, n)
    }

    pub fn g_eval(&self, t: &Dyadic, y: &Dyadic, n: i64) -> Result<Dyadic> {
        Ok(self.g_enclosure(t, y, n + 2)?.mid_round(n + 1))
    }

    /// Enclosure of the glued solution `h(t)`, width at most `2^-n`.
    pub fn h_enclosure(&self, t: &Dyadic, n: i64) -> Result<DyadicInterval> {
        let Some((idx, orient)) = self.locate(t)? else {
            return Ok(DyadicInterval::point(Dyadic::zero()));
        };
        let m = &self.members[idx];
        let lam = m.layout.lambda;
        let tl = self.local_time(idx, orient, t);
        Ok(m.gadget.h_enclosure(&tl, n - lam)?.mul_pow2(-lam))
    }

    pub fn h_eval(&self, t: &Dyadic, n: i64) -> Result<Dyadic> {
        Ok(self.h_enclosure(t, n + 2)?.mid_round(n + 1))
    }

    /// A name of the real number `h(t)`.
    pub fn h_name(&self, t: &Dyadic) -> RealName {
        let corpus = self.clone();
        let at = t.clone();
        RealName::from_refiner(move |w| corpus.h_enclosure(&at, w))
    }
}

/// Decides the truth of `u` from a name of the glued solution, with one
/// query at the slot center. The query precision and threshold come from
/// the instance parameters alone; the instance is never solved here.
pub fn reduce(
    inst: &CountingInstance,
    bump: &Arc<BumpFunction>,
    k: u32,
    h_name: &dyn Fn(&Dyadic) -> Result<RealName>,
) -> Result<bool> {
    let raw = build_gadget(inst, BitLayout::PinnedSpareBit)?;
    let norm = normalize(&raw)?;
    let params = make_params(inst, &norm, bump, k, Mode::Faithful)?;
    let lay = layout(inst)?;
    let name = h_name(&lay.center)?;
    let answer = name.query(params.rho + lay.lambda + 2)?;
    let threshold = Dyadic::pow2(-(params.rho + lay.lambda + 1));
    Ok(answer >= threshold)
}

/// Slack in the doubly-small decay condition for the glued derivative
/// bounds: each returned margin is
/// `(i - 1 + jy + k) lambda(ell) + 2k + 1 + mu(i-1) - gamma + 2 |u|`
/// for `1 <= i`, `i + jy <= k`, and the condition holds when all margins
/// are nonpositive. The first two terms over-count the magnification and
/// chain-rule growth of the order-`i` solution derivatives, so nonpositive
/// margins certify that every such derivative on the slot of `u` is below
/// `2^(-2 |u|)`, which is what makes the family smooth at the accumulation
/// point.
pub fn decay_margins(gadget: &GadgetInstance, lay: &GlueLayout) -> Result<Vec<(usize, usize, i64)>> {
    let pr = gadget.params();
    let k = pr.k as usize;
    let mut out = Vec::new();
    for i in 1..=k {
        for jy in 0..=(k - i) {
            let margin = (i as i64 - 1 + jy as i64 + k as i64) * lay.lambda
                + 2 * k as i64
                + 1
                + gadget.mu_exponent(i - 1)?
                - pr.gamma_val
                + 2 * pr.u_len as i64;
            out.push((i, jy, margin));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_instance;

    fn bump() -> Arc<BumpFunction> {
        Arc::new(BumpFunction::with_table(8).unwrap())
    }

    fn tiny() -> CountingInstance {
        parse_instance("blocks 1\nblock 1 vars a threshold 1\nformula a\n").unwrap()
    }

    fn tiny_false() -> CountingInstance {
        // Same shape, threshold 2: only one satisfying assignment exists.
        parse_instance("blocks 1\nblock 1 vars a threshold 2\nformula a\n").unwrap()
    }

    fn wide() -> CountingInstance {
        parse_instance("blocks 1\nblock 1 vars a b threshold 1\nformula a\n").unwrap()
    }

    fn corpus() -> GlueCorpus {
        let b = bump();
        let gs = [tiny(), tiny_false(), wide()]
            .iter()
            .map(|i| GadgetInstance::build(i, b.clone(), 1, Mode::Faithful).unwrap())
            .collect();
        GlueCorpus::new(gs).unwrap()
    }

    #[test]
    fn layout_of_the_smallest_instance() {
        let lay = layout(&tiny()).unwrap();
        assert_eq!(lay.ell, 2 + 8 * 46);
        assert_eq!(lay.lambda, 2 * 370 + 2);
        assert!(lay.left < lay.center && lay.center < lay.right);
        assert!(lay.right < Dyadic::one());
        assert_eq!(&lay.right - &lay.left, Dyadic::pow2(-741));
    }

    #[test]
    fn same_length_slots_are_interior_disjoint() {
        let a = layout(&tiny()).unwrap();
        let b = layout(&tiny_false()).unwrap();
        assert_eq!(a.ell, b.ell);
        if a.left < b.left {
            assert!(a.right <= b.left);
        } else {
            assert!(b.right <= a.left);
        }
    }

    #[test]
    fn different_lengths_cluster_separately() {
        let a = layout(&tiny()).unwrap();
        let c = layout(&wide()).unwrap();
        assert!(c.ell > a.ell);
        // The longer cluster sits strictly right of the shorter one.
        assert!(a.right < c.left);
    }

    #[test]
    fn duplicate_instances_are_rejected() {
        let b = bump();
        let gs = vec![
            GadgetInstance::build(&tiny(), b.clone(), 1, Mode::Faithful).unwrap(),
            GadgetInstance::build(&tiny(), b, 1, Mode::Faithful).unwrap(),
        ];
        assert!(GlueCorpus::new(gs).is_err());
    }

    #[test]
    fn members_are_sorted_and_locatable() {
        let c = corpus();
        for w in c.members().windows(2) {
            assert!(w[0].layout.right <= w[1].layout.left);
        }
        for (i, m) in c.members().iter().enumerate() {
            let (idx, orient) = c.locate(&m.layout.center).unwrap().unwrap();
            assert_eq!(idx, i);
            assert_eq!(orient, Orientation::Forward);
        }
        assert!(c.locate(&Dyadic::from_ratio_pow2(1, 2)).unwrap().is_none());
        assert!(c.locate(&Dyadic::one()).unwrap().is_none());
        assert!(c.locate(&Dyadic::from_int(2)).is_err());
    }

    #[test]
    fn solution_is_zero_off_the_slots_and_at_the_origin() {
        let c = corpus();
        for t in [Dyadic::zero(), Dyadic::from_ratio_pow2(1, 2), Dyadic::one()] {
            let enc = c.h_enclosure(&t, 16).unwrap();
            assert!(enc.lo().is_zero() && enc.hi().is_zero());
            let g = c.g_enclosure(&t, &Dyadic::zero(), 16).unwrap();
            assert!(g.lo().is_zero() && g.hi().is_zero());
        }
    }

    #[test]
    fn center_value_encodes_the_truth() {
        let c = corpus();
        // tiny is true: h(center) = 2^-rho / Lambda exactly.
        let m_true = c
            .members()
            .iter()
            .find(|m| m.gadget.inst() == &tiny())
            .unwrap();
        let enc = c.h_enclosure(&m_true.layout.center, 16).unwrap();
        let expect = Dyadic::pow2(-(m_true.gadget.params().rho + m_true.layout.lambda));
        assert_eq!(enc.lo(), enc.hi());
        assert_eq!(enc.lo(), &expect);
        // tiny_false is false: exactly zero at its center.
        let m_false = c
            .members()
            .iter()
            .find(|m| m.gadget.inst() == &tiny_false())
            .unwrap();
        let enc0 = c.h_enclosure(&m_false.layout.center, 16).unwrap();
        assert!(enc0.lo().is_zero() && enc0.hi().is_zero());
    }

    #[test]
    fn local_dynamics_match_the_instance_system() {
        // At forward local time 11/32 the instance right hand side is
        // 2^-5041; the glued value is identical (no outer scaling) and the
        // mirrored point gives its negative.
        let c = corpus();
        let m = c
            .members()
            .iter()
            .find(|m| m.gadget.inst() == &tiny())
            .unwrap();
        let lam = m.layout.lambda;
        let tf = &m.layout.left + &Dyadic::from_ratio_pow2(11, 5).mul_pow2(-lam);
        let tr = &m.layout.right - &Dyadic::from_ratio_pow2(11, 5).mul_pow2(-lam);
        let y = c.h_eval(&tf, 5200 + lam).unwrap();
        let gf = c.g_eval(&tf, &y, 5100).unwrap();
        let gr = c.g_eval(&tr, &y, 5100).unwrap();
        let expect = Dyadic::pow2(-5041);
        assert!((&gf - &expect).abs() <= Dyadic::pow2(-5090), "forward {gf}");
        assert!((&gr + &expect).abs() <= Dyadic::pow2(-5090), "reverse {gr}");
    }

    #[test]
    fn y_derivative_picks_up_the_magnification() {
        // Blend-zone oracle: the instance D_y g is 2^-5039; glued, it gains
        // a factor Lambda = 2^742.
        let c = corpus();
        let m = c
            .members()
            .iter()
            .find(|m| m.gadget.inst() == &tiny())
            .unwrap();
        let lam = m.layout.lambda;
        let t = &m.layout.left + &Dyadic::from_ratio_pow2(17, 5).mul_pow2(-lam);
        let y = Dyadic::from_ratio_pow2(1, 1)
            .mul_pow2(-m.gadget.params().be)
            .mul_pow2(-lam);
        let enc = c.deriv_g_enclosure(0, 1, &t, &y, 4200).unwrap();
        let expect = Dyadic::pow2(-5039 + lam);
        let mid = enc.mid_round(4190);
        assert!((&mid - &expect).abs() <= Dyadic::pow2(-4180), "got {mid}");
    }

    #[test]
    fn reduce_decides_truth_through_a_name() {
        let c = corpus();
        let b = bump();
        let by_name = |t: &Dyadic| Ok(c.h_name(t));
        assert!(reduce(&tiny(), &b, 1, &by_name).unwrap());
        assert!(!reduce(&tiny_false(), &b, 1, &by_name).unwrap());
        assert!(reduce(&wide(), &b, 1, &by_name).unwrap());
    }

    #[test]
    fn reduce_reports_broken_oracles() {
        let broken = |_t: &Dyadic| {
            Ok(RealName::from_query_raw(|n| Ok(Dyadic::pow2(-n - 1))))
        };
        let err = reduce(&tiny(), &bump(), 1, &broken).unwrap_err();
        assert!(matches!(err, Error::NameContract(_)));
    }

    #[test]
    fn extension_beyond_the_strip_is_constant_in_y() {
        let c = corpus();
        let m = c
            .members()
            .iter()
            .find(|m| m.gadget.inst() == &tiny())
            .unwrap();
        let lam = m.layout.lambda;
        let t = &m.layout.left + &Dyadic::from_ratio_pow2(11, 5).mul_pow2(-lam);
        let edge = Dyadic::pow2(-lam);
        let far = Dyadic::from_ratio_pow2(5, 1).mul_pow2(-lam); // 5/2 Lambda^-1
        let g_edge = c.g_eval(&t, &edge, 5100).unwrap();
        let g_far = c.g_eval(&t, &far, 5100).unwrap();
        assert_eq!(g_edge, g_far);
        let dy = c.deriv_g_enclosure(0, 1, &t, &far, 32).unwrap();
        assert!(dy.lo().is_zero() && dy.hi().is_zero());
    }

    #[test]
    fn decay_margins_are_nonpositive() {
        let b = bump();
        for inst in [tiny(), wide()] {
            for k in 1..=3u32 {
                let g = GadgetInstance::build(&inst, b.clone(), k, Mode::Faithful).unwrap();
                let lay = layout(g.inst()).unwrap();
                for (i, jy, margin) in decay_margins(&g, &lay).unwrap() {
                    assert!(margin <= 0, "k {k} i {i} jy {jy}: margin {margin}");
                }
            }
        }
    }
}
