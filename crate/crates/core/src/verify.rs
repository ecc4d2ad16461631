//! Self-check suite over a corpus of counting instances.
//!
//! [`run_suite`] runs a chosen subset of twelve checks against a corpus and
//! returns a [`VerdictReport`]: one verdict per check and instance, each
//! pass, fail (with a reproducible witness), or error. The suite never
//! aborts on a failing check; every requested check reports. An empty
//! corpus or an empty check list verifies trivially.
//!
//! Reports are deterministic: the same corpus, options, and seed produce a
//! byte-identical JSON-lines serialization (verdicts are sorted, resource
//! counters are pinned to zero).
//!
//! [`Fault`] injects a single deliberate defect (a tampered step function,
//! a skewed packing base, a lying derivative table, a name oracle that
//! breaks its contract) so callers can confirm each check actually has
//! teeth. [`integrate_rk4`] is the independent dyadic Runge-Kutta oracle
//! used by the integration check, and [`standard_corpus`] is the standard
//! instance family: at most three blocks, block sizes summing to at most
//! ten, thresholds spanning trivially satisfied, exactly tight, and
//! unachievable.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;

use crate::bump::BumpFunction;
use crate::diffeq::{build_gadget, normalize, solve, BitLayout};
use crate::dyadic::{div_dir, Dyadic, Rounding};
use crate::error::{Error, Result};
use crate::exp::exp_point;
use crate::formula::{instance_truth, parse_instance, CountingInstance};
use crate::gadget::{make_params, GadgetInstance, GadgetParams, Mode};
use crate::glue::{self, decay_margins, GlueCorpus, GlueLayout};
use crate::name::{bit_reversal_unit, check_modulus as modulus_probe, RealName};
use crate::polynomial::Polynomial;

// ---------------------------------------------------------------------------
// Verdicts
// ---------------------------------------------------------------------------

/// The twelve checks, in report order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize), serde(rename_all = "lowercase"))]
pub enum Check {
    /// Recognized output equals the brute-force truth value.
    Oracle,
    /// Grid invariants: zero boundary, step recurrence, per-row cell
    /// bounds, and the exact packing identity at every grid point.
    Grid,
    /// Exact final value at `t = 1`, raw and glued.
    Final,
    /// Exact flatness of `g` in `t` at both endpoints.
    Boundary,
    /// Certified derivative magnitude bounds, by exponent and by sample.
    Bounds,
    /// Finite-difference residual of the differential equation.
    Residual,
    /// Runge-Kutta cross-check of the closed-form solution.
    Integrate,
    /// Continuity across evaluation seams (blend onset, slot edges).
    Seam,
    /// Doubly-small decay margins on glued slots.
    Decay,
    /// Truth recovery from a name of the glued solution.
    Reduce,
    /// Declared modulus of continuity of the glued solution.
    Modulus,
    /// Round-trip through the truncated final-value series.
    FinalValue,
}

impl Check {
    pub const ALL: [Check; 12] = [
        Check::Oracle,
        Check::Grid,
        Check::Final,
        Check::Boundary,
        Check::Bounds,
        Check::Residual,
        Check::Integrate,
        Check::Seam,
        Check::Decay,
        Check::Reduce,
        Check::Modulus,
        Check::FinalValue,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Oracle => "oracle",
            Check::Grid => "grid",
            Check::Final => "final",
            Check::Boundary => "boundary",
            Check::Bounds => "bounds",
            Check::Residual => "residual",
            Check::Integrate => "integrate",
            Check::Seam => "seam",
            Check::Decay => "decay",
            Check::Reduce => "reduce",
            Check::Modulus => "modulus",
            Check::FinalValue => "finalvalue",
        }
    }

    pub fn parse(s: &str) -> Option<Check> {
        Check::ALL.iter().copied().find(|c| c.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize), serde(rename_all = "lowercase"))]
pub enum Status {
    Pass,
    Fail,
    Error,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Error => "error",
        }
    }
}

/// One check outcome for one instance (or for the whole family, with the
/// instance field `"family"`).
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Verdict {
    pub check: Check,
    pub instance: String,
    pub status: Status,
    /// First violation: sample coordinates and magnitudes, or the error.
    pub witness: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct VerdictReport {
    pub verdicts: Vec<Verdict>,
}

impl VerdictReport {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.status == Status::Pass)
    }

    pub fn count(&self, s: Status) -> usize {
        self.verdicts.iter().filter(|v| v.status == s).count()
    }

    /// Verdicts for one check, in instance order.
    pub fn of(&self, c: Check) -> impl Iterator<Item = &Verdict> {
        self.verdicts.iter().filter(move |v| v.check == c)
    }

    fn normalize(&mut self) {
        self.verdicts
            .sort_by(|a, b| (a.check, &a.instance).cmp(&(b.check, &b.instance)));
    }

    /// One JSON object per line, sorted by check then instance. The
    /// `millis` field is pinned to zero so identical runs serialize
    /// byte-identically.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for v in &self.verdicts {
            out.push_str("{\"check\":\"");
            out.push_str(v.check.name());
            out.push_str("\",\"instance\":\"");
            json_escape(&v.instance, &mut out);
            out.push_str("\",\"status\":\"");
            out.push_str(v.status.name());
            out.push_str("\",\"witness\":");
            match &v.witness {
                None => out.push_str("null"),
                Some(w) => {
                    out.push('"');
                    json_escape(w, &mut out);
                    out.push('"');
                }
            }
            out.push_str(",\"millis\":0}\n");
        }
        out
    }
}

fn json_escape(s: &str, out: &mut String) {
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
}

// ---------------------------------------------------------------------------
// Faults
// ---------------------------------------------------------------------------

/// A single deliberate defect, injected during the suite's own builds so
/// the checks can be shown to catch it. Step faults target one instance by
/// corpus position and one cell of its normalized equation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Negate the step value at one `(row, column)`.
    FlipStep { instance: usize, row: usize, col: u64 },
    /// Force the step value to zero at one `(row, column)`.
    ZeroStep { instance: usize, row: usize, col: u64 },
    /// Shift the stored packing-base exponent of one instance.
    PerturbB { instance: usize, be_offset: i64 },
    /// Answer every name query with a value that is not a multiple of the
    /// queried grid.
    BrokenNameOracle,
    /// Lower every certified derivative-sup exponent above order zero.
    BumpTable { lower_by: i64 },
}

/// A name oracle that violates the conforming-multiple contract on every
/// query: it answers `2^-(n+1)`, which is off the `2^-n` grid.
fn broken_name() -> RealName {
    RealName::from_query_raw(|n| Ok(Dyadic::pow2(-(n + 1))))
}

// ---------------------------------------------------------------------------
// Options
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct SuiteOptions {
    /// Offsets the low-discrepancy sample streams.
    pub seed: u64,
    /// Residual sample count per base-scale instance.
    pub residual_points: u32,
    pub fault: Option<Fault>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { seed: 0, residual_points: 256, fault: None }
    }
}

// ---------------------------------------------------------------------------
// Standard corpus
// ---------------------------------------------------------------------------

/// `(block specs, formula)`: each block is a space-separated variable list
/// plus its threshold. Thresholds cover trivially satisfied (0), tight
/// (exactly the model count), and unachievable (above the block's maximum)
/// cases at every quantifier depth. The two largest instances sit last so
/// sampled sub-selections stay cheap.
const CORPUS_TABLE: &[(&[(&str, u64)], &str)] = &[
    // One block.
    (&[("a", 1)], "a"),
    (&[("a", 2)], "a"),
    (&[("a", 0)], "a"),
    (&[("a", 1)], "!a"),
    (&[("a", 1)], "a | !a"),
    (&[("a", 2)], "a | !a"),
    (&[("a", 3)], "a | !a"),
    (&[("a", 1)], "a & !a"),
    (&[("a b", 1)], "a & b"),
    (&[("a b", 2)], "a & b"),
    (&[("a b", 3)], "a | b"),
    (&[("a b", 4)], "a | b"),
    (&[("a b", 4)], "a | !a"),
    (&[("a b", 5)], "a | b"),
    (&[("a b", 0)], "a & b"),
    (&[("a b", 2)], "a"),
    (&[("a b c", 4)], "a | b & c"),
    (&[("a b c", 6)], "a | b & c"),
    (&[("a b c", 5)], "a | b & c"),
    (&[("a b c", 9)], "a | !a"),
    (&[("a b c", 8)], "a | !a"),
    (&[("a b c", 3)], "(a | b) & !c"),
    (&[("a b c", 4)], "(a | b) & !c"),
    (&[("a b c d", 8)], "a | b"),
    (&[("a b c d", 13)], "a | b"),
    (&[("a b c d", 1)], "a & b & c & d"),
    (&[("a b c d", 2)], "a & b & c & d"),
    // Two blocks.
    (&[("a", 1), ("p", 1)], "a & p"),
    (&[("a", 1), ("p", 2)], "a & p"),
    (&[("a", 2), ("p", 1)], "a | p"),
    (&[("a", 2), ("p", 2)], "a | p"),
    (&[("a", 0), ("p", 2)], "a"),
    (&[("a", 1), ("p", 1)], "a & !a"),
    (&[("a", 2), ("p", 2)], "a | !a"),
    (&[("a b", 2), ("p", 1)], "(a | b) & p"),
    (&[("a b", 4), ("p", 1)], "a | b | p"),
    (&[("a b", 4), ("p", 2)], "a | b | p"),
    (&[("a", 1), ("p q", 3)], "a & (p | q)"),
    (&[("a", 1), ("p q", 4)], "a & (p | q)"),
    (&[("a", 2), ("p q", 2)], "a | p & q"),
    (&[("a", 2), ("p q", 1)], "a | p & q"),
    (&[("a b", 3), ("p q", 2)], "(a | b) & (p | q)"),
    (&[("a b", 3), ("p q", 4)], "(a | b) & (p | q)"),
    (&[("a b", 0), ("p q", 4)], "a"),
    (&[("a b", 5), ("p", 1)], "a | b | p"),
    (&[("a b c", 4), ("p", 1)], "a | b & c | p"),
    (&[("a b c", 6), ("p", 1)], "a | b & c | p"),
    (&[("a", 1), ("p q r", 5)], "a & (p | q | r)"),
    (&[("a", 1), ("p q r", 8)], "a & (p | q | r)"),
    (&[("a b c d", 8), ("p q", 2)], "(a | b) & (p | q)"),
    (&[("a b c d", 13), ("p q", 1)], "(a | b) & (p | q)"),
    // Three blocks.
    (&[("a", 1), ("p", 1), ("x", 1)], "a & p & x"),
    (&[("a", 1), ("p", 1), ("x", 2)], "a & p & x"),
    (&[("a", 1), ("p", 2), ("x", 1)], "a & (p | x)"),
    (&[("a", 0), ("p", 2), ("x", 2)], "a"),
    (&[("a b", 2), ("p", 1), ("x", 1)], "(a | b) & p & x"),
    (&[("a", 1), ("p q", 3), ("x", 1)], "a & (p | q | x)"),
    (&[("a", 1), ("p", 1), ("x y", 3)], "a & p & (x | y)"),
    (&[("a", 1), ("p", 1), ("x y", 4)], "a & p & (x | y)"),
    (&[("a b", 2), ("p q", 5), ("x y", 1)], "(a | b) & (p | q) & (x | y)"),
    (&[("a b c", 4), ("p q r", 4), ("x y", 2)], "(a | b | c) & (p | q) & (x | y)"),
];

/// The deterministic standard corpus.
pub fn standard_corpus() -> Vec<CountingInstance> {
    CORPUS_TABLE
        .iter()
        .map(|(blocks, formula)| {
            let mut text = format!("blocks {}\n", blocks.len());
            for (i, (vars, m)) in blocks.iter().enumerate() {
                text.push_str(&format!("block {} vars {vars} threshold {m}\n", i + 1));
            }
            text.push_str(&format!("formula {formula}\n"));
            parse_instance(&text).expect("corpus table entries parse")
        })
        .collect()
}

fn label(idx: usize) -> String {
    format!("i{idx:03}")
}

/// Instances that get the expensive per-point checks. Small corpora are
/// covered in full; larger ones are strided, which keeps the two largest
/// standard instances (placed last) out of the deep sweeps.
fn smooth_indices(len: usize) -> Vec<usize> {
    if len <= 12 {
        (0..len).collect()
    } else {
        let mut v: Vec<usize> = (0..9).map(|c| c * len / 9).collect();
        v.dedup();
        v
    }
}

/// Smoothness degree for the per-instance continuous checks. Degrees above
/// one go only to the smallest instances; every extra degree multiplies the
/// working precision of a point evaluation.
fn k_for(idx: usize, inst: &CountingInstance) -> u32 {
    if inst.n() == 1 { 1 + (idx % 3) as u32 } else { 1 }
}

/// Which corpus members the expensive continuous checks visit, with the
/// smoothness degree each is built at.
pub fn smooth_plan(corpus: &[CountingInstance]) -> Vec<(usize, u32)> {
    smooth_indices(corpus.len())
        .into_iter()
        .map(|i| (i, k_for(i, &corpus[i])))
        .collect()
}

/// Cost tier of an instance, by the working precision of one evaluation at
/// the innermost moving scale. Sample budgets shrink as the tier rises; the
/// certified-exponent inequalities are checked in full at every tier.
fn tier(gi: &GadgetInstance) -> u8 {
    let eff = gi.params().be * gi.params().d[1] as i64;
    if eff <= 8_192 {
        0
    } else if eff <= 20_000 {
        1
    } else {
        2
    }
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// `j`-th sample of the seeded bit-reversal stream on `[0, 1)`.
fn sample_unit(seed: u64, j: u32, bits: u32) -> Dyadic {
    bit_reversal_unit((seed as u32).wrapping_add(j), bits)
}

/// Compact display: exact for short mantissas, magnitude-only otherwise.
fn short(d: &Dyadic) -> String {
    if d.is_zero() {
        return "0".to_string();
    }
    if d.mantissa_bits() <= 48 {
        return format!("{d}");
    }
    let mag = d.magnitude_exponent().expect("nonzero");
    if d.is_negative() { format!("-~2^{mag}") } else { format!("~2^{mag}") }
}

// ---------------------------------------------------------------------------
// Runge-Kutta oracle
// ---------------------------------------------------------------------------

/// Classical fourth-order Runge-Kutta on dyadic state, rounding the state
/// to a multiple of `2^-n` after every step. Returns the `steps + 1`
/// trajectory values. Errors with [`Error::Containment`] the moment the
/// state leaves `[-1, 1]`.
///
/// Per step the only inexact operations are the division by six (directed,
/// error below `2^-n`) and the state rounding (error at most `2^-n-1`), so
/// accumulated rounding stays below `steps * 2^(1-n)` on top of the
/// method's own truncation error.
pub fn integrate_rk4(
    g: &dyn Fn(&Dyadic, &Dyadic) -> Result<Dyadic>,
    t0: &Dyadic,
    y0: &Dyadic,
    step: &Dyadic,
    steps: u32,
    n: i64,
) -> Result<Vec<Dyadic>> {
    let one = Dyadic::one();
    let contain = |y: &Dyadic, t: &Dyadic| -> Result<()> {
        if y.abs() > one {
            return Err(Error::Containment(format!(
                "state {} left [-1, 1] at t = {t}",
                short(y)
            )));
        }
        Ok(())
    };
    let mut t = t0.clone();
    let mut y = y0.clone();
    contain(&y, &t)?;
    let half = step.mul_pow2(-1);
    let mut out = Vec::with_capacity(steps as usize + 1);
    out.push(y.clone());
    for _ in 0..steps {
        let t_half = &t + &half;
        let t_full = &t + step;
        let k1 = g(&t, &y)?;
        let k2 = g(&t_half, &(&y + &(&half * &k1)))?;
        let k3 = g(&t_half, &(&y + &(&half * &k2)))?;
        let k4 = g(&t_full, &(&y + &(step * &k3)))?;
        let sum = &(&k1 + &k4) + &(&(&k2 + &k3) + &(&k2 + &k3));
        let inc = div_dir(&(step * &sum), &Dyadic::from_int(6), n, Rounding::Down)?;
        y = (&y + &inc).round_to(n);
        t = t_full;
        contain(&y, &t)?;
        out.push(y.clone());
    }
    Ok(out)
}

/// Measured convergence-order ratio of the integrator on `y' = -y`,
/// `y(0) = 3/4`, over `[0, 1/2]`: endpoint error with 8 steps divided by
/// the error with 16. A fourth-order method lands near 16.
pub fn rk4_order_ratio() -> Result<Dyadic> {
    let g = |_t: &Dyadic, y: &Dyadic| Ok(-y.clone());
    let y0 = Dyadic::from_ratio_pow2(3, 2);
    let reference = exp_point(&Dyadic::from_ratio_pow2(-1, 1), 200)?
        .mul_int(3)
        .mul_pow2(-2);
    let mut errs = Vec::new();
    for steps in [8u32, 16] {
        let step = div_dir(
            &Dyadic::from_ratio_pow2(1, 1),
            &Dyadic::from_int(steps as i64),
            80,
            Rounding::Down,
        )?;
        let traj = integrate_rk4(&g, &Dyadic::zero(), &y0, &step, steps, 160)?;
        let end = traj.last().expect("nonempty").clone();
        let err = (&end - reference.lo()).abs().max((&end - reference.hi()).abs());
        errs.push(err);
    }
    div_dir(&errs[0], &errs[1], 32, Rounding::Down)
}

// ---------------------------------------------------------------------------
// Suite plumbing
// ---------------------------------------------------------------------------

/// The bump function used for a run, honoring a table fault.
fn suite_bump(opts: &SuiteOptions) -> Result<Arc<BumpFunction>> {
    let mut bump = BumpFunction::with_table(8)?;
    if let Some(Fault::BumpTable { lower_by }) = &opts.fault {
        let table: Vec<i64> = bump
            .s_table()
            .iter()
            .enumerate()
            .map(|(m, &s)| if m == 0 { s } else { s - lower_by })
            .collect();
        bump.override_table(table);
    }
    Ok(Arc::new(bump))
}

/// Builds one gadget instance, applying any step or parameter fault aimed
/// at this corpus position.
fn build_with_fault(
    idx: usize,
    inst: &CountingInstance,
    bump: &Arc<BumpFunction>,
    k: u32,
    fault: Option<&Fault>,
) -> Result<GadgetInstance> {
    let raw = build_gadget(inst, BitLayout::PinnedSpareBit)?;
    let mut norm = normalize(&raw)?;
    match fault {
        Some(Fault::FlipStep { instance, row, col }) if *instance == idx => {
            let inner = norm.eq.step.clone();
            let (r, c) = (*row, *col);
            norm.eq.step = Arc::new(move |i, t, y| {
                let v = inner(i, t, y);
                if i == r && t == c { -v } else { v }
            });
        }
        Some(Fault::ZeroStep { instance, row, col }) if *instance == idx => {
            let inner = norm.eq.step.clone();
            let (r, c) = (*row, *col);
            norm.eq.step = Arc::new(move |i, t, y| {
                if i == r && t == c { 0 } else { inner(i, t, y) }
            });
        }
        _ => {}
    }
    let grid = solve(&norm.eq)?;
    let mut params = make_params(inst, &norm, bump, k, Mode::Faithful)?;
    if let Some(Fault::PerturbB { instance, be_offset }) = fault {
        if *instance == idx {
            params.be += be_offset;
            params.rho = params.be * params.sigma as i64;
        }
    }
    Ok(GadgetInstance::from_parts(raw, norm, grid, params, bump.clone()))
}

/// Fault-free parameters recomputed from the instance, the reference the
/// checks compare stored parameters and scales against.
fn fresh_params(gi: &GadgetInstance, bump: &Arc<BumpFunction>) -> Result<GadgetParams> {
    make_params(gi.inst(), gi.norm(), bump, gi.params().k, gi.params().mode)
}

struct Suite<'a> {
    corpus: &'a [CountingInstance],
    opts: &'a SuiteOptions,
    bump: Arc<BumpFunction>,
    truths: Vec<Result<bool>>,
    /// Degree-1 build of every instance (the glued family shares one degree).
    base: Vec<Result<GadgetInstance>>,
    glue: Result<GlueCorpus>,
    layouts: Vec<Result<GlueLayout>>,
    /// Positions that get the per-point continuous checks, with their
    /// designated-degree builds.
    smooth: Vec<(usize, Result<GadgetInstance>)>,
}

impl<'a> Suite<'a> {
    fn build(
        corpus: &'a [CountingInstance],
        opts: &'a SuiteOptions,
        checks: &[Check],
    ) -> Result<Suite<'a>> {
        let bump = suite_bump(opts)?;
        let fault = opts.fault.as_ref();
        let truths = corpus.iter().map(instance_truth).collect();
        let base: Vec<Result<GadgetInstance>> = corpus
            .iter()
            .enumerate()
            .map(|(i, inst)| build_with_fault(i, inst, &bump, 1, fault))
            .collect();
        let glue = GlueCorpus::new(base.iter().filter_map(|r| r.as_ref().ok().cloned()).collect());
        let layouts = corpus.iter().map(glue::layout).collect();
        let need_smooth = checks.iter().any(|c| {
            matches!(
                c,
                Check::Boundary | Check::Bounds | Check::Residual | Check::Integrate | Check::Seam
            )
        });
        let smooth = if need_smooth {
            smooth_indices(corpus.len())
                .into_iter()
                .map(|i| {
                    let k = k_for(i, &corpus[i]);
                    let gi = if k == 1 {
                        base[i].clone()
                    } else {
                        build_with_fault(i, &corpus[i], &bump, k, fault)
                    };
                    (i, gi)
                })
                .collect()
        } else {
            Vec::new()
        };
        Ok(Suite { corpus, opts, bump, truths, base, glue, layouts, smooth })
    }

    fn push(&self, rep: &mut VerdictReport, check: Check, inst: String, r: Result<Option<String>>) {
        let (status, witness) = match r {
            Ok(None) => (Status::Pass, None),
            Ok(Some(w)) => (Status::Fail, Some(w)),
            Err(e) => (Status::Error, Some(format!("{e}"))),
        };
        rep.verdicts.push(Verdict { check, instance: inst, status, witness });
    }

    /// Runs `body` per base-corpus instance, recording build and truth
    /// errors as error verdicts.
    fn per_base<F>(&self, rep: &mut VerdictReport, check: Check, mut body: F)
    where
        F: FnMut(usize, &GadgetInstance, bool) -> Result<Option<String>>,
    {
        for (i, built) in self.base.iter().enumerate() {
            let r = match (built, &self.truths[i]) {
                (Ok(gi), Ok(truth)) => body(i, gi, *truth),
                (Err(e), _) | (_, Err(e)) => Err(e.clone()),
            };
            self.push(rep, check, label(i), r);
        }
    }

    fn per_smooth<F>(&self, rep: &mut VerdictReport, check: Check, mut body: F)
    where
        F: FnMut(usize, &GadgetInstance) -> Result<Option<String>>,
    {
        for (i, built) in &self.smooth {
            let r = match built {
                Ok(gi) => body(*i, gi),
                Err(e) => Err(e.clone()),
            };
            self.push(rep, check, label(*i), r);
        }
    }
}

// ---------------------------------------------------------------------------
// Individual checks
// ---------------------------------------------------------------------------

fn check_oracle(s: &Suite, rep: &mut VerdictReport) {
    s.per_base(rep, Check::Oracle, |_i, gi, truth| {
        let out = gi.output();
        if out == truth as i64 {
            Ok(None)
        } else {
            Ok(Some(format!("recognized {out}, brute force says {}", truth as i64)))
        }
    });
}

fn check_grid(s: &Suite, rep: &mut VerdictReport) {
    s.per_base(rep, Check::Grid, |_i, gi, _truth| {
        let fresh = fresh_params(gi, &s.bump)?;
        let eq = &gi.norm().eq;
        let grid = gi.grid();
        let p = gi.norm().p;
        let width = eq.width;
        for i in 0..=p {
            if grid.cell(i, 0) != 0 {
                return Ok(Some(format!("first column not zero at row {i}")));
            }
        }
        for t in 0..=width {
            if grid.cell(0, t) != 0 {
                return Ok(Some(format!("row 0 not zero at column {t}")));
            }
        }
        for t in 0..width {
            for i in 0..p {
                let lhs = grid.cell(i + 1, t + 1) - grid.cell(i + 1, t);
                let rhs = (eq.step)(i, t, grid.cell(i, t)) as i64;
                if lhs != rhs {
                    return Ok(Some(format!(
                        "recurrence broken at row {}, column {}: difference {lhs}, step {rhs}",
                        i + 1,
                        t + 1
                    )));
                }
            }
        }
        let lens = gi.inst().block_lens();
        for i in 1..=p {
            let cap = if i <= lens.len() { 1i64 << lens[i - 1] } else { 1 };
            let max = grid.row_max(i);
            if max > cap {
                return Ok(Some(format!("row {i} reaches {max}, above its bound {cap}")));
            }
        }
        let qe = fresh.q as i64;
        for t in 0..=width {
            let mut reference = Dyadic::zero();
            for i in 1..=p {
                let c = grid.cell(i, t);
                if c != 0 {
                    let term = Dyadic::from_int(c).mul_pow2(-fresh.be * fresh.d[i] as i64);
                    reference = &reference + &term;
                }
            }
            let at = Dyadic::new(BigInt::from(t), -qe);
            let enc = gi.h_enclosure(&at, 8)?;
            if enc.lo() != enc.hi() || enc.lo() != &reference {
                return Ok(Some(format!(
                    "packing identity broken at column {t}: value {}, packed cells {}",
                    short(enc.lo()),
                    short(&reference)
                )));
            }
        }
        Ok(None)
    });
}

fn check_final(s: &Suite, rep: &mut VerdictReport) {
    s.per_base(rep, Check::Final, |i, gi, truth| {
        let fresh = fresh_params(gi, &s.bump)?;
        let expected = if truth { Dyadic::pow2(-fresh.rho) } else { Dyadic::zero() };
        let enc = gi.h_enclosure(&Dyadic::one(), 8)?;
        if enc.lo() != enc.hi() || enc.lo() != &expected {
            return Ok(Some(format!(
                "value at 1 is {}, expected {}",
                short(enc.lo()),
                short(&expected)
            )));
        }
        let lay = self_layout(s, i)?;
        let glued = s.glue.as_ref().map_err(Error::clone)?;
        let genc = glued.h_enclosure(&lay.center, 8)?;
        let gexp = expected.mul_pow2(-lay.lambda);
        if genc.lo() != genc.hi() || genc.lo() != &gexp {
            return Ok(Some(format!(
                "glued value at the slot center is {}, expected {}",
                short(genc.lo()),
                short(&gexp)
            )));
        }
        Ok(None)
    });
}

fn self_layout(s: &Suite, i: usize) -> Result<GlueLayout> {
    s.layouts[i].clone()
}

fn check_boundary(s: &Suite, rep: &mut VerdictReport) {
    s.per_smooth(rep, Check::Boundary, |_i, gi| {
        let be_d1 = gi.params().be * gi.params().d[1] as i64;
        let half_cell = Dyadic::pow2(-be_d1 - 1);
        let ys = [
            Dyadic::zero(),
            half_cell.clone(),
            -half_cell,
            Dyadic::one(),
            -Dyadic::one(),
        ];
        for i in 0..=4usize {
            for t in [Dyadic::zero(), Dyadic::one()] {
                for y in &ys {
                    let enc = gi.deriv_g_enclosure(i, 0, &t, y, 8)?;
                    if !enc.lo().is_zero() || !enc.hi().is_zero() {
                        return Ok(Some(format!(
                            "order-{i} time derivative at t = {t} is not exactly zero"
                        )));
                    }
                }
            }
        }
        Ok(None)
    });
}

fn check_bounds(s: &Suite, rep: &mut VerdictReport) {
    s.per_smooth(rep, Check::Bounds, |_i, gi| {
        let p = gi.params();
        let fresh = fresh_params(gi, &s.bump)?;
        if p.be != fresh.be || p.rho != fresh.rho || p.gamma_val != fresh.gamma_val {
            return Ok(Some(format!(
                "stored parameters diverge from recomputation: base exponent {} vs {}",
                p.be, fresh.be
            )));
        }
        let k = p.k as usize;
        // Exponent inequalities: every magnitude exponent stays within the
        // declared budget for every row.
        for j in 0..p.p {
            for i in 0..=3usize {
                for jy in 0..=k {
                    let dme = gi.deriv_magnitude_exponent(i, jy, j)?;
                    let bound = gi.mu_exponent(i)? - fresh.gamma_val;
                    if dme > bound {
                        return Ok(Some(format!(
                            "derivative ({i},{jy}) on row {j}: exponent {dme} above budget {bound}"
                        )));
                    }
                }
            }
        }
        // Sampled enclosures against the same budget.
        let q = p.q as i64;
        let n_b = fresh.gamma_val + p.r as i64 + 64;
        let width = 1u64 << p.q;
        let (samples, deep_probes) = match tier(gi) {
            0 => (8u32, 2u32),
            1 => (4, 1),
            _ => (2, 1),
        };
        let sparse = tier(gi) == 2;
        for sample in 0..samples {
            let x = sample_unit(s.opts.seed, sample * 2 + 1, p.q + 12);
            let scaled = x.mul_pow2(q);
            let tt_big = scaled.floor_shifted(0);
            let tt = tt_big
                .to_u64_digits()
                .1
                .first()
                .copied()
                .unwrap_or(0)
                .min(width - 1);
            let frac = &scaled - &Dyadic::from_bigint(tt_big);
            let theta = &Dyadic::from_ratio_pow2(1, 3) + &frac.mul_int(3).mul_pow2(-2);
            let t = (&Dyadic::new(BigInt::from(tt), 0) + &theta).mul_pow2(-q);
            let j = gi.active_row(tt);
            let cell = gi.grid().cell(j, tt);
            let base_y = Dyadic::from_int(cell);
            let mid_y =
                (&base_y + &Dyadic::from_ratio_pow2(1, 1)).mul_pow2(-p.be * p.d[j] as i64);
            let mut ys = vec![mid_y.clone()];
            if !sparse {
                ys.push(base_y.mul_pow2(-p.be * p.d[j] as i64));
            }
            for i in 0..=3usize {
                if sparse && (i == 1 || i == 2) {
                    continue;
                }
                for jy in 0..=k {
                    if sparse && jy != 0 && jy != k {
                        continue;
                    }
                    for y in &ys {
                        let enc = gi.deriv_g_enclosure(i, jy, &t, y, n_b)?;
                        let sup = enc.lo().abs().max(enc.hi().abs());
                        let bound = &Dyadic::pow2(gi.mu_exponent(i)? - fresh.gamma_val)
                            + &Dyadic::pow2(1 - n_b);
                        if sup > bound {
                            return Ok(Some(format!(
                                "derivative ({i},{jy}) at column {tt} reaches {}, above {}",
                                short(&sup),
                                short(&bound)
                            )));
                        }
                    }
                }
            }
            // Deep probes past the magnitude shortcut, checking the
            // evaluated value at its own scale.
            if sample < deep_probes {
                for (i, jy) in [(0usize, 0usize), (0, 1)] {
                    if jy > k {
                        continue;
                    }
                    let dme = gi.deriv_magnitude_exponent(i, jy, j)?;
                    let n_deep = (-dme).max(8) + 64;
                    let enc = gi.deriv_g_enclosure(i, jy, &t, &mid_y, n_deep)?;
                    let sup = enc.lo().abs().max(enc.hi().abs());
                    let bound = &Dyadic::pow2(gi.mu_exponent(i)? - fresh.gamma_val)
                        + &Dyadic::pow2(1 - n_deep);
                    if sup > bound {
                        return Ok(Some(format!(
                            "deep probe ({i},{jy}) at column {tt} reaches {}, above {}",
                            short(&sup),
                            short(&bound)
                        )));
                    }
                }
            }
        }
        Ok(None)
    });
}

fn check_residual(s: &Suite, rep: &mut VerdictReport) {
    s.per_smooth(rep, Check::Residual, |_i, gi| {
        let p = gi.params();
        let q = p.q as i64;
        let delta = Dyadic::pow2(-(q + 4));
        let points = s.opts.residual_points;
        let width = 1u64 << p.q;
        for draw in 0..points {
            let x = sample_unit(s.opts.seed, draw + 1, p.q + 18);
            let scaled = x.mul_pow2(q);
            let tt_big = scaled.floor_shifted(0);
            let tt = tt_big
                .to_u64_digits()
                .1
                .first()
                .copied()
                .unwrap_or(0)
                .min(width - 1);
            let frac = &scaled - &Dyadic::from_bigint(tt_big);
            // Keep theta at most 7/8 so the quotient stays inside column tt.
            let theta = frac.mul_int(7).mul_pow2(-3);
            let t = (&Dyadic::new(BigInt::from(tt), 0) + &theta).mul_pow2(-q);
            let j = gi.active_row(tt);
            let be_d = p.be * p.d[j + 1] as i64;
            let n_eff = be_d + q + 64;
            let h1 = gi.h_eval(&t, n_eff + q + 8)?;
            let h2 = gi.h_eval(&(&t + &delta), n_eff + q + 8)?;
            let quotient = (&h2 - &h1).mul_pow2(q + 4);
            let g = gi.g_eval(&t, &h1, n_eff + 4)?;
            let err = (&quotient - &g).abs();
            // Taylor: the quotient differs from the derivative by at most
            // half the step times the certified curvature bound.
            let m2 = gi.deriv_magnitude_exponent(1, 0, j)?;
            let tol = &Dyadic::pow2(m2 - q - 5) + &Dyadic::pow2(2 - n_eff);
            if err > tol {
                return Ok(Some(format!(
                    "residual at column {tt}, theta {}: {} above {}",
                    short(&theta),
                    short(&err),
                    short(&tol)
                )));
            }
        }
        Ok(None)
    });
}

fn check_integrate(s: &Suite, rep: &mut VerdictReport) {
    s.per_smooth(rep, Check::Integrate, |_i, gi| {
        let p = gi.params();
        let q = p.q as i64;
        let s5 = s.bump.s(5)?;
        let be_d1 = p.be * p.d[1] as i64;
        let n_round = be_d1 + 5 * q + 64;
        let macro_cols = gi.raw().eq.width;
        let stride = gi.norm().macro_stride as u64;
        let cells = match tier(gi) {
            0 => 8u64,
            1 => 2,
            _ => 1,
        };
        let mut seen = Vec::new();
        for c in 0..cells {
            // Formula-row cells spread across the forward phase: these are
            // the columns where the dynamics actually move.
            let m = (c * macro_cols / cells).min(macro_cols - 1);
            let tt = (stride - 1) + m * stride;
            if seen.contains(&tt) {
                continue;
            }
            seen.push(tt);
            let t0 = Dyadic::new(BigInt::from(tt), -q);
            let y0 = gi.h_grid_exact(tt);
            let step = Dyadic::pow2(-(q + 4));
            let g = |t: &Dyadic, y: &Dyadic| gi.g_eval(t, y, n_round + 4);
            let traj = integrate_rk4(&g, &t0, &y0, &step, 16, n_round)?;
            let end = traj.last().expect("nonempty");
            let target = gi.h_grid_exact(tt + 1);
            let err = (end - &target).abs();
            let env = &Dyadic::pow2(s5 - be_d1 - 9) + &Dyadic::pow2(6 - n_round);
            if err > env {
                return Ok(Some(format!(
                    "integration across column {tt} misses by {}, envelope {}",
                    short(&err),
                    short(&env)
                )));
            }
        }
        Ok(None)
    });
}

fn check_seam(s: &Suite, rep: &mut VerdictReport) {
    s.per_smooth(rep, Check::Seam, |i, gi| {
        let p = gi.params();
        let q = p.q as i64;
        let fresh = fresh_params(gi, &s.bump)?;
        // Blend-onset seam: the evaluator switches branches where the cell
        // fraction crosses a quarter; values from both sides must agree to
        // within the certified y-Lipschitz bound.
        let mut col = None;
        for tt in 0..gi.norm().forward_cols {
            let j = gi.active_row(tt);
            if (gi.norm().eq.step)(j, tt, gi.grid().cell(j, tt)) != 0 {
                col = Some(tt);
                break;
            }
        }
        if let Some(tt) = col {
            let j = gi.active_row(tt);
            let t = (&Dyadic::new(BigInt::from(tt), 0) + &Dyadic::from_ratio_pow2(1, 1))
                .mul_pow2(-q);
            let cell = Dyadic::from_int(gi.grid().cell(j, tt));
            let seam = &cell + &Dyadic::from_ratio_pow2(1, 2);
            let eps = Dyadic::pow2(-16);
            let scale = -p.be * p.d[j] as i64;
            let y_lo = (&seam - &eps).mul_pow2(scale);
            let y_hi = (&seam + &eps).mul_pow2(scale);
            let n_s = p.be * p.d[j + 1] as i64 + 64;
            let g_lo = gi.g_eval(&t, &y_lo, n_s)?;
            let g_hi = gi.g_eval(&t, &y_hi, n_s)?;
            let gap = (&g_hi - &g_lo).abs();
            let lip = gi.deriv_magnitude_exponent(0, 1, j)?;
            let tol = &Dyadic::pow2(lip - 15 + scale) + &Dyadic::pow2(2 - n_s);
            if gap > tol {
                return Ok(Some(format!(
                    "blend-onset gap at column {tt}: {} above {}",
                    short(&gap),
                    short(&tol)
                )));
            }
        }
        // Slot seams of the glued family: the right-hand side must vanish
        // continuously into the gaps at both slot edges and the center.
        let glued = s.glue.as_ref().map_err(Error::clone)?;
        let lay = self_layout(s, i)?;
        let eps = Dyadic::pow2(-lay.lambda - 10);
        let n_g = fresh.gamma_val + 64;
        // The local clock runs 2^lambda times faster, so eps off an edge is
        // local time 2^-10; the value grows off the flat edge no faster
        // than the first-derivative budget, and two extra bits absorb the
        // enclosure slack.
        let tol = &Dyadic::pow2(gi.mu_exponent(1)? - fresh.gamma_val - 8)
            + &Dyadic::pow2(2 - n_g);
        let probes = [
            &lay.left + &eps,
            &lay.center - &eps,
            &lay.center + &eps,
            &lay.right - &eps,
        ];
        for t in &probes {
            let v = glued.g_eval(t, &Dyadic::zero(), n_g)?;
            if v.abs() > tol {
                return Ok(Some(format!(
                    "glued right-hand side near a slot edge: {} above {}",
                    short(&v.abs()),
                    short(&tol)
                )));
            }
        }
        Ok(None)
    });
}

fn check_decay(s: &Suite, rep: &mut VerdictReport) {
    s.per_base(rep, Check::Decay, |i, gi, _truth| {
        let lay = self_layout(s, i)?;
        for (di, dj, margin) in decay_margins(gi, &lay)? {
            if margin > 0 {
                return Ok(Some(format!(
                    "decay margin for derivative ({di},{dj}) is {margin} > 0"
                )));
            }
        }
        // Sampled glued magnitudes on the slot.
        let glued = s.glue.as_ref().map_err(Error::clone)?;
        let u2 = 2 * gi.params().u_len as i64;
        let n_d = u2 + 8;
        let bound = Dyadic::pow2(-u2);
        let quarter = lay.right.mul_pow2(-2);
        let probes = [&lay.center - &quarter.mul_pow2(-lay.lambda), lay.center.clone()];
        for t in &probes {
            let enc = glued.deriv_g_enclosure(0, 0, t, &Dyadic::zero(), n_d)?;
            let sup = enc.lo().abs().max(enc.hi().abs());
            if sup > bound {
                return Ok(Some(format!(
                    "glued magnitude {} above the doubly-small bound {}",
                    short(&sup),
                    short(&bound)
                )));
            }
        }
        Ok(None)
    });
}

fn check_reduce(s: &Suite, rep: &mut VerdictReport) {
    let broken = matches!(s.opts.fault, Some(Fault::BrokenNameOracle));
    for (i, inst) in s.corpus.iter().enumerate() {
        let r = (|| -> Result<Option<String>> {
            let truth = self_truth(s, i)?;
            let glued = s.glue.as_ref().map_err(Error::clone)?;
            let name_of = |t: &Dyadic| -> Result<RealName> {
                if broken { Ok(broken_name()) } else { Ok(glued.h_name(t)) }
            };
            let got = glue::reduce(inst, &s.bump, 1, &name_of)?;
            if got == truth {
                Ok(None)
            } else {
                Ok(Some(format!("reduction answered {got}, brute force says {truth}")))
            }
        })();
        s.push(rep, Check::Reduce, label(i), r);
    }
}

fn self_truth(s: &Suite, i: usize) -> Result<bool> {
    s.truths[i].clone()
}

fn check_modulus(s: &Suite, rep: &mut VerdictReport) {
    let r = (|| -> Result<Option<String>> {
        let glued = s.glue.as_ref().map_err(Error::clone)?;
        let q_hat = s
            .base
            .iter()
            .filter_map(|b| b.as_ref().ok())
            .map(|gi| gi.params().q as u64)
            .max()
            .unwrap_or(0);
        let s1 = s.bump.s(1)?.max(0) as u64;
        let p = Polynomial::new(vec![q_hat + s1 + 1, 1]);
        let name_of = |t: &Dyadic| -> Result<RealName> { Ok(glued.h_name(t)) };
        let report = modulus_probe(&name_of, &p, &[8, 24], 8)?;
        if report.pass {
            Ok(None)
        } else {
            let (x, y, n, gap) = report.worst.expect("failing run records a pair");
            Ok(Some(format!("modulus violated at x = {x}, y = {y}, n = {n}, gap {gap}")))
        }
    })();
    s.push(rep, Check::Modulus, "family".to_string(), r);
}

fn check_finalvalue(s: &Suite, rep: &mut VerdictReport) {
    let broken = matches!(s.opts.fault, Some(Fault::BrokenNameOracle));
    let tallies: [(&str, Arc<dyn Fn(usize) -> bool + Send + Sync>); 4] = [
        ("empty", Arc::new(|_| false)),
        ("all", Arc::new(|_| true)),
        ("even", Arc::new(|n| n % 2 == 0)),
        ("prime", Arc::new(|n| [2usize, 3, 5, 7].contains(&n))),
    ];
    for (name, tally) in tallies {
        let r = (|| -> Result<Option<String>> {
            let reduction = crate::finalvalue::canonical_reduction(tally.clone());
            let fv = crate::finalvalue::build_final_value(&reduction, &s.bump, 1, 8)?;
            let series_name = if broken { broken_name() } else { fv.name() };
            for n in 0..8usize {
                let decoded = crate::finalvalue::decode_tally(&fv.params, &series_name, n)?;
                if decoded != tally(n) {
                    return Ok(Some(format!(
                        "bit {n} decodes to {decoded}, tally says {}",
                        tally(n)
                    )));
                }
            }
            Ok(None)
        })();
        s.push(rep, Check::FinalValue, format!("tally-{name}"), r);
    }
}

// ---------------------------------------------------------------------------
// The suite
// ---------------------------------------------------------------------------

pub fn run_suite(
    corpus: &[CountingInstance],
    checks: &[Check],
    opts: &SuiteOptions,
) -> Result<VerdictReport> {
    let mut list = checks.to_vec();
    list.sort();
    list.dedup();
    let mut rep = VerdictReport::default();
    if corpus.is_empty() || list.is_empty() {
        return Ok(rep);
    }
    let suite = Suite::build(corpus, opts, &list)?;
    for check in list {
        match check {
            Check::Oracle => check_oracle(&suite, &mut rep),
            Check::Grid => check_grid(&suite, &mut rep),
            Check::Final => check_final(&suite, &mut rep),
            Check::Boundary => check_boundary(&suite, &mut rep),
            Check::Bounds => check_bounds(&suite, &mut rep),
            Check::Residual => check_residual(&suite, &mut rep),
            Check::Integrate => check_integrate(&suite, &mut rep),
            Check::Seam => check_seam(&suite, &mut rep),
            Check::Decay => check_decay(&suite, &mut rep),
            Check::Reduce => check_reduce(&suite, &mut rep),
            Check::Modulus => check_modulus(&suite, &mut rep),
            Check::FinalValue => check_finalvalue(&suite, &mut rep),
        }
    }
    rep.normalize();
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> SuiteOptions {
        SuiteOptions::default()
    }

    #[test]
    fn corpus_shape() {
        let corpus = standard_corpus();
        assert!(corpus.len() >= 50, "need at least 50 instances, have {}", corpus.len());
        let mut trivial = 0;
        let mut unachievable = 0;
        for inst in &corpus {
            assert!(inst.n() <= 3);
            let lens = inst.block_lens();
            assert!(lens.iter().sum::<u32>() <= 10);
            for (b, l) in inst.blocks.iter().zip(&lens) {
                if b.threshold == 0 {
                    trivial += 1;
                }
                if b.threshold > 1u64 << l {
                    unachievable += 1;
                }
            }
        }
        assert!(trivial >= 3, "thresholds must include trivially satisfied cases");
        assert!(unachievable >= 3, "thresholds must include unachievable cases");
        assert!(corpus.iter().any(|i| i.n() == 3));
    }

    #[test]
    fn corpus_is_deterministic_and_distinct() {
        let a = standard_corpus();
        let b = standard_corpus();
        let sa: Vec<String> = a.iter().map(|i| i.serialize()).collect();
        let sb: Vec<String> = b.iter().map(|i| i.serialize()).collect();
        assert_eq!(sa, sb);
        let mut sorted = sa.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), sa.len(), "corpus instances must be distinct");
    }

    #[test]
    fn empty_corpus_and_empty_checks_pass() {
        let rep = run_suite(&[], &Check::ALL, &opts()).unwrap();
        assert!(rep.all_pass());
        assert!(rep.verdicts.is_empty());
        let corpus = standard_corpus();
        let rep = run_suite(&corpus[..2], &[], &opts()).unwrap();
        assert!(rep.verdicts.is_empty());
    }

    #[test]
    fn small_slice_passes_cheap_checks() {
        let corpus = standard_corpus();
        let checks = [Check::Oracle, Check::Grid, Check::Final, Check::Decay, Check::Reduce];
        let rep = run_suite(&corpus[..6], &checks, &opts()).unwrap();
        assert!(rep.all_pass(), "{}", rep.to_json_lines());
        assert_eq!(rep.verdicts.len(), 5 * 6);
    }

    #[test]
    fn reports_are_byte_identical() {
        let corpus = standard_corpus();
        let checks = [Check::Oracle, Check::Grid, Check::Modulus];
        let a = run_suite(&corpus[..4], &checks, &opts()).unwrap();
        let b = run_suite(&corpus[..4], &checks, &opts()).unwrap();
        assert_eq!(a.to_json_lines(), b.to_json_lines());
        assert!(a.to_json_lines().lines().count() == 4 * 2 + 1);
    }

    #[test]
    fn check_names_round_trip() {
        for c in Check::ALL {
            assert_eq!(Check::parse(c.name()), Some(c));
        }
        assert_eq!(Check::parse("bogus"), None);
    }

    #[test]
    fn rk4_reproduces_linear_dynamics_exactly() {
        // Constant right-hand side: the integrator is exact up to rounding.
        let g = |_: &Dyadic, _: &Dyadic| Ok(Dyadic::from_ratio_pow2(1, 2));
        let traj = integrate_rk4(
            &g,
            &Dyadic::zero(),
            &Dyadic::zero(),
            &Dyadic::from_ratio_pow2(1, 4),
            16,
            100,
        )
        .unwrap();
        assert_eq!(traj.len(), 17);
        assert_eq!(traj[16], Dyadic::from_ratio_pow2(1, 2));
    }

    #[test]
    fn rk4_order_ratio_is_fourth_order() {
        let ratio = rk4_order_ratio().unwrap();
        assert!(ratio >= Dyadic::from_int(8), "ratio {ratio}");
        assert!(ratio <= Dyadic::from_int(32), "ratio {ratio}");
    }

    #[test]
    fn rk4_reports_containment_exit() {
        let g = |_: &Dyadic, _: &Dyadic| Ok(Dyadic::from_int(2));
        let err = integrate_rk4(
            &g,
            &Dyadic::zero(),
            &Dyadic::zero(),
            &Dyadic::from_ratio_pow2(1, 2),
            8,
            100,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Containment(_)));
    }

    /// First forward-phase column where the output row's driver actually
    /// moves. The undo phase never revisits that driver, so suppressing
    /// this one step permanently shifts the recognized output.
    fn effective_output_step(gi: &GadgetInstance) -> (usize, u64) {
        let p = gi.norm().p;
        for tt in 0..gi.norm().forward_cols {
            if (gi.norm().eq.step)(p - 1, tt, gi.grid().cell(p - 1, tt)) != 0 {
                return (p - 1, tt);
            }
        }
        panic!("no effective step feeds the output row");
    }

    #[test]
    fn zero_step_fault_breaks_oracle_and_final() {
        let corpus = standard_corpus();
        let bump = Arc::new(BumpFunction::with_table(8).unwrap());
        let clean = build_with_fault(0, &corpus[0], &bump, 1, None).unwrap();
        let (row, col) = effective_output_step(&clean);
        let mut o = opts();
        // Solving bakes the suppressed step into the grid, so the grid
        // stays self-consistent; the output and the final value expose it.
        o.fault = Some(Fault::ZeroStep { instance: 0, row, col });
        let rep = run_suite(&corpus[..2], &[Check::Oracle, Check::Final], &o).unwrap();
        let target_failed = rep
            .verdicts
            .iter()
            .any(|v| v.instance == "i000" && v.status != Status::Pass);
        assert!(target_failed, "{}", rep.to_json_lines());
        let healthy = rep
            .verdicts
            .iter()
            .filter(|v| v.instance == "i001")
            .all(|v| v.status == Status::Pass);
        assert!(healthy, "fault must stay confined to its target instance");
    }

    #[test]
    fn perturbed_base_fault_breaks_packing_and_bounds() {
        let corpus = standard_corpus();
        let mut o = opts();
        o.fault = Some(Fault::PerturbB { instance: 0, be_offset: -640 });
        let rep = run_suite(&corpus[..2], &[Check::Grid, Check::Bounds], &o).unwrap();
        let grid_failed = rep
            .of(Check::Grid)
            .any(|v| v.instance == "i000" && v.status != Status::Pass);
        let bounds_failed = rep
            .of(Check::Bounds)
            .any(|v| v.instance == "i000" && v.status != Status::Pass);
        assert!(grid_failed, "{}", rep.to_json_lines());
        assert!(bounds_failed, "{}", rep.to_json_lines());
    }

    #[test]
    fn broken_name_oracle_fault_breaks_reduce() {
        let corpus = standard_corpus();
        let mut o = opts();
        o.fault = Some(Fault::BrokenNameOracle);
        let rep = run_suite(&corpus[..2], &[Check::Reduce], &o).unwrap();
        assert!(!rep.all_pass(), "{}", rep.to_json_lines());
        assert!(rep.verdicts.iter().any(|v| v.status == Status::Error));
    }

    #[test]
    fn json_lines_shape() {
        let corpus = standard_corpus();
        let rep = run_suite(&corpus[..1], &[Check::Oracle], &opts()).unwrap();
        let text = rep.to_json_lines();
        assert_eq!(
            text,
            "{\"check\":\"oracle\",\"instance\":\"i000\",\"status\":\"pass\",\
             \"witness\":null,\"millis\":0}\n"
        );
    }
}
