//! Difference equations on a grid: the discrete substrate.
//!
//! A system of height `P`, width `Q` and cell size `R` is a total step
//! function `(i, T, Y) -> {-1, 0, 1}` for `i < P`, `T < Q`. Its solution is
//! the unique grid with zero first row and column satisfying
//! `H(i+1, T+1) - H(i+1, T) = step(i, T, H(i, T))`, every cell staying inside
//! `[0, R)`. The bottom-right cell `H(P, Q)` is the output.
//!
//! This module also builds the gadget family attached to a counting
//! instance (one formula row plus one threshold row per block) and
//! normalizes it to the single-active-row form the continuous layer needs.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::One;

use crate::error::{Error, Result};
use crate::formula::{eval_formula, Assignment, CountingInstance};

/// Default cap on grid width (columns) for any equation we solve.
pub const DEFAULT_WIDTH_CAP: u64 = 1 << 20;

pub type StepFn = Arc<dyn Fn(usize, u64, i64) -> i8 + Send + Sync>;

#[derive(Clone)]
pub struct DifferenceEquation {
    pub height: usize,
    pub width: u64,
    pub cell_size: BigUint,
    pub step: StepFn,
}

impl DifferenceEquation {
    pub fn new(height: usize, width: u64, cell_size: BigUint, step: StepFn) -> Result<Self> {
        if height == 0 || width == 0 || cell_size.bits() == 0 {
            return Err(Error::Parameter("grid dimensions must be positive".into()));
        }
        Ok(DifferenceEquation { height, width, cell_size, step })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolutionGrid {
    /// `rows[i][T]`, `i` in `0..=P`, `T` in `0..=Q`.
    pub rows: Vec<Vec<i64>>,
}

impl SolutionGrid {
    pub fn cell(&self, i: usize, t: u64) -> i64 {
        self.rows[i][t as usize]
    }

    /// Output cell `H(P, Q)`.
    pub fn output(&self) -> i64 {
        *self.rows.last().unwrap().last().unwrap()
    }

    pub fn row_max(&self, i: usize) -> i64 {
        *self.rows[i].iter().max().unwrap()
    }
}

/// Fills the grid column by column. The first offending cell outside
/// `[0, R)` aborts with its coordinates.
pub fn solve(eq: &DifferenceEquation) -> Result<SolutionGrid> {
    let p = eq.height;
    let q = eq.width as usize;
    // Cells move by at most 1 per column, so they fit i64 whenever the width
    // does; the configured width cap keeps both small.
    let cap: Option<i64> = {
        let max = BigUint::from(i64::MAX as u64);
        if eq.cell_size > max { None } else {
            let mut v: i64 = 0;
            for d in eq.cell_size.to_u64_digits() {
                v = d as i64; // single digit since cell_size <= i64::MAX
            }
            Some(v)
        }
    };
    let mut rows = vec![vec![0i64; q + 1]; p + 1];
    for t in 0..q {
        for i in 0..p {
            let y = rows[i][t];
            let v = (eq.step)(i, t as u64, y);
            if !(-1..=1).contains(&v) {
                return Err(Error::Parameter(format!(
                    "step({i}, {t}, {y}) returned {v}, outside -1..=1"
                )));
            }
            let next = rows[i + 1][t] + v as i64;
            if next < 0 || cap.map_or(false, |c| next >= c) {
                return Err(Error::CellOverflow { row: i + 1, col: t as u64 + 1 });
            }
            rows[i + 1][t + 1] = next;
        }
    }
    Ok(SolutionGrid { rows })
}

/// Solves and reads the output cell.
pub fn recognize(eq: &DifferenceEquation) -> Result<i64> {
    Ok(solve(eq)?.output())
}

/// Bit `pos` of `t` (0 for positions past the word size).
pub fn bit(t: u64, pos: u32) -> u64 {
    if pos >= 64 { 0 } else { (t >> pos) & 1 }
}

/// The bits of `t` from position `j-1` down to `i`, most significant first;
/// empty for `i >= j`.
pub fn bit_range(t: u64, i: u32, j: u32) -> String {
    let mut out = String::new();
    let mut pos = j;
    while pos > i {
        pos -= 1;
        out.push(if bit(t, pos) == 1 { '1' } else { '0' });
    }
    out
}

/// How the gadget reads the spare low bit of a column index.
///
/// `Literal` leaves bit 0 unconstrained, which double-counts every
/// assignment (each appears once with bit 0 clear and once set).
/// `PinnedSpareBit` activates a row only in columns whose bits below the
/// block window are `10...0`, pinning the spare bit to zero; this is the
/// variant under which counts are exact and the per-row cell bound holds.
/// `Literal` stays available so the calibration test can demonstrate the
/// miscount.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BitLayout {
    Literal,
    PinnedSpareBit,
}

/// A gadget equation built from a counting instance, before normalization.
#[derive(Clone)]
pub struct RawGadget {
    pub eq: DifferenceEquation,
    /// Cumulative offsets `s_0..s_n`.
    pub s: Vec<u32>,
    /// Number of quantifier blocks.
    pub n: usize,
    pub inst: Arc<CountingInstance>,
}

/// Builds the gadget: height `n + 1`, width `2^{s_n} + 1`, cell size
/// `2^{|u|}`. Row 0 evaluates the formula on the variable bits of the
/// column index with a sign taken from bit `s_1`; row `i >= 1` thresholds
/// the cell below against `m_i` in columns whose low bits read `10...0`,
/// with a sign from bit `s_{i+1}` (read as 0 above the top).
pub fn build_gadget(inst: &CountingInstance, layout: BitLayout) -> Result<RawGadget> {
    build_gadget_capped(inst, layout, DEFAULT_WIDTH_CAP)
}

pub fn build_gadget_capped(
    inst: &CountingInstance,
    layout: BitLayout,
    width_cap: u64,
) -> Result<RawGadget> {
    let n = inst.n();
    let s = inst.s_values();
    let s_n = *s.last().unwrap();
    if s_n >= 63 || (1u64 << s_n) + 1 > width_cap {
        return Err(Error::Capacity {
            what: "gadget width",
            limit: width_cap,
            got: if s_n >= 63 { u64::MAX } else { (1u64 << s_n) + 1 },
        });
    }
    let width = (1u64 << s_n) + 1;
    let cell_size = BigUint::one() << inst.padded_length();
    let inst = Arc::new(inst.clone());
    let step = gadget_step(inst.clone(), s.clone(), layout);
    let eq = DifferenceEquation::new(n + 1, width, cell_size, step)?;
    Ok(RawGadget { eq, s, n, inst })
}

fn gadget_step(inst: Arc<CountingInstance>, s: Vec<u32>, layout: BitLayout) -> StepFn {
    let thresholds: Vec<u64> = inst.blocks.iter().map(|b| b.threshold).collect();
    let n = inst.n();
    Arc::new(move |i, t, y| {
        if i == 0 {
            let active = match layout {
                BitLayout::PinnedSpareBit => bit(t, 0) == 0,
                BitLayout::Literal => true,
            };
            if !active {
                return 0;
            }
            let mut a = Assignment::new();
            for (bi, block) in inst.blocks.iter().enumerate() {
                for (j, v) in block.vars.iter().enumerate() {
                    a.insert(v.clone(), bit(t, s[bi] + 1 + j as u32) == 1);
                }
            }
            let val = eval_formula(&inst.formula, &a).expect("blocks cover the formula") as i8;
            if bit(t, s[1]) == 1 { -val } else { val }
        } else {
            // Row i thresholds the count below it; active only where the
            // bits below position s_i spell the read pattern.
            let window = s[i] + 1;
            let read = match layout {
                BitLayout::PinnedSpareBit => t % (1u64 << window) == 1u64 << s[i],
                BitLayout::Literal => (t >> 1) % (1u64 << (window - 1)) == 1u64 << (s[i] - 1),
            };
            if !read {
                return 0;
            }
            let count_ok = y >= 0 && (y as u64) >= thresholds[i - 1];
            let val = (thresholds[i - 1] == 0 || count_ok) as i8;
            let sign_pos = if i < n { s[i + 1] } else { s[n] + 1 };
            if bit(t, sign_pos) == 1 { -val } else { val }
        }
    })
}

/// Gadget in single-active-row form with a total active-row map.
#[derive(Clone)]
pub struct NormalizedGadget {
    pub eq: DifferenceEquation,
    /// Width exponent: the equation has exactly `2^q` columns.
    pub q: u32,
    /// Height (index of the output row).
    pub p: usize,
    /// Active row per column, length `2^q + 1`.
    pub j_map: Arc<Vec<u8>>,
    /// Micro-columns per original macro column.
    pub macro_stride: usize,
    /// Number of forward-phase columns (`Q * P`).
    pub forward_cols: u64,
}

impl NormalizedGadget {
    pub fn j_u(&self, t: u64) -> usize {
        self.j_map[t as usize] as usize
    }
}

/// Serializes each macro column into `P` micro-columns (top row first, so
/// every driver still reads the value from before the macro step), then
/// appends a mirrored phase undoing every update except those to the top
/// row, and pads with inert columns to a power-of-two width. The solution
/// projects back onto macro columns, ends with all rows but the top at
/// zero, and the top row carries the output across the whole tail.
pub fn normalize(raw: &RawGadget) -> Result<NormalizedGadget> {
    normalize_capped(raw, DEFAULT_WIDTH_CAP)
}

pub fn normalize_capped(raw: &RawGadget, width_cap: u64) -> Result<NormalizedGadget> {
    let p = raw.eq.height as u64;
    let q_orig = raw.eq.width;
    if p < 2 {
        return Err(Error::Parameter("normalization expects height at least 2".into()));
    }
    let used = q_orig * (2 * p - 1);
    let q_exp = 64 - (used - 1).leading_zeros();
    let width = 1u64 << q_exp;
    if width > width_cap {
        return Err(Error::Capacity { what: "normalized width", limit: width_cap, got: width });
    }
    let forward_cols = q_orig * p;
    let undo_cols = q_orig * (p - 1);

    let mut j_map = Vec::with_capacity(width as usize + 1);
    for tau in 0..=width {
        let j = if tau < forward_cols {
            (p - 1 - tau % p) as u8
        } else if tau < forward_cols + undo_cols {
            ((tau - forward_cols) % (p - 1)) as u8
        } else {
            0
        };
        j_map.push(j);
    }
    let j_map = Arc::new(j_map);

    let raw_step = raw.eq.step.clone();
    let jm = j_map.clone();
    let step: StepFn = Arc::new(move |i, tau, y| {
        if i != jm[tau as usize] as usize {
            return 0;
        }
        if tau < forward_cols {
            let t = tau / p;
            raw_step(i, t, y)
        } else if tau < forward_cols + undo_cols {
            let omega = tau - forward_cols;
            let t = q_orig - 1 - omega / (p - 1);
            -raw_step(i, t, y)
        } else {
            0
        }
    });

    let eq = DifferenceEquation::new(
        raw.eq.height,
        width,
        raw.eq.cell_size.clone(),
        step,
    )?;
    Ok(NormalizedGadget {
        eq,
        q: q_exp,
        p: p as usize,
        j_map,
        macro_stride: p as usize,
        forward_cols,
    })
}
