//! Counting-quantified Boolean formulas: parsing, canonical serialization,
//! and brute-force evaluation of the nested counting quantifiers.
//!
//! An instance is a propositional formula together with an ordered list of
//! quantifier blocks `X_1..X_n` and thresholds `m_1..m_n`. Level `i` of the
//! evaluation asks whether at least `m_i` assignments to block `i` satisfy
//! level `i-1`. The instance's truth value is level `n` with no free
//! variables left.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::Zero;

use crate::error::{Error, Result};

/// Largest number of variables a single enumeration is allowed to sweep.
pub const DEFAULT_ENUM_CAP: u32 = 24;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PropFormula {
    Var(String),
    Not(Box<PropFormula>),
    And(Box<PropFormula>, Box<PropFormula>),
    Or(Box<PropFormula>, Box<PropFormula>),
}

pub type Assignment = BTreeMap<String, bool>;

impl PropFormula {
    fn precedence(&self) -> u8 {
        match self {
            PropFormula::Or(..) => 0,
            PropFormula::And(..) => 1,
            PropFormula::Not(..) => 2,
            PropFormula::Var(..) => 3,
        }
    }

    fn write(&self, out: &mut String, min_prec: u8) {
        let prec = self.precedence();
        if prec < min_prec {
            out.push('(');
            self.write(out, 0);
            out.push(')');
            return;
        }
        match self {
            PropFormula::Var(name) => out.push_str(name),
            PropFormula::Not(c) => {
                out.push('!');
                c.write(out, 2);
            }
            PropFormula::And(l, r) => {
                l.write(out, 1);
                out.push_str(" & ");
                r.write(out, 2);
            }
            PropFormula::Or(l, r) => {
                l.write(out, 0);
                out.push_str(" | ");
                r.write(out, 1);
            }
        }
    }

    /// Canonical text form with minimal parentheses.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        self.write(&mut out, 0);
        out
    }

    /// Collects every variable occurring in the formula.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut acc = BTreeSet::new();
        self.collect_vars(&mut acc);
        acc
    }

    fn collect_vars(&self, acc: &mut BTreeSet<String>) {
        match self {
            PropFormula::Var(name) => {
                acc.insert(name.clone());
            }
            PropFormula::Not(c) => c.collect_vars(acc),
            PropFormula::And(l, r) | PropFormula::Or(l, r) => {
                l.collect_vars(acc);
                r.collect_vars(acc);
            }
        }
    }
}

/// Standard Boolean semantics over a total assignment.
pub fn eval_formula(phi: &PropFormula, a: &Assignment) -> Result<bool> {
    match phi {
        PropFormula::Var(name) => a
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnboundVariable(name.clone())),
        PropFormula::Not(c) => Ok(!eval_formula(c, a)?),
        PropFormula::And(l, r) => Ok(eval_formula(l, a)? && eval_formula(r, a)?),
        PropFormula::Or(l, r) => Ok(eval_formula(l, a)? || eval_formula(r, a)?),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub vars: Vec<String>,
    pub threshold: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountingInstance {
    pub blocks: Vec<Block>,
    pub formula: PropFormula,
}

impl CountingInstance {
    pub fn new(blocks: Vec<Block>, formula: PropFormula) -> Result<Self> {
        let inst = CountingInstance { blocks, formula };
        inst.validate()?;
        Ok(inst)
    }

    fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() {
            return Err(Error::Parameter("instance needs at least one block".into()));
        }
        let mut seen = BTreeSet::new();
        for block in &self.blocks {
            if block.vars.is_empty() {
                return Err(Error::Parameter("every block needs at least one variable".into()));
            }
            for v in &block.vars {
                if !seen.insert(v.clone()) {
                    return Err(Error::DuplicateVariable(v.clone()));
                }
            }
        }
        for v in self.formula.variables() {
            if !seen.contains(&v) {
                return Err(Error::UnboundVariable(v));
            }
        }
        Ok(())
    }

    /// Number of quantifier blocks.
    pub fn n(&self) -> usize {
        self.blocks.len()
    }

    /// Block sizes `l_1..l_n` in order.
    pub fn block_lens(&self) -> Vec<u32> {
        self.blocks.iter().map(|b| b.vars.len() as u32).collect()
    }

    /// Cumulative bit offsets `s_0..s_n` with `s_0 = 0` and
    /// `s_i = sum of (l_j + 1) for j <= i`.
    pub fn s_values(&self) -> Vec<u32> {
        let mut s = Vec::with_capacity(self.n() + 1);
        s.push(0u32);
        for b in &self.blocks {
            s.push(s.last().unwrap() + b.vars.len() as u32 + 1);
        }
        s
    }

    /// Canonical serialization; `parse_instance` inverts it byte for byte.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("blocks {}\n", self.n()));
        for (i, b) in self.blocks.iter().enumerate() {
            out.push_str(&format!("block {} vars", i + 1));
            for v in &b.vars {
                out.push(' ');
                out.push_str(v);
            }
            out.push_str(&format!(" threshold {}\n", b.threshold));
        }
        out.push_str(&format!("formula {}\n", self.formula.to_text()));
        out
    }

    /// Length of the padded encoding: `2^n` pad symbols plus the byte length
    /// of the canonical serialization. This is the `|u|` every parameter
    /// polynomial is evaluated at.
    pub fn padded_length(&self) -> u64 {
        (1u64 << self.n() as u32) + self.serialize().len() as u64
    }

    /// Bit length of the padded encoding: `2^n` pad bits plus eight bits per
    /// payload byte. Interval layout quantities use this length so that the
    /// payload value always fits below it.
    pub fn padded_bit_length(&self) -> u64 {
        (1u64 << self.n() as u32) + 8 * self.serialize().len() as u64
    }

    /// The payload read as a big-endian binary integer (pad bits are zero and
    /// contribute nothing).
    pub fn payload_value(&self) -> BigUint {
        let mut v = BigUint::zero();
        for byte in self.serialize().bytes() {
            v = (v << 8u32) + BigUint::from(byte);
        }
        v
    }
}

/// Number of completions of `fixed` over `block` satisfying `phi`.
pub fn count_models(phi: &PropFormula, block: &[String], fixed: &Assignment) -> Result<u64> {
    count_models_capped(phi, block, fixed, DEFAULT_ENUM_CAP)
}

pub fn count_models_capped(
    phi: &PropFormula,
    block: &[String],
    fixed: &Assignment,
    cap: u32,
) -> Result<u64> {
    if block.len() as u32 > cap {
        return Err(Error::Capacity {
            what: "enumeration block size",
            limit: cap as u64,
            got: block.len() as u64,
        });
    }
    let mut scratch = fixed.clone();
    let mut count = 0u64;
    for mask in 0u64..(1u64 << block.len() as u32) {
        for (j, v) in block.iter().enumerate() {
            scratch.insert(v.clone(), (mask >> j) & 1 == 1);
        }
        if eval_formula(phi, &scratch)? {
            count += 1;
        }
    }
    Ok(count)
}

/// Level-`i` truth value: level 0 is plain formula evaluation, level `i`
/// thresholds the count of satisfying block-`i` assignments of level `i-1`.
/// `outer` must assign every variable of blocks `i+1..n`.
pub fn eval_phi_i(inst: &CountingInstance, i: usize, outer: &Assignment) -> Result<bool> {
    eval_phi_i_capped(inst, i, outer, DEFAULT_ENUM_CAP)
}

pub fn eval_phi_i_capped(
    inst: &CountingInstance,
    i: usize,
    outer: &Assignment,
    cap: u32,
) -> Result<bool> {
    if i > inst.n() {
        return Err(Error::Parameter(format!(
            "level {} exceeds block count {}",
            i,
            inst.n()
        )));
    }
    let mut scratch = outer.clone();
    eval_phi_rec(inst, i, &mut scratch, cap)
}

fn eval_phi_rec(
    inst: &CountingInstance,
    i: usize,
    a: &mut Assignment,
    cap: u32,
) -> Result<bool> {
    if i == 0 {
        return eval_formula(&inst.formula, a);
    }
    let block = &inst.blocks[i - 1];
    if block.vars.len() as u32 > cap {
        return Err(Error::Capacity {
            what: "enumeration block size",
            limit: cap as u64,
            got: block.vars.len() as u64,
        });
    }
    let mut count = 0u64;
    for mask in 0u64..(1u64 << block.vars.len() as u32) {
        for (j, v) in block.vars.iter().enumerate() {
            a.insert(v.clone(), (mask >> j) & 1 == 1);
        }
        if eval_phi_rec(inst, i - 1, a, cap)? {
            count += 1;
        }
    }
    for v in &block.vars {
        a.remove(v);
    }
    Ok(count >= block.threshold)
}

/// The instance's overall truth value.
pub fn instance_truth(inst: &CountingInstance) -> Result<bool> {
    eval_phi_i(inst, inst.n(), &Assignment::new())
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

struct ExprToken {
    kind: TokKind,
    col: usize,
}

enum TokKind {
    Ident(String),
    Bang,
    Amp,
    Pipe,
    LParen,
    RParen,
}

fn lex_expr(src: &str, line: usize, col_base: usize) -> Result<Vec<ExprToken>> {
    let mut toks = Vec::new();
    let mut chars = src.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        let col = col_base + pos;
        match c {
            ' ' | '\t' => {
                chars.next();
            }
            '!' => {
                chars.next();
                toks.push(ExprToken { kind: TokKind::Bang, col });
            }
            '&' => {
                chars.next();
                toks.push(ExprToken { kind: TokKind::Amp, col });
            }
            '|' => {
                chars.next();
                toks.push(ExprToken { kind: TokKind::Pipe, col });
            }
            '(' => {
                chars.next();
                toks.push(ExprToken { kind: TokKind::LParen, col });
            }
            ')' => {
                chars.next();
                toks.push(ExprToken { kind: TokKind::RParen, col });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut name = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        name.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                toks.push(ExprToken { kind: TokKind::Ident(name), col });
            }
            other => {
                return Err(Error::Parse {
                    line,
                    col,
                    msg: format!("unexpected character '{other}' in formula"),
                })
            }
        }
    }
    Ok(toks)
}

struct ExprParser {
    toks: Vec<ExprToken>,
    pos: usize,
    line: usize,
    end_col: usize,
}

impl ExprParser {
    fn peek(&self) -> Option<&TokKind> {
        self.toks.get(self.pos).map(|t| &t.kind)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.col).unwrap_or(self.end_col)
    }

    fn err(&self, msg: &str) -> Error {
        Error::Parse { line: self.line, col: self.here(), msg: msg.to_string() }
    }

    fn parse_or(&mut self) -> Result<PropFormula> {
        let mut node = self.parse_and()?;
        while matches!(self.peek(), Some(TokKind::Pipe)) {
            self.pos += 1;
            let rhs = self.parse_and()?;
            node = PropFormula::Or(Box::new(node), Box::new(rhs));
        }
        Ok(node)
    }

    fn parse_and(&mut self) -> Result<PropFormula> {
        let mut node = self.parse_unary()?;
        while matches!(self.peek(), Some(TokKind::Amp)) {
            self.pos += 1;
            let rhs = self.parse_unary()?;
            node = PropFormula::And(Box::new(node), Box::new(rhs));
        }
        Ok(node)
    }

    fn parse_unary(&mut self) -> Result<PropFormula> {
        match self.peek() {
            Some(TokKind::Bang) => {
                self.pos += 1;
                Ok(PropFormula::Not(Box::new(self.parse_unary()?)))
            }
            Some(TokKind::LParen) => {
                self.pos += 1;
                let inner = self.parse_or()?;
                match self.peek() {
                    Some(TokKind::RParen) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    _ => Err(self.err("expected ')'")),
                }
            }
            Some(TokKind::Ident(_)) => {
                let TokKind::Ident(name) = &self.toks[self.pos].kind else { unreachable!() };
                let name = name.clone();
                self.pos += 1;
                Ok(PropFormula::Var(name))
            }
            _ => Err(self.err("expected a variable, '!' or '('")),
        }
    }
}

/// Parses one formula expression; `line` and `col_base` locate `src` inside
/// the instance file for error reporting.
pub fn parse_expr(src: &str, line: usize, col_base: usize) -> Result<PropFormula> {
    let toks = lex_expr(src, line, col_base)?;
    let end_col = col_base + src.len();
    let mut p = ExprParser { toks, pos: 0, line, end_col };
    let node = p.parse_or()?;
    if p.pos < p.toks.len() {
        return Err(p.err("trailing input after formula"));
    }
    Ok(node)
}

fn ident_ok(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parses the line-oriented instance format:
/// `blocks <n>`, then n lines `block <i> vars <id>+ threshold <m>`,
/// then `formula <expr>`.
pub fn parse_instance(text: &str) -> Result<CountingInstance> {
    let mut lines = Vec::new();
    for (idx, raw) in text.split('\n').enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        lines.push((idx + 1, line));
    }
    // A trailing newline produces one empty tail entry; drop empty tails.
    while matches!(lines.last(), Some((_, l)) if l.trim().is_empty()) {
        lines.pop();
    }
    let mut it = lines.into_iter();

    let (lno, header) = it
        .next()
        .ok_or(Error::Parse { line: 1, col: 1, msg: "empty instance".into() })?;
    let n: usize = match header.strip_prefix("blocks ") {
        Some(rest) => rest.trim().parse().map_err(|_| Error::Parse {
            line: lno,
            col: 8,
            msg: format!("invalid block count '{}'", rest.trim()),
        })?,
        None => {
            return Err(Error::Parse {
                line: lno,
                col: 1,
                msg: "expected 'blocks <n>'".into(),
            })
        }
    };
    if n == 0 {
        return Err(Error::Parse { line: lno, col: 8, msg: "need at least one block".into() });
    }

    let mut blocks = Vec::with_capacity(n);
    for want in 1..=n {
        let (lno, line) = it.next().ok_or(Error::Parse {
            line: want + 1,
            col: 1,
            msg: format!("missing line for block {want}"),
        })?;
        let words: Vec<&str> = line.split_whitespace().collect();
        let fail = |col: usize, msg: String| Error::Parse { line: lno, col, msg };
        if words.len() < 5 || words[0] != "block" {
            return Err(fail(1, format!("expected 'block {want} vars <id>+ threshold <m>'")));
        }
        let got: usize = words[1]
            .parse()
            .map_err(|_| fail(7, format!("invalid block index '{}'", words[1])))?;
        if got != want {
            return Err(fail(7, format!("expected block {want}, found block {got}")));
        }
        if words[2] != "vars" {
            return Err(fail(1, "expected 'vars' after the block index".into()));
        }
        let thr_at = words
            .iter()
            .position(|w| *w == "threshold")
            .ok_or_else(|| fail(1, "missing 'threshold'".into()))?;
        if thr_at + 2 != words.len() {
            return Err(fail(1, "expected exactly one value after 'threshold'".into()));
        }
        let vars: Vec<String> = words[3..thr_at].iter().map(|w| w.to_string()).collect();
        if vars.is_empty() {
            return Err(fail(1, format!("block {want} lists no variables")));
        }
        for v in &vars {
            if !ident_ok(v) {
                return Err(fail(1, format!("invalid identifier '{v}'")));
            }
        }
        let threshold: u64 = words[thr_at + 1].parse().map_err(|_| {
            fail(1, format!("threshold '{}' is not a non-negative integer", words[thr_at + 1]))
        })?;
        blocks.push(Block { vars, threshold });
    }

    let (lno, line) = it.next().ok_or(Error::Parse {
        line: n + 2,
        col: 1,
        msg: "missing 'formula <expr>' line".into(),
    })?;
    let expr_src = line.strip_prefix("formula ").ok_or(Error::Parse {
        line: lno,
        col: 1,
        msg: "expected 'formula <expr>'".into(),
    })?;
    let formula = parse_expr(expr_src, lno, 9)?;

    if let Some((lno, line)) = it.next() {
        return Err(Error::Parse {
            line: lno,
            col: 1,
            msg: format!("unexpected extra line '{line}'"),
        });
    }

    CountingInstance::new(blocks, formula)
}
