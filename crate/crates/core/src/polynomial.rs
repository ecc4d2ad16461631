//! Polynomials with non-negative integer coefficients.
//!
//! Used for all size parameters (widths, scale exponents, precision
//! schedules). Non-negative coefficients make every polynomial nondecreasing
//! on non-negative arguments, which the parameter derivations rely on.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Polynomial {
    /// Coefficients, ascending degree. Canonical: no trailing zeros.
    coeffs: Vec<u64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<u64>) -> Self {
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: vec![] }
    }

    pub fn constant(c: u64) -> Self {
        Polynomial::new(vec![c])
    }

    /// `c * x^d`.
    pub fn monomial(c: u64, d: usize) -> Self {
        let mut coeffs = vec![0; d + 1];
        coeffs[d] = c;
        Polynomial::new(coeffs)
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: u64) -> Result<u64> {
        let mut acc: u128 = 0;
        for &c in self.coeffs.iter().rev() {
            acc = acc
                .checked_mul(x as u128)
                .and_then(|v| v.checked_add(c as u128))
                .ok_or(Error::Capacity { what: "polynomial value", limit: u64::MAX, got: x })?;
        }
        u64::try_from(acc)
            .map_err(|_| Error::Capacity { what: "polynomial value", limit: u64::MAX, got: x })
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut out = vec![0u64; n];
        for (i, slot) in out.iter_mut().enumerate() {
            let a = self.coeffs.get(i).copied().unwrap_or(0);
            let b = rhs.coeffs.get(i).copied().unwrap_or(0);
            *slot = a.checked_add(b).expect("polynomial coefficient overflow");
        }
        Polynomial::new(out)
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        if self.coeffs.is_empty() || rhs.coeffs.is_empty() {
            return Polynomial::zero();
        }
        let mut out = vec![0u64; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                let prod = a.checked_mul(b).expect("polynomial coefficient overflow");
                out[i + j] = out[i + j].checked_add(prod).expect("polynomial coefficient overflow");
            }
        }
        Polynomial::new(out)
    }

    pub fn scale(&self, c: u64) -> Self {
        Polynomial::new(
            self.coeffs
                .iter()
                .map(|&a| a.checked_mul(c).expect("polynomial coefficient overflow"))
                .collect(),
        )
    }

    /// `self(rhs(x))`; composition stays inside the class.
    pub fn compose(&self, rhs: &Self) -> Self {
        let mut acc = Polynomial::zero();
        for &c in self.coeffs.iter().rev() {
            acc = acc.mul(rhs).add(&Polynomial::constant(c));
        }
        acc
    }

    /// `self(x + 1)`, used to shift table-majorant arguments.
    pub fn shift_one(&self) -> Self {
        self.compose(&Polynomial::new(vec![1, 1]))
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{c}")?,
                1 if c == 1 => write!(f, "x")?,
                1 => write!(f, "{c}x")?,
                _ if c == 1 => write!(f, "x^{i}")?,
                _ => write!(f, "{c}x^{i}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_and_compose() {
        let p = Polynomial::new(vec![2, 0, 1]); // 2 + x^2
        assert_eq!(p.eval(3).unwrap(), 11);
        let q = Polynomial::new(vec![1, 1]); // 1 + x
        let r = p.compose(&q); // 2 + (1+x)^2 = 3 + 2x + x^2
        assert_eq!(r.coeffs(), &[3, 2, 1]);
        assert_eq!(p.shift_one().coeffs(), &[3, 2, 1]);
    }

    #[test]
    fn arithmetic() {
        let p = Polynomial::new(vec![1, 2]);
        let q = Polynomial::new(vec![0, 1]);
        assert_eq!(p.add(&q).coeffs(), &[1, 3]);
        assert_eq!(p.mul(&q).coeffs(), &[0, 1, 2]);
        assert_eq!(p.scale(3).coeffs(), &[3, 6]);
    }

    #[test]
    fn canonical_trailing_zeros() {
        let p = Polynomial::new(vec![1, 0, 0]);
        assert_eq!(p.coeffs(), &[1]);
        assert_eq!(p.degree(), 0);
    }

    #[test]
    fn display() {
        use alloc::string::ToString;
        assert_eq!(Polynomial::new(vec![3, 2, 1]).to_string(), "3 + 2x + x^2");
        assert_eq!(Polynomial::zero().to_string(), "0");
    }
}
