//! Exact-arithmetic core for building and checking smooth ODE gadgets out of
//! counting-quantified Boolean formulas.
//!
//! The pipeline, bottom to top:
//!
//! - [`dyadic`]: arbitrary-precision dyadic numbers (`mantissa * 2^exponent`)
//!   and outward-rounded interval arithmetic on them. All verified quantities
//!   in this crate are dyadics or dyadic intervals; floats never appear.
//! - [`exp`]: rigorous enclosures of `e^x` (Taylor series with explicit
//!   remainder plus argument reduction), the only transcendental needed.
//! - [`name`]: computable real numbers presented as precision-indexed query
//!   functions ("names"), with contract checking.
//! - [`formula`]: counting-quantified Boolean formulas — parsing, canonical
//!   serialization, evaluation, model counting, nested counting quantifiers.
//! - [`diffeq`]: first-order difference equations on integer grids, the
//!   compilation of a counting instance into one, and the normalization pass
//!   (serialized rows, mirrored cleanup, power-of-two width).
//! - [`bump`]: the fixed smooth step function on `[0,1]` with all derivatives
//!   vanishing at the ends, its symbolic derivatives, and certified
//!   sup-bounds obtained by branch-and-bound interval evaluation.
//! - [`gadget`]: lifts a normalized difference equation to a smooth
//!   right-hand side `g_u` and solution `h_u` with certified derivative
//!   bounds, exact grid identities, and exact final value.
//! - [`glue`]: glues all per-instance gadgets into one pair `(g, h)` on
//!   `[0,1] x [-1,1]`, each instance owning a dyadic subinterval, and the
//!   decision reduction that reads an instance's truth value off `h`.
//! - [`finalvalue`]: encodes an infinite 0/1 sequence into the number `h(1)`
//!   as a rapidly converging dyadic series, with exact decoding.
//! - [`verify`]: the self-check suite (oracle equivalence, grid identities,
//!   residuals, smoothness, seams, decay, reduction, modulus, final value),
//!   a dyadic RK4 integrator used as an independent ODE oracle, fault
//!   injection hooks, and the standard instance corpus.
//!
//! The crate is `no_std` (with `alloc`); IO, CLI, and file formats live in
//! the companion `odegadget` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod bump;
pub mod diffeq;
pub mod dyadic;
pub mod error;
pub mod exp;
pub mod finalvalue;
pub mod formula;
pub mod gadget;
pub mod glue;
pub mod name;
pub mod polynomial;
pub mod verify;

pub use error::{Error, Result};
