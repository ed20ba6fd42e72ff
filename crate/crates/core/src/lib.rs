//! Exact certificates for the approximate degree of the Collision and
//! Element Distinctness functions.
//!
//! Everything that feeds a verification verdict is computed in
//! arbitrary-precision rational arithmetic: dual witnesses, correlations,
//! pure-high-degree moment sums, LP optima. Floating point appears only in
//! clearly labeled report summaries.
//!
//! The crate is organized around the objects it manipulates:
//!
//! * [`numerics`] — rationals, big-integer combinatorics, polynomial values;
//! * [`domain`] — functions `[N] -> [R]`, their bit encoding, orbit classes,
//!   and exhaustive enumeration at desk scale;
//! * [`univariate`] — the two univariate dual building blocks (an OR-style
//!   dual on `{1..L}` and a MAJ-style dual on `{0..N}`);
//! * [`witness`] — class-indexed dual witnesses over the hypercube and the
//!   certificate verifier;
//! * [`collision`] — the weak and main Collision dual witnesses;
//! * [`ed`] — the Collision-to-Element-Distinctness dual reduction;
//! * [`symmetrize`] — constructive verification of the trivariate
//!   symmetrization identity;
//! * [`upper`] — explicit approximating (upper-bound) polynomials;
//! * [`lp`] — an exact rational simplex oracle for tiny instances.

pub mod collision;
pub mod domain;
pub mod ed;
pub mod error;
pub mod lp;
pub mod numerics;
pub mod symmetrize;
pub mod univariate;
pub mod upper;
pub mod witness;

pub use error::{Error, Result};
pub use numerics::Rat;

/// Default cap on exhaustive input enumeration: shapes with more than
/// 2^24 tables are rejected unless the caller raises the budget.
pub const DEFAULT_ENUM_BUDGET: u64 = 1 << 24;

/// Default cap on LP instance size, in hypercube dimensions.
pub const DEFAULT_LP_CAP_BITS: u32 = 14;
