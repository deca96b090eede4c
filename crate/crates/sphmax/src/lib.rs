//! Numerical tools for multilinear spherical means and maximal functions.
//!
//! The crate evaluates the m-linear spherical mean
//!
//! ```text
//! A_t(f_1, ..., f_m)(x) = mean over S^{mn-1} of  prod_j f_j(x - t y^j)
//! ```
//!
//! and the associated maximal operators, checks the slicing decomposition of
//! sphere integrals into ball times dilated-sphere integrals, classifies
//! exponent tuples `(1/p_1, ..., 1/p_m)` against the boundedness polytope of
//! the operator with exact rational arithmetic, and reproduces the power-law
//! decay of the standard counterexample families at desk scale.
//!
//! Modules:
//!
//! * [`quadrature`] - Monte Carlo and tensor product rules on spheres and
//!   balls, plain and sliced integration;
//! * [`functions`] - analytic test function families, lattice fields, and
//!   Lp / weak-Lp norm estimation;
//! * [`operators`] - spherical means, maximal functions, Hardy-Littlewood
//!   and linear spherical maximal operators, pointwise domination ratios;
//! * [`region`] - exact classification of exponent tuples and polytope
//!   vertex enumeration;
//! * [`experiments`] - scaling-law scans, monotonicity checks, and survey
//!   reports with CSV/JSON serialization.
//!
//! All Monte Carlo work is reproducible: one 64-bit seed determines every
//! node through counter-based substreams, independently of thread count.

// Validation guards are written `!(x > 0.0)` on purpose: unlike `x <= 0.0`
// the negated form also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod functions;
mod gauss;
pub mod operators;
pub mod quadrature;
pub mod region;
pub mod rng;

pub use error::{Error, Result};
