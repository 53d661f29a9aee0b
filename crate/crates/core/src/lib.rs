//! Exact symbolic-numeric verification of constructions on semialgebraic
//! sets and Nash manifolds with corners.
//!
//! Every scalar function is a [`symexpr::SymFn`] with rational coefficients.
//! Claims about sets are checked on seeded sample grids; claims that are
//! algebraic identities are checked exactly.

pub mod bounds;
pub mod calculus;
pub mod corners;
pub mod counterexamples;
pub mod error;
pub mod homotopy;
pub mod par;
pub mod report;
pub mod scenario;
pub mod semialg;
pub mod symexpr;
pub mod topology;

pub use error::{Error, Result};
pub use symexpr::{MultiIndex, Rational, SymFn, SymMap};
