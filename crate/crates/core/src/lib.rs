//! Rational points on missing-digit Cantor sets.
//!
//! The crate enumerates the reduced fractions `p/q` lying on the middle-thirds
//! Cantor set (and, where noted, on general missing-digit sets), keeps them in a
//! resumable on-disk store, counts them over windows of denominators, and
//! compares the counts with two independence models:
//!
//! - [`digitsys`]: base-`b` expansions, their values and membership tests.
//! - [`numtheory`]: factorization, multiplicative order, Moebius-type word counts.
//! - [`enumerator`]: Algorithm 1 and the independent word oracle.
//! - [`store`]: JSON-lines record files with merge and resume.
//! - [`counting`]: window counts, the sets `L(l, T)` and the record scan of `l/log3 q`.
//! - [`models`]: the `F(T)` and `M(T)` predictors, heuristic sums and Monte-Carlo checks.
//! - [`symmetry`]: the `w w'` and `w w' 0`/`w w' 2` word families and their census.

pub mod counting;
pub mod digitsys;
pub mod enumerator;
pub mod error;
pub mod manifest;
pub mod models;
pub mod numtheory;
pub mod store;
pub mod symmetry;
pub mod tables;

pub use digitsys::{DigitSystem, Expansion, PeriodicExpansion};
pub use enumerator::{Budget, CantorRational, DenominatorRecord, Method, MethodChoice};
pub use error::{Error, Result};
