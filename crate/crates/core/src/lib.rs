//! Finite models of R-trees and the Lipschitz-free spaces over their subsets.
//!
//! The crate is organised bottom-up:
//!
//! * [`metric`] validates finite pointed metric spaces and tests the
//!   four-point condition.
//! * [`tree`] realizes the minimal tree spanned by a tree metric and provides
//!   the order, projection and length-measure toolkit on it.
//! * [`free_space`] computes norms in the free space through edge
//!   coordinates, with an independent transport solver to check them.
//! * [`rearrange`] moves the subtrees hanging off a segment so that the
//!   branching points concentrate on a finite grid, with verifiers for every
//!   condition the construction is required to meet.
//! * [`little_lip`] builds 1-Lipschitz separating functions that are locally
//!   flat and flat at infinity.
//! * [`oracle`] holds slow brute-force reference implementations.
//! * [`gen`] generates reproducible instances.

pub mod error;
pub mod free_space;
pub mod gen;
pub mod little_lip;
pub mod metric;
pub mod oracle;
pub mod rearrange;
pub mod tree;

pub use error::{Error, Result};
pub use free_space::{Molecule, NormProfile};
pub use metric::FiniteMetric;
pub use tree::{MarkedTree, TreePoint};

/// Absolute tolerance on lengths used when callers do not supply one.
pub const DEFAULT_TOL: f64 = 1e-9;
