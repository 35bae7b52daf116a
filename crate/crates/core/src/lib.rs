//! Stationary random fields on `Z^d` driven by i.i.d. finite-alphabet innovations.
//!
//! A field is `X_i = f(T_i eps)` for a finite-range functional `f`. Conditional
//! expectations with respect to the commuting filtration `F_j = sigma(eps_k : k <= j)`
//! reduce to integrating out sites, so projections, martingale kernels and
//! coboundary decompositions are all computed exactly on the symbolic form of `f`.

pub mod coboundary;
pub mod counterexample;
pub mod error;
pub mod functional;
pub mod hannan;
pub mod innovation;
pub mod lattice;
pub mod montecarlo;
pub mod projection;
pub mod stats;

pub use error::{Error, Result};
pub use functional::{Factor, FactorKind, FiniteRangeFunctional, Functional, Term, DEFAULT_TOL};
pub use innovation::{Configuration, InnovationLaw};
pub use lattice::{Grid, LatticeIndex, Rectangle};
