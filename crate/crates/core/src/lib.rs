//! Numerical laboratory for positive solutions of `-Δu = f(u)` on planar
//! domains with a small circular hole.
//!
//! The crate provides:
//!
//! * [`geometry`] — level-set domains, punctured domains and the classified
//!   finite-difference grid with curved-boundary (Shortley–Weller) arm
//!   fractions;
//! * [`elliptic`] — Poisson, damped-Newton semilinear and first-eigenpair
//!   solvers on that grid, plus C¹/C² field sampling;
//! * [`green`] — analytic Green kernels for the unit-ball exterior and the
//!   unit disc, Poisson-kernel quadrature checks and the harmonic-correction
//!   verification;
//! * [`critpoints`] — detection, refinement, classification and winding-number
//!   indexing of interior critical points, with a degree-sum audit;
//! * [`asymptotics`] — closed-form predictors for the location, count and
//!   scaling of hole-generated critical points, and rate fitting;
//! * [`radial`] — the radial two-point reduction on annuli in arbitrary
//!   dimension.
//!
//! The crate is `no_std`-compatible (`alloc` required); the `std` feature
//! (default) switches float math to the standard library and implements
//! `std::error::Error` for the error types. IO, file formats and the batch
//! front end live in the companion `holepoint-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod asymptotics;
pub mod critpoints;
pub mod elliptic;
mod fmath;
pub mod geometry;
pub mod green;
pub mod laplacian;
pub mod linsolve;
pub mod radial;

pub use elliptic::{EllipticSolver, Field, Nonlinearity};
pub use geometry::{classify, Domain, Grid2D, LevelSetDomain, NodeClass, PuncturedDomain};
pub use laplacian::{build_laplacian, SwOperator};
