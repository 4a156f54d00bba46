//! Infinite divisibility of `Z^d`-valued distributions.
//!
//! A finitely supported law `μ` on `Z^d` whose characteristic function has no
//! zeros admits the representation
//!
//! ```text
//! φ(z) = exp{ i<k, z> + Σ_{n ≠ 0} ν({n}) (e^{i<n, z>} - 1) }
//! ```
//!
//! with an integer drift `k` and a finite signed measure `ν` on `Z^d \ {0}`.
//! The law is infinitely divisible exactly when `ν` is nonnegative. This crate
//! computes `(k, ν)` numerically from samples of `φ` on the torus, classifies
//! laws accordingly, factors them into compound Poisson quotients and checks
//! the result against one-dimensional projections.
//!
//! Modules, bottom-up:
//!
//! * [`measures`]: lattice pmfs and signed measures, with convolution,
//!   projection, pushforward and affine maps.
//! * [`charfn`]: characteristic functions on torus grids, zero-freeness
//!   certificates, distinguished logarithm and winding vector.
//! * [`qid`]: the quasi-Lévy triplet, the three-way verdict and the compound
//!   Poisson factorization.
//! * [`oned`]: Katti's recursion, log-convexity and the formal power series
//!   logarithm used as an independent oracle.
//! * [`cw`]: projection harness over integer directions.

pub mod charfn;
pub mod cw;
pub mod measures;
pub mod oned;
pub mod qid;

mod error;

pub use error::{Error, Result};
pub use measures::{LatticePmf, Point, SignedLatticeMeasure};
