//! Open-loop Stackelberg solutions of two-player finite-horizon
//! linear-quadratic differential games with a cheap-control follower.
//!
//! The follower's control cost carries a small weight ε², which turns the
//! game's necessary-condition boundary-value problem into a singularly
//! perturbed linear TPBVP. This crate provides:
//!
//! - [`model`] — game description, assumption validation, and the state
//!   transformation that normalizes the follower's input channel to
//!   `(0; I_s)` and block-diagonalizes the follower's state weight;
//! - [`exact`] — assembly and solution of the scaled singularly perturbed
//!   BVP by multiple shooting on a layer-resolving mesh, optimal controls,
//!   costs, the fast-mode eigenvalue dichotomy, and a generalized-weight
//!   solver for cheap-leader comparisons;
//! - [`asymptotics`] — the first-order matched asymptotic expansion by the
//!   boundary-functions method: outer (reduced) solutions, boundary-layer
//!   corrections at both endpoints in closed form, composite expansion, and
//!   the asymptotically suboptimal control pairs with ε-free costs;
//! - [`evaluate`] — open-loop simulation under arbitrary control pairs,
//!   cost evaluation, control/cost error metrics, and the cheap-control
//!   benefit comparison across weight regimes.
//!
//! Supporting numerics (dense matrix exponential, Sylvester/Lyapunov
//! solves, Magnus one-step transition matrices, banded multiple-shooting
//! linear algebra, Gauss–Legendre quadrature) live in [`linalg`], [`ode`],
//! [`bvp`], and [`quad`].

pub mod asymptotics;
pub mod bvp;
pub mod error;
pub mod evaluate;
pub mod exact;
pub mod games;
pub mod layer;
pub mod linalg;
pub mod matfn;
pub mod model;
pub mod ode;
pub mod quad;

pub use error::{Error, Result};
