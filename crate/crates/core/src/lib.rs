//! Discrete fractional p-Laplacians on finite metric measure spaces.
//!
//! The pipeline realizes the nonlocal operator (-Δ_p)^θ on a finite doubling
//! metric measure space `(Z, d, ν)` by
//!
//! 1. covering `Z` with nested separated nets and building the hyperbolic
//!    filling graph ([`filling`]),
//! 2. uniformizing edge lengths with the density `e^{-εt}` and lifting `ν`
//!    to an edge measure `μ_β` ([`filling`]),
//! 3. solving discrete Neumann / Dirichlet p-Laplace problems on the weighted
//!    graph by convex minimization ([`calculus`]),
//! 4. pulling the Neumann trace back to `Z`, which yields the fractional
//!    solution, and cross-checking the induced trace form against the direct
//!    nonlocal Besov form ([`besov`], [`fractional`]),
//! 5. sphericalizing the half-cylinder `Z × (0, ∞)` for the p = 2
//!    reconciliation checks ([`spherical`]).
//!
//! Everything is deterministic: net construction breaks ties by point index,
//! edge lists are canonically sorted, and all randomness flows from a single
//! seeded generator ([`rng`]).

pub mod besov;
pub mod calculus;
pub mod error;
pub mod filling;
pub mod fixtures;
pub mod fractional;
pub(crate) mod graphutil;
pub mod rng;
pub mod space;
pub mod spherical;

pub use calculus::{Network, Normalization, SolveReport, SolverOptions};
pub use error::{Error, Result};
pub use filling::{FillingGraph, FillingParams};
pub use space::{FiniteMetricMeasureSpace, NetHierarchy};
