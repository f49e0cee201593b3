//! Streaming heavy-hitter ranking with exponential decay, and the analytics
//! of the random walk that the update rule induces.
//!
//! The core update replaces a tracked probability distribution P by the convex
//! mixture `alpha * P + (1 - alpha) * delta_j` on every event for item j.
//! Everything in this crate is built around that one rule:
//!
//! * [`ranker`] maintains the distribution incrementally over an event stream
//!   with O(1) amortized updates and serves top-k queries.
//! * [`walk`] treats the same rule as a random walk over a vertex set (simplex
//!   corners, arbitrary real vectors, or points in the complex plane) and
//!   provides seeded Monte Carlo sampling, exact path enumeration, and a
//!   heuristic probe for the reciprocal expectation.
//! * [`analytics`] evaluates the closed forms the walk obeys: means,
//!   variances, covariance matrices with their spectra, and the full central
//!   moment recurrence of the limiting distribution.
//! * [`bounds`] turns the variance formulas into concentration bounds,
//!   relative-error thresholds, and regime-switch diagnostics.
//! * [`verify`] cross-checks every route against an independent one and backs
//!   both the `acceptance` test target and the CLI `verify` subcommand.
//!
//! All sampling is deterministic: every path draws from its own counter-derived
//! RNG substream, so results are bit-identical for a fixed seed regardless of
//! thread count or scheduling.

pub mod analytics;
pub mod bounds;
pub mod error;
pub mod numeric;
pub mod ranker;
pub mod verify;
pub mod walk;

pub use error::{Error, Result};
