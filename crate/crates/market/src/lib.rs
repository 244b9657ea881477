//! Equilibrium model and policy solvers for an app-based ride-hailing
//! (TNC) market under regulation.
//!
//! The model couples a logit demand curve for passengers, a logit supply
//! curve for drivers, a square-root pickup-time law in the idle fleet, and
//! a linear (Greenshields) speed-density relation. The platform sets the
//! ride fare and the per-trip driver payment to maximize profit, subject to
//! a driver minimum wage and, optionally, a per-trip or per-vehicle-hour
//! congestion charge.
//!
//! The crate is organized around the pipeline:
//!
//! - [`model`] — pure evaluation of every primitive curve and assembly of a
//!   full [`model::MarketOutcome`] from a decision pair `(λ, N)`,
//! - [`solver`] — the nested profit maximization (concave inner problem in
//!   the arrival rate, outer search over the fleet size) with branch logic
//!   for the wage floor and both charge schemes,
//! - [`calibrate`] — inverse-solving the four logit parameters from observed
//!   market anchors,
//! - [`analysis`] — tax sweeps, regime-threshold detection, equal-revenue
//!   comparison of the two charge schemes, incidence and sensitivity reports,
//! - [`io`] — config ingestion and deterministic table emission.
//!
//! Everything is deterministic: no randomness, no time-dependent state, and
//! sweep rows are pure functions of their inputs (safe to evaluate
//! concurrently).
//!
//! Unit conventions: dollars, minutes and miles internally; arrival rates
//! are per minute and wages per hour (the hour/minute conversion happens at
//! a single point in each formula, never implicitly).

// Negated comparisons like `!(v > 0.0)` are NaN-rejecting on purpose in the
// validators and bracket checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod calibrate;
pub mod error;
pub mod io;
pub mod model;
pub mod numeric;
pub mod params;
pub mod solver;

pub use error::{Error, Result};
pub use model::MarketOutcome;
pub use params::{LevySide, ModelParams, Policy};
pub use solver::{Equilibrium, Regime, SolverConfig};
