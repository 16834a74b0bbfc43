//! Multi-optimum Bayesian optimization for noisy, non-smooth black boxes.
//!
//! The library is organized around a small engine loop:
//!
//! * [`problem`] defines parameter spaces, black boxes (an analytic benchmark,
//!   grid-backed lookup tables, deterministic noise wrappers) and Latin
//!   hypercube initialization.
//! * [`surrogate`] fits zero-mean Gaussian-process models with RBF or
//!   Matern-5/2 correlation by deterministic multi-start likelihood
//!   maximization.
//! * [`acquisition`] scores candidates: expected improvement, the stability
//!   ratio that switches between global and localized search, the strategic
//!   cost transform, and the knowledge-gate penalty.
//! * [`strategy`] tracks the focus registry (the optima found so far) and
//!   decides region-of-interest switches.
//! * [`gate`] turns human good/bad labels on the initialization batch into a
//!   feasibility surrogate.
//! * [`engine`] wires the above into reproducible runs and seed sweeps.
//! * [`metrics`] evaluates runs against ground truth: feasible-region MAE,
//!   histogram intersection, and optimum-coverage counts.
//!
//! Every random decision derives from a single master seed, so a run is a
//! pure function of its configuration and problem definition.

pub mod acquisition;
pub mod archive;
pub mod engine;
pub mod gate;
pub mod metrics;
pub mod problem;
pub mod strategy;
pub mod surrogate;
