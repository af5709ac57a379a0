//! Smoothed Newton iteration for maps with approximate right inverses on
//! truncated graded sequence spaces.
//!
//! The crate provides, bottom to top:
//!
//! * [`space`] — truncated spectral elements, the graded seminorm family,
//!   and sharp-cutoff smoothing operators whose defining inequalities hold
//!   with constant one;
//! * [`problem`] — the interface a concrete problem implements (map,
//!   derivative, approximate right inverse, declared constants) and the
//!   empirical estimator certifying the seven tame-bound constants;
//! * [`problems`] — the instance catalog P0..P3, from the identity up to
//!   genuinely small-divisor rotation-difference equations;
//! * [`neumann`] — the smoothed geometric series turning an approximate
//!   inverse into a step direction;
//! * [`solver`] — the iteration with its doubly exponential cutoff schedule,
//!   derived exponents, trace recording, and empirical domain-radius
//!   calibration;
//! * [`diagnostics`] — fits of recorded traces against the predicted
//!   growth, decay, domain, and inverse bounds;
//! * [`space_check`] — the seeded inequality suite behind `verify-space`.

pub mod diagnostics;
pub mod fit;
mod linalg;
pub mod neumann;
pub mod problem;
pub mod problems;
pub mod sampling;
pub mod solver;
pub mod space;
pub mod space_check;
pub mod spectral;

pub use problem::{
    defect, estimate_condition, remainder, ConditionReport, ProblemConstants, ProblemError,
    SamplerConfig, TameProblem,
};
pub use problems::{golden_mean, ProblemId, ProblemSpec};
pub use solver::{
    calibrate_delta, derive_exponents, schedule, solve, DerivedExponents, IterationTrace,
    ScheduleParams, SolveConfig, SolveReport, SolveStatus, SolverError,
};
pub use space::{GradedElement, SeminormIndex, SmoothingParam, SpaceError};
