//! Smoothed geometric series: sums `z + (S A)z + (S A)^2 z + ...` with
//! `A w = w - derivative(x, approx_inverse(x, w))`, the engine that upgrades
//! an approximate right inverse into a usable step direction.
//!
//! The series is truncated by a relative tail tolerance at the loss index
//! `d` with a hard term cap; the tolerance sits far below the solver's
//! stopping thresholds so truncation never dominates the error budget.
//! Whether the series converges at all depends on the cutoff and the base
//! point; the engine reports divergence rather than guessing a domain.

use thiserror::Error;

use crate::problem::{check_domain, ProblemError, TameProblem};
use crate::space::{GradedElement, SmoothingParam};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_TERMS: usize = 200;

#[derive(Debug, Error)]
pub enum NeumannError {
    #[error("series diverges: terms grew for {terms_grown} consecutive steps (growth ratio {growth_ratio})")]
    Divergence { growth_ratio: f64, terms_grown: usize },
    #[error("degenerate input")]
    DegenerateInput,
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// Converged or capped partial sum of the smoothed series.
#[derive(Debug, Clone)]
pub struct NeumannResult {
    pub sum: GradedElement,
    /// Number of terms accumulated into the sum (the seed term counts).
    pub terms_used: usize,
    /// Seminorm at index `d` of the last computed term.
    pub final_term_norm: f64,
    pub converged: bool,
}

/// Sum the smoothed series for right-hand side `z` at cutoff `theta`.
/// Deterministic; stops when the next term falls below
/// `tol * max(1, |sum|_d)` or at the term cap.
pub fn neumann_sum(
    problem: &dyn TameProblem,
    x: &GradedElement,
    theta: SmoothingParam,
    z: &GradedElement,
    tol: f64,
    max_terms: usize,
) -> Result<NeumannResult, NeumannError> {
    assert!(tol > 0.0, "tolerance must be positive");
    assert!(max_terms >= 1, "term cap must be at least 1");
    check_domain(problem, x)?;

    let d = problem.constants().d;
    let mut term = z.clone();
    let mut sum = z.clone();
    let mut term_norm = term.seminorm(d);
    let mut terms_used = 1;

    if term_norm <= tol * sum.seminorm(d).max(1.0) {
        return Ok(NeumannResult {
            sum,
            terms_used,
            final_term_norm: term_norm,
            converged: true,
        });
    }

    let mut grown = 0usize;
    loop {
        if terms_used >= max_terms {
            return Ok(NeumannResult {
                sum,
                terms_used,
                final_term_norm: term_norm,
                converged: false,
            });
        }

        // A(w) = w - phi'(x) L(x) w, then the sharp cutoff.
        let corrected = problem.derivative(x, &problem.approx_inverse(x, &term));
        let next = term.sub(&corrected).smooth(theta);
        let next_norm = next.seminorm(d);

        if !next_norm.is_finite() || next_norm > term_norm {
            grown += 1;
            if !next_norm.is_finite() || grown >= 5 {
                return Err(NeumannError::Divergence {
                    growth_ratio: next_norm / term_norm,
                    terms_grown: grown,
                });
            }
        } else {
            grown = 0;
        }

        if next_norm <= tol * sum.seminorm(d).max(1.0) {
            return Ok(NeumannResult {
                sum,
                terms_used,
                final_term_norm: next_norm,
                converged: true,
            });
        }

        sum = sum.add(&next);
        term = next;
        term_norm = next_norm;
        terms_used += 1;
    }
}

/// Observable constant of the smoothed-series bound: the summed series at
/// index `n` against `theta^m (|x|_n |z|_d + |z|_n)` with the problem's
/// declared `m`.
pub fn neumann_bound_ratio(
    problem: &dyn TameProblem,
    x: &GradedElement,
    theta: SmoothingParam,
    z: &GradedElement,
    n: crate::space::SeminormIndex,
    tol: f64,
    max_terms: usize,
) -> Result<f64, NeumannError> {
    if z.is_zero() {
        return Err(NeumannError::DegenerateInput);
    }
    let result = neumann_sum(problem, x, theta, z, tol, max_terms)?;
    let d = problem.constants().d;
    let m = problem.constants().m;
    let denom = theta.value().powf(m) * (x.seminorm(n) * z.seminorm(d) + z.seminorm(n));
    Ok(result.sum.seminorm(n) / denom)
}
