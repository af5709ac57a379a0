//! The smoothed Newton iteration with its doubly exponential cutoff schedule
//! and exponent bookkeeping.
//!
//! One step at cutoff `theta_p = 2^(tau^p)` solves the linearized equation
//! through the smoothed series, applies the approximate inverse, smooths the
//! increment, and recomputes the residual from scratch:
//!
//! ```text
//! x_0 = 0
//! dx_p = S_theta L(x_p) sum_j (S_theta (1 - phi'(x_p) L(x_p)))^j z_p
//! x_{p+1} = x_p + dx_p,      z_{p+1} = y - phi(x_{p+1})
//! ```
//!
//! The residual is never updated incrementally; `z` always equals
//! `y - apply(x)` exactly. Starting anywhere but zero would invalidate the
//! growth bound's induction, so there is no warm starting.
//!
//! Derived quantities, with `d`, `m`, `lambda` from the problem and
//! `lambda < tau < 2`:
//!
//! * growth exponent `loss(n) = (n/lambda)(lambda-1)/(tau-1)
//!   + (1/lambda)(d+lambda)/(tau-1) + m/(tau-1)`, affine in `n`;
//! * decay exponent `mu = (2+tau)/(2-tau) (d+m)` for the residual at
//!   index `d`;
//! * `s` = smallest real with `s - d - m - loss(lambda s + d) >= mu tau`,
//!   in closed form since `loss` is affine, and `s0 = lambda s + d`, the
//!   index the domain radius is measured at;
//! * `delta <= 1`, initialized from the summability bound
//!   `1 / sum_j theta_j^{-(mu-d-m)}` and refined empirically by bisection
//!   (`calibrate_delta`), since the analytic radius is existence-grade.

use serde::Serialize;
use thiserror::Error;

use crate::neumann::{neumann_sum, NeumannError};
use crate::problem::{ProblemConstants, ProblemError, TameProblem};
use crate::sampling::build_target;
use crate::space::{GradedElement, SeminormIndex, SmoothingParam};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("schedule requires 1 <= lambda < tau < 2, got lambda = {lambda}, tau = {tau}")]
    InvalidSchedule { lambda: f64, tau: f64 },
    #[error("exponent derivation failed: {0}")]
    ExponentDerivation(String),
    #[error("|y|_s0 = {norm} is not below the domain radius {delta}; pass the override to explore anyway")]
    DomainPrecheck { norm: f64, delta: f64 },
    #[error("left the domain: |x|_l = {seminorm} >= 1")]
    LeftDomain { seminorm: f64 },
    #[error("domain radius calibration failed: {0}")]
    CalibrationFailed(String),
    #[error(transparent)]
    Neumann(#[from] NeumannError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// Cutoff schedule parameters: `theta_p = 2^(tau^p)` with
/// `1 <= lambda < tau < 2`. The default `tau = (lambda + 2)/2` balances the
/// linearization error against the smoothing error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScheduleParams {
    pub lambda: f64,
    pub tau: f64,
}

impl ScheduleParams {
    pub fn new(lambda: f64, tau: Option<f64>) -> Result<Self, SolverError> {
        let tau = tau.unwrap_or((lambda + 2.0) / 2.0);
        if !(1.0..2.0).contains(&lambda) || tau <= lambda || tau >= 2.0 {
            return Err(SolverError::InvalidSchedule { lambda, tau });
        }
        Ok(Self { lambda, tau })
    }

    pub fn for_problem(problem: &dyn TameProblem) -> Result<Self, SolverError> {
        Self::new(problem.constants().lambda, None)
    }
}

/// `theta_p = 2^(tau^p)`. Exact consequence: `theta_p^tau = theta_{p+1}`.
/// Overflows to infinity for absurdly large `p`; the solver stops at the
/// truncation ceiling long before.
pub fn schedule(p: u32, params: &ScheduleParams) -> f64 {
    2f64.powf(params.tau.powi(p as i32))
}

/// The computed exponents governing the schedule and its guarantees.
#[derive(Debug, Clone, Serialize)]
pub struct DerivedExponents {
    pub lambda: f64,
    pub tau: f64,
    pub d: f64,
    pub m: f64,
    loss_slope: f64,
    loss_intercept: f64,
    pub mu: f64,
    pub s: f64,
    pub s0: f64,
    pub delta: f64,
    /// `d + m = 0` makes the decay exponent vanish: iteration still runs,
    /// but no residual decay rate is guaranteed.
    pub degenerate: bool,
}

impl DerivedExponents {
    /// Growth exponent `loss(n)`, affine in the index.
    pub fn loss(&self, n: f64) -> f64 {
        self.loss_slope * n + self.loss_intercept
    }
}

pub fn derive_exponents(
    constants: &ProblemConstants,
    params: &ScheduleParams,
) -> Result<DerivedExponents, SolverError> {
    constants.validate()?;
    let lambda = params.lambda;
    let tau = params.tau;
    let d = constants.d.value();
    let m = constants.m;

    let loss_slope = (lambda - 1.0) / (lambda * (tau - 1.0));
    let loss_intercept = (d + lambda) / (lambda * (tau - 1.0)) + m / (tau - 1.0);
    let mu = (2.0 + tau) / (2.0 - tau) * (d + m);

    // s (1 - slope * lambda) >= mu tau + d + m + slope * d + intercept,
    // and 1 - slope * lambda = (tau - lambda)/(tau - 1) > 0 for the valid
    // schedule range; guard anyway.
    let margin = 1.0 - loss_slope * lambda;
    if margin <= 0.0 {
        return Err(SolverError::ExponentDerivation(format!(
            "no admissible smoothness index: tau = {tau} does not dominate lambda = {lambda}"
        )));
    }
    let s = (mu * tau + d + m + loss_slope * d + loss_intercept) / margin;
    let s0 = lambda * s + d;

    let degenerate = d + m == 0.0;
    let delta = if degenerate {
        1.0
    } else {
        let decay = mu - d - m;
        let mut sum = 0.0;
        for j in 0..200u32 {
            let term = 2f64.powf(-decay * tau.powi(j as i32));
            sum += term;
            if term < 1e-300 {
                break;
            }
        }
        (1.0 / sum).min(1.0)
    };

    let exps = DerivedExponents {
        lambda,
        tau,
        d,
        m,
        loss_slope,
        loss_intercept,
        mu,
        s,
        s0,
        delta,
        degenerate,
    };
    let slack = exps.s - d - m - exps.loss(exps.s0) - mu * tau;
    if slack < -1e-9 {
        return Err(SolverError::ExponentDerivation(format!(
            "smoothness constraint violated by {slack}"
        )));
    }
    Ok(exps)
}

/// State before step `p`: the iterate, the recomputed residual, the cutoff.
#[derive(Debug, Clone)]
pub struct IterationState {
    pub p: u32,
    pub x: GradedElement,
    pub z: GradedElement,
    pub theta: f64,
}

/// Per-step record. The row for the terminal state carries a zero increment
/// and zero series terms.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub p: u32,
    pub theta: f64,
    pub x_d: f64,
    pub x_s0: f64,
    pub z_d: f64,
    pub z_s0: f64,
    pub dx_d: f64,
    pub x_grid: Vec<f64>,
    pub dx_grid: Vec<f64>,
    pub neumann_terms: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SolveStatus {
    Converged,
    LeftDomain { seminorm: f64 },
    NeumannDivergence { growth_ratio: f64 },
    Stagnation,
    MaxIterations,
    ThetaCeiling,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolveStatus::Converged => write!(f, "converged"),
            SolveStatus::LeftDomain { .. } => write!(f, "left_domain"),
            SolveStatus::NeumannDivergence { .. } => write!(f, "neumann_divergence"),
            SolveStatus::Stagnation => write!(f, "stagnation"),
            SolveStatus::MaxIterations => write!(f, "max_iterations"),
            SolveStatus::ThetaCeiling => write!(f, "theta_ceiling"),
        }
    }
}

/// Full per-run record: seminorm columns of the iterate, residual, and
/// increment at `d`, `s0`, and the configured index grid, one row per
/// visited state. Rows are strictly increasing in `p` and the cutoff column
/// follows the schedule exactly.
#[derive(Debug, Clone, Serialize)]
pub struct IterationTrace {
    pub truncation: usize,
    pub d: f64,
    pub s0: f64,
    pub n_grid: Vec<f64>,
    pub y_norm_d: f64,
    pub y_norm_s0: f64,
    pub y_norm_grid: Vec<f64>,
    pub rows: Vec<TraceRow>,
    pub status: SolveStatus,
}

impl IterationTrace {
    /// Norm of the right-hand side at index `n`, if recorded.
    pub fn y_norm(&self, n: f64) -> Option<f64> {
        if n == self.d {
            return Some(self.y_norm_d);
        }
        if n == self.s0 {
            return Some(self.y_norm_s0);
        }
        self.n_grid
            .iter()
            .position(|&g| g == n)
            .map(|i| self.y_norm_grid[i])
    }

    /// Norm of the iterate at index `n` in the given row, if recorded.
    pub fn x_norm(&self, row: &TraceRow, n: f64) -> Option<f64> {
        if n == self.d {
            return Some(row.x_d);
        }
        if n == self.s0 {
            return Some(row.x_s0);
        }
        self.n_grid
            .iter()
            .position(|&g| g == n)
            .map(|i| row.x_grid[i])
    }

    /// Norm of the increment at index `n` in the given row, if recorded.
    pub fn dx_norm(&self, row: &TraceRow, n: f64) -> Option<f64> {
        if n == self.d {
            return Some(row.dx_d);
        }
        self.n_grid
            .iter()
            .position(|&g| g == n)
            .map(|i| row.dx_grid[i])
    }
}

#[derive(Debug, Clone)]
pub struct SolveConfig {
    /// Residual target at index `d`.
    pub residual_tol: f64,
    pub max_iter: u32,
    pub neumann_tol: f64,
    pub neumann_max_terms: usize,
    /// Extra seminorm indices recorded per row (besides `d` and `s0`).
    pub n_grid: Vec<f64>,
    /// Run even when `|y|_s0` is not below the domain radius.
    pub domain_override: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            residual_tol: 1e-10,
            max_iter: 30,
            neumann_tol: crate::neumann::DEFAULT_TOL,
            neumann_max_terms: crate::neumann::DEFAULT_MAX_TERMS,
            n_grid: Vec::new(),
            domain_override: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub iterations: u32,
    pub final_residual: f64,
    pub domain_warning: bool,
    pub exponents: DerivedExponents,
    #[serde(skip)]
    pub solution: GradedElement,
    #[serde(skip)]
    pub trace: IterationTrace,
}

impl SolveReport {
    pub fn is_success(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

pub struct StepInfo {
    pub dx: GradedElement,
    pub neumann_terms: usize,
}

/// One iteration step at the state's own cutoff. Fails on series divergence
/// or when the new iterate leaves the unit ball the hypotheses hold on.
pub fn step(
    problem: &dyn TameProblem,
    state: &IterationState,
    y: &GradedElement,
    params: &ScheduleParams,
    cfg: &SolveConfig,
) -> Result<(IterationState, StepInfo), SolverError> {
    let theta = SmoothingParam::new(state.theta);
    let series = neumann_sum(
        problem,
        &state.x,
        theta,
        &state.z,
        cfg.neumann_tol,
        cfg.neumann_max_terms,
    )?;
    let dx = problem.approx_inverse(&state.x, &series.sum).smooth(theta);
    let x_next = state.x.add(&dx);
    let l_norm = x_next.seminorm(problem.domain_index());
    if l_norm >= 1.0 {
        return Err(SolverError::LeftDomain { seminorm: l_norm });
    }
    let z_next = y.sub(&problem.apply(&x_next));
    let next = IterationState {
        p: state.p + 1,
        x: x_next,
        z: z_next,
        theta: schedule(state.p + 1, params),
    };
    Ok((
        next,
        StepInfo {
            dx,
            neumann_terms: series.terms_used,
        },
    ))
}

/// Iterate from zero until the residual target, the iteration cap, or the
/// truncation ceiling `theta > 2(N + 1)`, beyond which the cutoff keeps
/// every mode and the truncated model has left the regime the schedule is
/// built for. Diagnostics only trust rows with `theta <= N + 1`.
pub fn solve(
    problem: &dyn TameProblem,
    y: &GradedElement,
    params: &ScheduleParams,
    cfg: &SolveConfig,
) -> Result<SolveReport, SolverError> {
    let exps = derive_exponents(problem.constants(), params)?;
    let d = problem.constants().d;
    let s0 = SeminormIndex::new(exps.s0);
    let y_s0 = y.seminorm(s0);
    let mut domain_warning = false;
    if y_s0 >= exps.delta {
        if cfg.domain_override {
            domain_warning = true;
        } else {
            return Err(SolverError::DomainPrecheck {
                norm: y_s0,
                delta: exps.delta,
            });
        }
    }

    let mut n_grid = cfg.n_grid.clone();
    n_grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    n_grid.dedup();
    let grid_norms = |x: &GradedElement| -> Vec<f64> {
        n_grid
            .iter()
            .map(|&n| x.seminorm(SeminormIndex::new(n)))
            .collect()
    };

    let truncation = problem.truncation_order();
    let ceiling = 2.0 * (truncation as f64 + 1.0);
    let zero = GradedElement::zero(truncation);
    let mut rows: Vec<TraceRow> = Vec::new();
    let mut record = |state: &IterationState, info: Option<&StepInfo>| {
        rows.push(TraceRow {
            p: state.p,
            theta: state.theta,
            x_d: state.x.seminorm(d),
            x_s0: state.x.seminorm(s0),
            z_d: state.z.seminorm(d),
            z_s0: state.z.seminorm(s0),
            dx_d: info.map_or(0.0, |i| i.dx.seminorm(d)),
            x_grid: grid_norms(&state.x),
            dx_grid: info.map_or_else(|| vec![0.0; n_grid.len()], |i| grid_norms(&i.dx)),
            neumann_terms: info.map_or(0, |i| i.neumann_terms),
        });
    };

    let mut state = IterationState {
        p: 0,
        x: zero,
        z: y.clone(),
        theta: schedule(0, params),
    };
    let mut stagnant = 0u32;

    let status = loop {
        let residual = state.z.seminorm(d);
        if residual < cfg.residual_tol {
            record(&state, None);
            break SolveStatus::Converged;
        }
        if state.theta > ceiling {
            record(&state, None);
            break SolveStatus::ThetaCeiling;
        }
        if state.p >= cfg.max_iter {
            record(&state, None);
            break SolveStatus::MaxIterations;
        }
        if stagnant >= 3 {
            record(&state, None);
            break SolveStatus::Stagnation;
        }
        match step(problem, &state, y, params, cfg) {
            Ok((next, info)) => {
                record(&state, Some(&info));
                if next.z.seminorm(d) >= residual {
                    stagnant += 1;
                } else {
                    stagnant = 0;
                }
                state = next;
            }
            Err(SolverError::Neumann(NeumannError::Divergence { growth_ratio, .. })) => {
                record(&state, None);
                break SolveStatus::NeumannDivergence { growth_ratio };
            }
            Err(SolverError::LeftDomain { seminorm }) => {
                record(&state, None);
                break SolveStatus::LeftDomain { seminorm };
            }
            Err(other) => return Err(other),
        }
    };

    let final_residual = state.z.seminorm(d);
    let trace = IterationTrace {
        truncation,
        d: d.value(),
        s0: exps.s0,
        n_grid: n_grid.clone(),
        y_norm_d: y.seminorm(d),
        y_norm_s0: y_s0,
        y_norm_grid: grid_norms(y),
        rows,
        status,
    };
    Ok(SolveReport {
        status,
        iterations: state.p,
        final_residual,
        domain_warning,
        exponents: exps,
        solution: state.x,
        trace,
    })
}

/// Result of the empirical domain-radius refinement.
#[derive(Debug, Clone, Serialize)]
pub struct DeltaCalibration {
    pub delta_hat: f64,
    /// Amplitudes probed with the outcome at each.
    pub tested: Vec<(f64, bool)>,
}

/// Bisect on `|y|_s0` along seeded rays until solves succeed, returning the
/// largest amplitude all probes survive. The analytic radius is
/// existence-grade; this is the radius the artifact actually certifies.
pub fn calibrate_delta(
    problem: &dyn TameProblem,
    params: &ScheduleParams,
    cfg: &SolveConfig,
    decay: Option<f64>,
    band_limit: Option<usize>,
    probe_seeds: &[u64],
    bisect_iters: u32,
) -> Result<DeltaCalibration, SolverError> {
    assert!(!probe_seeds.is_empty());
    let exps = derive_exponents(problem.constants(), params)?;
    let s0 = SeminormIndex::new(exps.s0);
    let decay = decay.unwrap_or(exps.s0);
    let mut probe_cfg = cfg.clone();
    probe_cfg.domain_override = true;

    let succeeds = |amplitude: f64| -> Result<bool, SolverError> {
        for &seed in probe_seeds {
            let y = build_target(
                problem.truncation_order(),
                seed,
                amplitude,
                s0,
                decay,
                band_limit,
                problem.mean_zero(),
            );
            match solve(problem, &y, params, &probe_cfg) {
                Ok(report) if report.is_success() => continue,
                Ok(_) => return Ok(false),
                Err(e) => return Err(e),
            }
        }
        Ok(true)
    };

    let mut tested = Vec::new();
    // The radius never exceeds one.
    let mut hi = 1.0;
    let top = succeeds(hi)?;
    tested.push((hi, top));
    if top {
        return Ok(DeltaCalibration {
            delta_hat: hi,
            tested,
        });
    }
    let mut lo = 0.0;
    for _ in 0..bisect_iters {
        let mid = 0.5 * (lo + hi);
        let ok = succeeds(mid)?;
        tested.push((mid, ok));
        if ok {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo == 0.0 {
        return Err(SolverError::CalibrationFailed(
            "no positive amplitude survived the probe solves".into(),
        ));
    }
    Ok(DeltaCalibration {
        delta_hat: lo,
        tested,
    })
}
