//! Quantitative comparison of iteration traces against the predicted
//! growth, decay, domain, and inverse bounds.
//!
//! Every fit works on the usable rows only: cutoffs at most `N + 1` (beyond
//! that the cutoff keeps every mode and the truncated model stops informing
//! the asymptotics) and, for residual fits, rows above a rounding floor.
//! The bounds are asymptotic statements; finite traces of a handful of rows
//! need explicit slack, so the tolerances are declared here rather than
//! hidden in the checks, and remain overridable from the experiment config.

use serde::Serialize;
use thiserror::Error;

use crate::fit;
use crate::solver::{DerivedExponents, IterationTrace, TraceRow};
use crate::space::{GradedElement, SeminormIndex};

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("need at least {needed} usable rows, got {got}")]
    InsufficientRows { needed: usize, got: usize },
    #[error("need at least {needed} solved instances spanning {decades} decades")]
    InsufficientInstances { needed: usize, decades: f64 },
    #[error("degenerate input")]
    DegenerateInput,
    #[error("seminorm index {0} was not recorded in the trace")]
    MissingIndex(f64),
}

/// Fit tolerances. Defaults: slope bound 0.05 for boundedness checks, 25%
/// slack on decay exponents, +-0.2 on the inverse-bound trend, 10x growth
/// cap for partial suprema, 1e-14 residual floor, 3-row minimum per fit.
#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticConfig {
    pub slope_bound: f64,
    pub decay_slack: f64,
    pub trend_band: f64,
    pub growth_factor: f64,
    pub residual_floor: f64,
    pub min_rows: usize,
}

impl Default for DiagnosticConfig {
    fn default() -> Self {
        Self {
            slope_bound: 0.05,
            decay_slack: 0.25,
            trend_band: 0.2,
            growth_factor: 10.0,
            residual_floor: 1e-14,
            min_rows: 3,
        }
    }
}

/// Which bound a report speaks about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Quantity {
    #[serde(rename = "growth_L")]
    GrowthL,
    #[serde(rename = "residual_mu")]
    ResidualMu,
    #[serde(rename = "residual_a")]
    ResidualA,
    #[serde(rename = "delta_domain")]
    DeltaDomain,
    #[serde(rename = "all_index_b")]
    AllIndexB,
    #[serde(rename = "cauchy")]
    Cauchy,
    #[serde(rename = "theorem_bound")]
    TheoremBound,
}

/// One measured-against-predicted comparison.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub quantity: Quantity,
    /// The bound's exponent or threshold.
    pub predicted: f64,
    /// Fitted exponent or sup ratio.
    pub measured: f64,
    pub pass: bool,
    pub rows_used: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flag: Option<String>,
}

/// Rows the fits may trust: cutoff within the truncation band.
pub fn usable_rows<'t>(trace: &'t IterationTrace) -> Vec<&'t TraceRow> {
    let ceiling = trace.truncation as f64 + 1.0;
    trace.rows.iter().filter(|r| r.theta <= ceiling).collect()
}

fn require_rows(rows: usize, needed: usize) -> Result<(), DiagnosticsError> {
    if rows < needed {
        return Err(DiagnosticsError::InsufficientRows { needed, got: rows });
    }
    Ok(())
}

/// Growth bound at index `n`: the ratio `|x_p|_n / (theta_p^loss(n) |y|_n)`
/// must stay bounded along the trace, i.e. show no positive log-log trend.
pub fn check_growth_bound(
    trace: &IterationTrace,
    n: f64,
    exps: &DerivedExponents,
    cfg: &DiagnosticConfig,
) -> Result<FitReport, DiagnosticsError> {
    let y_n = trace.y_norm(n).ok_or(DiagnosticsError::MissingIndex(n))?;
    if y_n == 0.0 {
        return Err(DiagnosticsError::DegenerateInput);
    }
    let loss = exps.loss(n);
    let mut thetas = Vec::new();
    let mut ratios = Vec::new();
    for row in usable_rows(trace) {
        // x_0 = 0 carries no growth information.
        let x_n = trace.x_norm(row, n).ok_or(DiagnosticsError::MissingIndex(n))?;
        if x_n > 0.0 {
            thetas.push(row.theta);
            ratios.push(x_n / (row.theta.powf(loss) * y_n));
        }
    }
    require_rows(thetas.len(), cfg.min_rows)?;
    let slope = fit::log_log_slope(&thetas, &ratios)
        .ok_or(DiagnosticsError::DegenerateInput)?;
    let k_hat = ratios.iter().fold(0.0f64, |a, &b| a.max(b));
    Ok(FitReport {
        quantity: Quantity::GrowthL,
        predicted: 0.0,
        measured: slope,
        pass: slope <= cfg.slope_bound,
        rows_used: thetas.len(),
        constant: Some(k_hat),
        index: Some(n),
        flag: None,
    })
}

/// Residual decay at index `d`: fitted exponent of `|z_p|_d` against
/// `theta_p` must reach the predicted `mu` up to the declared slack.
pub fn check_residual_decay(
    trace: &IterationTrace,
    exps: &DerivedExponents,
    cfg: &DiagnosticConfig,
) -> Result<FitReport, DiagnosticsError> {
    if exps.mu == 0.0 {
        // No decay is guaranteed; any trace satisfies the bound.
        return Ok(FitReport {
            quantity: Quantity::ResidualMu,
            predicted: 0.0,
            measured: 0.0,
            pass: true,
            rows_used: 0,
            constant: None,
            index: None,
            flag: Some("degenerate: mu = 0".into()),
        });
    }
    let rows: Vec<&TraceRow> = usable_rows(trace)
        .into_iter()
        .filter(|r| r.z_d >= cfg.residual_floor)
        .collect();
    require_rows(rows.len(), cfg.min_rows)?;
    let thetas: Vec<f64> = rows.iter().map(|r| r.theta).collect();
    let residuals: Vec<f64> = rows.iter().map(|r| r.z_d).collect();
    let slope = fit::log_log_slope(&thetas, &residuals)
        .ok_or(DiagnosticsError::DegenerateInput)?;
    let measured = -slope;
    // Reported constant: sup of |z_p|_d theta_p^mu / |y|_s0.
    let m_hat = rows
        .iter()
        .map(|r| r.z_d * r.theta.powf(exps.mu) / trace.y_norm_s0.max(f64::MIN_POSITIVE))
        .fold(0.0f64, f64::max);
    Ok(FitReport {
        quantity: Quantity::ResidualMu,
        predicted: exps.mu,
        measured,
        pass: measured >= exps.mu * (1.0 - cfg.decay_slack),
        rows_used: rows.len(),
        constant: Some(m_hat),
        index: None,
        flag: None,
    })
}

/// Residual decay at arbitrary rates: for each `a` the partial suprema of
/// `|z_p|_d theta_p^a` must settle instead of climbing.
pub fn check_decay_rates(
    trace: &IterationTrace,
    a_grid: &[f64],
    cfg: &DiagnosticConfig,
) -> Result<Vec<FitReport>, DiagnosticsError> {
    let rows: Vec<&TraceRow> = usable_rows(trace)
        .into_iter()
        .filter(|r| r.z_d >= cfg.residual_floor)
        .collect();
    require_rows(rows.len(), cfg.min_rows)?;
    let mut reports = Vec::new();
    for &a in a_grid {
        let mut sup = 0.0f64;
        let mut pass = true;
        let mut prev_sup: Option<f64> = None;
        for row in &rows {
            sup = sup.max(row.z_d * row.theta.powf(a));
            if let Some(prev) = prev_sup {
                if sup > cfg.growth_factor * prev {
                    pass = false;
                }
            }
            prev_sup = Some(sup);
        }
        reports.push(FitReport {
            quantity: Quantity::ResidualA,
            predicted: a,
            measured: sup,
            pass,
            rows_used: rows.len(),
            constant: Some(sup),
            index: None,
            flag: None,
        });
    }
    Ok(reports)
}

/// Increment decay at each index plus the telescoping witness that the
/// iterates form a Cauchy sequence: tail sums of `|dx_p|_d` must be
/// non-increasing in `p`.
pub fn check_increment_decay_and_cauchy(
    trace: &IterationTrace,
    n_grid: &[f64],
    b: f64,
    cfg: &DiagnosticConfig,
) -> Result<Vec<FitReport>, DiagnosticsError> {
    let rows: Vec<&TraceRow> = usable_rows(trace)
        .into_iter()
        .filter(|r| r.dx_d > 0.0)
        .collect();
    let mut reports = Vec::new();

    for &n in n_grid {
        let mut thetas = Vec::new();
        let mut increments = Vec::new();
        for row in &rows {
            let dx_n = trace.dx_norm(row, n).ok_or(DiagnosticsError::MissingIndex(n))?;
            if dx_n >= cfg.residual_floor {
                thetas.push(row.theta);
                increments.push(dx_n);
            }
        }
        if thetas.len() < cfg.min_rows {
            // A trace that converges in one or two increments satisfies the
            // bound vacuously.
            reports.push(FitReport {
                quantity: Quantity::AllIndexB,
                predicted: b,
                measured: 0.0,
                pass: true,
                rows_used: thetas.len(),
                constant: None,
                index: Some(n),
                flag: Some("vacuous: too few nonzero increments".into()),
            });
            continue;
        }
        let slope = fit::log_log_slope(&thetas, &increments)
            .ok_or(DiagnosticsError::DegenerateInput)?;
        let measured = -slope;
        reports.push(FitReport {
            quantity: Quantity::AllIndexB,
            predicted: b,
            measured,
            pass: measured >= 0.75 * b,
            rows_used: thetas.len(),
            constant: None,
            index: Some(n),
            flag: None,
        });
    }

    // Cauchy witness on the increment column at index d.
    let all_dx: Vec<f64> = trace.rows.iter().map(|r| r.dx_d).collect();
    let mut tail: f64 = all_dx.iter().sum();
    let mut pass = true;
    let mut max_tail = tail;
    for dx in &all_dx {
        let next_tail = tail - dx;
        if next_tail > tail {
            pass = false;
        }
        max_tail = max_tail.max(tail);
        tail = next_tail;
    }
    reports.push(FitReport {
        quantity: Quantity::Cauchy,
        predicted: 0.0,
        measured: max_tail,
        pass,
        rows_used: all_dx.len(),
        constant: Some(max_tail),
        index: Some(trace.d),
        flag: None,
    });
    Ok(reports)
}

/// Domain confinement: every trace solved with `|y|_s0` below the radius
/// must keep `|x_p|_d < 1` at every recorded step. Also reports the largest
/// telescoped `sum_p |dx_p|_d / |y|_s0`, the observable summability
/// constant.
pub fn check_domain_confinement(
    traces: &[&IterationTrace],
    delta: f64,
    _cfg: &DiagnosticConfig,
) -> FitReport {
    let mut worst_x = 0.0f64;
    let mut worst_sum = 0.0f64;
    let mut rows_used = 0usize;
    let mut considered = 0usize;
    for trace in traces {
        if trace.y_norm_s0 >= delta {
            continue;
        }
        considered += 1;
        let mut dx_sum = 0.0;
        for row in &trace.rows {
            worst_x = worst_x.max(row.x_d);
            dx_sum += row.dx_d;
            rows_used += 1;
        }
        if trace.y_norm_s0 > 0.0 {
            worst_sum = worst_sum.max(dx_sum / trace.y_norm_s0);
        }
    }
    FitReport {
        quantity: Quantity::DeltaDomain,
        predicted: 1.0,
        measured: worst_x,
        pass: considered > 0 && worst_x < 1.0,
        rows_used,
        constant: Some(worst_sum),
        index: None,
        flag: if considered == 0 {
            Some("no trace below the radius".into())
        } else {
            None
        },
    }
}

/// Inverse bound: over solved pairs `(y, x)` the ratio `|x|_d / |y|_s0`
/// must stay finite with no trend as the data shrinks.
pub fn check_inverse_bound(
    pairs: &[(GradedElement, GradedElement)],
    s0: f64,
    d: f64,
    cfg: &DiagnosticConfig,
) -> Result<FitReport, DiagnosticsError> {
    if pairs.len() < 5 {
        return Err(DiagnosticsError::InsufficientInstances {
            needed: 5,
            decades: 2.0,
        });
    }
    let s0_idx = SeminormIndex::new(s0);
    let d_idx = SeminormIndex::new(d);
    let mut sizes = Vec::new();
    let mut ratios = Vec::new();
    for (y, x) in pairs {
        let y_norm = y.seminorm(s0_idx);
        if y_norm == 0.0 {
            return Err(DiagnosticsError::DegenerateInput);
        }
        sizes.push(y_norm);
        ratios.push(x.seminorm(d_idx) / y_norm);
    }
    let (lo, hi) = sizes
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    if hi / lo < 99.0 {
        return Err(DiagnosticsError::InsufficientInstances {
            needed: pairs.len(),
            decades: (hi / lo).log10(),
        });
    }
    let slope = fit::log_log_slope(&sizes, &ratios).ok_or(DiagnosticsError::DegenerateInput)?;
    let c_hat = ratios.iter().fold(0.0f64, |a, &b| a.max(b));
    Ok(FitReport {
        quantity: Quantity::TheoremBound,
        predicted: 0.0,
        measured: slope,
        pass: slope.abs() <= cfg.trend_band && c_hat.is_finite(),
        rows_used: pairs.len(),
        constant: Some(c_hat),
        index: None,
        flag: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::SolveStatus;

    /// Hand-built trace with prescribed cutoff and residual columns.
    fn synthetic_trace(thetas: &[f64], z: &[f64], truncation: usize) -> IterationTrace {
        let rows = thetas
            .iter()
            .zip(z)
            .enumerate()
            .map(|(p, (&theta, &z_d))| TraceRow {
                p: p as u32,
                theta,
                x_d: 0.5 * (1.0 - z_d),
                x_s0: 1.0,
                z_d,
                z_s0: z_d * 10.0,
                dx_d: z_d * 0.5,
                x_grid: vec![],
                dx_grid: vec![],
                neumann_terms: 1,
            })
            .collect();
        IterationTrace {
            truncation,
            d: 1.0,
            s0: 16.5,
            n_grid: vec![],
            y_norm_d: 0.1,
            y_norm_s0: 0.2,
            y_norm_grid: vec![],
            rows,
            status: SolveStatus::Converged,
        }
    }

    fn exps_for_test() -> DerivedExponents {
        let constants = crate::problem::ProblemConstants {
            condition_constants: [1.0; 7],
            d: SeminormIndex::new(1.0),
            l: SeminormIndex::new(0.0),
            lambda: 1.0,
            m: 0.0,
        };
        let params = crate::solver::ScheduleParams::new(1.0, Some(1.5)).unwrap();
        crate::solver::derive_exponents(&constants, &params).unwrap()
    }

    #[test]
    fn row_filter_drops_inert_cutoffs_and_floored_residuals() {
        // N = 8: rows with theta > 9 are untrusted; z below 1e-14 excluded
        // from decay fits.
        let trace = synthetic_trace(&[2.0, 4.0, 8.0, 16.0], &[1e-2, 1e-6, 1e-15, 1e-16], 8);
        let usable = usable_rows(&trace);
        assert_eq!(usable.len(), 3);
        assert!(usable.iter().all(|r| r.theta <= 9.0));

        let cfg = DiagnosticConfig::default();
        let exps = exps_for_test();
        // only two rows survive both filters -> insufficient
        let err = check_residual_decay(&trace, &exps, &cfg);
        assert!(matches!(err, Err(DiagnosticsError::InsufficientRows { got: 2, .. })));
    }

    #[test]
    fn residual_decay_recovers_an_exact_power_law() {
        let thetas = [2.0, 2.83, 4.76, 8.0, 33.4];
        let z: Vec<f64> = thetas.iter().map(|t: &f64| 10.0 * t.powf(-9.0)).collect();
        let trace = synthetic_trace(&thetas, &z, 128);
        let cfg = DiagnosticConfig::default();
        let exps = exps_for_test(); // mu = 7
        let report = check_residual_decay(&trace, &exps, &cfg).unwrap();
        assert!((report.measured - 9.0).abs() < 1e-9);
        assert!(report.pass);
        assert_eq!(report.rows_used, 5);
    }

    #[test]
    fn residual_decay_fails_when_too_slow() {
        let thetas = [2.0, 2.83, 4.76, 8.0];
        let z: Vec<f64> = thetas.iter().map(|t: &f64| 0.3 * t.powf(-2.0)).collect();
        let trace = synthetic_trace(&thetas, &z, 128);
        let report = check_residual_decay(&trace, &exps_for_test(), &DiagnosticConfig::default())
            .unwrap();
        assert!(!report.pass); // 2.0 < 0.75 * 7
    }

    #[test]
    fn growth_check_rejects_zero_targets() {
        let mut trace = synthetic_trace(&[2.0, 4.0, 8.0], &[1e-2, 1e-4, 1e-8], 64);
        trace.y_norm_d = 0.0;
        let err = check_growth_bound(&trace, 1.0, &exps_for_test(), &DiagnosticConfig::default());
        assert!(matches!(err, Err(DiagnosticsError::DegenerateInput)));
    }

    #[test]
    fn growth_check_passes_for_saturating_iterates() {
        let trace = synthetic_trace(&[2.0, 2.83, 4.76, 8.0], &[1e-1, 1e-3, 1e-6, 1e-9], 64);
        let report =
            check_growth_bound(&trace, 1.0, &exps_for_test(), &DiagnosticConfig::default())
                .unwrap();
        // x_d saturates while theta^loss grows: strongly negative trend.
        assert!(report.measured < 0.0);
        assert!(report.pass);
    }

    #[test]
    fn rate_zero_reports_the_max_residual() {
        let thetas = [2.0, 2.83, 4.76, 8.0];
        let z = [1e-2, 1e-4, 1e-6, 1e-8];
        let trace = synthetic_trace(&thetas, &z, 64);
        let reports =
            check_decay_rates(&trace, &[0.0], &DiagnosticConfig::default()).unwrap();
        assert_eq!(reports.len(), 1);
        assert!(reports[0].pass);
        assert_eq!(reports[0].measured, 1e-2);
    }

    #[test]
    fn fast_decay_passes_every_finite_rate() {
        let thetas = [2.0, 2.83, 4.76, 8.0, 33.4];
        // double-exponential style decay
        let z = [1e-1, 1e-3, 1e-7, 1e-12, 1e-13];
        let trace = synthetic_trace(&thetas, &z, 128);
        let reports = check_decay_rates(&trace, &[7.0, 8.0, 10.0], &DiagnosticConfig::default())
            .unwrap();
        assert!(reports.iter().all(|r| r.pass));
    }

    #[test]
    fn single_step_increment_is_vacuously_fine() {
        let mut trace = synthetic_trace(&[2.0, 2.83], &[1e-2, 1e-12], 64);
        trace.rows[1].dx_d = 0.0;
        let reports =
            check_increment_decay_and_cauchy(&trace, &[1.0], 6.0, &DiagnosticConfig::default())
                .unwrap();
        let vacuous = reports
            .iter()
            .find(|r| r.quantity == Quantity::AllIndexB)
            .unwrap();
        assert!(vacuous.pass);
        assert!(vacuous.flag.as_deref().unwrap_or("").contains("vacuous"));
        let cauchy = reports
            .iter()
            .find(|r| r.quantity == Quantity::Cauchy)
            .unwrap();
        assert!(cauchy.pass);
    }

    #[test]
    fn domain_confinement_flags_excursions() {
        let inside = synthetic_trace(&[2.0, 4.0], &[1e-2, 1e-6], 64);
        let mut outside = synthetic_trace(&[2.0, 4.0], &[1e-2, 1e-6], 64);
        outside.rows[1].x_d = 1.5;
        let cfg = DiagnosticConfig::default();
        let ok = check_domain_confinement(&[&inside], 0.5, &cfg);
        assert!(ok.pass);
        let bad = check_domain_confinement(&[&inside, &outside], 0.5, &cfg);
        assert!(!bad.pass);
        assert_eq!(bad.measured, 1.5);
    }

    #[test]
    fn inverse_bound_requires_spread_and_rejects_zeros() {
        let mk = |amp: f64| {
            let y = GradedElement::from_modes(
                4,
                &[(1, num_complex::Complex64::new(amp, 0.0))],
            )
            .unwrap();
            let x = y.scaled(0.5);
            (y, x)
        };
        let cfg = DiagnosticConfig::default();
        let narrow: Vec<_> = (1..=6).map(|i| mk(0.1 * i as f64)).collect();
        assert!(matches!(
            check_inverse_bound(&narrow, 2.0, 1.0, &cfg),
            Err(DiagnosticsError::InsufficientInstances { .. })
        ));

        let spread: Vec<_> = (0..8).map(|i| mk(1e-3 * 4f64.powi(i))).collect();
        let report = check_inverse_bound(&spread, 2.0, 1.0, &cfg).unwrap();
        // scaling-invariant ratio: slope exactly zero
        assert!(report.pass);
        assert!(report.measured.abs() < 1e-12);

        let zeros = vec![(GradedElement::zero(4), GradedElement::zero(4)); 6];
        assert!(matches!(
            check_inverse_bound(&zeros, 2.0, 1.0, &cfg),
            Err(DiagnosticsError::DegenerateInput)
        ));
    }

    #[test]
    fn reports_serialize_identically_run_to_run() {
        let trace = synthetic_trace(&[2.0, 2.83, 4.76, 8.0], &[1e-2, 1e-4, 1e-6, 1e-8], 64);
        let cfg = DiagnosticConfig::default();
        let exps = exps_for_test();
        let a = serde_json::to_string(&check_residual_decay(&trace, &exps, &cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&check_residual_decay(&trace, &exps, &cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
