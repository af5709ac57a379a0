//! The five subcommands. Each returns a process exit code; artifacts land
//! in the configured output directory.

use std::path::Path;

use serde::Serialize;

use nashmoser_core::diagnostics::{
    check_decay_rates, check_domain_confinement, check_growth_bound,
    check_increment_decay_and_cauchy, check_residual_decay, FitReport,
};
use nashmoser_core::problem::defect_at_zero_constant;
use nashmoser_core::problems::ProblemSpec;
use nashmoser_core::space::SeminormIndex;
use nashmoser_core::space_check::run_space_suite;
use nashmoser_core::{
    calibrate_delta, estimate_condition, solve, ConditionReport, ScheduleParams, SolveReport,
    SolverError,
};

use crate::artifacts::{trace_csv, OutputDir};
use crate::config::ExperimentConfig;
use crate::setup::{build_experiment, Experiment, SetupError};

/// Problem-construction failures are negative results (exit 1), not usage
/// errors.
macro_rules! experiment_or_return {
    ($cfg:expr) => {
        match build_experiment($cfg) {
            Ok(exp) => exp,
            Err(SetupError::Problem(message)) => {
                eprintln!("problem rejected: {message}");
                return Ok(1);
            }
            Err(SetupError::Config(message)) => return Err(message),
        }
    };
}

pub fn print_config(cfg: &ExperimentConfig) -> Result<i32, String> {
    print!("{}", cfg.annotated());
    println!("# config_hash = {}", cfg.hash());
    Ok(0)
}

pub fn verify_space(cfg: &ExperimentConfig) -> Result<i32, String> {
    cfg.validate()?;
    let out = OutputDir::create(Path::new(cfg.raw("output.dir")), &cfg.hash())?;
    let report = run_space_suite(
        cfg.usize("problem.n")?,
        &cfg.list_f64("space.index_grid")?,
        cfg.usize("space.samples")?,
        cfg.u64("seed")?,
        cfg.f64("space.tolerance")?,
        cfg.f64("space.weight_skew")?,
    );
    out.write_json("reports/space_report.json", &report)?;
    out.log("verify-space finished");
    for check in &report.checks {
        println!(
            "{:<28} {}  worst violation {:.3e} over {} samples",
            check.name,
            if check.pass { "pass" } else { "FAIL" },
            check.max_violation,
            check.samples
        );
        if let Some(worst) = &check.worst_case {
            println!("{:<28} first failure: {worst}", "");
        }
    }
    Ok(if report.pass { 0 } else { 1 })
}

#[derive(Serialize)]
struct ConditionSummary {
    condition_id: u8,
    estimated_constant: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    fitted_exponent: Option<f64>,
}

#[derive(Serialize)]
struct ProblemVerification {
    problem: ProblemSpec,
    declared: nashmoser_core::ProblemConstants,
    conditions: Vec<ConditionSummary>,
    defect_at_zero: f64,
    pass: bool,
}

pub fn verify_problem(cfg: &ExperimentConfig) -> Result<i32, String> {
    let exp = experiment_or_return!(cfg);
    let out = OutputDir::create(Path::new(cfg.raw("output.dir")), &cfg.hash())?;
    let sampler = exp.sampler_config(cfg)?;

    let mut summaries = Vec::new();
    let mut all_finite = true;
    for condition in 1..=7u8 {
        let report: ConditionReport = estimate_condition(exp.problem.as_ref(), condition, &sampler)
            .map_err(|e| format!("condition ({condition}): {e}"))?;
        all_finite &= report.estimated_constant.is_finite();
        println!(
            "condition ({condition}): constant {:.6}{}",
            report.estimated_constant,
            match report.fitted_exponent {
                Some(e) if condition == 5 => format!("  (fitted loss factor {e:.3})"),
                Some(e) if condition == 7 => format!("  (fitted cutoff exponent {e:.3})"),
                _ => String::new(),
            }
        );
        summaries.push(ConditionSummary {
            condition_id: condition,
            estimated_constant: report.estimated_constant,
            fitted_exponent: report.fitted_exponent,
        });
        out.write_json(&format!("reports/condition_{condition}.json"), &report)?;
    }
    let defect_zero = defect_at_zero_constant(exp.problem.as_ref(), &sampler)
        .map_err(|e| e.to_string())?;
    println!("defect at zero: {defect_zero:.3e}");
    let pass = all_finite && defect_zero <= 1e-10;
    let verification = ProblemVerification {
        problem: exp.spec.clone(),
        declared: exp.problem.constants().clone(),
        conditions: summaries,
        defect_at_zero: defect_zero,
        pass,
    };
    out.write_json("reports/problem_verification.json", &verification)?;
    out.log("verify-problem finished");
    Ok(if pass { 0 } else { 1 })
}

#[derive(Serialize)]
struct DiagnosticOutcome {
    name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<FitReport>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    reports: Vec<FitReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    skipped: Option<String>,
}

impl DiagnosticOutcome {
    fn single(name: impl Into<String>, result: Result<FitReport, impl ToString>) -> Self {
        match result {
            Ok(report) => Self {
                name: name.into(),
                report: Some(report),
                reports: Vec::new(),
                skipped: None,
            },
            Err(e) => Self {
                name: name.into(),
                report: None,
                reports: Vec::new(),
                skipped: Some(e.to_string()),
            },
        }
    }

    fn many(name: impl Into<String>, result: Result<Vec<FitReport>, impl ToString>) -> Self {
        match result {
            Ok(reports) => Self {
                name: name.into(),
                report: None,
                reports,
                skipped: None,
            },
            Err(e) => Self {
                name: name.into(),
                report: None,
                reports: Vec::new(),
                skipped: Some(e.to_string()),
            },
        }
    }

    fn violated(&self) -> bool {
        self.report.as_ref().map_or(false, |r| !r.pass)
            || self.reports.iter().any(|r| !r.pass)
    }
}

#[derive(Serialize)]
struct SolveSummary {
    problem: ProblemSpec,
    schedule: ScheduleParams,
    status: String,
    iterations: u32,
    final_residual: f64,
    domain_warning: bool,
    y_seed: u64,
    y_amplitude: f64,
    exponents: nashmoser_core::DerivedExponents,
    diagnostics_pass: bool,
    diagnostics: Vec<DiagnosticOutcome>,
}

fn run_diagnostics(exp: &Experiment, report: &SolveReport) -> Vec<DiagnosticOutcome> {
    let mut outcomes = Vec::new();
    for &n in &exp.n_grid {
        outcomes.push(DiagnosticOutcome::single(
            format!("growth_bound[n={n}]"),
            check_growth_bound(&report.trace, n, &exp.exponents, &exp.diag_cfg),
        ));
    }
    outcomes.push(DiagnosticOutcome::single(
        "residual_decay",
        check_residual_decay(&report.trace, &exp.exponents, &exp.diag_cfg),
    ));
    outcomes.push(DiagnosticOutcome::many(
        "decay_rates",
        check_decay_rates(&report.trace, &exp.a_grid, &exp.diag_cfg),
    ));
    // Increments near the index y is normalized at track band filling, not
    // the decay rate; fit them below the smoothness index only.
    let mut increment_grid: Vec<f64> = exp
        .n_grid
        .iter()
        .copied()
        .filter(|&n| n < exp.exponents.s)
        .collect();
    if increment_grid.is_empty() {
        increment_grid.push(exp.exponents.d);
    }
    outcomes.push(DiagnosticOutcome::many(
        "increment_decay_and_cauchy",
        check_increment_decay_and_cauchy(&report.trace, &increment_grid, exp.b, &exp.diag_cfg),
    ));
    let domain = check_domain_confinement(
        &[&report.trace],
        exp.exponents.delta * (1.0 + 1e-12),
        &exp.diag_cfg,
    );
    outcomes.push(DiagnosticOutcome {
        name: "domain_confinement".into(),
        report: Some(domain),
        reports: Vec::new(),
        skipped: None,
    });
    outcomes
}

pub fn solve_cmd(cfg: &ExperimentConfig) -> Result<i32, String> {
    let exp = experiment_or_return!(cfg);
    let out = OutputDir::create(Path::new(cfg.raw("output.dir")), &cfg.hash())?;
    let y = exp.target(cfg)?;
    let report = match solve(exp.problem.as_ref(), &y, &exp.params, &exp.solve_cfg) {
        Ok(r) => r,
        Err(SolverError::DomainPrecheck { norm, delta }) => {
            eprintln!("refused: |y|_s0 = {norm} is not below the domain radius {delta} (set solver.domain_override = true to explore)");
            return Ok(1);
        }
        Err(e) => return Err(e.to_string()),
    };

    let diagnostics = run_diagnostics(&exp, &report);
    let diagnostics_pass = !diagnostics.iter().any(|d| d.violated());
    let (header, rows) = trace_csv(&report.trace);
    out.write_csv("trace.csv", &header, &rows)?;
    let summary = SolveSummary {
        problem: exp.spec.clone(),
        schedule: exp.params,
        status: report.status.to_string(),
        iterations: report.iterations,
        final_residual: report.final_residual,
        domain_warning: report.domain_warning,
        y_seed: cfg.u64("y.seed")?,
        y_amplitude: cfg.f64("y.amplitude")?,
        exponents: report.exponents.clone(),
        diagnostics_pass,
        diagnostics,
    };
    out.write_json("summary.json", &summary)?;
    #[derive(Serialize)]
    struct DiagnosticsFile<'a> {
        diagnostics: &'a [DiagnosticOutcome],
    }
    out.write_json(
        "reports/diagnostics.json",
        &DiagnosticsFile {
            diagnostics: &summary.diagnostics,
        },
    )?;
    let diag_rows: Vec<String> = summary
        .diagnostics
        .iter()
        .flat_map(|o| o.report.iter().chain(o.reports.iter()))
        .map(|r| {
            format!(
                "{},{},{},{}",
                serde_json::to_value(r.quantity)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default(),
                r.predicted,
                r.measured,
                r.pass
            )
        })
        .collect();
    out.write_csv(
        "reports/diagnostics.csv",
        "quantity,predicted,measured,pass",
        &diag_rows,
    )?;
    out.log("solve finished");

    println!(
        "{}: {} after {} iterations, residual {:.3e}; diagnostics {}",
        exp.spec.id,
        summary.status,
        summary.iterations,
        summary.final_residual,
        if diagnostics_pass { "pass" } else { "FAIL" }
    );
    for outcome in &summary.diagnostics {
        if let Some(skipped) = &outcome.skipped {
            println!("  {:<32} skipped: {skipped}", outcome.name);
        }
        for r in outcome.report.iter().chain(outcome.reports.iter()) {
            println!(
                "  {:<32} {}  predicted {:.4} measured {:.4} ({} rows)",
                outcome.name,
                if r.pass { "pass" } else { "FAIL" },
                r.predicted,
                r.measured,
                r.rows_used
            );
        }
    }
    Ok(if report.is_success() && diagnostics_pass {
        0
    } else {
        if !report.is_success() {
            eprintln!("solve failed: {}", summary.status);
        }
        1
    })
}

pub fn sweep(cfg: &ExperimentConfig) -> Result<i32, String> {
    let base = experiment_or_return!(cfg);
    let out = OutputDir::create(Path::new(cfg.raw("output.dir")), &cfg.hash())?;
    let epsilons = cfg
        .auto_list_f64("sweep.epsilon_grid")?
        .unwrap_or_else(|| vec![base.spec.epsilon]);
    let taus = cfg
        .auto_list_f64("sweep.tau_grid")?
        .unwrap_or_else(|| vec![base.params.tau]);
    let workers = cfg.usize("sweep.workers")?.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| e.to_string())?;

    if cfg.bool("sweep.bisect")? {
        let probes = cfg.usize("sweep.probe_seeds")?.max(1);
        let iters = cfg.u32("sweep.bisect_iters")?;
        let probe_seeds: Vec<u64> = (0..probes as u64).map(|i| 201 + i).collect();
        let grid: Vec<(f64, f64)> = epsilons
            .iter()
            .flat_map(|&e| taus.iter().map(move |&t| (e, t)))
            .collect();
        let rows: Vec<String> = pool.install(|| {
            use rayon::prelude::*;
            grid.par_iter()
                .map(|&(epsilon, tau)| {
                    let row = bisect_row(cfg, epsilon, tau, &probe_seeds, iters);
                    match row {
                        Ok(delta) => format!("{epsilon},{tau},{delta}"),
                        Err(e) => format!("{epsilon},{tau},error: {}", e.replace(',', ";")),
                    }
                })
                .collect()
        });
        out.write_csv("sweep.csv", "epsilon,tau,delta_hat", &rows)?;
        out.log("sweep (bisect) finished");
        println!("{} bisection rows written", rows.len());
        return Ok(0);
    }

    let amplitudes = cfg
        .auto_list_f64("sweep.amplitude_grid")?
        .unwrap_or_else(|| vec![cfg.f64("y.amplitude").unwrap_or(0.05)]);
    let mut grid: Vec<(f64, f64, f64)> = Vec::new();
    for &e in &epsilons {
        for &a in &amplitudes {
            for &t in &taus {
                grid.push((e, a, t));
            }
        }
    }
    let rows: Vec<String> = pool.install(|| {
        use rayon::prelude::*;
        grid.par_iter()
            .map(|&(epsilon, amplitude, tau)| match sweep_row(cfg, epsilon, amplitude, tau) {
                Ok(row) => row,
                Err(e) => format!(
                    "{epsilon},{amplitude},{tau},error: {},,,",
                    e.replace(',', ";")
                ),
            })
            .collect()
    });
    out.write_csv(
        "sweep.csv",
        "epsilon,amplitude,tau,status,iterations,final_residual,mu_hat,c_hat",
        &rows,
    )?;
    out.log("sweep finished");
    println!("{} sweep rows written", rows.len());
    Ok(0)
}

fn configured_for(cfg: &ExperimentConfig, epsilon: f64, tau: f64) -> Result<(ExperimentConfig, Experiment), String> {
    let mut local = cfg.clone();
    local.set("problem.epsilon", &format!("{epsilon}"))?;
    local.set("schedule.tau", &format!("{tau}"))?;
    let exp = build_experiment(&local).map_err(|e| match e {
        SetupError::Problem(m) | SetupError::Config(m) => m,
    })?;
    Ok((local, exp))
}

fn bisect_row(
    cfg: &ExperimentConfig,
    epsilon: f64,
    tau: f64,
    probe_seeds: &[u64],
    iters: u32,
) -> Result<f64, String> {
    let (local, exp) = configured_for(cfg, epsilon, tau)?;
    let decay = local.auto_f64("y.decay")?;
    let band = local.opt_usize("y.band_limit")?;
    let cal = calibrate_delta(
        exp.problem.as_ref(),
        &exp.params,
        &exp.solve_cfg,
        decay,
        band,
        probe_seeds,
        iters,
    )
    .map_err(|e| e.to_string())?;
    Ok(cal.delta_hat)
}

fn sweep_row(
    cfg: &ExperimentConfig,
    epsilon: f64,
    amplitude: f64,
    tau: f64,
) -> Result<String, String> {
    let (local, exp) = configured_for(cfg, epsilon, tau)?;
    let y = exp.target_with_amplitude(&local, amplitude)?;
    let mut solve_cfg = exp.solve_cfg.clone();
    solve_cfg.domain_override = true;
    let report = solve(exp.problem.as_ref(), &y, &exp.params, &solve_cfg)
        .map_err(|e| e.to_string())?;
    let mu_hat = match check_residual_decay(&report.trace, &exp.exponents, &exp.diag_cfg) {
        Ok(r) => format!("{}", r.measured),
        Err(_) => "na".to_string(),
    };
    let d = SeminormIndex::new(exp.exponents.d);
    let y_s0 = report.trace.y_norm_s0;
    let c_hat = if y_s0 > 0.0 {
        format!("{}", report.solution.seminorm(d) / y_s0)
    } else {
        "na".to_string()
    };
    Ok(format!(
        "{epsilon},{amplitude},{tau},{},{},{},{mu_hat},{c_hat}",
        report.status, report.iterations, report.final_residual
    ))
}

