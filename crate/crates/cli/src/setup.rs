//! Resolution of a configuration into live objects: problem instance,
//! schedule, solver knobs, diagnostics grids, and the right-hand side.

use nashmoser_core::diagnostics::DiagnosticConfig;
use nashmoser_core::problems::ProblemSpec;
use nashmoser_core::sampling::build_target;
use nashmoser_core::space::{GradedElement, SeminormIndex};
use nashmoser_core::{
    derive_exponents, DerivedExponents, ProblemId, SamplerConfig, ScheduleParams, SolveConfig,
    TameProblem,
};

use crate::config::ExperimentConfig;

/// Config mistakes exit with usage status; a problem instance failing its
/// own invariants (divisor floor, loss factor out of range) is a negative
/// verification result instead.
pub enum SetupError {
    Config(String),
    Problem(String),
}

impl From<String> for SetupError {
    fn from(message: String) -> Self {
        SetupError::Config(message)
    }
}

pub struct Experiment {
    pub problem: Box<dyn TameProblem>,
    pub spec: ProblemSpec,
    pub params: ScheduleParams,
    pub exponents: DerivedExponents,
    pub solve_cfg: SolveConfig,
    pub diag_cfg: DiagnosticConfig,
    pub n_grid: Vec<f64>,
    pub a_grid: Vec<f64>,
    pub b: f64,
}

pub fn problem_spec(cfg: &ExperimentConfig) -> Result<ProblemSpec, String> {
    let id: ProblemId = cfg.raw("problem.id").parse()?;
    Ok(ProblemSpec {
        id,
        truncation: cfg.usize("problem.n")?,
        epsilon: cfg.f64("problem.epsilon")?,
        alpha: cfg.f64("problem.alpha")?,
    })
}

pub fn build_experiment(cfg: &ExperimentConfig) -> Result<Experiment, SetupError> {
    cfg.validate()?;
    let spec = problem_spec(cfg)?;
    let problem = spec.build().map_err(|e| SetupError::Problem(e.to_string()))?;

    let lambda = cfg
        .auto_f64("schedule.lambda")?
        .unwrap_or(problem.constants().lambda);
    let tau = cfg.auto_f64("schedule.tau")?;
    let params = ScheduleParams::new(lambda, tau).map_err(|e| SetupError::Config(e.to_string()))?;
    let exponents = derive_exponents(problem.constants(), &params)
        .map_err(|e| SetupError::Config(e.to_string()))?;

    let d = exponents.d;
    let n_grid = cfg
        .auto_list_f64("diag.n_grid")?
        .unwrap_or_else(|| vec![d, 2.0 * d + 1.0, exponents.s0]);
    let a_grid = cfg.auto_list_f64("diag.a_grid")?.unwrap_or_else(|| {
        let dm = d + exponents.m;
        vec![exponents.mu, exponents.mu + dm, exponents.mu + 2.0 * dm]
    });
    let b = cfg
        .auto_f64("diag.b")?
        .unwrap_or((exponents.mu - d - exponents.m).max(0.0));

    let solve_cfg = SolveConfig {
        residual_tol: cfg.f64("solver.residual_tol")?,
        max_iter: cfg.u32("solver.max_iter")?,
        neumann_tol: cfg.f64("solver.neumann_tol")?,
        neumann_max_terms: cfg.usize("solver.neumann_max_terms")?,
        n_grid: n_grid.clone(),
        domain_override: cfg.bool("solver.domain_override")?,
    };
    let diag_cfg = DiagnosticConfig {
        slope_bound: cfg.f64("diag.slope_bound")?,
        decay_slack: cfg.f64("diag.decay_slack")?,
        trend_band: cfg.f64("diag.trend_band")?,
        growth_factor: cfg.f64("diag.growth_factor")?,
        residual_floor: cfg.f64("diag.residual_floor")?,
        min_rows: 3,
    };
    Ok(Experiment {
        problem,
        spec,
        params,
        exponents,
        solve_cfg,
        diag_cfg,
        n_grid,
        a_grid,
        b,
    })
}

impl Experiment {
    /// Right-hand side from the `y.*` keys.
    pub fn target(&self, cfg: &ExperimentConfig) -> Result<GradedElement, String> {
        self.target_with_amplitude(cfg, cfg.f64("y.amplitude")?)
    }

    pub fn target_with_amplitude(
        &self,
        cfg: &ExperimentConfig,
        amplitude: f64,
    ) -> Result<GradedElement, String> {
        let decay = cfg.auto_f64("y.decay")?.unwrap_or(self.exponents.s0);
        Ok(build_target(
            self.problem.truncation_order(),
            cfg.u64("y.seed")?,
            amplitude,
            SeminormIndex::new(self.exponents.s0),
            decay,
            cfg.opt_usize("y.band_limit")?,
            self.problem.mean_zero(),
        ))
    }

    pub fn sampler_config(&self, cfg: &ExperimentConfig) -> Result<SamplerConfig, String> {
        let theta_grid = cfg.auto_list_f64("estimator.theta_grid")?.unwrap_or_default();
        Ok(SamplerConfig {
            samples: cfg.usize("estimator.samples")?,
            seed: cfg.u64("estimator.seed")?,
            index_grid: cfg.list_f64("estimator.index_grid")?,
            amplitude: cfg.f64("estimator.amplitude")?,
            decay: cfg.f64("estimator.decay")?,
            theta_grid,
            neumann_tol: cfg.f64("solver.neumann_tol")?,
            neumann_max_terms: cfg.usize("solver.neumann_max_terms")?,
        })
    }
}
