//! The interface a concrete problem implements (the map, its derivative, an
//! approximate right inverse, declared constants) plus empirical estimation
//! of the seven tame-bound constants the solver's guarantees rest on.
//!
//! The constants are declared by each problem and certified empirically on a
//! seeded sample suite, not derived analytically; proving them for
//! composition operators is research, not plumbing. The estimator reports
//! the worst observed ratio per condition together with the inputs achieving
//! it, so a violated declaration is reproducible from the report alone.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fit;
use crate::neumann::{self, NeumannError};
use crate::sampling::{rng_from_seed, sample_element, SampleSpec};
use crate::space::{GradedElement, SeminormIndex, SmoothingParam, SpaceError, WeightTable};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("input outside the domain: |x|_{index} = {norm} >= 1")]
    OutsideDomain { index: f64, norm: f64 },
    #[error("divisor floor violated: |e^(2 pi i k a) - 1| (1+|k|)^{exponent} = {floor} at k = {at_frequency}, required >= {required}")]
    DivisorFloor {
        floor: f64,
        at_frequency: i64,
        exponent: f64,
        required: f64,
    },
    #[error("frozen linearization is numerically singular (pivot {pivot})")]
    NearSingular { pivot: f64 },
    #[error("estimated loss factor {0} >= 2; instance rejected")]
    LambdaTooLarge(f64),
    #[error("condition ({condition}) violated structurally: zero bound with nonzero left side {lhs}")]
    StructuralViolation { condition: u8, lhs: f64 },
    #[error("estimator needs at least {needed} usable points, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("invalid constants: {0}")]
    InvalidConstants(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("neumann engine: {0}")]
    Neumann(Box<NeumannError>),
}

impl From<NeumannError> for ProblemError {
    fn from(e: NeumannError) -> Self {
        ProblemError::Neumann(Box::new(e))
    }
}

/// Declared hypothesis constants of one problem instance: one multiplicative
/// constant per condition, the inverse-loss offset `d`, the domain and
/// remainder index `l`, the multiplicative loss factor `lambda` in `[1, 2)`,
/// and the smoothed-series growth exponent `m`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemConstants {
    pub condition_constants: [f64; 7],
    pub d: SeminormIndex,
    pub l: SeminormIndex,
    pub lambda: f64,
    pub m: f64,
}

impl ProblemConstants {
    pub fn validate(&self) -> Result<(), ProblemError> {
        if !(1.0..2.0).contains(&self.lambda) {
            return Err(ProblemError::InvalidConstants(format!(
                "lambda must lie in [1, 2), got {}",
                self.lambda
            )));
        }
        if self.m < 0.0 || !self.m.is_finite() {
            return Err(ProblemError::InvalidConstants(format!(
                "m must be finite and >= 0, got {}",
                self.m
            )));
        }
        if self.condition_constants.iter().any(|c| !(*c > 0.0)) {
            return Err(ProblemError::InvalidConstants(
                "condition constants must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn constant(&self, condition: u8) -> f64 {
        self.condition_constants[(condition - 1) as usize]
    }
}

/// A map with a tame derivative and an approximate right inverse, acting on
/// one fixed truncation. Implementations are immutable after construction
/// and every method is a pure function, so instances are safe to share
/// across threads.
pub trait TameProblem: Send + Sync {
    /// Catalog id, e.g. "P2".
    fn id(&self) -> &'static str;

    fn truncation_order(&self) -> usize;

    fn constants(&self) -> &ProblemConstants;

    /// The nonlinear map itself; maps zero to zero.
    fn apply(&self, x: &GradedElement) -> GradedElement;

    /// Exact derivative of `apply` at `x` in direction `v`.
    fn derivative(&self, x: &GradedElement, v: &GradedElement) -> GradedElement;

    /// Approximate right inverse of the derivative; linear in `y`.
    fn approx_inverse(&self, x: &GradedElement, y: &GradedElement) -> GradedElement;

    /// Whether the problem acts on the mean-zero subspace. Samplers and
    /// target builders project their draws accordingly.
    fn mean_zero(&self) -> bool {
        false
    }

    /// Index of the unit ball the hypotheses hold on.
    fn domain_index(&self) -> SeminormIndex {
        self.constants().l
    }
}

pub(crate) fn check_domain(problem: &dyn TameProblem, x: &GradedElement) -> Result<(), ProblemError> {
    let l = problem.domain_index();
    let norm = x.seminorm(l);
    if norm >= 1.0 {
        return Err(ProblemError::OutsideDomain {
            index: l.value(),
            norm,
        });
    }
    Ok(())
}

/// Second-order Taylor rest `apply(x + v) - apply(x) - derivative(x, v)`,
/// computed from the interface itself so the identity
/// `apply(x) + derivative(x, v) + remainder = apply(x + v)` is exact.
pub fn remainder(
    problem: &dyn TameProblem,
    x: &GradedElement,
    v: &GradedElement,
) -> Result<GradedElement, ProblemError> {
    check_domain(problem, x)?;
    check_domain(problem, &x.add(v))?;
    let shifted = problem.apply(&x.add(v));
    Ok(shifted.sub(&problem.apply(x)).sub(&problem.derivative(x, v)))
}

/// Right-inverse defect `derivative(x, approx_inverse(x, y)) - y`. Vanishes
/// identically at `x = 0` for every catalog problem.
pub fn defect(
    problem: &dyn TameProblem,
    x: &GradedElement,
    y: &GradedElement,
) -> Result<GradedElement, ProblemError> {
    check_domain(problem, x)?;
    Ok(problem.derivative(x, &problem.approx_inverse(x, y)).sub(y))
}

/// Estimator configuration: sample count, seed, the seminorm indices the
/// ratios are evaluated at, and the amplitude/decay shape of the draws
/// (chosen to keep `|x|_l` safely inside the unit ball).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub samples: usize,
    pub seed: u64,
    pub index_grid: Vec<f64>,
    /// Target `|x|_l` of primary draws.
    pub amplitude: f64,
    /// Spectral decay of the draws.
    pub decay: f64,
    /// Cutoff grid for the smoothed-series condition (7); empty means powers
    /// of two up to `2N`.
    pub theta_grid: Vec<f64>,
    pub neumann_tol: f64,
    pub neumann_max_terms: usize,
}

impl SamplerConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            samples: 200,
            seed,
            index_grid: vec![0.0, 0.5, 1.0, 2.0, 4.0, 8.0],
            amplitude: 0.5,
            decay: 3.0,
            theta_grid: Vec::new(),
            neumann_tol: 1e-12,
            neumann_max_terms: 200,
        }
    }

    pub fn samples(mut self, n: usize) -> Self {
        self.samples = n;
        self
    }

    fn effective_theta_grid(&self, truncation: usize) -> Vec<f64> {
        if !self.theta_grid.is_empty() {
            return self.theta_grid.clone();
        }
        let mut grid = Vec::new();
        let mut theta = 2.0;
        while theta <= (2 * truncation) as f64 {
            grid.push(theta);
            theta *= 2.0;
        }
        grid
    }
}

/// Inputs achieving the worst ratio of one condition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorstCase {
    pub ratio: f64,
    pub index: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    pub inputs: Vec<(String, GradedElement)>,
}

/// Empirical certificate for one condition: the worst lhs/rhs ratio over the
/// seeded suite, per-index breakdown, and any fitted exponent (the loss
/// factor for condition (5), the cutoff growth exponent for condition (7)).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition_id: u8,
    pub estimated_constant: f64,
    pub sample_count: usize,
    pub per_index: Vec<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitted_exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_ratios: Option<Vec<(f64, f64)>>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub skipped_thetas: Vec<f64>,
    pub worst_case_input: WorstCase,
}

struct RatioTracker {
    condition: u8,
    best: Option<WorstCase>,
    per_index: Vec<(f64, f64)>,
}

impl RatioTracker {
    fn new(condition: u8, index_grid: &[f64]) -> Self {
        Self {
            condition,
            best: None,
            per_index: index_grid.iter().map(|&n| (n, 0.0)).collect(),
        }
    }

    fn record(
        &mut self,
        lhs: f64,
        rhs: f64,
        index: f64,
        theta: Option<f64>,
        inputs: &[(&str, &GradedElement)],
    ) -> Result<(), ProblemError> {
        if rhs == 0.0 {
            if lhs > 1e-13 {
                return Err(ProblemError::StructuralViolation {
                    condition: self.condition,
                    lhs,
                });
            }
            return Ok(());
        }
        let ratio = lhs / rhs;
        if let Some(slot) = self.per_index.iter_mut().find(|(n, _)| *n == index) {
            slot.1 = slot.1.max(ratio);
        }
        if self.best.as_ref().map_or(true, |b| ratio > b.ratio) {
            self.best = Some(WorstCase {
                ratio,
                index,
                theta,
                inputs: inputs
                    .iter()
                    .map(|(name, x)| (name.to_string(), (*x).clone()))
                    .collect(),
            });
        }
        Ok(())
    }

    fn finish(
        self,
        condition_id: u8,
        sample_count: usize,
        fitted_exponent: Option<f64>,
        theta_ratios: Option<Vec<(f64, f64)>>,
        skipped_thetas: Vec<f64>,
    ) -> Result<ConditionReport, ProblemError> {
        let best = self
            .best
            .ok_or(ProblemError::InsufficientData { needed: 1, got: 0 })?;
        Ok(ConditionReport {
            condition_id,
            estimated_constant: best.ratio,
            sample_count,
            per_index: self.per_index,
            fitted_exponent,
            theta_ratios,
            skipped_thetas,
            worst_case_input: best,
        })
    }
}

fn primary_spec(problem: &dyn TameProblem, cfg: &SamplerConfig) -> SampleSpec {
    SampleSpec::new(
        problem.truncation_order(),
        cfg.decay,
        problem.domain_index(),
        cfg.amplitude,
    )
    .mean_zero(problem.mean_zero())
}

fn secondary_spec(problem: &dyn TameProblem, cfg: &SamplerConfig) -> SampleSpec {
    // Keep |x + v|_l < 1 for the remainder condition.
    let amplitude = cfg.amplitude.min(0.9 - cfg.amplitude).max(0.1 * cfg.amplitude);
    SampleSpec::new(
        problem.truncation_order(),
        cfg.decay,
        problem.domain_index(),
        amplitude,
    )
    .mean_zero(problem.mean_zero())
}

/// Max over seeded samples of the lhs/rhs ratio of the named condition,
/// 1-based. For condition (7) the smoothed series is summed on a cutoff grid
/// and the growth exponent is fitted by log-log regression, skipping cutoffs
/// where the series diverges. Deterministic given the seed.
pub fn estimate_condition(
    problem: &dyn TameProblem,
    condition_id: u8,
    cfg: &SamplerConfig,
) -> Result<ConditionReport, ProblemError> {
    assert!((1..=7).contains(&condition_id), "condition id out of range");
    let trunc = problem.truncation_order();
    let consts = problem.constants();
    let d = consts.d;
    let l = consts.l;
    let lambda = consts.lambda;
    let mut rng = rng_from_seed(cfg.seed.wrapping_add(condition_id as u64));
    let x_spec = primary_spec(problem, cfg);
    let v_spec = secondary_spec(problem, cfg);
    let tables: Vec<WeightTable> = cfg
        .index_grid
        .iter()
        .map(|&n| WeightTable::new(trunc, SeminormIndex::new(n)))
        .collect();
    let mut tracker = RatioTracker::new(condition_id, &cfg.index_grid);

    if condition_id == 7 {
        return estimate_smoothed_series(problem, cfg, &mut rng, &x_spec, &v_spec, tracker);
    }

    for _ in 0..cfg.samples {
        let x = sample_element(&x_spec, &mut rng);
        let v = sample_element(&v_spec, &mut rng);
        match condition_id {
            1 => {
                let fx = problem.apply(&x);
                for table in &tables {
                    let n = SeminormIndex::new(table.index());
                    tracker.record(table.seminorm(&fx), x.seminorm(n), table.index(), None, &[("x", &x)])?;
                }
            }
            2 => {
                let dv = problem.derivative(&x, &v);
                for table in &tables {
                    let n = SeminormIndex::new(table.index());
                    let rhs = x.seminorm(n) * v.seminorm(d) + v.seminorm(n);
                    tracker.record(table.seminorm(&dv), rhs, table.index(), None, &[("x", &x), ("v", &v)])?;
                }
            }
            3 | 4 => {
                let def = defect(problem, &x, &v)?;
                for table in &tables {
                    let n = SeminormIndex::new(table.index());
                    let base = x.seminorm(n) * v.seminorm(d) + v.seminorm(n);
                    let rhs = if condition_id == 3 {
                        base * x.seminorm(n)
                    } else {
                        base
                    };
                    tracker.record(table.seminorm(&def), rhs, table.index(), None, &[("x", &x), ("y", &v)])?;
                }
            }
            5 => {
                let ly = problem.approx_inverse(&x, &v);
                for table in &tables {
                    let shifted = SeminormIndex::new(lambda * table.index() + d.value());
                    let rhs = x.seminorm(shifted) * v.seminorm(d) + v.seminorm(shifted);
                    tracker.record(table.seminorm(&ly), rhs, table.index(), None, &[("x", &x), ("y", &v)])?;
                }
            }
            6 => {
                let rest = remainder(problem, &x, &v)?;
                let vl = v.seminorm(l);
                for table in &tables {
                    let n = SeminormIndex::new(table.index());
                    let rhs = x.seminorm(n) * vl * vl + vl * v.seminorm(n);
                    tracker.record(table.seminorm(&rest), rhs, table.index(), None, &[("x", &x), ("v", &v)])?;
                }
            }
            _ => unreachable!(),
        }
    }

    let fitted = if condition_id == 5 {
        measure_loss_scaling(problem, cfg).ok()
    } else {
        None
    };
    tracker.finish(condition_id, cfg.samples, fitted, None, Vec::new())
}

/// Condition (7): ratios of the summed smoothed series against
/// `theta^m (|x|_n |z|_d + |z|_n)` with the declared `m`, plus a fitted
/// growth exponent from the un-normalized ratios.
fn estimate_smoothed_series(
    problem: &dyn TameProblem,
    cfg: &SamplerConfig,
    rng: &mut rand_chacha::ChaCha8Rng,
    x_spec: &SampleSpec,
    z_spec: &SampleSpec,
    mut tracker: RatioTracker,
) -> Result<ConditionReport, ProblemError> {
    let trunc = problem.truncation_order();
    let consts = problem.constants();
    let d = consts.d;
    let m = consts.m;
    let grid = cfg.effective_theta_grid(trunc);
    // The series engine is the expensive part; a reduced sample count per
    // cutoff keeps the suite at desk scale.
    let samples = (cfg.samples / 4).max(8);
    let mut per_theta_raw: Vec<(f64, f64)> = Vec::new();
    let mut skipped = Vec::new();

    for &theta in &grid {
        let theta_p = SmoothingParam::new(theta);
        let mut raw_max: Option<f64> = None;
        for _ in 0..samples {
            let x = sample_element(x_spec, rng);
            let z = sample_element(z_spec, rng);
            let result = match neumann::neumann_sum(
                problem,
                &x,
                theta_p,
                &z,
                cfg.neumann_tol,
                cfg.neumann_max_terms,
            ) {
                Ok(r) => r,
                Err(NeumannError::Divergence { .. }) => continue,
                Err(e) => return Err(e.into()),
            };
            if !result.converged {
                continue;
            }
            for &n in &cfg.index_grid {
                let idx = SeminormIndex::new(n);
                let lhs = result.sum.seminorm(idx);
                let base = x.seminorm(idx) * z.seminorm(d) + z.seminorm(idx);
                tracker.record(
                    lhs,
                    theta.powf(m) * base,
                    n,
                    Some(theta),
                    &[("x", &x), ("z", &z)],
                )?;
                if base > 0.0 {
                    let r = lhs / base;
                    raw_max = Some(raw_max.map_or(r, |b: f64| b.max(r)));
                }
            }
        }
        match raw_max {
            Some(r) => per_theta_raw.push((theta, r)),
            None => skipped.push(theta),
        }
    }

    if per_theta_raw.is_empty() {
        return Err(ProblemError::InsufficientData {
            needed: 1,
            got: 0,
        });
    }
    let thetas: Vec<f64> = per_theta_raw.iter().map(|p| p.0).collect();
    let ratios: Vec<f64> = per_theta_raw.iter().map(|p| p.1).collect();
    let fitted_m = fit::log_log_slope(&thetas, &ratios);
    tracker.finish(7, samples * grid.len(), fitted_m, Some(per_theta_raw), skipped)
}

/// Worst `|defect(0, y)|_d / |y|_d` over seeded draws; every catalog problem
/// must keep this at rounding level.
pub fn defect_at_zero_constant(
    problem: &dyn TameProblem,
    cfg: &SamplerConfig,
) -> Result<f64, ProblemError> {
    let mut rng = rng_from_seed(cfg.seed.wrapping_add(101));
    let spec = secondary_spec(problem, cfg);
    let zero = GradedElement::zero(problem.truncation_order());
    let d = problem.constants().d;
    let mut worst = 0.0f64;
    for _ in 0..cfg.samples.min(64) {
        let y = sample_element(&spec, &mut rng);
        let def = defect(problem, &zero, &y)?;
        worst = worst.max(def.seminorm(d) / y.seminorm(d));
    }
    Ok(worst)
}

/// Smallest loss factor on a candidate grid for which the per-index
/// constants of the inverse-growth condition stop trending upward in `n`.
/// An additive-loss inverse measures as 1; a genuinely multiplicative loss
/// pushes the fit above 1.
pub fn measure_loss_scaling(
    problem: &dyn TameProblem,
    cfg: &SamplerConfig,
) -> Result<f64, ProblemError> {
    let d = problem.constants().d;
    let mut rng = rng_from_seed(cfg.seed.wrapping_add(5));
    let x_spec = primary_spec(problem, cfg);
    let y_spec = secondary_spec(problem, cfg);
    let samples = cfg.samples.min(64);
    let draws: Vec<(GradedElement, GradedElement, GradedElement)> = (0..samples)
        .map(|_| {
            let x = sample_element(&x_spec, &mut rng);
            let y = sample_element(&y_spec, &mut rng);
            let ly = problem.approx_inverse(&x, &y);
            (x, y, ly)
        })
        .collect();
    let grid: Vec<f64> = cfg.index_grid.iter().copied().filter(|n| *n <= 8.0).collect();
    let mut candidate = 1.0f64;
    while candidate < 2.0 {
        let mut per_n = Vec::new();
        for &n in &grid {
            let idx = SeminormIndex::new(n);
            let shifted = SeminormIndex::new(candidate * n + d.value());
            let mut worst = 0.0f64;
            for (x, y, ly) in &draws {
                let rhs = x.seminorm(shifted) * y.seminorm(d) + y.seminorm(shifted);
                if rhs > 0.0 {
                    worst = worst.max(ly.seminorm(idx) / rhs);
                }
            }
            per_n.push(worst.max(f64::MIN_POSITIVE));
        }
        let logs: Vec<f64> = per_n.iter().map(|c| c.ln()).collect();
        if let Some(slope) = fit::slope(&grid, &logs) {
            if slope <= 0.05 {
                return Ok(candidate);
            }
        }
        candidate += 0.05;
    }
    Err(ProblemError::LambdaTooLarge(2.0))
}
