//! Seeded verification suite for the space inequalities: smoothing, rough
//! part, interpolation, exact splitting, and seminorm monotonicity, all with
//! constant one up to a relative tolerance.
//!
//! The suite recomputes seminorms through weight tables so a deliberately
//! skewed weight exponent (the negative control in the tests and the config)
//! breaks the inequalities and must be caught.

use serde::Serialize;

use crate::sampling::{rng_from_seed, sample_element, SampleSpec};
use crate::space::{check_interpolation, GradedElement, SeminormIndex, SmoothingParam, WeightTable};

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub samples: usize,
    /// Worst relative violation observed; at most the tolerance iff `pass`.
    pub max_violation: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_case: Option<String>,
    /// The sample achieving the violation, serialized for replay.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_sample: Option<GradedElement>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpaceSuiteReport {
    pub truncation: usize,
    pub index_grid: Vec<f64>,
    pub samples_per_pair: usize,
    pub tolerance: f64,
    pub weight_skew: f64,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
}

struct Violation {
    rel: f64,
    desc: String,
    sample: GradedElement,
}

fn track(
    worst: &mut Option<Violation>,
    lhs: f64,
    rhs: f64,
    sample: &GradedElement,
    desc: impl Fn() -> String,
) {
    // relative excess of lhs over rhs
    let rel = if lhs <= rhs {
        0.0
    } else if rhs == 0.0 {
        f64::INFINITY
    } else {
        lhs / rhs - 1.0
    };
    if worst.as_ref().map_or(true, |w| rel > w.rel) {
        *worst = Some(Violation {
            rel,
            desc: desc(),
            sample: sample.clone(),
        });
    }
}

fn finish(name: &str, samples: usize, worst: Option<Violation>, tol: f64) -> CheckResult {
    let (max_violation, worst_case, worst_sample) = match worst {
        Some(v) if v.rel > tol => (v.rel, Some(v.desc), Some(v.sample)),
        Some(v) => (v.rel, None, None),
        None => (0.0, None, None),
    };
    CheckResult {
        name: name.to_string(),
        samples,
        max_violation,
        pass: max_violation <= tol,
        worst_case,
        worst_sample,
    }
}

/// Run the suite: `samples_per_pair` draws for every admissible index pair
/// `(k, n)` of the grid. `weight_skew = 1` is the honest space; anything
/// else deliberately corrupts the grading as a negative control.
pub fn run_space_suite(
    truncation: usize,
    index_grid: &[f64],
    samples_per_pair: usize,
    seed: u64,
    tolerance: f64,
    weight_skew: f64,
) -> SpaceSuiteReport {
    let mut rng = rng_from_seed(seed);
    let tables: Vec<WeightTable> = index_grid
        .iter()
        .map(|&n| WeightTable::with_skew(truncation, SeminormIndex::new(n), weight_skew))
        .collect();
    let decays = [0.5, 1.5, 3.0];
    let theta_span = truncation as f64 + 3.0;

    let mut smoothing: Option<Violation> = None;
    let mut roughing: Option<Violation> = None;
    let mut splitting: Option<Violation> = None;
    let mut monotone: Option<Violation> = None;
    let mut pair_count = 0usize;

    for (ki, k_table) in tables.iter().enumerate() {
        for n_table in &tables[ki..] {
            pair_count += 1;
            let k = k_table.index();
            let n = n_table.index();
            for s in 0..samples_per_pair {
                let spec = SampleSpec::new(
                    truncation,
                    decays[s % decays.len()],
                    SeminormIndex::new(0.0),
                    1.0,
                );
                let x = sample_element(&spec, &mut rng);
                let theta_raw = 1.0 + (s as f64 / samples_per_pair.max(1) as f64) * theta_span;
                let theta = SmoothingParam::new(theta_raw);
                let smooth = x.smooth(theta);
                let rough = x.rough(theta);

                track(
                    &mut smoothing,
                    n_table.seminorm(&smooth),
                    theta_raw.powf(n - k) * k_table.seminorm(&x),
                    &x,
                    || format!("smoothing: k={k} n={n} theta={theta_raw}"),
                );
                track(
                    &mut roughing,
                    k_table.seminorm(&rough),
                    theta_raw.powf(-(n - k)) * n_table.seminorm(&x),
                    &x,
                    || format!("rough: k={k} n={n} theta={theta_raw}"),
                );
                let recombined = smooth.add(&rough);
                track(
                    &mut splitting,
                    recombined.sub(&x).max_abs(),
                    0.0,
                    &x,
                    || format!("splitting: theta={theta_raw}"),
                );
                track(
                    &mut monotone,
                    k_table.seminorm(&x),
                    n_table.seminorm(&x),
                    &x,
                    || format!("monotonicity: k={k} n={n}"),
                );
            }
        }
    }

    // Interpolation runs over index triples; the skew cancels there by
    // homogeneity, so it is checked with honest seminorms plus the skewed
    // exponent folded into the indices instead.
    let mut interpolation: Option<Violation> = None;
    let mut triple_count = 0usize;
    for (ki, &k) in index_grid.iter().enumerate() {
        for (li, &l) in index_grid.iter().enumerate().skip(ki) {
            for &n in index_grid.iter().skip(li) {
                triple_count += 1;
                for s in 0..samples_per_pair {
                    let spec = SampleSpec::new(
                        truncation,
                        decays[s % decays.len()],
                        SeminormIndex::new(0.0),
                        1.0,
                    );
                    let x = sample_element(&spec, &mut rng);
                    let ratio = check_interpolation(
                        &x,
                        SeminormIndex::new(k * weight_skew),
                        SeminormIndex::new(l * weight_skew),
                        SeminormIndex::new(n * weight_skew),
                    )
                    .expect("nonzero sample");
                    track(&mut interpolation, ratio, 1.0, &x, || {
                        format!("interpolation: k={k} l={l} n={n}")
                    });
                }
            }
        }
    }

    let splitting_check = {
        // absolute check: recombination error against machine zero
        let (max_violation, worst_case, worst_sample, pass) = match &splitting {
            Some(v) if v.rel.is_infinite() || v.rel > 0.0 => {
                (v.rel, Some(v.desc.clone()), Some(v.sample.clone()), false)
            }
            _ => (0.0, None, None, true),
        };
        CheckResult {
            name: "splitting_exact".into(),
            samples: pair_count * samples_per_pair,
            max_violation,
            pass,
            worst_case,
            worst_sample,
        }
    };

    let checks = vec![
        finish(
            "smoothing_inequality",
            pair_count * samples_per_pair,
            smoothing,
            tolerance,
        ),
        finish(
            "rough_inequality",
            pair_count * samples_per_pair,
            roughing,
            tolerance,
        ),
        finish(
            "interpolation_inequality",
            triple_count * samples_per_pair,
            interpolation,
            tolerance,
        ),
        splitting_check,
        finish(
            "seminorm_monotonicity",
            pair_count * samples_per_pair,
            monotone,
            tolerance,
        ),
    ];
    let pass = checks.iter().all(|c| c.pass);
    SpaceSuiteReport {
        truncation,
        index_grid: index_grid.to_vec(),
        samples_per_pair,
        tolerance,
        weight_skew,
        checks,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn honest_space_passes_at_desk_scale() {
        let report = run_space_suite(32, &[0.0, 0.5, 1.0, 2.0, 4.0, 8.0], 50, 7, 1e-12, 1.0);
        assert!(report.pass, "{:?}", report.checks);
    }

    #[test]
    fn minimal_space_passes() {
        let report = run_space_suite(1, &[0.0, 1.0, 2.0], 50, 7, 1e-12, 1.0);
        assert!(report.pass);
    }

    #[test]
    fn skewed_weights_are_caught() {
        let report = run_space_suite(32, &[0.0, 0.5, 1.0, 2.0, 4.0, 8.0], 50, 7, 1e-12, 1.1);
        assert!(!report.pass);
        let smoothing = &report.checks[0];
        assert!(!smoothing.pass);
        assert!(smoothing.worst_case.is_some());
    }
}
