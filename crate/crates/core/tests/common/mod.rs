//! Shared oracles for the integration suites. Everything here is
//! independent of the library's own solution paths: dense linear algebra
//! instead of the series engine, plain iteration instead of the solver.

use nashmoser_core::space::{GradedElement, SmoothingParam};
use nashmoser_core::TameProblem;
use num_complex::Complex64;

/// Solve `(I - S_theta A) w = z` by dense Gaussian elimination, assembling
/// the matrix column by column from the problem's own operators. For
/// mean-zero problems the mean row is pinned to the identity (the smoothed
/// series never moves the mean mode either).
pub fn dense_series_solve(
    problem: &dyn TameProblem,
    x: &GradedElement,
    theta: SmoothingParam,
    z: &GradedElement,
) -> GradedElement {
    let n = problem.truncation_order();
    let dim = 2 * n + 1;
    let mut m = vec![Complex64::new(0.0, 0.0); dim * dim];
    for (j, k) in (-(n as i64)..=n as i64).enumerate() {
        let e = GradedElement::from_modes(n, &[(k, Complex64::new(1.0, 0.0))]).unwrap();
        let ae = e
            .sub(&problem.derivative(x, &problem.approx_inverse(x, &e)))
            .smooth(theta);
        let col = e.sub(&ae);
        for (i, (_, c)) in col.iter_modes().enumerate() {
            m[i * dim + j] = c;
        }
    }
    let mut rhs: Vec<Complex64> = z.iter_modes().map(|(_, c)| c).collect();
    if problem.mean_zero() {
        let mean = n;
        for j in 0..dim {
            m[mean * dim + j] = Complex64::new(0.0, 0.0);
        }
        m[mean * dim + mean] = Complex64::new(1.0, 0.0);
        rhs[mean] = Complex64::new(0.0, 0.0);
    }

    // Gaussian elimination with partial pivoting.
    for col in 0..dim {
        let mut best = col;
        for row in (col + 1)..dim {
            if m[row * dim + col].norm() > m[best * dim + col].norm() {
                best = row;
            }
        }
        assert!(m[best * dim + col].norm() > 0.0, "singular oracle system");
        if best != col {
            for j in 0..dim {
                m.swap(col * dim + j, best * dim + j);
            }
            rhs.swap(col, best);
        }
        let pivot = m[col * dim + col];
        for row in (col + 1)..dim {
            let factor = m[row * dim + col] / pivot;
            for j in col..dim {
                let s = factor * m[col * dim + j];
                m[row * dim + j] -= s;
            }
            let s = factor * rhs[col];
            rhs[row] -= s;
        }
    }
    for row in (0..dim).rev() {
        let mut acc = rhs[row];
        for j in (row + 1)..dim {
            acc -= m[row * dim + j] * rhs[j];
        }
        rhs[row] = acc / m[row * dim + row];
    }
    GradedElement::new(n, rhs).unwrap()
}

/// Undamped fixed-point iteration `x <- x - (apply(x) - y)`, run to a tight
/// residual. Independent of the solver's stepping entirely.
#[allow(dead_code)] // used by the acceptance suite only
pub fn fixed_point_solve(
    problem: &dyn TameProblem,
    y: &GradedElement,
    tol: f64,
    max_iter: usize,
) -> GradedElement {
    let d = problem.constants().d;
    let mut x = GradedElement::zero(problem.truncation_order());
    for _ in 0..max_iter {
        let residual = problem.apply(&x).sub(y);
        if residual.seminorm(d) < tol {
            break;
        }
        x = x.sub(&residual);
    }
    x
}
