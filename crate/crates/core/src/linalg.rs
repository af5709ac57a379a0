//! Small dense complex LU with partial pivoting, for precomputing frozen
//! linearization inverses at construction time.

use num_complex::Complex64;

#[derive(Debug, Clone)]
pub(crate) struct DenseLu {
    n: usize,
    lu: Vec<Complex64>,
    pivots: Vec<usize>,
}

impl DenseLu {
    /// Factor a row-major `n x n` matrix. Returns the smallest pivot
    /// magnitude alongside; callers reject near-singular systems.
    pub(crate) fn factor(n: usize, mut a: Vec<Complex64>) -> Result<(Self, f64), f64> {
        assert_eq!(a.len(), n * n);
        let mut pivots = vec![0usize; n];
        let mut min_pivot = f64::INFINITY;
        for col in 0..n {
            let mut best = col;
            let mut best_mag = a[col * n + col].norm();
            for row in (col + 1)..n {
                let mag = a[row * n + col].norm();
                if mag > best_mag {
                    best = row;
                    best_mag = mag;
                }
            }
            if best_mag == 0.0 {
                return Err(0.0);
            }
            min_pivot = min_pivot.min(best_mag);
            pivots[col] = best;
            if best != col {
                for j in 0..n {
                    a.swap(col * n + j, best * n + j);
                }
            }
            let inv = Complex64::new(1.0, 0.0) / a[col * n + col];
            for row in (col + 1)..n {
                let factor = a[row * n + col] * inv;
                a[row * n + col] = factor;
                for j in (col + 1)..n {
                    let sub = factor * a[col * n + j];
                    a[row * n + j] -= sub;
                }
            }
        }
        Ok((Self { n, lu: a, pivots }, min_pivot))
    }

    pub(crate) fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(rhs.len(), self.n);
        let n = self.n;
        let mut x = rhs.to_vec();
        for col in 0..n {
            x.swap(col, self.pivots[col]);
        }
        // forward substitution (unit lower factor)
        for row in 1..n {
            let mut acc = x[row];
            for col in 0..row {
                acc -= self.lu[row * n + col] * x[col];
            }
            x[row] = acc;
        }
        // back substitution
        for row in (0..n).rev() {
            let mut acc = x[row];
            for col in (row + 1)..n {
                acc -= self.lu[row * n + col] * x[col];
            }
            x[row] = acc / self.lu[row * n + row];
        }
        x
    }
}
