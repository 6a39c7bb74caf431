//! Dense least squares for collapsed designs.

use nalgebra::{DMatrix, DVector};

pub(crate) struct LeastSquares {
    pub coef: Vec<f64>,
    pub fitted: Vec<f64>,
    pub rss: f64,
}

/// Least squares of `b` on the given columns; rank-deficient systems get the
/// minimum-norm solution (small singular values are truncated).
pub(crate) fn solve_least_squares(columns: &[Vec<f64>], b: &[f64]) -> LeastSquares {
    let n = b.len();
    let k = columns.len();
    if k == 0 {
        return LeastSquares {
            coef: Vec::new(),
            fitted: vec![0.0; n],
            rss: b.iter().map(|v| v * v).sum(),
        };
    }
    let a = DMatrix::from_fn(n, k, |i, j| columns[j][i]);
    let rhs = DVector::from_column_slice(b);
    let svd = a.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let eps = max_sv * n.max(k) as f64 * f64::EPSILON;
    let x = svd
        .solve(&rhs, eps)
        .expect("SVD solve with computed factors");
    let fitted_v = &a * &x;
    let rss = b
        .iter()
        .zip(fitted_v.iter())
        .map(|(&y, &f)| (y - f) * (y - f))
        .sum();
    LeastSquares {
        coef: x.iter().cloned().collect(),
        fitted: fitted_v.iter().cloned().collect(),
        rss,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_system_recovers_coefficients() {
        let cols = vec![vec![1.0, 1.0, 1.0, 1.0], vec![0.0, 1.0, 2.0, 3.0]];
        let b: Vec<f64> = (0..4).map(|i| 0.5 + 2.0 * i as f64).collect();
        let ls = solve_least_squares(&cols, &b);
        assert!((ls.coef[0] - 0.5).abs() < 1e-10);
        assert!((ls.coef[1] - 2.0).abs() < 1e-10);
        assert!(ls.rss < 1e-18);
    }

    #[test]
    fn rank_deficient_gets_minimum_norm() {
        // Two identical columns: the minimum-norm solution splits the weight.
        let cols = vec![vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]];
        let b = vec![2.0, 4.0, 6.0];
        let ls = solve_least_squares(&cols, &b);
        assert!((ls.coef[0] - 1.0).abs() < 1e-10);
        assert!((ls.coef[1] - 1.0).abs() < 1e-10);
        assert!(ls.rss < 1e-18);
    }

    #[test]
    fn empty_design_leaves_residual() {
        let ls = solve_least_squares(&[], &[3.0, 4.0]);
        assert_eq!(ls.rss, 25.0);
        assert_eq!(ls.fitted, vec![0.0, 0.0]);
    }
}
