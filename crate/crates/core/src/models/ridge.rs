//! Ridge regression on VARMA-style window features.

use serde::{Deserialize, Serialize};

use crate::linalg::{cholesky, cholesky_solve, Matrix};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel<T> {
    pub weights: Vec<T>,
    pub intercept: T,
    pub lambda: T,
}

/// Fits `y ~ intercept + X w` with an L2 penalty on `w` only, through the
/// normal equations `(Xc^T Xc + lambda I) w = Xc^T (y - mean(y))`. `x` should
/// already be standardized. Returns `None` when the system is not positive definite.
pub fn fit_ridge<T: Real>(x: &Matrix<T>, y: &[T], lambda: T) -> Option<RidgeModel<T>> {
    assert_eq!(x.rows, y.len());
    let n = T::of_usize(x.rows.max(1));
    let mut col_mean = vec![T::zero(); x.cols];
    for r in 0..x.rows {
        for (m, &v) in col_mean.iter_mut().zip(x.row(r)) {
            *m += v;
        }
    }
    col_mean.iter_mut().for_each(|m| *m /= n);
    let mut centered = x.clone();
    for r in 0..centered.rows {
        for (v, &m) in centered.row_mut(r).iter_mut().zip(&col_mean) {
            *v -= m;
        }
    }
    let y_mean = y.iter().copied().sum::<T>() / n;
    let yc: Vec<T> = y.iter().map(|&v| v - y_mean).collect();
    let mut a = centered.gram();
    for i in 0..a.rows {
        let d = a.get(i, i) + lambda;
        a.set(i, i, d);
    }
    let l = cholesky(&a).ok()?;
    let weights = cholesky_solve(&l, &centered.t_mul_vec(&yc));
    let intercept = y_mean - weights.iter().zip(&col_mean).map(|(&w, &m)| w * m).sum::<T>();
    Some(RidgeModel {
        weights,
        intercept,
        lambda,
    })
}

impl<T: Real> RidgeModel<T> {
    pub fn predict_row(&self, row: &[T]) -> T {
        self.intercept + row.iter().zip(&self.weights).map(|(&a, &b)| a * b).sum::<T>()
    }
}
