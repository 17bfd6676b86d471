//! Thin bridge to nalgebra for the few dense decompositions we need.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView2};

fn to_dmatrix(a: ArrayView2<f64>) -> DMatrix<f64> {
    let (n, p) = a.dim();
    DMatrix::from_fn(n, p, |i, k| a[[i, k]])
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(a: ArrayView2<f64>) -> Array1<f64> {
    let m = to_dmatrix(a);
    let mut values: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Array1::from(values)
}

pub fn min_symmetric_eigenvalue(a: ArrayView2<f64>) -> f64 {
    symmetric_eigenvalues(a)[0]
}

pub fn max_symmetric_eigenvalue(a: ArrayView2<f64>) -> f64 {
    let v = symmetric_eigenvalues(a);
    v[v.len() - 1]
}

/// Singular values, descending.
pub fn singular_values(a: ArrayView2<f64>) -> Array1<f64> {
    let m = to_dmatrix(a);
    let mut values: Vec<f64> = m.singular_values().iter().copied().collect();
    values.sort_by(|x, y| y.total_cmp(x));
    Array1::from(values)
}

/// Minimum-norm least-squares solution of `a x = b`, plus the numerical rank of `a`.
pub(crate) fn lstsq(a: &Array2<f64>, b: &Array1<f64>) -> (Array1<f64>, usize) {
    let m = to_dmatrix(a.view());
    let rhs = nalgebra::DVector::from_iterator(b.len(), b.iter().copied());
    let svd = m.svd(true, true);
    let smax = svd.singular_values.max();
    let eps = smax * 1e-12 * (a.nrows().max(a.ncols()) as f64);
    let rank = svd.singular_values.iter().filter(|&&s| s > eps).count();
    let x = svd.solve(&rhs, eps).expect("u and v were computed");
    (x.iter().copied().collect(), rank)
}
