//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{Error, Result};

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// `f(A)` for symmetric `A`, applied through the spectral decomposition.
pub fn sym_apply(a: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetrize(a));
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
    symmetrize(&(&eig.eigenvectors * d * eig.eigenvectors.transpose()))
}

pub fn sym_sqrt(a: &DMatrix<f64>) -> DMatrix<f64> {
    sym_apply(a, |x| x.max(0.0).sqrt())
}

pub fn sym_inv_sqrt(a: &DMatrix<f64>) -> DMatrix<f64> {
    sym_apply(a, |x| 1.0 / x.sqrt())
}

pub fn inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    a.clone()
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("singular matrix".into()))
}

pub fn relative_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Ratio of the smallest to the largest singular value of the matrix whose
/// columns are `vectors`; zero when there are fewer vectors than rows.
pub fn conditioning(vectors: &[DVector<f64>], dim: usize) -> f64 {
    if vectors.len() < dim || dim == 0 {
        return 0.0;
    }
    let m = DMatrix::from_columns(vectors);
    let sv = m.singular_values();
    let max = sv.max();
    if max <= 0.0 {
        0.0
    } else {
        sv.min() / max
    }
}
