//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenvalue floor below which a covariance matrix is declared singular.
pub const EIGEN_FLOOR: f64 = 1e-10;

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(symmetrize(m))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Errors with [`Error::Rank`] if the smallest eigenvalue is under the floor.
pub fn require_positive_definite(m: &DMatrix<f64>) -> Result<()> {
    let min = min_eigenvalue(m);
    if min < EIGEN_FLOOR {
        return Err(Error::Rank {
            min_eigenvalue: min,
            floor: EIGEN_FLOOR,
        });
    }
    Ok(())
}

/// `V f(Λ) Vᵀ` for a symmetric matrix.
fn spectral_map<F: Fn(f64) -> f64>(m: &DMatrix<f64>, f: F) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let mapped = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|&l| f(l)));
    let v = &eig.eigenvectors;
    symmetrize(&(v * DMatrix::from_diagonal(&mapped) * v.transpose()))
}

/// Symmetric square root; negative round-off eigenvalues are clamped to 0.
pub fn sym_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    spectral_map(m, |l| l.max(0.0).sqrt())
}

/// Symmetric inverse square root with eigenvalues clamped at [`EIGEN_FLOOR`].
pub fn sym_inv_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    spectral_map(m, |l| 1.0 / l.max(EIGEN_FLOOR).sqrt())
}

/// Orthogonal `M` with `M x = z`, given `‖x‖ = ‖z‖`: the reflection through
/// the hyperplane orthogonal to `z − x`, or the identity when they coincide.
pub fn householder_between(x: &DVector<f64>, z: &DVector<f64>) -> DMatrix<f64> {
    let d = x.len();
    let w = z - x;
    let norm = w.norm();
    if norm <= 1e-12 {
        return DMatrix::identity(d, d);
    }
    let w = w / norm;
    DMatrix::identity(d, d) - (&w * w.transpose()) * 2.0
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).iter().fold(0.0, |acc, x| acc.max(x.abs()))
}
