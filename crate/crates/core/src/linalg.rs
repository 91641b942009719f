//! Symmetric eigendecomposition helpers: definiteness checks and `M^{-1/2}`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Ridge factor applied once, relative to `trace(m) / d`, when an inverse
/// square root is requested for a matrix that is not positive definite.
pub const DEFAULT_RIDGE: f64 = 1e-8;

/// Relative tolerance used for symmetry checks.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Result of [`inv_sqrt`].
#[derive(Debug, Clone, PartialEq)]
pub struct InvSqrt {
    pub matrix: DMatrix<f64>,
    /// Diagonal shift that was added before decomposing, `0.0` if none.
    pub ridge_applied: f64,
    /// Smallest eigenvalue of the matrix actually decomposed.
    pub min_eigenvalue: f64,
}

fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Fails unless `m` is square and symmetric within `tol` relative to its
/// largest absolute entry.
pub fn check_symmetric(m: &DMatrix<f64>, tol: f64) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let scale = m.amax().max(1.0);
    let asym = max_asymmetry(m);
    if asym > tol * scale {
        return Err(Error::NotSymmetric {
            max_asymmetry: asym,
        });
    }
    Ok(())
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// True iff the smallest eigenvalue exceeds `tol * max(1, largest eigenvalue)`.
pub fn is_positive_definite(m: &DMatrix<f64>, tol: f64) -> Result<bool> {
    check_symmetric(m, tol.max(SYMMETRY_TOL))?;
    if m.nrows() == 0 {
        return Ok(false);
    }
    let ev = symmetric_eigenvalues(m);
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    Ok(lo > tol * hi.max(1.0))
}

/// `Q diag(lambda^{-1/2}) Q'` for symmetric `m = Q diag(lambda) Q'`.
///
/// If the smallest eigenvalue is not positive (up to rounding), `ridge *
/// trace(m) / d` is added to the diagonal once and the decomposition
/// retried. A matrix that is still singular yields
/// [`Error::NotPositiveDefinite`].
pub fn inv_sqrt(m: &DMatrix<f64>, ridge: f64) -> Result<InvSqrt> {
    check_symmetric(m, SYMMETRY_TOL)?;
    let d = m.nrows();
    if d == 0 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: 0,
        });
    }
    // Symmetrize so rounding-level asymmetry cannot leak into the result.
    let sym = (m + m.transpose()) * 0.5;

    let mut shift = 0.0;
    let mut eig = SymmetricEigen::new(sym.clone());
    let mut lo = eig.eigenvalues.min();
    if !eigen_positive(&eig) {
        shift = ridge * sym.trace() / d as f64;
        let mut shifted = sym;
        for i in 0..d {
            shifted[(i, i)] += shift;
        }
        eig = SymmetricEigen::new(shifted);
        lo = eig.eigenvalues.min();
        if !eigen_positive(&eig) {
            return Err(Error::NotPositiveDefinite { min_eigenvalue: lo });
        }
    }

    let scaled = DMatrix::from_fn(d, d, |i, j| {
        eig.eigenvectors[(i, j)] / eig.eigenvalues[j].sqrt()
    });
    let out = &scaled * eig.eigenvectors.transpose();
    Ok(InvSqrt {
        matrix: (&out + out.transpose()) * 0.5,
        ridge_applied: shift,
        min_eigenvalue: lo,
    })
}

fn eigen_positive(eig: &SymmetricEigen<f64, nalgebra::Dyn>) -> bool {
    let lo = eig.eigenvalues.min();
    let hi = eig.eigenvalues.amax();
    let floor = f64::EPSILON * eig.eigenvalues.len() as f64 * hi;
    lo.is_finite() && lo > floor
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
        (a - b).amax() <= tol
    }

    #[test]
    fn definiteness_examples() {
        assert!(is_positive_definite(&DMatrix::identity(3, 3), 1e-6).unwrap());
        assert!(!is_positive_definite(&DMatrix::zeros(3, 3), 1e-6).unwrap());
        let near = DMatrix::from_row_slice(2, 2, &[1.0, 0.999, 0.999, 1.0]);
        // Eigenvalues 1 +- 0.999.
        let ev = symmetric_eigenvalues(&near);
        assert!((ev[0] - 0.001).abs() < 1e-12 && (ev[1] - 1.999).abs() < 1e-12);
        assert!(is_positive_definite(&near, 1e-6).unwrap());
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(!is_positive_definite(&indefinite, 1e-6).unwrap());
    }

    #[test]
    fn rejects_nonsymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(
            is_positive_definite(&m, 1e-6),
            Err(Error::NotSymmetric { .. })
        ));
        assert!(matches!(
            inv_sqrt(&m, DEFAULT_RIDGE),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn scalar_multiples_of_identity() {
        let r = inv_sqrt(&DMatrix::identity(4, 4), DEFAULT_RIDGE).unwrap();
        assert!(close(&r.matrix, &DMatrix::identity(4, 4), 1e-15));
        let r = inv_sqrt(&(DMatrix::identity(3, 3) * 4.0), DEFAULT_RIDGE).unwrap();
        assert!(close(&r.matrix, &(DMatrix::identity(3, 3) * 0.5), 1e-15));
        assert_eq!(r.ridge_applied, 0.0);
    }

    #[test]
    fn two_by_two_closed_form() {
        // [[2,1],[1,2]] has eigenpairs 3 on (1,1)/sqrt2 and 1 on (1,-1)/sqrt2,
        // so M^{-1/2} = 0.5 [[a+b, a-b],[a-b, a+b]] with a = 3^{-1/2}, b = 1.
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let r = inv_sqrt(&m, DEFAULT_RIDGE).unwrap().matrix;
        let a = 1.0 / 3f64.sqrt();
        let expect = DMatrix::from_row_slice(
            2,
            2,
            &[
                0.5 * (a + 1.0),
                0.5 * (a - 1.0),
                0.5 * (a - 1.0),
                0.5 * (a + 1.0),
            ],
        );
        assert!(close(&r, &expect, 1e-14));
        let inv = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]) / 3.0;
        assert!(close(&(&r * &r), &inv, 1e-14));
        assert!(close(&(&r * &m * &r), &DMatrix::identity(2, 2), 1e-12));
    }

    #[test]
    fn ridge_rescues_semidefinite_and_zero_fails() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let r = inv_sqrt(&m, 1e-4).unwrap();
        assert!((r.ridge_applied - 1e-4).abs() < 1e-18);
        let err = inv_sqrt(&DMatrix::zeros(2, 2), DEFAULT_RIDGE).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { .. }));
    }
}
