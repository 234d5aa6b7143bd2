//! Dense real matrix kernels.
//!
//! Everything here is a pure function of its inputs. The SVD and the
//! symmetric eigensolver are backed by `nalgebra`; the power-iteration
//! operator norm is implemented directly so that its start vector and
//! iteration cap are fixed and reproducible.

use nalgebra::linalg::{SymmetricEigen, SVD};
use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};

/// Dense `rows x cols` real matrix.
pub type Matrix = DMatrix<f64>;

/// Singular values below this fraction of the largest one count as zero
/// when reporting numerical rank.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Builds a matrix from row-major entries, rejecting non-finite values.
pub fn matrix_from_row_major(rows: usize, cols: usize, entries: &[f64]) -> Result<Matrix> {
    if rows == 0 || cols == 0 {
        return Err(invalid(format!(
            "matrix dimensions must be positive, got {rows}x{cols}"
        )));
    }
    if entries.len() != rows * cols {
        return Err(invalid(format!(
            "expected {} entries for a {rows}x{cols} matrix, got {}",
            rows * cols,
            entries.len()
        )));
    }
    let m = Matrix::from_row_slice(rows, cols, entries);
    ensure_finite(&m)?;
    Ok(m)
}

/// Returns an error naming the first NaN/Inf entry, if any.
pub fn ensure_finite(a: &Matrix) -> Result<()> {
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            if !a[(i, j)].is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

/// `sqrt(sum a_ij^2)`.
pub fn frobenius_norm(a: &Matrix) -> f64 {
    a.norm()
}

/// Largest singular value by power iteration on `a^T a`.
///
/// The iteration is run twice, from the normalized all-ones vector and from
/// the normalized alternating-sign vector, and the larger estimate wins.
/// Centrosymmetric matrices (every Toeplitz covariance) have eigenvectors
/// that are either symmetric or skew-symmetric, and the all-ones vector alone
/// is blind to the skew ones.
///
/// A run stops once `||a^T a v - mu v|| <= tol * mu`. Hitting the cap of
/// `10 * max(rows, cols) + 200` iterations yields [`Error::NotConverged`];
/// callers can fall back to [`spectral_norm`].
pub fn operator_norm(a: &Matrix, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    if frobenius_norm(a) == 0.0 {
        return Ok(0.0);
    }
    let n = a.ncols();
    let cap = 10 * a.nrows().max(n) + 200;
    let ones = nalgebra::DVector::from_element(n, 1.0);
    let alternating = nalgebra::DVector::from_fn(n, |i, _| if i % 2 == 0 { 1.0 } else { -1.0 });

    let mut best: f64 = 0.0;
    for start in [ones, alternating] {
        best = best.max(power_iteration(a, start, tol, cap)?);
        if n == 1 {
            break;
        }
    }
    Ok(best)
}

fn power_iteration(
    a: &Matrix,
    start: nalgebra::DVector<f64>,
    tol: f64,
    cap: usize,
) -> Result<f64> {
    let mut v = start.normalize();
    let mut estimate = 0.0;
    for _ in 0..cap {
        let av = a * &v;
        let mu = av.norm_squared();
        estimate = mu.sqrt();
        if mu == 0.0 {
            // start vector lies in the null space
            return Ok(0.0);
        }
        let w = a.tr_mul(&av);
        let residual = (&w - &v * mu).norm();
        if residual <= tol * mu {
            return Ok(estimate);
        }
        let norm = w.norm();
        v = w / norm;
    }
    Err(Error::NotConverged {
        routine: "operator_norm power iteration",
        iterations: cap,
        estimate,
    })
}

/// Largest singular value taken from a full SVD.
pub fn spectral_norm(a: &Matrix) -> Result<f64> {
    Ok(svd(a)?.singular_values[0])
}

/// [`operator_norm`] with a fallback to the full SVD on non-convergence.
pub fn operator_norm_or_svd(a: &Matrix, tol: f64) -> Result<f64> {
    match operator_norm(a, tol) {
        Err(Error::NotConverged { .. }) => spectral_norm(a),
        other => other,
    }
}

/// Thin SVD `a = left * diag(singular_values) * right^T`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// `m x r`, orthonormal columns.
    pub left: Matrix,
    /// Nonincreasing, nonnegative, length `r = min(m, n)`.
    pub singular_values: Vec<f64>,
    /// `n x r`, orthonormal columns.
    pub right: Matrix,
}

impl SvdResult {
    pub fn len(&self) -> usize {
        self.singular_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.singular_values.is_empty()
    }

    /// Number of singular values above `RANK_TOLERANCE * sigma_1`.
    pub fn numerical_rank(&self) -> usize {
        let top = self.singular_values.first().copied().unwrap_or(0.0);
        if top == 0.0 {
            return 0;
        }
        self.singular_values
            .iter()
            .filter(|&&s| s > RANK_TOLERANCE * top)
            .count()
    }

    /// `left * diag(s) * right^T`.
    pub fn reconstruct(&self) -> Matrix {
        let mut scaled = self.left.clone();
        for (j, s) in self.singular_values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(*s);
        }
        scaled * self.right.transpose()
    }
}

/// Full thin SVD with singular values sorted nonincreasing.
pub fn svd(a: &Matrix) -> Result<SvdResult> {
    ensure_finite(a)?;
    let (m, n) = a.shape();
    let max_iter = 200 * (m + n).max(10);
    let decomposition = SVD::try_new(a.clone(), true, true, f64::EPSILON, max_iter)
        .ok_or(Error::Decomposition("SVD"))?;
    let u = decomposition.u.ok_or(Error::Decomposition("SVD"))?;
    let v_t = decomposition.v_t.ok_or(Error::Decomposition("SVD"))?;
    let r = m.min(n);

    // try_new already sorts; re-sort by index so the order is guaranteed
    // even if that ever changes.
    let values = decomposition.singular_values;
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));

    let mut left = Matrix::zeros(m, r);
    let mut right = Matrix::zeros(n, r);
    let mut singular_values = Vec::with_capacity(r);
    for (dst, &src) in order.iter().enumerate() {
        let s = values[src];
        if !s.is_finite() || s < 0.0 {
            return Err(Error::Decomposition("SVD"));
        }
        singular_values.push(s);
        left.set_column(dst, &u.column(src));
        right.set_column(dst, &v_t.row(src).transpose());
    }
    Ok(SvdResult {
        left,
        singular_values,
        right,
    })
}

/// Best rank-`k` approximation `sum_{i<k} s_i u_i v_i^T` (Eckart-Young).
pub fn truncate_rank(s: &SvdResult, k: usize) -> Result<Matrix> {
    if k == 0 || k > s.len() {
        return Err(invalid(format!(
            "truncation rank must lie in 1..={}, got {k}",
            s.len()
        )));
    }
    let mut scaled = s.left.columns(0, k).into_owned();
    for j in 0..k {
        scaled.column_mut(j).scale_mut(s.singular_values[j]);
    }
    Ok(scaled * s.right.columns(0, k).transpose())
}

/// Numerical rank of `a` under [`RANK_TOLERANCE`].
pub fn numerical_rank(a: &Matrix) -> Result<usize> {
    Ok(svd(a)?.numerical_rank())
}

/// `(min, max)` eigenvalues of a symmetric matrix.
pub fn symmetric_eigen_extremes(a: &Matrix) -> Result<(f64, f64)> {
    if !a.is_square() {
        return Err(invalid(format!(
            "eigen-extremes need a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    ensure_finite(a)?;
    let n = a.nrows();
    let eig = SymmetricEigen::try_new(a.clone(), f64::EPSILON, 200 * n.max(10))
        .ok_or(Error::Decomposition("symmetric eigendecomposition"))?;
    let values = eig.eigenvalues;
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

/// `||q^T q - I||_F`.
pub fn orthonormality_residual(q: &Matrix) -> f64 {
    let gram = q.tr_mul(q);
    frobenius_norm(&(gram - Matrix::identity(q.ncols(), q.ncols())))
}

/// Residuals `(||P^2 - P||_F, ||P - P^T||_F)` of a candidate projector.
pub fn projector_residuals(p: &Matrix) -> (f64, f64) {
    let idempotence = frobenius_norm(&(p * p - p));
    let symmetry = frobenius_norm(&(p - p.transpose()));
    (idempotence, symmetry)
}

/// Frobenius inner product `<a, b>_F`.
pub fn frobenius_inner(a: &Matrix, b: &Matrix) -> f64 {
    a.dot(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Matrix {
        Matrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn frobenius_examples() {
        assert!((frobenius_norm(&Matrix::identity(2, 2)) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(frobenius_norm(&Matrix::zeros(3, 4)), 0.0);
        let row = matrix_from_row_major(1, 2, &[3.0, 4.0]).unwrap();
        assert_eq!(frobenius_norm(&row), 5.0);
    }

    #[test]
    fn operator_norm_examples() {
        let diag = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0]));
        assert!((operator_norm(&diag, 1e-12).unwrap() - 3.0).abs() < 1e-10);
        let shift = matrix_from_row_major(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!((operator_norm(&shift, 1e-12).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn operator_norm_sees_skew_top_vector() {
        // all-ones lies in the null space of this matrix
        let a = matrix_from_row_major(2, 2, &[1.0, -1.0, -1.0, 1.0]).unwrap();
        assert!((operator_norm(&a, 1e-12).unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn operator_norm_rejects_bad_tolerance() {
        assert!(operator_norm(&Matrix::identity(2, 2), 0.0).is_err());
    }

    #[test]
    fn operator_norm_reports_non_convergence() {
        // nearly tied top singular values stall the iteration
        let a = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0 - 1e-9, 0.5]));
        assert!(matches!(
            operator_norm(&a, 1e-15),
            Err(Error::NotConverged { iterations: 230, .. })
        ));
        assert!((operator_norm_or_svd(&a, 1e-15).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn svd_examples() {
        let id = svd(&Matrix::identity(3, 3)).unwrap();
        for s in &id.singular_values {
            assert!((s - 1.0).abs() < 1e-14);
        }

        let u = nalgebra::DVector::from_vec(vec![2.0, 0.0, 0.0]);
        let v = nalgebra::DVector::from_vec(vec![0.0, 3.0, 0.0, 0.0]);
        let rank_one = &u * v.transpose();
        let s = svd(&rank_one).unwrap();
        assert!((s.singular_values[0] - 6.0).abs() < 1e-12);
        assert!(s.singular_values[1..].iter().all(|&x| x.abs() < 1e-12));
        assert_eq!(s.numerical_rank(), 1);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_matrix(&mut rng, 5, 4);
        let s = svd(&a).unwrap();
        assert!(frobenius_norm(&(s.reconstruct() - &a)) < 1e-9 * frobenius_norm(&a));
    }

    #[test]
    fn svd_rejects_non_finite() {
        let mut a = Matrix::identity(2, 2);
        a[(1, 0)] = f64::NAN;
        assert_eq!(svd(&a).unwrap_err(), Error::NonFinite { row: 1, col: 0 });
        assert!(matrix_from_row_major(1, 2, &[1.0, f64::INFINITY]).is_err());
        assert!(matrix_from_row_major(2, 2, &[1.0]).is_err());
    }

    #[test]
    fn truncate_rank_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_matrix(&mut rng, 4, 6);
        let s = svd(&a).unwrap();
        let full = truncate_rank(&s, 4).unwrap();
        assert!(frobenius_norm(&(full - &a)) < 1e-9);

        let u = random_matrix(&mut rng, 5, 1);
        let v = random_matrix(&mut rng, 1, 3);
        let rank_one = &u * &v;
        let t = truncate_rank(&svd(&rank_one).unwrap(), 1).unwrap();
        assert!(frobenius_norm(&(t - &rank_one)) < 1e-12);

        assert!(truncate_rank(&s, 0).is_err());
        assert!(truncate_rank(&s, 5).is_err());
    }

    #[test]
    fn truncate_rank_beats_random_rank_two_candidates() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(&mut rng, 6, 6);
        let best = frobenius_norm(&(truncate_rank(&svd(&a).unwrap(), 2).unwrap() - &a));
        for _ in 0..1000 {
            let candidate = random_matrix(&mut rng, 6, 2) * random_matrix(&mut rng, 2, 6);
            assert!(best <= frobenius_norm(&(candidate - &a)));
        }
    }

    #[test]
    fn projector_and_orthonormality_helpers() {
        let p = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 0.0, 1.0]));
        assert_eq!(projector_residuals(&p), (0.0, 0.0));
        assert_eq!(orthonormality_residual(&Matrix::identity(4, 3)), 0.0);
    }

    #[test]
    fn eigen_extremes_needs_square() {
        assert!(symmetric_eigen_extremes(&Matrix::zeros(2, 3)).is_err());
        let (lo, hi) = symmetric_eigen_extremes(&(Matrix::identity(3, 3) * 2.0)).unwrap();
        assert!((lo - 2.0).abs() < 1e-14 && (hi - 2.0).abs() < 1e-14);
    }
}
