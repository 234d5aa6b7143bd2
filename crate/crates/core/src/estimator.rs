//! Rank-constrained empirical risk minimization in the projected space.
//!
//! The estimator projects `X` to `X~ = X Lambda^+`, keeps the best rank-`k`
//! approximation of `X~` (truncated SVD) and maps it back with `Lambda`.

use crate::error::{invalid, shape_mismatch, Result};
use crate::linalg::{svd, Matrix, SvdResult};
use crate::structure::StructureBasis;

/// Fitted factorization `M^ = U V Lambda`.
#[derive(Debug, Clone)]
pub struct FactorModel {
    /// `d x k`
    pub u: Matrix,
    /// `k x tau`
    pub v: Matrix,
    /// `d x tau`, equal to `u * v`.
    pub m_tilde_hat: Matrix,
    pub rank: usize,
    pub basis: StructureBasis,
}

impl FactorModel {
    /// `M^ = M~^ Lambda`, a `d x T` matrix of rank at most `k`.
    pub fn predict(&self) -> Matrix {
        self.basis
            .expand(&self.m_tilde_hat)
            .expect("m_tilde_hat has tau columns by construction")
    }
}

/// SVD of a projected series, reusable across ranks.
#[derive(Debug, Clone)]
pub struct RankPath {
    basis: StructureBasis,
    projected: Matrix,
    svd: SvdResult,
}

impl RankPath {
    pub fn new(x: &Matrix, basis: &StructureBasis) -> Result<Self> {
        let projected = basis.project(x)?;
        let svd = svd(&projected)?;
        Ok(Self {
            basis: basis.clone(),
            projected,
            svd,
        })
    }

    /// Largest admissible rank, `min(d, tau)`.
    pub fn max_rank(&self) -> usize {
        self.svd.len()
    }

    /// `X~`.
    pub fn projected(&self) -> &Matrix {
        &self.projected
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.svd.singular_values
    }

    /// Rank-`k` minimizer of `||A - X~||_F^2`, split as
    /// `u = U_k diag(sqrt s)`, `v = diag(sqrt s) V_k^T`.
    pub fn fit(&self, k: usize) -> Result<FactorModel> {
        if k == 0 || k > self.max_rank() {
            return Err(invalid(format!(
                "rank must lie in 1..={} (min(d, tau)), got {k}",
                self.max_rank()
            )));
        }
        let mut u = self.svd.left.columns(0, k).into_owned();
        let mut v = self.svd.right.columns(0, k).transpose();
        for j in 0..k {
            let root = self.svd.singular_values[j].sqrt();
            u.column_mut(j).scale_mut(root);
            v.row_mut(j).scale_mut(root);
        }
        let m_tilde_hat = &u * &v;
        Ok(FactorModel {
            u,
            v,
            m_tilde_hat,
            rank: k,
            basis: self.basis.clone(),
        })
    }
}

/// Fits a rank-`k` structured factorization to `x` (d x T).
pub fn fit(x: &Matrix, basis: &StructureBasis, k: usize) -> Result<FactorModel> {
    let max_rank = x.nrows().min(basis.tau());
    if k == 0 || k > max_rank {
        return Err(invalid(format!(
            "rank must lie in 1..={max_rank} (min(d, tau)), got {k}"
        )));
    }
    RankPath::new(x, basis)?.fit(k)
}

/// `M^` for a fitted model.
pub fn predict(model: &FactorModel) -> Matrix {
    model.predict()
}

/// Normalized estimation risk `||estimate - truth||_F^2 / (d T)`.
pub fn risk(estimate: &Matrix, truth: &Matrix) -> Result<f64> {
    if estimate.shape() != truth.shape() {
        return Err(shape_mismatch("risk", truth.shape(), estimate.shape()));
    }
    let (d, t) = truth.shape();
    Ok((estimate - truth).norm_squared() / (d * t) as f64)
}

/// Unnormalized empirical risk `||estimate - x||_F^2`.
pub fn empirical_risk(estimate: &Matrix, x: &Matrix) -> Result<f64> {
    if estimate.shape() != x.shape() {
        return Err(shape_mismatch("empirical_risk", x.shape(), estimate.shape()));
    }
    Ok((estimate - x).norm_squared())
}
