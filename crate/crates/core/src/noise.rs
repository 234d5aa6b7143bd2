//! Row-wise dependent noise: i.i.d., MA(1) and AR(1) rows with a common
//! Toeplitz covariance, plus the operator norm of that covariance.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{symmetric_eigen_extremes, Matrix};
use crate::rng::row_rng;
use crate::structure::StructureBasis;

/// Temporal law of a single noise row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum NoiseLaw {
    /// Uncorrelated entries.
    Iid,
    /// `e_t = eta_t - theta * eta_{t-1}`.
    Ma1 { theta: f64 },
    /// `e_t = rho * e_{t-1} + innovation`, stationary, `|rho| < 1`.
    Ar1 { rho: f64 },
}

/// Distribution of the unit-variance innovations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Innovation {
    #[default]
    Gaussian,
    /// Uniform on `[-sqrt 3, sqrt 3]`; bounded, hence sub-Gaussian.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoiseSpec {
    law: NoiseLaw,
    sigma: f64,
    #[serde(default)]
    innovation: Innovation,
}

/// Noise law plus scale.
///
/// For `Iid` and `Ma1`, `sigma` is the innovation standard deviation. For
/// `Ar1`, `sigma` is the stationary marginal standard deviation, so the row
/// covariance is exactly `sigma^2 rho^|i-j|`; the innovations then have
/// standard deviation `sigma * sqrt(1 - rho^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNoiseSpec", into = "RawNoiseSpec")]
pub struct NoiseSpec {
    law: NoiseLaw,
    sigma: f64,
    innovation: Innovation,
}

impl TryFrom<RawNoiseSpec> for NoiseSpec {
    type Error = Error;

    fn try_from(raw: RawNoiseSpec) -> Result<Self> {
        Self::with_innovation(raw.law, raw.sigma, raw.innovation)
    }
}

impl From<NoiseSpec> for RawNoiseSpec {
    fn from(spec: NoiseSpec) -> Self {
        RawNoiseSpec {
            law: spec.law,
            sigma: spec.sigma,
            innovation: spec.innovation,
        }
    }
}

impl NoiseSpec {
    pub fn new(law: NoiseLaw, sigma: f64) -> Result<Self> {
        Self::with_innovation(law, sigma, Innovation::Gaussian)
    }

    pub fn with_innovation(law: NoiseLaw, sigma: f64, innovation: Innovation) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid(format!("noise sigma must be positive, got {sigma}")));
        }
        match law {
            NoiseLaw::Iid => {}
            NoiseLaw::Ma1 { theta } if !theta.is_finite() => {
                return Err(invalid(format!("MA(1) theta must be finite, got {theta}")));
            }
            NoiseLaw::Ar1 { rho } if !(rho.abs() < 1.0) => {
                return Err(invalid(format!(
                    "AR(1) requires |rho| < 1 for stationarity, got {rho}"
                )));
            }
            _ => {}
        }
        Ok(Self {
            law,
            sigma,
            innovation,
        })
    }

    pub fn iid(sigma: f64) -> Result<Self> {
        Self::new(NoiseLaw::Iid, sigma)
    }

    pub fn ma1(theta: f64, sigma: f64) -> Result<Self> {
        Self::new(NoiseLaw::Ma1 { theta }, sigma)
    }

    pub fn ar1(rho: f64, sigma: f64) -> Result<Self> {
        Self::new(NoiseLaw::Ar1 { rho }, sigma)
    }

    pub fn law(&self) -> NoiseLaw {
        self.law
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn innovation(&self) -> Innovation {
        self.innovation
    }
}

/// `||Sigma||_op` together with the closed-form upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSummary {
    pub op_norm: f64,
    pub bound: f64,
    /// Whether `op_norm` is analytic rather than numerical.
    pub exact: bool,
}

fn innovation<R: Rng>(rng: &mut R, kind: Innovation) -> f64 {
    match kind {
        Innovation::Gaussian => rng.sample(StandardNormal),
        Innovation::Uniform => 3f64.sqrt() * rng.random_range(-1.0..=1.0),
    }
}

/// Samples a `d x horizon` noise matrix with i.i.d. rows.
///
/// Row `i` uses its own generator stream (see [`crate::rng`]). Within a row
/// the innovations for `t = 1..=T` are drawn first; MA(1) then draws its
/// burn-in innovation `eta_0`, so MA(1) with `theta = 0` reproduces the
/// i.i.d. sample for the same seed.
pub fn sample_noise(spec: &NoiseSpec, d: usize, horizon: usize, seed: u64) -> Result<Matrix> {
    if d == 0 || horizon == 0 {
        return Err(invalid(format!(
            "noise dimensions must be positive, got {d}x{horizon}"
        )));
    }
    let sigma = spec.sigma;
    let mut out = Matrix::zeros(d, horizon);
    let mut z = vec![0.0; horizon];
    for i in 0..d {
        let mut rng = row_rng(seed, i as u64);
        for zt in z.iter_mut() {
            *zt = innovation(&mut rng, spec.innovation);
        }
        match spec.law {
            NoiseLaw::Iid => {
                for (t, zt) in z.iter().enumerate() {
                    out[(i, t)] = sigma * zt;
                }
            }
            NoiseLaw::Ma1 { theta } => {
                let mut prev = sigma * innovation(&mut rng, spec.innovation);
                for (t, zt) in z.iter().enumerate() {
                    let eta = sigma * zt;
                    out[(i, t)] = eta - theta * prev;
                    prev = eta;
                }
            }
            NoiseLaw::Ar1 { rho } => {
                let scale = sigma * (1.0 - rho * rho).sqrt();
                let mut prev = sigma * z[0];
                out[(i, 0)] = prev;
                for (t, zt) in z.iter().enumerate().skip(1) {
                    prev = rho * prev + scale * zt;
                    out[(i, t)] = prev;
                }
            }
        }
    }
    Ok(out)
}

/// Row covariance `Sigma` (T x T, symmetric Toeplitz).
pub fn covariance_matrix(spec: &NoiseSpec, horizon: usize) -> Matrix {
    let s2 = spec.sigma * spec.sigma;
    match spec.law {
        NoiseLaw::Iid => Matrix::identity(horizon, horizon) * s2,
        NoiseLaw::Ma1 { theta } => Matrix::from_fn(horizon, horizon, |i, j| match i.abs_diff(j) {
            0 => s2 * (1.0 + theta * theta),
            1 => -s2 * theta,
            _ => 0.0,
        }),
        NoiseLaw::Ar1 { rho } => {
            Matrix::from_fn(horizon, horizon, |i, j| s2 * rho.powi(i.abs_diff(j) as i32))
        }
    }
}

/// `||Sigma||_op` and its closed-form bound.
///
/// MA(1) uses the tridiagonal Toeplitz eigenvalues
/// `sigma^2 (1 + theta^2 - 2 theta cos(l pi / (T + 1)))`, maximized over `l`.
/// AR(1) has no closed form; the largest eigenvalue of the dense covariance
/// is reported next to the bound `sigma^2 (1 + |rho|) / (1 - |rho|)`.
pub fn sigma_op_norm(spec: &NoiseSpec, horizon: usize) -> Result<CovarianceSummary> {
    if horizon == 0 {
        return Err(invalid("horizon must be positive"));
    }
    let s2 = spec.sigma * spec.sigma;
    Ok(match spec.law {
        NoiseLaw::Iid => CovarianceSummary {
            op_norm: s2,
            bound: s2,
            exact: true,
        },
        NoiseLaw::Ma1 { theta } => {
            let t1 = (horizon + 1) as f64;
            let op_norm = (1..=horizon)
                .map(|l| {
                    let c = (l as f64 * std::f64::consts::PI / t1).cos();
                    s2 * (1.0 + theta * theta - 2.0 * theta * c)
                })
                .fold(f64::NEG_INFINITY, f64::max);
            CovarianceSummary {
                op_norm,
                bound: s2 * (1.0 + theta.abs()).powi(2),
                exact: true,
            }
        }
        NoiseLaw::Ar1 { rho } => {
            let (_, hi) = symmetric_eigen_extremes(&covariance_matrix(spec, horizon))?;
            CovarianceSummary {
                op_norm: hi,
                bound: s2 * (1.0 + rho.abs()) / (1.0 - rho.abs()),
                exact: false,
            }
        }
    })
}

/// `||Sigma||_op * ||(Lambda^+)^T Lambda^+||_op = ||Sigma||_op / c`, the
/// covariance bound for rows of the projected noise `e Lambda^+`.
pub fn projected_noise_norm_bound(spec: &NoiseSpec, basis: &StructureBasis) -> Result<f64> {
    Ok(sigma_op_norm(spec, basis.horizon())?.op_norm / basis.gram_constant())
}
