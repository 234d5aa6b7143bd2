//! Synthetic data `X = U V Lambda + e` for the three scenarios.
//!
//! Seeds: `U` uses `derive_seed(seed, 0)`, the right factor `derive_seed(seed, 1)`,
//! the noise `derive_seed(seed, 2)`; within each, matrix row `i` is stream `i`.

use rand::Rng;
use rand_distr::StandardNormal;
use tsfactor::noise::{sample_noise, sigma_op_norm};
use tsfactor::rng::{derive_seed, row_rng};
use tsfactor::sobolev::gen_smooth_dictionary;
use tsfactor::{BasisSpec, CovarianceSummary, Matrix};

use crate::config::{ExperimentConfig, Scenario};
use crate::error::CliResult;

#[derive(Debug, Clone)]
pub struct Simulation {
    /// Signal `M`, `d x T`.
    pub m: Matrix,
    /// Observation `X = M + e`.
    pub x: Matrix,
    /// `d x k`.
    pub u: Matrix,
    /// `k x tau` coefficients in the signal basis, or the `k x T` smooth dictionary.
    pub factor: Matrix,
    pub basis: Option<BasisSpec>,
    pub noise: CovarianceSummary,
}

/// Entries i.i.d. `N(0, scale^2)`, row `i` from stream `i` of `seed`.
pub fn gaussian_matrix(rows: usize, cols: usize, scale: f64, seed: u64) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    for i in 0..rows {
        let mut rng = row_rng(seed, i as u64);
        for j in 0..cols {
            m[(i, j)] = scale * rng.sample::<f64, _>(StandardNormal);
        }
    }
    m
}

/// Draws one dataset at `horizon` (which may differ from `config.horizon`
/// during sweeps).
pub fn simulate(config: &ExperimentConfig, horizon: usize, seed: u64) -> CliResult<Simulation> {
    let (d, k) = (config.d, config.k);
    let u_seed = derive_seed(seed, 0);
    let f_seed = derive_seed(seed, 1);
    // U ~ N(0, 1), V ~ N(0, 1/k): signal entries have unit variance
    let (u, factor, basis, m) = match config.scenario {
        Scenario::Unstructured | Scenario::Periodic => {
            let spec = config.signal_basis().expect("structured scenario");
            let basis = spec.build(horizon)?;
            let u = gaussian_matrix(d, k, 1.0, u_seed);
            let v = gaussian_matrix(k, basis.tau(), (k as f64).recip().sqrt(), f_seed);
            let m = basis.expand(&(&u * &v))?;
            (u, v, Some(spec), m)
        }
        Scenario::Smooth => {
            let spec = config.smooth_spec().expect("validated");
            let w = gen_smooth_dictionary(&spec, horizon, f_seed)?.values;
            // loadings with squared row norm at most 1
            let mut u = gaussian_matrix(d, k, (k as f64).recip().sqrt(), u_seed);
            for i in 0..d {
                let norm = u.row(i).norm();
                if norm > 1.0 {
                    u.row_mut(i).unscale_mut(norm);
                }
            }
            let m = &u * &w;
            (u, w, None, m)
        }
    };
    let eps = sample_noise(&config.noise, d, horizon, derive_seed(seed, 2))?;
    Ok(Simulation {
        x: &m + eps,
        m,
        u,
        factor,
        basis,
        noise: sigma_op_norm(&config.noise, horizon)?,
    })
}
