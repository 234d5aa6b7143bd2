//! Monte-Carlo verification of risk rates.
//!
//! Each sweep point runs `R` replications of simulate, fit, risk on split
//! seeds and records the mean risk next to the theoretical rate. The log of
//! the mean risk is regressed on the log of the rate; a slope near 1 means
//! the risk scales as predicted. The smooth scenario additionally compares
//! the optimal frequency cutoff against a grid of alternatives.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tsfactor::noise::sigma_op_norm;
use tsfactor::rng::derive_seed;
use tsfactor::sobolev::optimal_cutoff;
use tsfactor::{fit, risk, BasisSpec, StructureBasis};

use crate::config::{ExperimentConfig, Scenario};
use crate::error::{CliError, CliResult};
use crate::io::SCHEMA_VERSION;
use crate::simulate::simulate;

/// Seed namespace of the cutoff comparison, disjoint from sweep point indices.
const CUTOFF_STREAM: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub d: usize,
    pub horizon: usize,
    pub tau: usize,
    pub k: usize,
    pub basis: BasisSpec,
    pub replications: usize,
    pub mean_risk: f64,
    pub std_risk: f64,
    pub theoretical_rate: f64,
    /// Mean risk of the unstructured estimator on the same data.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_mean_risk: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffComparison {
    pub optimal_n_freq: usize,
    /// One point per candidate cutoff, at the configured horizon.
    pub points: Vec<RatePoint>,
    pub best_n_freq: usize,
    /// Mean risk at the optimal cutoff over the best mean risk.
    pub ratio_to_best: f64,
    pub max_ratio: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub schema_version: u32,
    pub scenario: Scenario,
    pub seed: u64,
    pub points: Vec<RatePoint>,
    pub regression: Option<Regression>,
    pub cutoff: Option<CutoffComparison>,
    pub tolerance: f64,
    pub pass: bool,
}

/// Least-squares line `y = intercept + slope x` with the slope's standard
/// error (zero when there are only two points).
pub fn ols(x: &[f64], y: &[f64]) -> Regression {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let slope_stderr = if x.len() > 2 {
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Regression {
        slope,
        intercept,
        slope_stderr,
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Theoretical risk rate of the fitted basis at one sweep point.
pub fn theoretical_rate(config: &ExperimentConfig, horizon: usize, tau: usize, op_norm: f64) -> f64 {
    let (d, k) = (config.d as f64, config.k as f64);
    let dt = d * horizon as f64;
    match config.scenario {
        Scenario::Unstructured | Scenario::Periodic => {
            op_norm * k * (d + tau as f64 + config.rate.s) / dt
        }
        Scenario::Smooth => {
            let beta = config.smooth.as_ref().expect("validated").beta as f64;
            (op_norm * k / dt).powf(2.0 * beta / (2.0 * beta + 1.0))
        }
    }
}

/// Cutoff used for the smooth scenario at a horizon.
pub fn smooth_cutoff(config: &ExperimentConfig, horizon: usize, op_norm: f64) -> usize {
    let smooth = config.smooth.as_ref().expect("validated");
    config.n_freq.unwrap_or_else(|| {
        optimal_cutoff(smooth.beta, smooth.c_beta_l, config.d, horizon, config.k, op_norm)
    })
}

/// Runs the replications of one point. Replication `r` uses
/// `derive_seed(point_seed, r)`; results are gathered in replication order.
fn run_point(
    config: &ExperimentConfig,
    horizon: usize,
    spec: BasisSpec,
    point_seed: u64,
    op_norm: f64,
    baseline: bool,
) -> CliResult<RatePoint> {
    let basis = spec.build(horizon)?;
    let identity = StructureBasis::identity(horizon)?;
    let risks = (0..config.replications)
        .into_par_iter()
        .map(|r| {
            let seed = derive_seed(point_seed, r as u64);
            let wrap = |e: CliError| match e {
                CliError::Numeric(source) => CliError::Replication {
                    horizon,
                    basis: spec.to_string(),
                    replication: r,
                    source,
                },
                e => e,
            };
            let sim = simulate(config, horizon, seed).map_err(wrap)?;
            let one = |b: &StructureBasis| -> CliResult<f64> {
                let est = fit(&sim.x, b, config.k)?.predict();
                Ok(risk(&est, &sim.m)?)
            };
            let main = one(&basis).map_err(wrap)?;
            let base = if baseline {
                Some(one(&identity).map_err(wrap)?)
            } else {
                None
            };
            Ok((main, base))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let main: Vec<f64> = risks.iter().map(|r| r.0).collect();
    let (mean_risk, std_risk) = mean_std(&main);
    let baseline_mean_risk = baseline.then(|| {
        let base: Vec<f64> = risks.iter().filter_map(|r| r.1).collect();
        mean_std(&base).0
    });
    Ok(RatePoint {
        d: config.d,
        horizon,
        tau: basis.tau(),
        k: config.k,
        basis: spec,
        replications: config.replications,
        mean_risk,
        std_risk,
        theoretical_rate: theoretical_rate(config, horizon, basis.tau(), op_norm),
        baseline_mean_risk,
    })
}

/// Basis fitted at a sweep point.
fn sweep_basis(config: &ExperimentConfig, horizon: usize, op_norm: f64) -> BasisSpec {
    match config.signal_basis() {
        Some(spec) => spec,
        None => BasisSpec::Trig {
            n_freq: smooth_cutoff(config, horizon, op_norm),
        },
    }
}

/// `{1, N/2, N, 2N, 4N}`, deduplicated and restricted to `2n < T` and
/// `2n + 1 >= k`.
pub fn cutoff_grid(optimal: usize, horizon: usize, k: usize) -> Vec<usize> {
    let mut grid: Vec<usize> = [1, optimal / 2, optimal, 2 * optimal, 4 * optimal]
        .into_iter()
        .filter(|&n| n >= 1 && 2 * n < horizon && 2 * n + 1 >= k)
        .collect();
    grid.sort_unstable();
    grid.dedup();
    grid
}

pub fn rate_check(config: &ExperimentConfig, seed: u64) -> CliResult<RateReport> {
    let horizons = &config.grids.horizons;
    let needs_sweep = config.scenario != Scenario::Smooth || !horizons.is_empty();
    if needs_sweep && horizons.len() < 4 {
        return Err(CliError::config(
            "grids.horizons",
            format!("rate-check needs at least 4 horizons, got {}", horizons.len()),
        ));
    }

    let mut points = Vec::with_capacity(horizons.len());
    for (p, &horizon) in horizons.iter().enumerate() {
        let op_norm = sigma_op_norm(&config.noise, horizon)?.op_norm;
        let spec = sweep_basis(config, horizon, op_norm);
        points.push(run_point(
            config,
            horizon,
            spec,
            derive_seed(seed, p as u64),
            op_norm,
            config.rate.baseline,
        )?);
    }
    let regression = (!points.is_empty()).then(|| {
        let x: Vec<f64> = points.iter().map(|p| p.theoretical_rate.ln()).collect();
        let y: Vec<f64> = points.iter().map(|p| p.mean_risk.ln()).collect();
        ols(&x, &y)
    });
    let slope_ok = regression.is_none_or(|r| (r.slope - 1.0).abs() <= config.rate.tolerance);

    let cutoff = if config.scenario == Scenario::Smooth {
        Some(compare_cutoffs(config, seed)?)
    } else {
        None
    };
    let cutoff_ok = cutoff.as_ref().is_none_or(|c| c.pass);

    Ok(RateReport {
        schema_version: SCHEMA_VERSION,
        scenario: config.scenario,
        seed,
        points,
        regression,
        cutoff,
        tolerance: config.rate.tolerance,
        pass: slope_ok && cutoff_ok,
    })
}

/// Mean risk at the optimal cutoff against the best of the cutoff grid, all
/// on the same replications.
fn compare_cutoffs(config: &ExperimentConfig, seed: u64) -> CliResult<CutoffComparison> {
    const MAX_RATIO: f64 = 2.0;
    let horizon = config.horizon;
    let op_norm = sigma_op_norm(&config.noise, horizon)?.op_norm;
    let optimal = smooth_cutoff(config, horizon, op_norm);
    let point_seed = derive_seed(seed, CUTOFF_STREAM);
    let points = cutoff_grid(optimal, horizon, config.k)
        .into_iter()
        .map(|n| {
            run_point(
                config,
                horizon,
                BasisSpec::Trig { n_freq: n },
                point_seed,
                op_norm,
                false,
            )
        })
        .collect::<CliResult<Vec<_>>>()?;
    let best = points
        .iter()
        .min_by(|a, b| a.mean_risk.total_cmp(&b.mean_risk))
        .expect("grid contains the optimal cutoff");
    let at_optimal = points
        .iter()
        .find(|p| p.tau == 2 * optimal + 1)
        .expect("grid contains the optimal cutoff");
    let ratio_to_best = at_optimal.mean_risk / best.mean_risk;
    Ok(CutoffComparison {
        optimal_n_freq: optimal,
        best_n_freq: (best.tau - 1) / 2,
        ratio_to_best,
        max_ratio: MAX_RATIO,
        pass: ratio_to_best <= MAX_RATIO,
        points,
    })
}
