//! The four subcommands. Each computes everything first and writes its
//! files at the end, single-threaded.

use std::path::Path;

use serde::Serialize;
use tsfactor::select::{calibrate_noise_level, select, CandidateGrid};
use tsfactor::{empirical_risk, fit, risk, BasisSpec, CovarianceSummary};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::io::{ensure_dir, format_entry, read_matrix, write_json, write_matrix, SCHEMA_VERSION};
use crate::rate::{rate_check, RateReport};
use crate::simulate::simulate;

#[derive(Debug, Serialize)]
struct SimulateManifest<'a> {
    schema_version: u32,
    command: &'static str,
    seed: u64,
    horizon: usize,
    signal_basis: Option<String>,
    noise: CovarianceSummary,
    files: Vec<&'static str>,
    config: &'a ExperimentConfig,
}

/// Writes `m.csv`, `x.csv`, `u.csv`, `v.csv` (`w.csv` for smooth data) and
/// `manifest.json`.
pub fn cmd_simulate(config: &ExperimentConfig, out: &Path, seed: Option<u64>) -> CliResult<()> {
    let seed = seed.unwrap_or(config.seed);
    let sim = simulate(config, config.horizon, seed)?;
    let factor_file = if sim.basis.is_some() { "v.csv" } else { "w.csv" };
    ensure_dir(out)?;
    write_matrix(&out.join("m.csv"), &sim.m)?;
    write_matrix(&out.join("x.csv"), &sim.x)?;
    write_matrix(&out.join("u.csv"), &sim.u)?;
    write_matrix(&out.join(factor_file), &sim.factor)?;
    write_json(
        &out.join("manifest.json"),
        &SimulateManifest {
            schema_version: SCHEMA_VERSION,
            command: "simulate",
            seed,
            horizon: config.horizon,
            signal_basis: sim.basis.map(|b| b.to_string()),
            noise: sim.noise,
            files: vec!["m.csv", "x.csv", "u.csv", factor_file],
            config,
        },
    )
}

#[derive(Debug, Serialize)]
pub struct FitSummary {
    pub schema_version: u32,
    pub command: &'static str,
    pub basis: String,
    pub rank: usize,
    pub d: usize,
    pub horizon: usize,
    pub tau: usize,
    /// `||M^ - X||_F^2`.
    pub empirical_risk: f64,
    /// `||M~^ - X~||_F^2` in the projected space.
    pub projected_empirical_risk: f64,
    pub gram_residual: f64,
    /// `||M^ - M||_F^2 / (d T)` when a truth file is given.
    pub risk_vs_truth: Option<f64>,
}

pub struct FitArgs<'a> {
    pub input: &'a Path,
    pub basis: BasisSpec,
    pub rank: usize,
    pub out: &'a Path,
    pub truth: Option<&'a Path>,
}

/// Writes `m_hat.csv`, `u.csv`, `v.csv` and `fit.json`.
pub fn cmd_fit(args: &FitArgs<'_>) -> CliResult<FitSummary> {
    let x = read_matrix(args.input)?;
    let truth = args.truth.map(read_matrix).transpose()?;
    let (d, horizon) = x.shape();
    let basis = args.basis.build(horizon)?;
    let model = fit(&x, &basis, args.rank)?;
    let m_hat = model.predict();
    let projected = basis.project(&x)?;
    let summary = FitSummary {
        schema_version: SCHEMA_VERSION,
        command: "fit",
        basis: args.basis.to_string(),
        rank: args.rank,
        d,
        horizon,
        tau: basis.tau(),
        empirical_risk: empirical_risk(&m_hat, &x)?,
        projected_empirical_risk: empirical_risk(&model.m_tilde_hat, &projected)?,
        gram_residual: basis.gram_residual(),
        risk_vs_truth: truth.as_ref().map(|m| risk(&m_hat, m)).transpose()?,
    };
    ensure_dir(args.out)?;
    write_matrix(&args.out.join("m_hat.csv"), &m_hat)?;
    write_matrix(&args.out.join("u.csv"), &model.u)?;
    write_matrix(&args.out.join("v.csv"), &model.v)?;
    write_json(&args.out.join("fit.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Serialize)]
struct SelectSummary {
    schema_version: u32,
    command: &'static str,
    basis: String,
    tau: usize,
    k: usize,
    empirical_risk: f64,
    penalty: f64,
    score: f64,
    noise_level: f64,
    noise_level_estimated: bool,
    lambda: f64,
    c_pen: f64,
    s: f64,
    skipped: Vec<(usize, usize)>,
}

/// Candidate bases for a horizon: a period equal to the horizon is the
/// unstructured basis.
pub fn candidate_specs(config: &ExperimentConfig, horizon: usize) -> CliResult<Vec<BasisSpec>> {
    if config.grids.taus.is_empty() {
        return Err(CliError::config("grids.taus", "select needs at least one period"));
    }
    config
        .grids
        .taus
        .iter()
        .enumerate()
        .map(|(i, &tau)| {
            if !horizon.is_multiple_of(tau) {
                Err(CliError::config(
                    format!("grids.taus[{i}]"),
                    format!("{tau} does not divide the data horizon {horizon}"),
                ))
            } else if tau == horizon {
                Ok(BasisSpec::Identity)
            } else {
                Ok(BasisSpec::Periodic { tau })
            }
        })
        .collect()
}

/// Writes `table.csv`, `winner.json` and the winner's `m_hat.csv`.
pub fn cmd_select(input: &Path, config: &ExperimentConfig, out: &Path) -> CliResult<()> {
    let x = read_matrix(input)?;
    let specs = candidate_specs(config, x.ncols())?;
    if config.grids.ranks.is_empty() {
        return Err(CliError::config("grids.ranks", "select needs at least one rank"));
    }
    let grid = CandidateGrid::from_specs(&specs, x.ncols(), config.grids.ranks.clone())?;
    let (noise_level, estimated) = match config.penalty.noise_level {
        Some(v) => (v, false),
        None => (calibrate_noise_level(&x, &grid)?, true),
    };
    let params = config.penalty.params(noise_level)?;
    let result = select(&x, &grid, &params)?;
    let winner = result
        .table
        .iter()
        .find(|r| r.chosen)
        .expect("a chosen record exists");

    let table_path = out.join("table.csv");
    ensure_dir(out)?;
    let mut w = csv::Writer::from_path(&table_path).map_err(|e| CliError::io(&table_path, e))?;
    w.write_record(["basis", "tau", "k", "risk", "penalty", "score", "chosen"])
        .map_err(|e| CliError::io(&table_path, e))?;
    for r in &result.table {
        w.write_record([
            r.basis.to_string(),
            r.tau.to_string(),
            r.k.to_string(),
            format_entry(r.empirical_risk),
            format_entry(r.penalty),
            format_entry(r.score),
            r.chosen.to_string(),
        ])
        .map_err(|e| CliError::io(&table_path, e))?;
    }
    w.flush().map_err(|e| CliError::io(&table_path, e))?;
    write_matrix(&out.join("m_hat.csv"), &result.fitted.predict())?;
    write_json(
        &out.join("winner.json"),
        &SelectSummary {
            schema_version: SCHEMA_VERSION,
            command: "select",
            basis: winner.basis.to_string(),
            tau: winner.tau,
            k: winner.k,
            empirical_risk: winner.empirical_risk,
            penalty: winner.penalty,
            score: winner.score,
            noise_level,
            noise_level_estimated: estimated,
            lambda: params.lambda,
            c_pen: params.c_pen,
            s: params.s,
            skipped: result.skipped.clone(),
        },
    )
}

/// Writes `rate_report.json`.
pub fn cmd_rate_check(config: &ExperimentConfig, out: &Path, seed: Option<u64>) -> CliResult<RateReport> {
    let report = rate_check(config, seed.unwrap_or(config.seed))?;
    ensure_dir(out)?;
    write_json(&out.join("rate_report.json"), &report)?;
    Ok(report)
}
