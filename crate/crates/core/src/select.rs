//! Penalized selection of the structure `tau` and the rank `k`.
//!
//! Every feasible pair `(tau, k)` of the grid is fitted and scored by
//! `||M^_{tau,k} - X||_F^2 + pen(tau, k)`; the minimizer wins. The penalty is
//! `(c_pen k / lambda) (d + tau + (s + tau + k)) * noise_level`, i.e. the
//! confidence level is shifted by `tau + k` as in the union bound over the grid.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::estimator::{empirical_risk, FactorModel, RankPath};
use crate::linalg::Matrix;
use crate::structure::{BasisSpec, StructureBasis};

/// Candidate structures (sharing one horizon) and candidate ranks.
#[derive(Debug, Clone)]
pub struct CandidateGrid {
    bases: Vec<StructureBasis>,
    ranks: Vec<usize>,
}

impl CandidateGrid {
    /// Ranks are sorted and deduplicated.
    pub fn new(bases: Vec<StructureBasis>, mut ranks: Vec<usize>) -> Result<Self> {
        let first = bases
            .first()
            .ok_or_else(|| invalid("candidate grid needs at least one basis"))?;
        if let Some(b) = bases.iter().find(|b| b.horizon() != first.horizon()) {
            return Err(invalid(format!(
                "all candidate bases must share one horizon, got {} and {}",
                first.horizon(),
                b.horizon()
            )));
        }
        if ranks.is_empty() || ranks.contains(&0) {
            return Err(invalid("candidate ranks must be a nonempty list of positive integers"));
        }
        ranks.sort_unstable();
        ranks.dedup();
        Ok(Self { bases, ranks })
    }

    /// Builds each descriptor at the given horizon.
    pub fn from_specs(specs: &[BasisSpec], horizon: usize, ranks: Vec<usize>) -> Result<Self> {
        let bases = specs
            .iter()
            .map(|s| s.build(horizon))
            .collect::<Result<Vec<_>>>()?;
        Self::new(bases, ranks)
    }

    pub fn bases(&self) -> &[StructureBasis] {
        &self.bases
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn horizon(&self) -> usize {
        self.bases[0].horizon()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyParams {
    /// In `(0, 1)`.
    pub lambda: f64,
    /// Stand-in for the non-explicit constant `2 c K~`.
    pub c_pen: f64,
    /// `||Sigma_e||_op`, known or a plug-in estimate.
    pub noise_level: f64,
    /// Confidence parameter.
    pub s: f64,
}

impl PenaltyParams {
    pub const DEFAULT_LAMBDA: f64 = 0.5;
    pub const DEFAULT_C_PEN: f64 = 2.0;
    pub const DEFAULT_S: f64 = 1.0;

    pub fn new(lambda: f64, c_pen: f64, noise_level: f64, s: f64) -> Result<Self> {
        let p = Self {
            lambda,
            c_pen,
            noise_level,
            s,
        };
        p.validate()?;
        Ok(p)
    }

    /// Default `lambda`, `c_pen` and `s` around a noise level.
    pub fn with_noise_level(noise_level: f64) -> Result<Self> {
        Self::new(
            Self::DEFAULT_LAMBDA,
            Self::DEFAULT_C_PEN,
            noise_level,
            Self::DEFAULT_S,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(invalid(format!("lambda must lie in (0, 1), got {}", self.lambda)));
        }
        if !(self.c_pen >= 0.0 && self.c_pen.is_finite()) {
            return Err(invalid(format!("c_pen must be nonnegative, got {}", self.c_pen)));
        }
        if !(self.noise_level >= 0.0 && self.noise_level.is_finite()) {
            return Err(invalid(format!(
                "noise_level must be nonnegative, got {}",
                self.noise_level
            )));
        }
        if !(self.s >= 0.0 && self.s.is_finite()) {
            return Err(invalid(format!("s must be nonnegative, got {}", self.s)));
        }
        Ok(())
    }
}

/// `(c_pen k / lambda) (d + tau + (s + tau + k)) * noise_level`.
pub fn penalty(params: &PenaltyParams, d: usize, tau: usize, k: usize) -> f64 {
    let (d, tau, k) = (d as f64, tau as f64, k as f64);
    params.c_pen * k / params.lambda * (d + tau + (params.s + tau + k)) * params.noise_level
}

/// One scored grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRecord {
    /// Index of the basis in the grid.
    pub basis_index: usize,
    pub basis: BasisSpec,
    pub tau: usize,
    pub k: usize,
    pub empirical_risk: f64,
    pub penalty: f64,
    pub score: f64,
    pub chosen: bool,
}

#[derive(Debug, Clone)]
pub struct SelectionResult {
    pub chosen_tau_index: usize,
    pub chosen_k: usize,
    /// Feasible pairs in grid order (bases outer, ranks inner).
    pub table: Vec<SelectionRecord>,
    /// `(tau, k)` pairs skipped because `k > min(d, tau)`.
    pub skipped: Vec<(usize, usize)>,
    pub fitted: FactorModel,
}

impl SelectionResult {
    pub fn chosen_tau(&self) -> usize {
        self.table
            .iter()
            .find(|r| r.chosen)
            .map(|r| r.tau)
            .expect("a chosen record exists")
    }
}

/// Strict order used for the arg min: score, then smaller k, then smaller
/// tau, then grid position.
fn record_order(a: &SelectionRecord, b: &SelectionRecord) -> Ordering {
    a.score
        .total_cmp(&b.score)
        .then(a.k.cmp(&b.k))
        .then(a.tau.cmp(&b.tau))
        .then(a.basis_index.cmp(&b.basis_index))
}

struct ScoredGrid {
    table: Vec<SelectionRecord>,
    skipped: Vec<(usize, usize)>,
    paths: Vec<RankPath>,
}

/// Rank path, scored records and skipped pairs of one basis.
type BasisScores = (RankPath, Vec<SelectionRecord>, Vec<(usize, usize)>);

fn score_grid(x: &Matrix, grid: &CandidateGrid, params: &PenaltyParams) -> Result<ScoredGrid> {
    params.validate()?;
    let d = x.nrows();
    let per_basis: Vec<Result<BasisScores>> = grid
        .bases
        .par_iter()
        .enumerate()
        .map(|(index, basis)| {
            let path = RankPath::new(x, basis)?;
            let mut rows = Vec::new();
            let mut skipped = Vec::new();
            for &k in &grid.ranks {
                if k > path.max_rank() {
                    skipped.push((basis.tau(), k));
                    continue;
                }
                let risk = empirical_risk(&path.fit(k)?.predict(), x)?;
                let pen = penalty(params, d, basis.tau(), k);
                rows.push(SelectionRecord {
                    basis_index: index,
                    basis: basis.spec(),
                    tau: basis.tau(),
                    k,
                    empirical_risk: risk,
                    penalty: pen,
                    score: risk + pen,
                    chosen: false,
                });
            }
            Ok((path, rows, skipped))
        })
        .collect();

    let mut out = ScoredGrid {
        table: Vec::new(),
        skipped: Vec::new(),
        paths: Vec::new(),
    };
    for item in per_basis {
        let (path, rows, skipped) = item?;
        out.paths.push(path);
        out.table.extend(rows);
        out.skipped.extend(skipped);
    }
    if out.table.is_empty() {
        return Err(invalid(format!(
            "no feasible (tau, k) pair: every rank exceeds min(d, tau) with d = {d}"
        )));
    }
    Ok(out)
}

fn argmin(table: &[SelectionRecord]) -> usize {
    (0..table.len())
        .min_by(|&i, &j| record_order(&table[i], &table[j]))
        .expect("table is nonempty")
}

/// Fits every feasible `(basis, k)` pair and returns the penalized minimizer.
pub fn select(x: &Matrix, grid: &CandidateGrid, params: &PenaltyParams) -> Result<SelectionResult> {
    let ScoredGrid {
        mut table,
        skipped,
        paths,
    } = score_grid(x, grid, params)?;
    let best = argmin(&table);
    table[best].chosen = true;
    let (basis_index, k) = (table[best].basis_index, table[best].k);
    let fitted = paths[basis_index].fit(k)?;
    Ok(SelectionResult {
        chosen_tau_index: basis_index,
        chosen_k: k,
        table,
        skipped,
        fitted,
    })
}

/// Residual variance `||X - M^_max||_F^2 / (d T)` of the largest model in the
/// grid (largest tau, then the largest feasible rank), a plug-in for the
/// noise level.
pub fn calibrate_noise_level(x: &Matrix, grid: &CandidateGrid) -> Result<f64> {
    let basis = grid
        .bases
        .iter()
        .max_by_key(|b| b.tau())
        .expect("grid has a basis");
    let max_rank = x.nrows().min(basis.tau());
    let k = grid
        .ranks
        .iter()
        .copied()
        .filter(|&k| k <= max_rank)
        .max()
        .ok_or_else(|| invalid("no rank in the grid is feasible for the largest basis"))?;
    let fitted = RankPath::new(x, basis)?.fit(k)?;
    let (d, t) = x.shape();
    Ok(empirical_risk(&fitted.predict(), x)? / (d * t) as f64)
}

/// Synthetic dataset with known structure, used to calibrate `c_pen`.
#[derive(Debug, Clone)]
pub struct PilotCase {
    pub x: Matrix,
    pub true_basis_index: usize,
    pub true_k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyCalibration {
    pub c_pen: f64,
    /// `(c_pen, fraction of pilots recovering the truth)` for each candidate tried.
    pub hit_rates: Vec<(f64, f64)>,
}

/// Smallest `c_pen` among ascending `candidates` whose selection recovers the
/// known truth on at least `target_rate` of the pilot datasets.
///
/// Pilots should be simulated with noise matching the scale of the data the
/// constant will be used on, and with seeds disjoint from any evaluation.
pub fn calibrate_penalty(
    pilots: &[PilotCase],
    grid: &CandidateGrid,
    params: &PenaltyParams,
    candidates: &[f64],
    target_rate: f64,
) -> Result<PenaltyCalibration> {
    if pilots.is_empty() || candidates.is_empty() {
        return Err(invalid("penalty calibration needs pilots and candidate constants"));
    }
    let mut sorted = candidates.to_vec();
    sorted.sort_by(f64::total_cmp);
    let unit = PenaltyParams { c_pen: 1.0, ..*params };
    // the penalty is linear in c_pen: score each pilot once at c_pen = 1
    let tables = pilots
        .par_iter()
        .map(|p| score_grid(&p.x, grid, &unit).map(|g| g.table))
        .collect::<Result<Vec<_>>>()?;

    let mut hit_rates = Vec::with_capacity(sorted.len());
    for &c in &sorted {
        let hits = tables
            .iter()
            .zip(pilots)
            .filter(|(table, pilot)| {
                let rescored: Vec<SelectionRecord> = table
                    .iter()
                    .map(|r| SelectionRecord {
                        penalty: c * r.penalty,
                        score: r.empirical_risk + c * r.penalty,
                        ..r.clone()
                    })
                    .collect();
                let best = &rescored[argmin(&rescored)];
                best.basis_index == pilot.true_basis_index && best.k == pilot.true_k
            })
            .count();
        let rate = hits as f64 / pilots.len() as f64;
        hit_rates.push((c, rate));
        if rate >= target_rate {
            return Ok(PenaltyCalibration { c_pen: c, hit_rates });
        }
    }
    Err(invalid(format!(
        "no candidate c_pen reached a pilot hit rate of {target_rate}: {hit_rates:?}"
    )))
}
