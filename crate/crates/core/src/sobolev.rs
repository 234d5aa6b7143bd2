//! Smooth latent series from a Sobolev ellipsoid and the frequency cutoff
//! that balances truncation bias against estimation variance.
//!
//! A smooth function on `[0, 1]` is represented by its real Fourier series
//! `f(x) = a_0 + sum_n a_n sqrt(2) cos(2 pi n x) + b_n sqrt(2) sin(2 pi n x)`.
//! With this normalization `int (f^(beta))^2 = sum_n (2 pi n)^(2 beta) (a_n^2 + b_n^2)`,
//! and membership in `W(beta, L)` is the condition that this sum is at most `L^2`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::Matrix;
use crate::rng::row_rng;
use crate::structure::{BasisKind, StructureBasis};

/// Parameters of a random smooth dictionary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothFactorSpec {
    /// Number of latent functions.
    pub k: usize,
    /// Smoothness.
    pub beta: u32,
    /// Ellipsoid radius `L`.
    pub ell: f64,
    /// Highest Fourier frequency used when generating.
    pub n_terms: usize,
}

impl SmoothFactorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(invalid("smooth dictionary needs k >= 1"));
        }
        if self.beta == 0 {
            return Err(invalid("smoothness beta must be a positive integer"));
        }
        if !(self.ell > 0.0 && self.ell.is_finite()) {
            return Err(invalid(format!("radius ell must be positive, got {}", self.ell)));
        }
        Ok(())
    }
}

/// One real trigonometric polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigSeries {
    pub constant: f64,
    /// `a_1..a_n`
    pub cos: Vec<f64>,
    /// `b_1..b_n`
    pub sin: Vec<f64>,
}

impl TrigSeries {
    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = self.constant;
        for (i, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let angle = 2.0 * PI * (i + 1) as f64 * x;
            acc += 2f64.sqrt() * (a * angle.cos() + b * angle.sin());
        }
        acc
    }

    /// `sum_n (2 pi n)^(2 beta) (a_n^2 + b_n^2)`.
    pub fn sobolev_energy(&self, beta: u32) -> f64 {
        self.cos
            .iter()
            .zip(&self.sin)
            .enumerate()
            .map(|(i, (a, b))| (2.0 * PI * (i + 1) as f64).powi(2 * beta as i32) * (a * a + b * b))
            .sum()
    }

    /// Energy `sum_{n > cutoff} (a_n^2 + b_n^2)` beyond a frequency.
    pub fn tail_energy(&self, cutoff: usize) -> f64 {
        self.cos
            .iter()
            .zip(&self.sin)
            .skip(cutoff)
            .map(|(a, b)| a * a + b * b)
            .sum()
    }
}

/// Sampled dictionary `W` (k x T) and the series it was evaluated from.
#[derive(Debug, Clone)]
pub struct SmoothDictionary {
    pub values: Matrix,
    pub series: Vec<TrigSeries>,
}

/// Expected energy of frequency `n` before rescaling. The profile is chosen
/// so that the expected tail beyond `N` is exactly `N^(-2 beta)` (up to the
/// generation cutoff), the slowest decay compatible with the ellipsoid.
fn frequency_variance(n: usize, beta: u32) -> f64 {
    if n == 1 {
        return 1.0;
    }
    let e = -2.0 * beta as f64;
    ((n - 1) as f64).powf(e) - (n as f64).powf(e)
}

fn draw_series<R: Rng>(rng: &mut R, spec: &SmoothFactorSpec) -> TrigSeries {
    let constant: f64 = rng.sample(StandardNormal);
    let mut cos = Vec::with_capacity(spec.n_terms);
    let mut sin = Vec::with_capacity(spec.n_terms);
    for n in 1..=spec.n_terms {
        let sd = (frequency_variance(n, spec.beta) / 2.0).sqrt();
        cos.push(sd * rng.sample::<f64, _>(StandardNormal));
        sin.push(sd * rng.sample::<f64, _>(StandardNormal));
    }
    let mut series = TrigSeries { constant, cos, sin };
    let energy = series.sobolev_energy(spec.beta);
    // radius factor in (0, 1]
    let radius: f64 = 1.0 - rng.random::<f64>();
    if energy > 0.0 {
        let scale = radius * spec.ell / energy.sqrt();
        series.cos.iter_mut().for_each(|a| *a *= scale);
        series.sin.iter_mut().for_each(|b| *b *= scale);
    }
    series
}

/// Draws `k` functions from `W(beta, L)` and evaluates `W[l, t] = f_l(t / T)`
/// for `t = 1..=T`. Row `l` uses generator stream `l` of `seed`.
pub fn gen_smooth_dictionary(
    spec: &SmoothFactorSpec,
    horizon: usize,
    seed: u64,
) -> Result<SmoothDictionary> {
    spec.validate()?;
    if horizon < 2 * spec.n_terms + 2 {
        return Err(invalid(format!(
            "horizon {horizon} too small for {} Fourier terms (need at least {})",
            spec.n_terms,
            2 * spec.n_terms + 2
        )));
    }
    let series: Vec<TrigSeries> = (0..spec.k)
        .map(|l| draw_series(&mut row_rng(seed, l as u64), spec))
        .collect();
    let values = Matrix::from_fn(spec.k, horizon, |l, t| {
        series[l].eval((t + 1) as f64 / horizon as f64)
    });
    Ok(SmoothDictionary { values, series })
}

/// `||W - (W Lambda^+) Lambda||_F^2 / (k T)`, the truncation bias of `W`
/// onto the span of a trigonometric basis.
pub fn bias_of_truncation(w: &Matrix, basis: &StructureBasis) -> Result<f64> {
    if basis.kind() != BasisKind::Trig {
        return Err(invalid(format!(
            "truncation bias needs a trigonometric basis, got {:?}",
            basis.kind()
        )));
    }
    let approx = basis.expand(&basis.project(w)?)?;
    Ok((w - approx).norm_squared() / (w.nrows() * w.ncols()) as f64)
}

/// `N = floor((d T C / (||Sigma||_op k))^(1 / (2 beta + 1)))`, at least 1 and
/// clamped so that `2N < T`.
pub fn optimal_cutoff(
    beta: u32,
    c_beta_l: f64,
    d: usize,
    horizon: usize,
    k: usize,
    sigma_op: f64,
) -> usize {
    let ratio = d as f64 * horizon as f64 * c_beta_l / (sigma_op * k as f64);
    let p = 2 * beta as i32 + 1;
    let mut n = ratio.powf(1.0 / p as f64).floor().max(0.0);
    // powf can land just below an exact integer root
    while (n + 1.0).powi(p) <= ratio {
        n += 1.0;
    }
    while n > 0.0 && n.powi(p) > ratio {
        n -= 1.0;
    }
    let n = (n as usize).max(1);
    n.min(horizon.saturating_sub(1) / 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(k: usize, beta: u32, n_terms: usize) -> SmoothFactorSpec {
        SmoothFactorSpec {
            k,
            beta,
            ell: 3.0,
            n_terms,
        }
    }

    #[test]
    fn generated_series_lie_in_the_ellipsoid() {
        for seed in 0..20 {
            for beta in 1..=3 {
                let s = spec(4, beta, 40);
                let dict = gen_smooth_dictionary(&s, 128, seed).unwrap();
                for series in &dict.series {
                    assert!(series.sobolev_energy(beta) <= s.ell * s.ell * (1.0 + 1e-9));
                }
            }
        }
    }

    #[test]
    fn constant_rows_without_terms() {
        let dict = gen_smooth_dictionary(&spec(1, 2, 0), 10, 4).unwrap();
        let first = dict.values[(0, 0)];
        assert!(dict.values.iter().all(|&v| v == first));
    }

    #[test]
    fn seeds_give_different_dictionaries() {
        let a = gen_smooth_dictionary(&spec(2, 2, 8), 64, 1).unwrap().values;
        let b = gen_smooth_dictionary(&spec(2, 2, 8), 64, 2).unwrap().values;
        assert!((a - b).amax() > 0.0);
    }

    #[test]
    fn horizon_must_cover_terms() {
        assert!(gen_smooth_dictionary(&spec(1, 1, 10), 21, 0).is_err());
        assert!(gen_smooth_dictionary(&spec(1, 1, 10), 22, 0).is_ok());
        assert!(gen_smooth_dictionary(&spec(0, 1, 1), 22, 0).is_err());
    }

    #[test]
    fn high_frequency_energy_decays_by_dft() {
        // energy above n from a direct DFT of the sampled rows
        let beta = 3;
        let horizon = 256;
        let dict = gen_smooth_dictionary(&spec(16, beta, 100), horizon, 7).unwrap();
        let tail_above = |cut: usize| -> f64 {
            let mut total = 0.0;
            for row in dict.values.row_iter() {
                for n in (cut + 1)..horizon / 2 {
                    let (mut re, mut im) = (0.0, 0.0);
                    for (t, v) in row.iter().enumerate() {
                        let ang = 2.0 * PI * (n * (t + 1)) as f64 / horizon as f64;
                        re += v * ang.cos();
                        im += v * ang.sin();
                    }
                    total += (re * re + im * im) / (horizon * horizon) as f64;
                }
            }
            total
        };
        let (e2, e8) = (tail_above(2), tail_above(8));
        let slope = (e8 / e2).ln() / 4f64.ln();
        assert!((slope + 2.0 * beta as f64).abs() < 0.75, "slope {slope}");
    }

    #[test]
    fn bias_examples() {
        let dict = gen_smooth_dictionary(&spec(3, 2, 4), 64, 3).unwrap();
        let exact = StructureBasis::trig(4, 64).unwrap();
        assert!(bias_of_truncation(&dict.values, &exact).unwrap() <= 1e-12);

        let dict = gen_smooth_dictionary(&spec(3, 1, 30), 128, 3).unwrap();
        let mut last = f64::INFINITY;
        for n in 0..=30 {
            let b = bias_of_truncation(&dict.values, &StructureBasis::trig(n, 128).unwrap()).unwrap();
            assert!(b <= last + 1e-15);
            let tail: f64 =
                dict.series.iter().map(|s| s.tail_energy(n)).sum::<f64>() / 3.0;
            assert!((b - tail).abs() < 1e-10 * (1.0 + tail));
            last = b;
        }

        let id = StructureBasis::identity(128).unwrap();
        assert!(bias_of_truncation(&dict.values, &id).is_err());
    }

    #[test]
    fn cutoff_examples() {
        // d T C / (sigma k) = 32
        assert_eq!(optimal_cutoff(2, 1.0, 4, 16, 2, 1.0), 2);
        assert_eq!(optimal_cutoff(2, 1.0, 30, 100, 2, 1e9), 1);
        // ratio 1000
        assert_eq!(optimal_cutoff(1, 1.0, 10, 100, 1, 1.0), 10);
        // clamped by 2N < T
        assert_eq!(optimal_cutoff(1, 1e6, 100, 9, 1, 1e-6), 4);
    }

    #[test]
    fn cutoff_monotonicity() {
        let base = optimal_cutoff(2, 1.0, 30, 512, 2, 0.25);
        assert!(optimal_cutoff(2, 1.0, 60, 512, 2, 0.25) >= base);
        assert!(optimal_cutoff(2, 1.0, 30, 1024, 2, 0.25) >= base);
        assert!(optimal_cutoff(2, 4.0, 30, 512, 2, 0.25) >= base);
        assert!(optimal_cutoff(2, 1.0, 30, 512, 4, 0.25) <= base);
        assert!(optimal_cutoff(2, 1.0, 30, 512, 2, 1.0) <= base);
    }
}
