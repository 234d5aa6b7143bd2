//! Seeded Monte-Carlo checks of estimator, noise and selection behaviour.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use tsfactor::linalg::symmetric_eigen_extremes;
use tsfactor::noise::{projected_noise_norm_bound, sample_noise};
use tsfactor::rng::derive_seed;
use tsfactor::select::{calibrate_noise_level, select, CandidateGrid, PenaltyParams};
use tsfactor::sobolev::{bias_of_truncation, gen_smooth_dictionary};
use tsfactor::{fit, risk, BasisSpec, Matrix, NoiseSpec, SmoothFactorSpec, StructureBasis};

fn gaussian(rng: &mut ChaCha8Rng, m: usize, n: usize, scale: f64) -> Matrix {
    Matrix::from_fn(m, n, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

fn periodic_signal(rng: &mut ChaCha8Rng, d: usize, tau: usize, horizon: usize, k: usize) -> Matrix {
    let basis = StructureBasis::periodic(tau, horizon).unwrap();
    basis
        .expand(&(gaussian(rng, d, k, 1.0) * gaussian(rng, k, tau, (k as f64).recip().sqrt())))
        .unwrap()
}

/// Largest eigenvalue of the sample covariance of the rows of `e Lambda^+`.
fn projected_covariance_norm(spec: &NoiseSpec, basis: &StructureBasis, rows: usize, seed: u64) -> f64 {
    let eps = sample_noise(spec, rows, basis.horizon(), seed).unwrap();
    let p = basis.project(&eps).unwrap();
    let cov = p.transpose() * &p / rows as f64;
    symmetric_eigen_extremes(&cov).unwrap().1
}

#[test]
fn true_rank_beats_full_rank_on_average() {
    let basis = StructureBasis::periodic(8, 40).unwrap();
    let noise = NoiseSpec::iid(0.3).unwrap();
    let (mut low, mut full) = (0.0, 0.0);
    for seed in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = periodic_signal(&mut rng, 10, 8, 40, 2);
        let x = &m + sample_noise(&noise, 10, 40, derive_seed(seed, 1)).unwrap();
        low += risk(&fit(&x, &basis, 2).unwrap().predict(), &m).unwrap();
        full += risk(&fit(&x, &basis, 8).unwrap().predict(), &m).unwrap();
    }
    assert!(low < full, "{low} vs {full}");
}

#[test]
fn periodic_projection_divides_iid_variance() {
    let basis = StructureBasis::periodic(2, 8).unwrap();
    let spec = NoiseSpec::iid(1.0).unwrap();
    let norm = projected_covariance_norm(&spec, &basis, 40_000, 3);
    assert!((norm - 0.25).abs() < 0.01, "{norm}");
}

#[test]
fn projected_noise_respects_its_bound() {
    let specs = [
        NoiseSpec::iid(0.8).unwrap(),
        NoiseSpec::ma1(0.7, 1.0).unwrap(),
        NoiseSpec::ma1(-1.2, 0.5).unwrap(),
        NoiseSpec::ar1(0.6, 1.0).unwrap(),
        NoiseSpec::ar1(-0.5, 2.0).unwrap(),
    ];
    let bases = [
        StructureBasis::identity(6).unwrap(),
        StructureBasis::periodic(4, 24).unwrap(),
        StructureBasis::trig(2, 24).unwrap(),
    ];
    for (i, spec) in specs.iter().enumerate() {
        for (j, basis) in bases.iter().enumerate() {
            let bound = projected_noise_norm_bound(spec, basis).unwrap();
            let norm = projected_covariance_norm(spec, basis, 20_000, (10 * i + j) as u64);
            assert!(norm <= 1.1 * bound, "{spec:?} {:?}: {norm} > 1.1 * {bound}", basis.spec());
        }
    }
}

#[test]
fn noise_level_proxy_on_pure_noise() {
    let sigma: f64 = 0.7;
    let x = sample_noise(&NoiseSpec::iid(sigma).unwrap(), 200, 120, 5).unwrap();
    let grid = CandidateGrid::from_specs(&[BasisSpec::Periodic { tau: 12 }], 120, vec![1, 2, 3]).unwrap();
    let proxy = calibrate_noise_level(&x, &grid).unwrap();
    assert!((proxy / sigma.powi(2) - 1.0).abs() < 0.3, "{proxy}");

    // the proxy shrinks as the largest model grows
    let mut last = f64::INFINITY;
    for tau in [6, 12, 24, 60] {
        let grid = CandidateGrid::from_specs(&[BasisSpec::Periodic { tau }], 120, vec![1, 3]).unwrap();
        let p = calibrate_noise_level(&x, &grid).unwrap();
        assert!(p <= last + 1e-12);
        last = p;
    }
}

#[test]
fn selected_model_is_close_to_the_best_fixed_model() {
    let specs = [6, 12, 24].map(|tau| BasisSpec::Periodic { tau });
    let grid = CandidateGrid::from_specs(&specs, 120, vec![1, 2, 3, 4]).unwrap();
    let noise = NoiseSpec::iid(0.5).unwrap();
    let params = PenaltyParams::with_noise_level(0.25).unwrap();
    let mut selected = 0.0;
    let mut fixed = vec![0.0; specs.len() * 4];
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let m = periodic_signal(&mut rng, 20, 12, 120, 2);
        let x = &m + sample_noise(&noise, 20, 120, derive_seed(seed, 7)).unwrap();
        selected += risk(&select(&x, &grid, &params).unwrap().fitted.predict(), &m).unwrap();
        for (b, basis) in grid.bases().iter().enumerate() {
            for k in 1..=4 {
                fixed[b * 4 + k - 1] += risk(&fit(&x, basis, k).unwrap().predict(), &m).unwrap();
            }
        }
    }
    let best = fixed.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(selected <= 3.0 * best, "{selected} vs best fixed {best}");
}

#[test]
fn truncation_bias_decays_at_the_smoothness_rate() {
    let cutoffs = [2usize, 4, 8, 16];
    for beta in [1u32, 2, 3] {
        let spec = SmoothFactorSpec {
            k: 16,
            beta,
            ell: 2.0,
            n_terms: 120,
        };
        let w = gen_smooth_dictionary(&spec, 256, 40 + beta as u64).unwrap().values;
        let logs: Vec<(f64, f64)> = cutoffs
            .iter()
            .map(|&n| {
                let b = bias_of_truncation(&w, &StructureBasis::trig(n, 256).unwrap()).unwrap();
                ((n as f64).ln(), b.ln())
            })
            .collect();
        let mx = logs.iter().map(|p| p.0).sum::<f64>() / 4.0;
        let my = logs.iter().map(|p| p.1).sum::<f64>() / 4.0;
        let slope = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / logs.iter().map(|(x, _)| (x - mx).powi(2)).sum::<f64>();
        let target = -2.0 * beta as f64;
        assert!((slope - target).abs() <= 0.5, "beta {beta}: slope {slope}");
    }
}
