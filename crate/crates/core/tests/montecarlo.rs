//! Monte Carlo oracle tests: distributional and consistency properties of
//! the estimator pipeline that only show up across many simulated paths.

use rayon::prelude::*;

use spotvol::estimator::estimate_path;
use spotvol::kernels::k_constant;
use spotvol::metrics::{path_error, standardized_returns};
use spotvol::path::{interior_grid, EstimatorConfig, SpotVolPath, TWO_PI};
use spotvol::plugins::{integrated_variance, noise_variance};
use spotvol::simulate::{add_noise, simulate, HestonParams, SimModel, Sv1fParams};

const HORIZON: f64 = 23400.0;

#[test]
fn constant_vol_pointwise_estimate_unbiased_at_nyquist_scale() {
    // n = 23400, N = n/2, M = 150, no noise: the mid-session estimate over
    // 500 paths stays within 3 Monte Carlo standard errors of the truth
    let sigma2 = 0.015;
    let n = 23400;
    let cfg = EstimatorConfig::new(n / 2, 150);
    let values: Vec<f64> = (0..500u64)
        .into_par_iter()
        .map(|seed| {
            let sim = simulate(&SimModel::ConstVol { sigma2 }, n, HORIZON, seed).unwrap();
            estimate_path(&sim.clean, &cfg, &[HORIZON / 2.0]).unwrap().values[0]
        })
        .collect();
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let sd = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m).sqrt();
    let se = sd / m.sqrt();
    assert!(
        (mean - sigma2).abs() <= 3.0 * se,
        "mean {mean} vs {sigma2} (se {se})"
    );
}

#[test]
fn mise_decreases_as_sample_doubles() {
    // constant vol, no noise, N = n/2, M = ⌊√n⌋
    let sigma2 = 0.02;
    let mut last = f64::INFINITY;
    for n in [5850usize, 11700, 23400] {
        let cfg = EstimatorConfig::new(n / 2, (n as f64).sqrt() as usize);
        let grid = interior_grid(HORIZON, 60.0).unwrap();
        let total: f64 = (0..100u64)
            .into_par_iter()
            .map(|seed| {
                let sim = simulate(&SimModel::ConstVol { sigma2 }, n, HORIZON, 300 + seed).unwrap();
                let est = estimate_path(&sim.clean, &cfg, &grid).unwrap();
                let truth = SpotVolPath::new(grid.clone(), vec![sigma2; grid.len()]).unwrap();
                path_error(&est, &truth, HORIZON).unwrap().ise
            })
            .sum();
        let mise = total / 100.0;
        assert!(mise < last, "MISE must fall with n: {mise} at n = {n}");
        last = mise;
    }
}

#[test]
fn noisy_sv1f_estimates_finite_at_table_cell() {
    // the (c, a) = (3, 0.1) cell at ζ = 2
    let n = 23400;
    let sim = simulate(&SimModel::Sv1f(Sv1fParams::default()), n, HORIZON, 77).unwrap();
    let noised = add_noise(&sim, 2.0).unwrap();
    let cfg = EstimatorConfig::from_constants(3.0, 0.1, n).unwrap();
    let grid = interior_grid(HORIZON, 60.0).unwrap();
    let est = estimate_path(&noised.noisy, &cfg, &grid).unwrap();
    assert_eq!(est.grid.len(), 389);
    assert!(est.values.iter().all(|v| v.is_finite()));
}

#[test]
fn discretization_constant_scales_no_noise_variance() {
    // estimator variance at N = ⌊0.75 n⌋ exceeds the N = ⌊n/2⌋ variance by
    // the factor (1 + 2K(1.5)) = 10/9 as the kernels discretize
    let sigma2 = 1.0;
    let n = 4096;
    let m_cut = (1.0 * (n as f64).powf(2.0 / 3.0)) as usize;
    let sample_var = |c: f64| -> f64 {
        let cfg = EstimatorConfig::new((c * n as f64) as usize, m_cut);
        let vals: Vec<f64> = (0..1000u64)
            .into_par_iter()
            .map(|seed| {
                let sim = simulate(&SimModel::ConstVol { sigma2 }, n, HORIZON, 600 + seed).unwrap();
                estimate_path(&sim.clean, &cfg, &[HORIZON / 2.0]).unwrap().values[0]
            })
            .collect();
        let m = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / m;
        vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m
    };
    let ratio = sample_var(0.75) / sample_var(0.5);
    let predicted = 1.0 + 2.0 * k_constant(1.5f64).unwrap();
    assert!(
        (ratio - predicted).abs() <= 0.15 * predicted,
        "variance ratio {ratio} vs predicted {predicted}"
    );
}

#[test]
fn integrated_variance_bias_small_on_noisy_heston() {
    let n = 4096;
    let n_iv = (n as f64).sqrt() as usize;
    let sums: (f64, f64) = (0..500u64)
        .into_par_iter()
        .map(|seed| {
            let sim = simulate(&SimModel::Heston(HestonParams::default()), n, HORIZON, seed)
                .unwrap();
            let noised = add_noise(&sim, 2.0).unwrap();
            let est = integrated_variance(&noised.noisy, n_iv).unwrap();
            let dt = 1.0 / n as f64;
            let truth: f64 = sim.true_var.values[..n].iter().map(|v| v * dt).sum();
            (est, truth)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let rel_bias = (sums.0 - sums.1).abs() / sums.1;
    assert!(rel_bias < 0.05, "relative IV bias {rel_bias}");
}

#[test]
fn noise_variance_ignores_vanishing_trends() {
    let n = 23400;
    let sim = simulate(&SimModel::ConstVol { sigma2: 0.01 }, n, HORIZON, 5).unwrap();
    let noised = add_noise(&sim, 1.0).unwrap();
    let base = noise_variance(&noised.noisy);
    // add a linear trend with slope of order 1/√n per day
    let slope = 1.0 / (n as f64).sqrt();
    let trended = spotvol::path::PricePath::new(
        noised.noisy.timestamps().to_vec(),
        noised
            .noisy
            .log_prices()
            .iter()
            .zip(noised.noisy.timestamps())
            .map(|(p, t)| p + slope * t / HORIZON)
            .collect(),
        HORIZON,
    )
    .unwrap();
    let shifted = noise_variance(&trended);
    assert!(
        (shifted - base).abs() <= 5e-3 * base,
        "trend moved the noise estimate: {base} -> {shifted}"
    );
}

#[test]
fn standardized_returns_have_unit_variance_over_a_day() {
    let sigma2 = 0.015;
    let sim = simulate(&SimModel::ConstVol { sigma2 }, 23400, HORIZON, 2).unwrap();
    let h = 300.0;
    let grid: Vec<f64> = (1..78).map(|k| k as f64 * h).collect();
    let vol = SpotVolPath::new(grid.clone(), vec![sigma2; grid.len()]).unwrap();
    let z = standardized_returns(&sim.clean, &vol, h).unwrap();
    let n = z.len() as f64;
    let var = z.iter().map(|x| x * x).sum::<f64>() / n;
    assert!((var - 1.0).abs() <= 0.10, "sample variance {var}");
}

#[test]
fn rescaled_mesh_of_one_second_day_is_two_pi_over_n() {
    let sim = simulate(&SimModel::ConstVol { sigma2: 0.01 }, 23400, HORIZON, 1).unwrap();
    let r = sim.clean.rescale_time();
    assert!((r.times[1] - TWO_PI / 23400.0).abs() < 1e-15);
}
