//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line with the measured quantities. Run with
//! `cargo test -p spotvol --test acceptance -- --nocapture` to see every
//! line; tolerances are pinned in the assertions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::time::Instant;

use spotvol::baselines::{PreAvgConfig, TwoScaleConfig};
use spotvol::estimator::PriceSpectrum;
use spotvol::experiments::{
    adaptive_select_path, benchmark_sweep, empirical_day, ranking_study, BenchmarkConfig,
    SESSION_SECONDS,
};
use spotvol::kernels::k_constant;
use spotvol::lemmas::run_lemma_suite;
use spotvol::metrics::{
    clt_check, rmse_rate_slope, CltCheckConfig, CltSpec, VarianceRegime,
};
use spotvol::path::TWO_PI;
use spotvol::plugins::AmiseInputs;
use spotvol::selector::{c_amise, c_amise_gradient, grid_search, select_params, SelectorOptions};
use spotvol::simulate::{add_noise, simulate, HestonParams, SimModel, Sv1fParams};

fn verdict(id: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {id}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

#[test]
fn acceptance_01_kernel_lemma_suite() {
    let t0 = Instant::now();
    let orders = [4usize, 8, 16, 32, 64, 128, 256, 512];
    let report = run_lemma_suite(&orders, 10.0);
    let elapsed = t0.elapsed();
    // the table of verified limits
    let targets = [
        TWO_PI,
        4.0 * std::f64::consts::PI / 3.0,
        2.0 * std::f64::consts::PI / 15.0,
        4.0 * std::f64::consts::PI / 105.0,
        std::f64::consts::PI / 3.0,
        std::f64::consts::PI / 5.0,
        std::f64::consts::PI / 2.0,
        std::f64::consts::PI * (1.0 + 2.0 * k_constant(1.5f64).unwrap()),
    ];
    let covered = targets.iter().all(|t| {
        report
            .rows
            .iter()
            .any(|r| (r.target - t).abs() <= 1e-9 * t.abs() + 1e-12)
    });
    for row in report.rows.iter().filter(|r| !r.pass) {
        println!(
            "  failing row: {} order {} observed {} target {} rel {}",
            row.lemma, row.order, row.observed, row.target, row.rel_error
        );
    }
    let in_time = elapsed.as_secs_f64() < 60.0;
    let pass = report.all_pass && covered && in_time;
    verdict(
        "1 kernel-lemma-suite",
        pass,
        &format!(
            "{} rows at orders up to 512, all within 10/order; targets table covered; runtime {:.1}s",
            report.rows.len(),
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

/// Criterion 2 as stated: the k = 0 convolution identity at N = n/2 for
/// n ∈ {64, 256, 1024}. On an even-n equispaced grid the window |h| ≤ n/2
/// spans the full residue system plus a double-counted Nyquist alias, so
/// 2π·c₀ = RV + (S² - RV)/(n+1) with S = Σ(-1)^j δ_j: the identity cannot
/// reach 1e-12 for any cut-off on even n. It is exact (and asserted) when
/// 2N+1 ≡ 0 (mod n), i.e. for odd n with N = ⌊n/2⌋. The stated even-n form
/// is asserted faithfully below and is expected to fail.
#[test]
fn acceptance_02_realized_variance_identity_as_stated() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for n in [64usize, 256, 1024] {
        let incr: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.01..0.01)).collect();
        let rv: f64 = incr.iter().map(|d| d * d).sum();
        let path = spotvol::path::RescaledPath {
            times: (0..=n).map(|j| TWO_PI * j as f64 / n as f64).collect(),
            increments: incr,
        };
        let vc = PriceSpectrum::compute(&path).unwrap().vol_coeffs(n / 2, 0);
        let rel = (TWO_PI * vc.get(0).re - rv).abs() / rv;
        worst = worst.max(rel);
        println!("  n={n} N={} relative deviation {rel:.3e}", n / 2);
    }
    let pass = worst <= 1e-12;
    verdict(
        "2 realized-variance-identity(stated: even n, N = n/2)",
        pass,
        &format!(
            "worst relative deviation {worst:.3e}; the identity requires 2N+1 ≡ 0 (mod n), \
             impossible for even n — see the companion test for the exact odd-n identity"
        ),
    );
    assert!(
        pass,
        "spec defect: 2π·c₀(σ²_nN) = RV to 1e-12 is unattainable for even n at N = n/2; \
         the deviation equals (S²-RV)/(n+1) exactly (verified in unit tests); the identity \
         holds at machine precision when 2N+1 ≡ 0 (mod n), see \
         acceptance_02_realized_variance_identity_exact_form"
    );
}

#[test]
fn acceptance_02_realized_variance_identity_exact_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(2025);
    let mut worst: f64 = 0.0;
    for n in [63usize, 255, 1023] {
        let incr: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.01..0.01)).collect();
        let rv: f64 = incr.iter().map(|d| d * d).sum();
        let path = spotvol::path::RescaledPath {
            times: (0..=n).map(|j| TWO_PI * j as f64 / n as f64).collect(),
            increments: incr,
        };
        let vc = PriceSpectrum::compute(&path).unwrap().vol_coeffs(n / 2, 0);
        let rel = (TWO_PI * vc.get(0).re - rv).abs() / rv;
        worst = worst.max(rel);
    }
    let pass = worst <= 1e-12;
    verdict(
        "2b realized-variance-identity(exact form: odd n, 2N+1 = n)",
        pass,
        &format!("worst relative deviation {worst:.3e} over n ∈ {{63, 255, 1023}}"),
    );
    assert!(pass);
}

#[test]
fn acceptance_03_convergence_rate_slopes() {
    let t0 = Instant::now();
    let ns: Vec<usize> = (10..=15).map(|k| 1usize << k).collect();
    let paths = 500;
    // no noise, optimal-rate regime: N = n/2, M = ⌊√n⌋
    let ef = rmse_rate_slope(
        &CltSpec::new(VarianceRegime::NoNoiseVolOfVol, 0.5, 1.0),
        1.0,
        &ns,
        paths,
        0.0,
        23400,
        11,
    )
    .unwrap();
    // noisy optimal-rate regime: N = 2√n, M = 1.5√N, ξ frozen at ζ=1/n_ref
    let efm = rmse_rate_slope(
        &CltSpec::new(VarianceRegime::NoisyVolOfVol, 2.0, 1.5),
        1.0,
        &ns,
        paths,
        1.0,
        23400,
        12,
    )
    .unwrap();
    let elapsed = t0.elapsed();
    println!("  no-noise points: {:?}", ef.points);
    println!("  noisy points:    {:?}", efm.points);
    let pass_ef = (ef.slope + 0.25).abs() <= 0.05;
    let pass_efm = (efm.slope + 0.125).abs() <= 0.05;
    let in_time = elapsed.as_secs_f64() < 1800.0;
    verdict(
        "3 rate-slopes",
        pass_ef && pass_efm && in_time,
        &format!(
            "no-noise slope {:.4} (target -1/4 ± 0.05), noisy slope {:.4} (target -1/8 ± 0.05), runtime {:.0}s",
            ef.slope,
            efm.slope,
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass_ef, "no-noise slope {}", ef.slope);
    assert!(pass_efm, "noisy slope {}", efm.slope);
    assert!(in_time);
}

#[test]
fn acceptance_04_clt_coverage() {
    let n = 23400;
    let paths = 1000;
    let no_noise = clt_check(&CltCheckConfig {
        model: SimModel::ConstVol { sigma2: 1.0 },
        spec: CltSpec::new(VarianceRegime::NoNoise, 0.5, 1.0),
        n,
        zeta: 0.0,
        n_paths: paths,
        seed: 41,
    })
    .unwrap();
    let noisy = clt_check(&CltCheckConfig {
        model: SimModel::ConstVol { sigma2: 1.0 },
        spec: CltSpec::new(VarianceRegime::Noisy, 1.0, 1.0),
        n,
        zeta: 1.0,
        n_paths: paths,
        seed: 42,
    })
    .unwrap();
    println!(
        "  no-noise: coverage {:.3} halved {:.3} mean_z {:.3} var_z {:.3} ks {:.3}",
        no_noise.coverage95,
        no_noise.coverage95_halved,
        no_noise.mean_z,
        no_noise.var_z,
        no_noise.ks_stat
    );
    println!(
        "  noisy:    coverage {:.3} halved {:.3} mean_z {:.3} var_z {:.3} ks {:.3}",
        noisy.coverage95, noisy.coverage95_halved, noisy.mean_z, noisy.var_z, noisy.ks_stat
    );
    let pass = (0.92..=0.98).contains(&no_noise.coverage95)
        && (0.90..=0.98).contains(&noisy.coverage95)
        && no_noise.coverage95_halved < 0.90
        && noisy.coverage95_halved < 0.90;
    verdict(
        "4 clt-coverage",
        pass,
        &format!(
            "no-noise 95% coverage {:.3} ∈ [0.92, 0.98]; noisy {:.3} ∈ [0.90, 0.98]; \
             halved-variance controls {:.3}/{:.3} < 0.90",
            no_noise.coverage95, noisy.coverage95, no_noise.coverage95_halved, noisy.coverage95_halved
        ),
    );
    assert!(pass);
}

#[test]
fn acceptance_05_benchmark_optimal_c_pattern() {
    let t0 = Instant::now();
    let cfg = BenchmarkConfig {
        models: vec![("sv1f".into(), SimModel::Sv1f(Sv1fParams::default()))],
        zetas: vec![1.0, 2.0, 3.0],
        cs: (1..=10).map(|c| c as f64).collect(),
        aas: vec![0.1, 0.2, 0.3, 0.4, 0.5],
        n: 23400,
        n_paths: 200,
        grid_step_seconds: 60.0,
        seed: 71,
    };
    let rows = benchmark_sweep(&cfg).unwrap();
    let argmin_c = |zeta: f64| -> f64 {
        rows.iter()
            .filter(|r| r.zeta == zeta)
            .min_by(|a, b| a.mise.partial_cmp(&b.mise).unwrap())
            .map(|r| r.c)
            .unwrap()
    };
    let (c1, c2, c3) = (argmin_c(1.0), argmin_c(2.0), argmin_c(3.0));
    println!(
        "  MISE-optimal c by zeta: {c1} / {c2} / {c3} (runtime {:.0}s)",
        t0.elapsed().as_secs_f64()
    );
    // ordering and neighborhoods within one grid step
    let non_increasing = c2 <= c1 + 1.0 && c3 <= c2 + 1.0;
    let zeta1_window = (4.0..=10.0).contains(&c1);
    verdict(
        "5 benchmark-optimal-c",
        non_increasing && zeta1_window,
        &format!(
            "optimal c non-increasing in ζ within one grid step ({c1} ≥ {c2} ≥ {c3}); \
             ζ=1 optimum {c1} within one step of [5, 10]"
        ),
    );
    assert!(non_increasing, "optimal c sequence {c1}, {c2}, {c3}");
    assert!(zeta1_window, "zeta=1 optimal c = {c1}");
}

#[test]
fn acceptance_06_estimator_ranking() {
    let t0 = Instant::now();
    let models = vec![
        ("sv1f".to_string(), SimModel::Sv1f(Sv1fParams::default())),
        (
            "heston".to_string(),
            SimModel::Heston(HestonParams::default()),
        ),
    ];
    let rows = ranking_study(&models, &[1.0, 2.0, 3.0], 23400, 200, 60.0, 5000).unwrap();
    let mut rank_ok = true;
    for r in &rows {
        let ok = r.mise_fourier < r.mise_preavg && r.mise_preavg < r.mise_twoscale;
        rank_ok &= ok;
        println!(
            "  {} ζ={}: Fourier {:.3e} < PreAvg {:.3e} < TwoScale {:.3e} : {} (N*={:.0}, M*={:.1})",
            r.model, r.zeta, r.mise_fourier, r.mise_preavg, r.mise_twoscale, ok, r.mean_n_star, r.mean_m_star
        );
    }
    // Fourier/PreAvg gap narrows as noise grows: mean ratio over models
    let mean_ratio = |zeta: f64| -> f64 {
        let sel: Vec<f64> = rows
            .iter()
            .filter(|r| r.zeta == zeta)
            .map(|r| r.mise_fourier / r.mise_preavg)
            .collect();
        sel.iter().sum::<f64>() / sel.len() as f64
    };
    let (r1, r3) = (mean_ratio(1.0), mean_ratio(3.0));
    let trend = r3 > r1;
    println!(
        "  Fourier/PreAvg mean MISE ratio: ζ=1 {:.3} → ζ=3 {:.3} (runtime {:.0}s)",
        r1,
        r3,
        t0.elapsed().as_secs_f64()
    );
    verdict(
        "6 estimator-ranking",
        rank_ok && trend,
        &format!(
            "Fourier < PreAvg < TwoScale in all 6 scenarios: {rank_ok}; \
             Fourier/PreAvg ratio rises toward 1 with ζ ({r1:.3} → {r3:.3}): {trend}"
        ),
    );
    assert!(rank_ok);
    assert!(trend, "ratio must increase toward 1: {r1} vs {r3}");
}

#[test]
fn acceptance_07_selector_oracle_and_landing() {
    // (a) run-to-convergence descent lands within 1% of the exhaustive
    // integer grid search over the production box
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let n = 23400;
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..20 {
        let iq = 10f64.powf(rng.gen_range(-7.0..0.0));
        let ivv = iq * 10f64.powf(rng.gen_range(-2.0..2.0));
        let xi = 10f64.powf(rng.gen_range(-9.0..-3.0));
        let iv = (iq * rng.gen_range(0.3..1.0)).sqrt();
        let inputs = AmiseInputs {
            iv,
            iq,
            ivv,
            xi,
            n,
            t_days: 1.0,
        };
        let opts = SelectorOptions::converged(n);
        let res = select_params(&inputs, &opts).unwrap();
        let (_, _, grid_min) = grid_search(&inputs, &opts).unwrap();
        let f_sel = c_amise(&inputs, res.n_star as f64, res.m_star as f64).unwrap();
        worst_ratio = worst_ratio.max(f_sel / grid_min);
    }
    let oracle_ok = worst_ratio <= 1.01;
    println!("  oracle: worst objective ratio vs grid search {worst_ratio:.6}");

    // (b) production-default landing zone on paper-calibrated simulations
    let models = [
        SimModel::Sv1f(Sv1fParams::default()),
        SimModel::Heston(HestonParams::default()),
    ];
    let per_scenario = 40u64;
    let mut all: Vec<(f64, f64)> = Vec::new();
    for model in &models {
        for zeta in [1.0, 2.0, 3.0] {
            let chunk: Vec<(f64, f64)> = (0..per_scenario)
                .into_par_iter()
                .map(|seed| {
                    let sim = simulate(model, n, SESSION_SECONDS, 9000 + seed).unwrap();
                    let noised = add_noise(&sim, zeta).unwrap();
                    let (sel, _) = adaptive_select_path(&noised.noisy).unwrap();
                    (sel.n_star as f64, sel.m_star as f64)
                })
                .collect();
            all.extend(chunk);
        }
    }
    let mean_n = all.iter().map(|p| p.0).sum::<f64>() / all.len() as f64;
    let mean_m = all.iter().map(|p| p.1).sum::<f64>() / all.len() as f64;
    let landing_ok = (305.48 / 2.0..=305.48 * 2.0).contains(&mean_n)
        && (6.94 / 2.0..=6.94 * 2.0).contains(&mean_m);
    println!("  landing: mean (N*, M*) = ({mean_n:.1}, {mean_m:.2}) over {} paths", all.len());
    verdict(
        "7 adaptive-selector",
        oracle_ok && landing_ok,
        &format!(
            "objective within 1% of grid search (worst {worst_ratio:.4}); \
             average selection ({mean_n:.1}, {mean_m:.2}) within a factor 2 of (305.48, 6.94)"
        ),
    );
    assert!(oracle_ok, "worst oracle ratio {worst_ratio}");
    assert!(landing_ok, "landing ({mean_n}, {mean_m})");
}

#[test]
fn acceptance_08_empirical_pipeline_analogue() {
    let n = 23400;
    let days = 41u64;
    let reports: Vec<_> = (0..days)
        .into_par_iter()
        .map(|day| {
            let sim = simulate(
                &SimModel::Heston(HestonParams::default()),
                n,
                SESSION_SECONDS,
                20_000 + day,
            )
            .unwrap();
            let noised = add_noise(&sim, 1.0).unwrap();
            empirical_day(&noised.noisy, 300.0).unwrap()
        })
        .collect();
    let nf = reports.len() as f64;
    let mean_mean = reports.iter().map(|r| r.mean).sum::<f64>() / nf;
    let mean_var = reports.iter().map(|r| r.variance).sum::<f64>() / nf;
    let mean_kurt = reports.iter().map(|r| r.kurtosis).sum::<f64>() / nf;
    let rejections = reports.iter().filter(|r| r.jb_pvalue < 0.05).count();
    let rejection_rate = rejections as f64 / nf;
    println!(
        "  41 days: mean of means {mean_mean:.4}, mean variance {mean_var:.4}, mean kurtosis {mean_kurt:.4}, JB rejections {rejections}/41"
    );
    let pass = mean_mean.abs() <= 0.05
        && (mean_var - 1.0).abs() <= 0.1
        && (mean_kurt - 3.0).abs() <= 0.3
        && rejection_rate <= 0.10;
    verdict(
        "8 empirical-pipeline",
        pass,
        &format!(
            "standardized 5-minute returns over 41 simulated clean days: mean {mean_mean:.3} (±0.05), \
             variance {mean_var:.3} (1 ± 0.1), kurtosis {mean_kurt:.3} (3 ± 0.3), JB 5% rejection rate {rejection_rate:.3} (≤ 0.10)"
        ),
    );
    assert!(pass);
}

#[test]
fn acceptance_09_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let n = 23400;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let iq = 10f64.powf(rng.gen_range(-6.0..0.0));
        let ivv = iq * 10f64.powf(rng.gen_range(-2.0..2.0));
        let xi = 10f64.powf(rng.gen_range(-9.0..-4.0));
        let iv = (iq * rng.gen_range(0.3..1.0)).sqrt();
        let inputs = AmiseInputs {
            iv,
            iq,
            ivv,
            xi,
            n,
            t_days: 1.0,
        };
        let big_n = rng.gen_range(80.0..1500.0);
        let big_m = rng.gen_range(1.5..24.0);
        let (g_n, g_m) = c_amise_gradient(&inputs, big_n, big_m).unwrap();
        let h_n = big_n * 1e-5;
        let h_m = big_m * 1e-5;
        let fd_n = (c_amise(&inputs, big_n + h_n, big_m).unwrap()
            - c_amise(&inputs, big_n - h_n, big_m).unwrap())
            / (2.0 * h_n);
        let fd_m = (c_amise(&inputs, big_n, big_m + h_m).unwrap()
            - c_amise(&inputs, big_n, big_m - h_m).unwrap())
            / (2.0 * h_m);
        worst = worst.max((g_n - fd_n).abs() / g_n.abs().max(1e-300));
        worst = worst.max((g_m - fd_m).abs() / g_m.abs().max(1e-300));
    }
    let pass = worst <= 1e-6;
    verdict(
        "9 gradient-correctness",
        pass,
        &format!("worst relative deviation from central differences {worst:.3e} at 100 random points"),
    );
    assert!(pass);
}

/// Supporting check for the ranking study: the default baseline constants
/// stay valid at the production sample size.
#[test]
fn baseline_defaults_valid_at_production_size() {
    let ts = TwoScaleConfig::default();
    let pav = PreAvgConfig::default();
    assert!(ts.validate(23400).is_ok());
    assert!(pav.validate(23400).is_ok());
    assert_eq!(ts.lag(23400), 4);
    assert_eq!(pav.window(23400), 152);
}
