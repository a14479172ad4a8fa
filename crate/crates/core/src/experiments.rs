//! Monte Carlo experiment drivers shared by the command-line front end and
//! the acceptance suite: the (c, a) benchmark sweep, the adaptive-selection
//! ranking study against the baseline estimators, and the per-day empirical
//! pipeline on standardized returns.

use rayon::prelude::*;

use crate::baselines::{two_scale, PreAvgConfig, PreAvgEstimator, TwoScaleConfig};
use crate::error::{Error, Result};
use crate::estimator::estimate_path;
use crate::metrics::{jarque_bera, path_error, standardized_returns};
use crate::path::{interior_grid, EstimatorConfig, PricePath, SpotVolPath};
use crate::plugins::{build_amise_inputs, AmiseInputs, PluginConfig};
use crate::selector::{select_params, SelectorOptions, SelectorResult};
use crate::simulate::{add_noise, simulate, SimModel};

pub const SESSION_SECONDS: f64 = 23400.0;

/// True variance restricted to an evaluation grid: the value at the last
/// simulation point at or before each grid time.
fn truth_on_grid(sim_var: &SpotVolPath, grid: &[f64]) -> Result<SpotVolPath> {
    let values = grid
        .iter()
        .map(|t| {
            let idx = sim_var.grid.partition_point(|g| *g <= t + 1e-9);
            if idx == 0 {
                return Err(Error::GridMismatch(format!(
                    "no true variance at or before t = {t}s"
                )));
            }
            Ok(sim_var.values[idx - 1])
        })
        .collect::<Result<Vec<f64>>>()?;
    SpotVolPath::new(grid.to_vec(), values)
}

/// One cell of the (c, a) benchmark sweep.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub model: String,
    pub zeta: f64,
    pub c: f64,
    pub a: f64,
    pub mise: f64,
    pub miae: f64,
}

/// Sweep configuration. Cells share common random numbers: the same paths
/// are estimated under every (c, a), which sharpens cell comparisons.
#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    pub models: Vec<(String, SimModel)>,
    pub zetas: Vec<f64>,
    pub cs: Vec<f64>,
    pub aas: Vec<f64>,
    pub n: usize,
    pub n_paths: usize,
    pub grid_step_seconds: f64,
    pub seed: u64,
}

/// MISE/MIAE of the Fourier estimator with `N = ⌊c√n⌋, M = ⌊a√N⌋` over the
/// sweep grid, one row per (model, ζ, c, a).
pub fn benchmark_sweep(cfg: &BenchmarkConfig) -> Result<Vec<BenchRow>> {
    let grid = interior_grid(SESSION_SECONDS, cfg.grid_step_seconds)?;
    let mut rows = Vec::new();
    for (name, model) in &cfg.models {
        for &zeta in &cfg.zetas {
            // per-path cell errors, then a fixed-order reduction so the
            // float sums (and thus the output bytes) are reproducible
            let per_path: Vec<Vec<(f64, f64)>> = (0..cfg.n_paths as u64)
                .into_par_iter()
                .map(|i| -> Result<Vec<(f64, f64)>> {
                    let sim = simulate(model, cfg.n, SESSION_SECONDS, cfg.seed.wrapping_add(i))?;
                    let noised = add_noise(&sim, zeta)?;
                    let truth = truth_on_grid(&sim.true_var, &grid)?;
                    let mut acc = Vec::with_capacity(cfg.cs.len() * cfg.aas.len());
                    for &c in &cfg.cs {
                        for &a in &cfg.aas {
                            let config = EstimatorConfig::from_constants(c, a, cfg.n)?;
                            let est = estimate_path(&noised.noisy, &config, &grid)?;
                            let err = path_error(&est, &truth, SESSION_SECONDS)?;
                            acc.push((err.ise, err.iae));
                        }
                    }
                    Ok(acc)
                })
                .collect::<Result<_>>()?;
            let mut cells = vec![(0.0f64, 0.0f64); cfg.cs.len() * cfg.aas.len()];
            for path_cells in &per_path {
                for (x, y) in cells.iter_mut().zip(path_cells) {
                    x.0 += y.0;
                    x.1 += y.1;
                }
            }
            let npf = cfg.n_paths as f64;
            let mut idx = 0;
            for &c in &cfg.cs {
                for &a in &cfg.aas {
                    rows.push(BenchRow {
                        model: name.clone(),
                        zeta,
                        c,
                        a,
                        mise: cells[idx].0 / npf,
                        miae: cells[idx].1 / npf,
                    });
                    idx += 1;
                }
            }
        }
    }
    Ok(rows)
}

/// The production adaptive pipeline for one observed day: plug-ins with
/// default cut-offs, paper box and optimisation constants.
pub fn adaptive_select_path(path: &PricePath) -> Result<(SelectorResult, AmiseInputs)> {
    let estimates = build_amise_inputs(path, &PluginConfig::default())?;
    let opts = SelectorOptions::for_sample_size(path.n_increments());
    let result = select_params(&estimates.inputs, &opts)?;
    Ok((result, estimates.inputs))
}

/// One scenario row of the ranking study.
#[derive(Debug, Clone)]
pub struct RankRow {
    pub model: String,
    pub zeta: f64,
    pub mise_fourier: f64,
    pub miae_fourier: f64,
    pub mise_preavg: f64,
    pub miae_preavg: f64,
    pub mise_twoscale: f64,
    pub miae_twoscale: f64,
    pub mean_n_star: f64,
    pub mean_m_star: f64,
}

/// Adaptive Fourier vs Pre-averaging vs Two-Scale on common paths. The
/// baselines run at their documented default constants (the ξ̂-driven
/// [`crate::baselines::tune_baselines`] rule is available separately).
pub fn ranking_study(
    models: &[(String, SimModel)],
    zetas: &[f64],
    n: usize,
    n_paths: usize,
    grid_step_seconds: f64,
    seed: u64,
) -> Result<Vec<RankRow>> {
    let grid = interior_grid(SESSION_SECONDS, grid_step_seconds)?;
    let mut rows = Vec::new();
    for (name, model) in models {
        for &zeta in zetas {
            let per_path: Vec<Vec<f64>> = (0..n_paths as u64)
                .into_par_iter()
                .map(|i| -> Result<Vec<f64>> {
                    let sim = simulate(model, n, SESSION_SECONDS, seed.wrapping_add(i))?;
                    let noised = add_noise(&sim, zeta)?;
                    let truth = truth_on_grid(&sim.true_var, &grid)?;
                    let path = &noised.noisy;

                    let (sel, _) = adaptive_select_path(path)?;
                    let config = EstimatorConfig::new(sel.n_star, sel.m_star);
                    let est = estimate_path(path, &config, &grid)?;
                    let ef = path_error(&est, &truth, SESSION_SECONDS)?;

                    let ts_cfg = TwoScaleConfig::default();
                    let pav_cfg = PreAvgConfig::default();
                    let pav = PreAvgEstimator::new(path, &pav_cfg)?;
                    let pav_est =
                        SpotVolPath::new(grid.clone(), pav.estimate_grid(&grid, SESSION_SECONDS)?)?;
                    let ep = path_error(&pav_est, &truth, SESSION_SECONDS)?;

                    let h_days = ts_cfg.window_days(n);
                    let t_max = (1.0 - h_days) * SESSION_SECONDS;
                    let ts_values = grid
                        .iter()
                        .map(|t| two_scale(path, t.min(t_max), &ts_cfg))
                        .collect::<Result<Vec<f64>>>()?;
                    let ts_est = SpotVolPath::new(grid.clone(), ts_values)?;
                    let et = path_error(&ts_est, &truth, SESSION_SECONDS)?;

                    Ok(vec![
                        ef.ise,
                        ef.iae,
                        ep.ise,
                        ep.iae,
                        et.ise,
                        et.iae,
                        sel.n_star as f64,
                        sel.m_star as f64,
                    ])
                })
                .collect::<Result<_>>()?;
            let mut acc = vec![0.0f64; 8];
            for path_vals in &per_path {
                for (x, y) in acc.iter_mut().zip(path_vals) {
                    *x += y;
                }
            }
            let npf = n_paths as f64;
            rows.push(RankRow {
                model: name.clone(),
                zeta,
                mise_fourier: acc[0] / npf,
                miae_fourier: acc[1] / npf,
                mise_preavg: acc[2] / npf,
                miae_preavg: acc[3] / npf,
                mise_twoscale: acc[4] / npf,
                miae_twoscale: acc[5] / npf,
                mean_n_star: acc[6] / npf,
                mean_m_star: acc[7] / npf,
            });
        }
    }
    Ok(rows)
}

/// One day through the empirical pipeline: adaptive selection, estimation
/// on the h-grid, standardized returns and their sample statistics.
#[derive(Debug, Clone)]
pub struct DayReport {
    pub n_star: usize,
    pub m_star: usize,
    pub converged: bool,
    pub n_returns: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub jb_stat: f64,
    pub jb_pvalue: f64,
    /// Estimates clamped to the positivity floor before standardisation.
    pub clamped_estimates: usize,
}

/// Run the adaptive pipeline on one session and test the standardized
/// returns at horizon `h_seconds` (positive-truncated variance estimates).
pub fn empirical_day(path: &PricePath, h_seconds: f64) -> Result<DayReport> {
    let horizon = path.horizon();
    let (sel, _) = adaptive_select_path(path)?;
    let config = EstimatorConfig::new(sel.n_star, sel.m_star);
    let mut t = h_seconds;
    let mut grid = Vec::new();
    while t <= horizon - h_seconds + 1e-9 {
        grid.push(t);
        t += h_seconds;
    }
    let est = estimate_path(path, &config, &grid)?;
    // truncated-positive variant for standardisation
    let floor = 1e-6
        * est
            .values
            .iter()
            .map(|v| v.abs())
            .fold(0.0f64, f64::max)
            .max(1e-300);
    let mut clamped = 0usize;
    let positive: Vec<f64> = est
        .values
        .iter()
        .map(|v| {
            if *v < floor {
                clamped += 1;
                floor
            } else {
                *v
            }
        })
        .collect();
    let vol = SpotVolPath::new(grid, positive)?;
    let z = standardized_returns(path, &vol, h_seconds)?;
    let n = z.len() as f64;
    let mean = z.iter().sum::<f64>() / n;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    let mut m4 = 0.0;
    for x in &z {
        let d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let (jb_stat, jb_pvalue) = jarque_bera(&z)?;
    Ok(DayReport {
        n_star: sel.n_star,
        m_star: sel.m_star,
        converged: sel.converged,
        n_returns: z.len(),
        mean,
        variance: m2 * n / (n - 1.0),
        skewness: m3 / m2.powf(1.5),
        kurtosis: m4 / (m2 * m2),
        jb_stat,
        jb_pvalue,
        clamped_estimates: clamped,
    })
}
