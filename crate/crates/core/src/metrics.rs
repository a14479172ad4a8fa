//! Path-error metrics, asymptotic-variance formulas of the central limit
//! theorems, Monte Carlo CLT verification, standardized returns and the
//! Jarque–Bera test.

use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::estimator::estimate_rescaled;
use crate::kernels::k_constant;
use crate::path::{EstimatorConfig, SpotVolPath, DAY_VARIANCE_FACTOR, TWO_PI};
use crate::simulate::{add_noise, simulate, SimModel};

/// Integrated squared and absolute error of one estimated path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathError {
    pub ise: f64,
    pub iae: f64,
}

/// Left-Riemann integrals of the squared and absolute deviation over the
/// common grid, in day units. Each grid point carries the weight up to the
/// next point, the last one extends to the end of the session, and the
/// initial segment `[0, t_0]` is attributed to the first point, so the
/// weights sum to one day exactly.
pub fn path_error(est: &SpotVolPath, truth: &SpotVolPath, horizon_seconds: f64) -> Result<PathError> {
    if est.grid.len() != truth.grid.len()
        || est
            .grid
            .iter()
            .zip(&truth.grid)
            .any(|(a, b)| (a - b).abs() > 1e-9 * horizon_seconds)
    {
        return Err(Error::GridMismatch(
            "estimate and truth must share the evaluation grid".into(),
        ));
    }
    if est.grid.is_empty() {
        return Err(Error::GridMismatch("empty evaluation grid".into()));
    }
    let g = &est.grid;
    let mut ise = 0.0;
    let mut iae = 0.0;
    for i in 0..g.len() {
        let upper = if i + 1 < g.len() { g[i + 1] } else { horizon_seconds };
        let mut w = (upper - g[i]) / horizon_seconds;
        if i == 0 {
            w += g[0] / horizon_seconds;
        }
        let e = est.values[i] - truth.values[i];
        ise += w * e * e;
        iae += w * e.abs();
    }
    Ok(PathError { ise, iae })
}

/// Which central limit theorem the Monte Carlo check targets. The two
/// `..VolOfVol` regimes run the inversion cut-off at its optimal-rate
/// scaling where the volatility-of-volatility enters the variance; the
/// other two use the slower inversion rate (implemented with exponent 2/3)
/// whose variance is free of it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceRegime {
    /// No noise, `N = ⌊cn⌋`, `M = ⌊a n^{2/3}⌋`.
    NoNoise,
    /// No noise, `N = ⌊cn⌋`, `M = ⌊a n^{1/2}⌋` (optimal rate).
    NoNoiseVolOfVol,
    /// Noisy, `N = ⌊c√n⌋`, `M = ⌊a N^{2/3}⌋`.
    Noisy,
    /// Noisy, `N = ⌊c√n⌋`, `M = ⌊a N^{1/2}⌋` (optimal rate).
    NoisyVolOfVol,
}

impl VarianceRegime {
    pub fn uses_noise(&self) -> bool {
        matches!(self, VarianceRegime::Noisy | VarianceRegime::NoisyVolOfVol)
    }
}

/// Cut-off generation and normalisation rate for a CLT check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CltSpec {
    pub regime: VarianceRegime,
    pub c: f64,
    pub a: f64,
    /// Evaluation time as a fraction of the session (default 1/2).
    pub t_eval_frac: f64,
}

impl CltSpec {
    pub fn new(regime: VarianceRegime, c: f64, a: f64) -> Self {
        CltSpec {
            regime,
            c,
            a,
            t_eval_frac: 0.5,
        }
    }

    pub fn cutoffs(&self, n: usize) -> Result<EstimatorConfig> {
        if !(self.c > 0.0 && self.a > 0.0) {
            return Err(Error::invalid("regime constants must be positive"));
        }
        let nf = n as f64;
        let (n_cut, m_cut) = match self.regime {
            VarianceRegime::NoNoise => {
                let nc = (self.c * nf).floor();
                (nc, (self.a * nf.powf(2.0 / 3.0)).floor())
            }
            VarianceRegime::NoNoiseVolOfVol => {
                let nc = (self.c * nf).floor();
                (nc, (self.a * nf.sqrt()).floor())
            }
            VarianceRegime::Noisy => {
                let nc = (self.c * nf.sqrt()).floor();
                (nc, (self.a * nc.powf(2.0 / 3.0)).floor())
            }
            VarianceRegime::NoisyVolOfVol => {
                let nc = (self.c * nf.sqrt()).floor();
                (nc, (self.a * nc.sqrt()).floor())
            }
        };
        let cfg = EstimatorConfig::new(n_cut as usize, (m_cut as usize).max(1));
        cfg.validate(n)?;
        Ok(cfg)
    }

    /// Normalisation `n^{1/2}M^{-1/2}` (no noise) or `n^{1/4}M^{-1/2}`.
    pub fn rate(&self, n: usize, m_cut: usize) -> f64 {
        let nf = n as f64;
        let root = if self.regime.uses_noise() {
            nf.powf(0.25)
        } else {
            nf.sqrt()
        };
        root / (m_cut as f64).sqrt()
    }
}

/// Closed-form asymptotic variance of the regime. All inputs live on the
/// 2π-rescaled session: `sigma2` is variance per unit of rescaled time,
/// `gamma2` its squared volatility-of-volatility on the same scale, and
/// `xi` the (scale-free) noise variance.
pub fn asymptotic_variance(
    regime: VarianceRegime,
    c: f64,
    a: f64,
    sigma2: f64,
    gamma2: f64,
    xi: f64,
) -> Result<f64> {
    if !(c > 0.0 && a > 0.0) {
        return Err(Error::invalid("regime constants must be positive"));
    }
    let s4 = sigma2 * sigma2;
    Ok(match regime {
        VarianceRegime::NoNoise => (4.0 / 3.0) * (1.0 + 2.0 * k_constant(2.0 * c)?) * s4,
        VarianceRegime::NoNoiseVolOfVol => {
            (4.0 / 3.0) * (1.0 + 2.0 * k_constant(2.0 * c)?) * s4
                + TWO_PI / (3.0 * a * a) * gamma2
        }
        VarianceRegime::Noisy => {
            2.0 / (3.0 * c) * s4
                + c * TWO_PI / 9.0 * sigma2 * xi
                + c.powi(3) * (4.0 * std::f64::consts::PI * std::f64::consts::PI / 15.0) * xi * xi
        }
        VarianceRegime::NoisyVolOfVol => {
            asymptotic_variance(VarianceRegime::Noisy, c, a, sigma2, gamma2, xi)?
                + TWO_PI / (3.0 * a * a * c) * gamma2
        }
    })
}

/// Summary of one Monte Carlo CLT check.
#[derive(Debug, Clone, Copy)]
pub struct CltReport {
    pub ks_stat: f64,
    pub jb_pvalue: f64,
    pub coverage95: f64,
    /// Negative control: coverage of intervals built from half the variance.
    pub coverage95_halved: f64,
    pub mean_z: f64,
    pub var_z: f64,
    pub n_paths: usize,
}

/// Settings of a CLT verification run.
#[derive(Debug, Clone, Copy)]
pub struct CltCheckConfig {
    pub model: SimModel,
    pub spec: CltSpec,
    pub n: usize,
    /// Noise-to-signal ratio (ignored by the no-noise regimes).
    pub zeta: f64,
    pub n_paths: usize,
    pub seed: u64,
}

const Z_95: f64 = 1.959963984540054;

/// Simulate, estimate at `t_eval` and standardize with the regime's rate
/// and closed-form variance evaluated at the TRUE path quantities.
pub fn clt_check(cfg: &CltCheckConfig) -> Result<CltReport> {
    let config = cfg.spec.cutoffs(cfg.n)?;
    if config.m_cut < 4 {
        return Err(Error::invalid("degenerate regime: inversion cut-off below 4"));
    }
    let horizon = 23400.0;
    let t_eval_rad = cfg.spec.t_eval_frac * TWO_PI;
    let use_noise = cfg.spec.regime.uses_noise();
    let c_eff = config.n_cut as f64
        / if use_noise {
            (cfg.n as f64).sqrt()
        } else {
            cfg.n as f64
        };
    let a_eff = config.m_cut as f64
        / match cfg.spec.regime {
            VarianceRegime::NoNoise => (cfg.n as f64).powf(2.0 / 3.0),
            VarianceRegime::NoNoiseVolOfVol => (cfg.n as f64).sqrt(),
            VarianceRegime::Noisy => (config.n_cut as f64).powf(2.0 / 3.0),
            VarianceRegime::NoisyVolOfVol => (config.n_cut as f64).sqrt(),
        };
    let rate = cfg.spec.rate(cfg.n, config.m_cut);

    let zs: Result<Vec<f64>> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let sim = simulate(&cfg.model, cfg.n, horizon, cfg.seed.wrapping_add(i))?;
            let (path, xi) = if use_noise {
                let noised = add_noise(&sim, cfg.zeta)?;
                let xi = noised.noise.xi;
                (noised.noisy, xi)
            } else {
                (sim.clean.clone(), 0.0)
            };
            let est_rescaled = estimate_rescaled(&path.rescale_time(), &config, &[t_eval_rad])?[0];
            // true quantities at t_eval, converted to the 2π scale
            let idx = (cfg.spec.t_eval_frac * cfg.n as f64).round() as usize;
            let sigma2_day = sim.true_var.values[idx];
            let sigma2_u = sigma2_day / DAY_VARIANCE_FACTOR;
            let gamma2_u =
                cfg.model.gamma_sq_from_var(sigma2_day) / DAY_VARIANCE_FACTOR.powi(3);
            let avar = asymptotic_variance(
                cfg.spec.regime,
                c_eff,
                a_eff,
                sigma2_u,
                gamma2_u,
                xi,
            )?;
            Ok(rate * (est_rescaled - sigma2_u) / avar.sqrt())
        })
        .collect();
    let zs = zs?;

    let n = zs.len() as f64;
    let mean = zs.iter().sum::<f64>() / n;
    let var = zs.iter().map(|z| (z - mean) * (z - mean)).sum::<f64>() / n;
    let coverage95 = zs.iter().filter(|z| z.abs() <= Z_95).count() as f64 / n;
    let coverage95_halved =
        zs.iter().filter(|z| z.abs() * 2f64.sqrt() <= Z_95).count() as f64 / n;
    let (jb, jb_p) = jarque_bera(&zs)?;
    let _ = jb;
    Ok(CltReport {
        ks_stat: ks_statistic_normal(&zs)?,
        jb_pvalue: jb_p,
        coverage95,
        coverage95_halved,
        mean_z: mean,
        var_z: var,
        n_paths: zs.len(),
    })
}

/// Kolmogorov–Smirnov distance between the sample and the standard Normal.
pub fn ks_statistic_normal(sample: &[f64]) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::invalid("empty sample"));
    }
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite sample"));
    let n = sorted.len() as f64;
    let mut sup: f64 = 0.0;
    for (i, z) in sorted.iter().enumerate() {
        let cdf = normal.cdf(*z);
        sup = sup
            .max((cdf - i as f64 / n).abs())
            .max((cdf - (i + 1) as f64 / n).abs());
    }
    Ok(sup)
}

/// Jarque–Bera statistic `(len/6)(S² + (K-3)²/4)` (non-excess kurtosis) and
/// its chi-squared(2) upper-tail p-value.
pub fn jarque_bera(sample: &[f64]) -> Result<(f64, f64)> {
    if sample.len() < 8 {
        return Err(Error::invalid("Jarque-Bera needs at least 8 observations"));
    }
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    let mut m4 = 0.0;
    for x in sample {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if !(m2 > 0.0) {
        return Err(Error::invalid("constant sample has undefined moments"));
    }
    let skew = m3 / m2.powf(1.5);
    let kurt = m4 / (m2 * m2);
    let stat = n / 6.0 * (skew * skew + 0.25 * (kurt - 3.0) * (kurt - 3.0));
    let chi2 = ChiSquared::new(2.0).expect("chi-squared(2)");
    let p = (1.0 - chi2.cdf(stat)).clamp(0.0, 1.0);
    Ok((stat, p))
}

/// Standardized log-returns `z_h(t) = (p(t+h) - p(t)) / √(σ̂²(t)·h)` over the
/// grid points of `vol` (h in seconds, σ̂² per day, h converted to days).
/// Every used variance must be strictly positive.
pub fn standardized_returns(
    path: &crate::path::PricePath,
    vol: &SpotVolPath,
    h_seconds: f64,
) -> Result<Vec<f64>> {
    if !(h_seconds > 0.0) {
        return Err(Error::invalid("return horizon must be positive"));
    }
    let horizon = path.horizon();
    let h_days = h_seconds / horizon;
    let price_at = |t: f64| -> Result<f64> {
        let ts = path.timestamps();
        let idx = ts.partition_point(|x| *x < t - 1e-6);
        if idx < ts.len() && (ts[idx] - t).abs() <= 1e-6 {
            Ok(path.log_prices()[idx])
        } else {
            Err(Error::invalid(format!("no observation at t = {t}s")))
        }
    };
    let mut out = Vec::new();
    for (i, &t) in vol.grid.iter().enumerate() {
        if t + h_seconds > horizon + 1e-9 {
            break;
        }
        let v = vol.values[i];
        if !(v > 0.0) {
            return Err(Error::invalid(format!(
                "nonpositive variance {v} at grid point {t}s"
            )));
        }
        let r = price_at(t + h_seconds)? - price_at(t)?;
        out.push(r / (v * h_days).sqrt());
    }
    Ok(out)
}

/// Log-log regression of the RMSE of `σ̂²(T/2)` on the sample size.
#[derive(Debug, Clone)]
pub struct RateCheck {
    pub slope: f64,
    pub points: Vec<(usize, f64)>,
}

/// RMSE decay across sample sizes for a constant-volatility model. With
/// noise, the noise variance is frozen across sample sizes (it is a market
/// property, not a sampling one); it is calibrated as `ξ = ζ²·σ²·2π/n_ref`.
pub fn rmse_rate_slope(
    spec: &CltSpec,
    sigma2_day: f64,
    ns: &[usize],
    paths_per_n: usize,
    zeta: f64,
    n_ref: usize,
    seed: u64,
) -> Result<RateCheck> {
    let model = SimModel::ConstVol { sigma2: sigma2_day };
    let horizon = 23400.0;
    let t_eval_rad = spec.t_eval_frac * TWO_PI;
    let sigma2_u = sigma2_day / DAY_VARIANCE_FACTOR;
    let xi = if spec.regime.uses_noise() {
        zeta * zeta * sigma2_u * TWO_PI / n_ref as f64
    } else {
        0.0
    };
    let mut points = Vec::new();
    for (level, &n) in ns.iter().enumerate() {
        let config = spec.cutoffs(n)?;
        let sq_err: Result<Vec<f64>> = (0..paths_per_n as u64)
            .into_par_iter()
            .map(|i| {
                let path_seed = seed
                    .wrapping_add(level as u64 * 1_000_003)
                    .wrapping_add(i);
                let sim = simulate(&model, n, horizon, path_seed)?;
                let path = if xi > 0.0 {
                    crate::simulate::add_noise_fixed_xi(&sim, xi)?.noisy
                } else {
                    sim.clean
                };
                let est = estimate_rescaled(&path.rescale_time(), &config, &[t_eval_rad])?[0];
                let e = est - sigma2_u;
                Ok(e * e)
            })
            .collect();
        let sq_err = sq_err?;
        let rmse = (sq_err.iter().sum::<f64>() / sq_err.len() as f64).sqrt();
        points.push((n, rmse));
    }
    // least-squares slope of log(rmse) on log(n)
    let xs: Vec<f64> = points.iter().map(|(n, _)| (*n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, r)| r.ln()).collect();
    let xm = xs.iter().sum::<f64>() / xs.len() as f64;
    let ym = ys.iter().sum::<f64>() / ys.len() as f64;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let den: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    Ok(RateCheck {
        slope: num / den,
        points,
    })
}
