//! Sample-path generation for the Monte Carlo studies.
//!
//! Euler–Maruyama at the observation frequency, in day units (the session is
//! one day, `dt = 1/n`). Price shocks and observation noise draw from
//! independent sub-streams of one ChaCha seed, so adding noise never
//! perturbs the clean path.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::path::{PricePath, SpotVolPath};

const PRICE_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;
const LOG_P0: f64 = 4.605170185988092; // ln(100)

/// One-factor stochastic volatility model: `σ(t) = exp(β₀ + β₁ τ(t))` with
/// `dτ = dZ + α τ dt` and `dp = σ dW + μ dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sv1fParams {
    pub mu: f64,
    pub beta1: f64,
    pub alpha: f64,
    pub beta0: f64,
    pub rho: f64,
}

impl Default for Sv1fParams {
    fn default() -> Self {
        let beta1 = 0.125;
        let alpha = -0.025;
        Sv1fParams {
            mu: 0.03,
            beta1,
            alpha,
            beta0: beta1 / (2.0 * alpha),
            rho: -0.3,
        }
    }
}

impl Sv1fParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha < 0.0) {
            return Err(Error::invalid("sv1f requires alpha < 0 for stationarity"));
        }
        if self.rho.abs() > 1.0 {
            return Err(Error::invalid("correlation must lie in [-1, 1]"));
        }
        Ok(())
    }

    /// Stationary variance of the volatility factor, `-1/(2α)`.
    pub fn stationary_factor_variance(&self) -> f64 {
        -1.0 / (2.0 * self.alpha)
    }
}

/// Square-root variance model: `dσ² = γ σ dZ + θ(α - σ²) dt` with
/// `dp = σ dW + (μ - σ²/2) dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HestonParams {
    pub mu: f64,
    pub theta: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub rho: f64,
}

impl Default for HestonParams {
    fn default() -> Self {
        HestonParams {
            mu: 0.001,
            theta: 0.3,
            alpha: 0.002,
            gamma: 0.03,
            rho: -0.5,
        }
    }
}

impl HestonParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.alpha > 0.0 && self.gamma > 0.0) {
            return Err(Error::invalid("heston requires theta, alpha, gamma > 0"));
        }
        if self.rho.abs() > 1.0 {
            return Err(Error::invalid("correlation must lie in [-1, 1]"));
        }
        Ok(())
    }

    /// Shape parameter `2θα/γ²` of the stationary Gamma law of σ².
    pub fn stationary_shape(&self) -> f64 {
        2.0 * self.theta * self.alpha / (self.gamma * self.gamma)
    }

    /// Scale parameter `γ²/(2θ)` of the stationary Gamma law of σ².
    pub fn stationary_scale(&self) -> f64 {
        self.gamma * self.gamma / (2.0 * self.theta)
    }
}

/// Data-generating process for simulation studies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimModel {
    /// Driftless log-price with constant variance per day.
    ConstVol { sigma2: f64 },
    Sv1f(Sv1fParams),
    Heston(HestonParams),
}

impl SimModel {
    /// Spot volatility-of-volatility `γ²(t)` implied by the model at a point
    /// where the spot variance equals `sigma2` (per-day units).
    pub fn gamma_sq_from_var(&self, sigma2: f64) -> f64 {
        match self {
            SimModel::ConstVol { .. } => 0.0,
            // dσ² = 2β₁σ² dZ + ...  ⇒  γ(t) = 2β₁σ²(t)
            SimModel::Sv1f(p) => {
                let g = 2.0 * p.beta1 * sigma2;
                g * g
            }
            // dσ² = γσ dZ + ...  ⇒  γ(t) = γ σ(t)
            SimModel::Heston(p) => p.gamma * p.gamma * sigma2.max(0.0),
        }
    }
}

/// Noise-to-signal ratio and the per-observation noise variance it implies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub zeta: f64,
    pub xi: f64,
}

/// Clean and contaminated observations of one simulated session, with the
/// true variance path on the full grid.
#[derive(Debug, Clone)]
pub struct SimulatedPath {
    pub clean: PricePath,
    pub noisy: PricePath,
    pub true_var: SpotVolPath,
    pub noise: NoiseSpec,
    pub seed: u64,
    /// Fraction of Euler steps where the variance had to be truncated at 0.
    pub truncation_rate: f64,
}

impl SimulatedPath {
    /// Standard deviation of the clean log-returns of this path.
    pub fn clean_return_std(&self) -> f64 {
        let incr = self.clean.increments();
        let n = incr.len() as f64;
        let mean = incr.iter().sum::<f64>() / n;
        (incr.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n).sqrt()
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn timestamps(n: usize, horizon: f64) -> Vec<f64> {
    (0..=n).map(|i| i as f64 * horizon / n as f64).collect()
}

/// Simulate a clean path from the model; attach noise with [`add_noise`].
pub fn simulate(model: &SimModel, n: usize, horizon_seconds: f64, seed: u64) -> Result<SimulatedPath> {
    if n < 2 {
        return Err(Error::invalid("need at least two increments"));
    }
    if !(horizon_seconds > 0.0) {
        return Err(Error::invalid("horizon must be positive"));
    }
    let dt = 1.0 / n as f64; // one session = one day
    let sqdt = dt.sqrt();
    let mut rng = rng_for(seed, PRICE_STREAM);
    let ts = timestamps(n, horizon_seconds);
    let mut log_p = Vec::with_capacity(n + 1);
    let mut var = Vec::with_capacity(n + 1);
    let mut truncations = 0usize;

    match model {
        SimModel::ConstVol { sigma2 } => {
            if !(*sigma2 >= 0.0) {
                return Err(Error::invalid("constant variance must be nonnegative"));
            }
            let s = sigma2.sqrt();
            let mut p = LOG_P0;
            log_p.push(p);
            var.push(*sigma2);
            for _ in 0..n {
                let z: f64 = rng.sample(StandardNormal);
                p += s * sqdt * z;
                log_p.push(p);
                var.push(*sigma2);
            }
        }
        SimModel::Sv1f(params) => {
            params.validate()?;
            let sd0 = params.stationary_factor_variance().sqrt();
            let z0: f64 = rng.sample(StandardNormal);
            let mut tau = sd0 * z0;
            let mut p = LOG_P0;
            let cross = (1.0 - params.rho * params.rho).sqrt();
            log_p.push(p);
            var.push((2.0 * (params.beta0 + params.beta1 * tau)).exp());
            for _ in 0..n {
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                let dw = sqdt * z1;
                let dz = sqdt * (params.rho * z1 + cross * z2);
                let sigma = (params.beta0 + params.beta1 * tau).exp();
                p += params.mu * dt + sigma * dw;
                tau += dz + params.alpha * tau * dt;
                log_p.push(p);
                var.push((2.0 * (params.beta0 + params.beta1 * tau)).exp());
            }
        }
        SimModel::Heston(params) => {
            params.validate()?;
            let gamma_law = Gamma::new(params.stationary_shape(), params.stationary_scale())
                .map_err(|e| Error::invalid(format!("stationary law: {e}")))?;
            let mut v: f64 = gamma_law.sample(&mut rng);
            let mut p = LOG_P0;
            let cross = (1.0 - params.rho * params.rho).sqrt();
            log_p.push(p);
            var.push(v);
            for _ in 0..n {
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                let dw = sqdt * z1;
                let dz = sqdt * (params.rho * z1 + cross * z2);
                // full truncation: drift and diffusion see max(v, 0)
                let vp = if v > 0.0 {
                    v
                } else {
                    truncations += 1;
                    0.0
                };
                let s = vp.sqrt();
                p += (params.mu - 0.5 * vp) * dt + s * dw;
                v += params.theta * (params.alpha - vp) * dt + params.gamma * s * dz;
                log_p.push(p);
                var.push(v);
            }
        }
    }

    let clean = PricePath::new(ts.clone(), log_p, horizon_seconds)?;
    let true_var = SpotVolPath::new(ts, var)?;
    Ok(SimulatedPath {
        noisy: clean.clone(),
        clean,
        true_var,
        noise: NoiseSpec { zeta: 0.0, xi: 0.0 },
        seed,
        truncation_rate: truncations as f64 / n as f64,
    })
}

/// Contaminate with i.i.d. Gaussian noise of variance `ξ = (ζ·std(r))²`,
/// where `std(r)` is this path's clean-return standard deviation.
pub fn add_noise(path: &SimulatedPath, zeta: f64) -> Result<SimulatedPath> {
    if !(zeta >= 0.0) {
        return Err(Error::invalid("noise-to-signal ratio must be nonnegative"));
    }
    let xi = (zeta * path.clean_return_std()).powi(2);
    let mut out = add_noise_fixed_xi(path, xi)?;
    out.noise.zeta = zeta;
    Ok(out)
}

/// Contaminate with i.i.d. Gaussian noise of a fixed variance `ξ`.
pub fn add_noise_fixed_xi(path: &SimulatedPath, xi: f64) -> Result<SimulatedPath> {
    if !(xi >= 0.0) {
        return Err(Error::invalid("noise variance must be nonnegative"));
    }
    if xi == 0.0 {
        let mut out = path.clone();
        out.noisy = out.clean.clone();
        out.noise = NoiseSpec { zeta: 0.0, xi: 0.0 };
        return Ok(out);
    }
    let mut rng = rng_for(path.seed, NOISE_STREAM);
    let sd = xi.sqrt();
    let noisy_prices: Vec<f64> = path
        .clean
        .log_prices()
        .iter()
        .map(|p| {
            let eta: f64 = rng.sample(StandardNormal);
            p + sd * eta
        })
        .collect();
    let noisy = PricePath::new(
        path.clean.timestamps().to_vec(),
        noisy_prices,
        path.clean.horizon(),
    )?;
    Ok(SimulatedPath {
        clean: path.clean.clone(),
        noisy,
        true_var: path.true_var.clone(),
        noise: NoiseSpec { zeta: f64::NAN, xi },
        seed: path.seed,
        truncation_rate: path.truncation_rate,
    })
}
