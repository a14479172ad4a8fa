//! Feasible plug-in estimation of the four inputs of the c-AMISE objective:
//! integrated variance, integrated quarticity, integrated volatility of
//! volatility and the noise variance. All integrated quantities are
//! reported per day (one session = one day, T = 1).

use crate::error::{Error, Result};
use crate::estimator::{price_coeffs, vol_coeffs, FourierCoeffs, PriceSpectrum};
use crate::path::{PricePath, TWO_PI};

/// Values feeding the c-AMISE objective. `t_days` is the horizon in days.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmiseInputs {
    pub iv: f64,
    pub iq: f64,
    pub ivv: f64,
    pub xi: f64,
    pub n: usize,
    pub t_days: f64,
}

impl AmiseInputs {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("iv", self.iv),
            ("iq", self.iq),
            ("ivv", self.ivv),
            ("xi", self.xi),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite and >= 0")));
            }
        }
        if self.n < 2 || !(self.t_days > 0.0) {
            return Err(Error::invalid("need n >= 2 and a positive horizon"));
        }
        // Cauchy-Schwarz: IQ >= IV^2 / T
        if self.iq < self.iv * self.iv / self.t_days * (1.0 - 1e-9) {
            return Err(Error::invalid("iq below the Cauchy-Schwarz floor iv^2/T"));
        }
        Ok(())
    }
}

/// Cut-offs used by the plug-in estimators. `None` fields fall back to the
/// defaults `N_iv = ⌊√n⌋`, `M_q = ⌊N_iv^{1/2}⌋`, `M_v = ⌊N_iv^{1/4}⌋`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PluginConfig {
    pub n_iv: Option<usize>,
    pub m_q: Option<usize>,
    pub m_v: Option<usize>,
}

impl PluginConfig {
    pub fn resolve(&self, n: usize) -> (usize, usize, usize) {
        let n_iv = self
            .n_iv
            .unwrap_or(((n as f64).sqrt().floor() as usize).max(2));
        let m_q = self
            .m_q
            .unwrap_or(((n_iv as f64).sqrt().floor() as usize).max(1));
        let m_v = self
            .m_v
            .unwrap_or(((n_iv as f64).powf(0.25).floor() as usize).max(1));
        (n_iv, m_q, m_v)
    }
}

/// Plug-in estimates together with a flag marking clamped (floored) fields.
#[derive(Debug, Clone, Copy)]
pub struct PluginEstimates {
    pub inputs: AmiseInputs,
    pub clamped: bool,
}

/// Floor for nonnegative plug-ins, per-day units.
pub const PLUGIN_FLOOR: f64 = 1e-12;

/// Noise-variance estimator `ξ̂ = Σ δ_j(p̃)² / (2n)` from noisy increments.
pub fn noise_variance(path: &PricePath) -> f64 {
    let incr = path.increments();
    incr.iter().map(|d| d * d).sum::<f64>() / (2.0 * incr.len() as f64)
}

fn vol_block(path: &PricePath, n_iv: usize, m_top: usize) -> Result<FourierCoeffs> {
    let rescaled = path.rescale_time();
    if n_iv >= rescaled.n_increments() {
        return Err(Error::invalid(format!(
            "plug-in cut-off N_iv={n_iv} must be below n={}",
            rescaled.n_increments()
        )));
    }
    if rescaled.is_equispaced() {
        Ok(PriceSpectrum::compute(&rescaled)?.vol_coeffs(n_iv, m_top))
    } else {
        let pc = price_coeffs(&rescaled, n_iv + m_top);
        vol_coeffs(&pc, n_iv, m_top)
    }
}

/// Integrated variance `2π c₀(σ²_{nN})`, invariant across time units.
pub fn integrated_variance(path: &PricePath, n_iv: usize) -> Result<f64> {
    let vc = vol_block(path, n_iv, 0)?;
    Ok(TWO_PI * vc.get(0).re)
}

/// Integrated quarticity by Parseval truncation,
/// `2π · [2π Σ_{|k|≤M_q} c_k(σ²_{nN}) c_{-k}(σ²_{nN})]` (per-day units).
pub fn integrated_quarticity(path: &PricePath, n_iv: usize, m_q: usize) -> Result<f64> {
    if m_q > n_iv {
        return Err(Error::invalid("quarticity cut-off must satisfy M_q <= N_iv"));
    }
    let vc = vol_block(path, n_iv, m_q)?;
    Ok(TWO_PI * TWO_PI * parseval_sum(&vc, m_q, 0))
}

/// Integrated volatility-of-volatility from the differentiated volatility
/// coefficients `c_k(dσ²) = i k c_k(σ²)`:
/// `4π² · [(2π)²/(2M_v+1) Σ_{|k|≤M_v} k² c_k(σ²) c_{-k}(σ²)]` per day.
pub fn integrated_volvol(path: &PricePath, n_iv: usize, m_v: usize) -> Result<f64> {
    if m_v > n_iv {
        return Err(Error::invalid("vol-of-vol cut-off must satisfy M_v <= N_iv"));
    }
    let vc = vol_block(path, n_iv, m_v)?;
    let raw = TWO_PI * TWO_PI / (2 * m_v + 1) as f64 * parseval_sum(&vc, m_v, 2);
    Ok(TWO_PI * TWO_PI * raw)
}

/// `Σ_{|k|≤m} k^pow · Re[c_k c_{-k}]`.
fn parseval_sum(vc: &FourierCoeffs, m: usize, pow: u32) -> f64 {
    (-(m as i64)..=m as i64)
        .map(|k| (k as f64).powi(pow as i32) * (vc.get(k) * vc.get(-k)).re)
        .sum()
}

/// Assemble all four plug-ins with the configured cut-offs, flooring
/// negative raw values at [`PLUGIN_FLOOR`] and flagging when that happened.
pub fn build_amise_inputs(path: &PricePath, cfg: &PluginConfig) -> Result<PluginEstimates> {
    let n = path.n_increments();
    let (n_iv, m_q, m_v) = cfg.resolve(n);
    let m_top = m_q.max(m_v);
    let vc = vol_block(path, n_iv, m_top)?;

    let iv_raw = TWO_PI * vc.get(0).re;
    let iq_raw = TWO_PI * TWO_PI * parseval_sum(&vc, m_q, 0);
    let ivv_raw =
        TWO_PI * TWO_PI * (TWO_PI * TWO_PI / (2 * m_v + 1) as f64) * parseval_sum(&vc, m_v, 2);
    let xi_raw = noise_variance(path);

    let mut clamped = false;
    let mut floor = |v: f64| {
        if v < PLUGIN_FLOOR {
            clamped = true;
            PLUGIN_FLOOR
        } else {
            v
        }
    };
    let iv = floor(iv_raw);
    let mut iq = floor(iq_raw);
    let ivv = floor(ivv_raw);
    let xi = floor(xi_raw);
    let t_days = 1.0;
    // Cauchy-Schwarz repair keeps the objective well-posed
    if iq < iv * iv / t_days {
        iq = iv * iv / t_days;
        clamped = true;
    }
    let inputs = AmiseInputs {
        iv,
        iq,
        ivv,
        xi,
        n,
        t_days,
    };
    inputs.validate()?;
    Ok(PluginEstimates { inputs, clamped })
}
