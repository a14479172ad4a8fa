//! Price paths, estimation output paths and the session time convention.
//!
//! A path lives on one trading session of `horizon` seconds; the session is
//! the unit of time ("one day"), so all variances are reported per day.
//! Estimation rescales the session affinely onto `[0, 2π]`; a variance per
//! unit of rescaled time converts back to per-day units by the factor 2π.

use crate::error::{Error, Result};

pub const TWO_PI: f64 = std::f64::consts::TAU;

/// Variance per day equals 2π times variance per unit of rescaled time.
pub const DAY_VARIANCE_FACTOR: f64 = TWO_PI;

/// Ordered timestamps (seconds from session open) and log-prices.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePath {
    timestamps: Vec<f64>,
    log_prices: Vec<f64>,
    horizon: f64,
}

impl PricePath {
    /// `timestamps` must start at 0, be strictly increasing, stay within
    /// `[0, horizon]` and hold at least two points.
    pub fn new(timestamps: Vec<f64>, log_prices: Vec<f64>, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::invalid("horizon must be positive and finite"));
        }
        if timestamps.len() != log_prices.len() {
            return Err(Error::invalid(format!(
                "timestamps ({}) and log-prices ({}) differ in length",
                timestamps.len(),
                log_prices.len()
            )));
        }
        if timestamps.len() < 2 {
            return Err(Error::invalid("a price path needs at least two points"));
        }
        if timestamps[0] != 0.0 {
            return Err(Error::invalid("first timestamp must be 0"));
        }
        for w in timestamps.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::invalid(format!(
                    "timestamps must be strictly increasing (violated at t={})",
                    w[1]
                )));
            }
        }
        let last = *timestamps.last().unwrap();
        if last > horizon * (1.0 + 1e-12) {
            return Err(Error::invalid("timestamps exceed the session horizon"));
        }
        if log_prices.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("log-prices must be finite"));
        }
        Ok(PricePath {
            timestamps,
            log_prices,
            horizon,
        })
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn log_prices(&self) -> &[f64] {
        &self.log_prices
    }

    /// Session length in seconds; by convention one day.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of increments (one less than the number of observations).
    pub fn n_increments(&self) -> usize {
        self.timestamps.len() - 1
    }

    pub fn increments(&self) -> Vec<f64> {
        self.log_prices.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// True when the observation grid is uniform to within a relative 1e-9.
    pub fn is_equispaced(&self) -> bool {
        let n = self.n_increments();
        let mesh = self.timestamps[n] / n as f64;
        self.timestamps
            .iter()
            .enumerate()
            .all(|(j, &t)| (t - j as f64 * mesh).abs() <= 1e-9 * mesh.max(1.0))
    }

    /// Affine map of the session onto `[0, 2π]`; log-prices are untouched.
    pub fn rescale_time(&self) -> RescaledPath {
        let scale = TWO_PI / self.horizon;
        RescaledPath {
            times: self.timestamps.iter().map(|t| t * scale).collect(),
            increments: self.increments(),
        }
    }

    /// Shift every log-price by a constant (estimates are invariant to this).
    pub fn shifted(&self, offset: f64) -> PricePath {
        PricePath {
            timestamps: self.timestamps.clone(),
            log_prices: self.log_prices.iter().map(|p| p + offset).collect(),
            horizon: self.horizon,
        }
    }
}

/// A path already mapped to `[0, 2π]`: observation times in radians and the
/// log-price increments between them.
#[derive(Debug, Clone)]
pub struct RescaledPath {
    pub times: Vec<f64>,
    pub increments: Vec<f64>,
}

impl RescaledPath {
    pub fn n_increments(&self) -> usize {
        self.increments.len()
    }

    pub fn is_equispaced(&self) -> bool {
        let n = self.increments.len();
        let mesh = TWO_PI / n as f64;
        self.times
            .iter()
            .enumerate()
            .all(|(j, &t)| (t - j as f64 * mesh).abs() <= 1e-9 * mesh)
    }
}

/// Convolution cut-off `N` and inversion cut-off `M` of the estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstimatorConfig {
    pub n_cut: usize,
    pub m_cut: usize,
}

impl EstimatorConfig {
    pub fn new(n_cut: usize, m_cut: usize) -> Self {
        EstimatorConfig { n_cut, m_cut }
    }

    /// `M < N < n` with both cut-offs positive.
    pub fn validate(&self, n_increments: usize) -> Result<()> {
        if self.n_cut == 0 || self.m_cut == 0 {
            return Err(Error::invalid("cut-off frequencies must be positive"));
        }
        if !(self.m_cut < self.n_cut && self.n_cut < n_increments) {
            return Err(Error::invalid(format!(
                "cut-offs must satisfy M < N < n (got M={}, N={}, n={})",
                self.m_cut, self.n_cut, n_increments
            )));
        }
        Ok(())
    }

    /// `N = ⌊c√n⌋, M = ⌊a√N⌋`, the noise-robust scaling of the cut-offs.
    pub fn from_constants(c: f64, a: f64, n_increments: usize) -> Result<Self> {
        if !(c > 0.0) || !(a > 0.0) {
            return Err(Error::invalid("constants c and a must be positive"));
        }
        let n_cut = (c * (n_increments as f64).sqrt()).floor() as usize;
        let m_cut = (a * (n_cut as f64).sqrt()).floor() as usize;
        let cfg = EstimatorConfig {
            n_cut: n_cut.max(2),
            m_cut: m_cut.max(1),
        };
        cfg.validate(n_increments)?;
        Ok(cfg)
    }
}

/// Evaluation grid (seconds) with variance-per-day estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct SpotVolPath {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl SpotVolPath {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::GridMismatch(format!(
                "grid ({}) and values ({}) differ in length",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("variance estimates must be finite"));
        }
        Ok(SpotVolPath { grid, values })
    }

    /// Estimates below zero are legal output; this counts them.
    pub fn negative_count(&self) -> usize {
        self.values.iter().filter(|v| **v < 0.0).count()
    }

    /// Copy with negative estimates truncated at zero.
    pub fn clamped_nonnegative(&self) -> SpotVolPath {
        SpotVolPath {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.max(0.0)).collect(),
        }
    }

    pub fn value_at(&self, t: f64) -> Option<f64> {
        self.grid
            .iter()
            .position(|g| (g - t).abs() <= 1e-9 * t.abs().max(1.0))
            .map(|i| self.values[i])
    }
}

/// Uniform interior grid with the given step, excluding both endpoints.
pub fn interior_grid(horizon: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(horizon > step) {
        return Err(Error::invalid("grid step must satisfy 0 < step < horizon"));
    }
    let mut grid = Vec::new();
    let mut t = step;
    while t < horizon - 1e-9 * horizon {
        grid.push(t);
        t += step;
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rescale_maps_endpoints_to_zero_and_two_pi() {
        let p = PricePath::new(
            vec![0.0, 11700.0, 23400.0],
            vec![0.0, 0.1, 0.2],
            23400.0,
        )
        .unwrap();
        let r = p.rescale_time();
        assert!((r.times[0]).abs() < 1e-15);
        assert!((r.times[1] - std::f64::consts::PI).abs() < 1e-12);
        assert!((r.times[2] - TWO_PI).abs() < 1e-12);
    }

    #[test]
    fn one_second_grid_mesh_is_two_pi_over_n() {
        let n = 23400usize;
        let ts: Vec<f64> = (0..=n).map(|i| i as f64).collect();
        let ps = vec![0.0; n + 1];
        let p = PricePath::new(ts, ps, n as f64).unwrap();
        let r = p.rescale_time();
        let mesh = r.times[1] - r.times[0];
        assert!((mesh - TWO_PI / n as f64).abs() < 1e-15);
        assert!(p.is_equispaced());
    }

    #[test]
    fn degenerate_horizon_rejected() {
        let err = PricePath::new(vec![0.0, 1.0], vec![0.0, 0.0], 0.0);
        assert!(err.is_err());
    }

    #[test]
    fn ordering_and_length_validated() {
        assert!(PricePath::new(vec![0.0], vec![0.0], 1.0).is_err());
        assert!(PricePath::new(vec![0.0, 2.0, 1.0], vec![0.0; 3], 3.0).is_err());
        assert!(PricePath::new(vec![1.0, 2.0], vec![0.0; 2], 3.0).is_err());
    }

    #[test]
    fn config_constraint_checked() {
        assert!(EstimatorConfig::new(10, 3).validate(100).is_ok());
        assert!(EstimatorConfig::new(10, 10).validate(100).is_err());
        assert!(EstimatorConfig::new(100, 3).validate(100).is_err());
        assert!(EstimatorConfig::new(0, 0).validate(100).is_err());
    }

    #[test]
    fn interior_grid_excludes_endpoints() {
        let g = interior_grid(23400.0, 60.0).unwrap();
        assert_eq!(g.len(), 389);
        assert!(g[0] > 0.0);
        assert!(*g.last().unwrap() < 23400.0);
    }
}
