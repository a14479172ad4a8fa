//! Fourier estimation of spot variance from log-price increments.
//!
//! Pipeline: discrete Fourier coefficients of the increments, volatility
//! coefficients through the convolution with cut-off `N`, Fejér-weighted
//! inversion with cut-off `M`. On equispaced grids the coefficients are
//! n-periodic in the frequency index, which lets both the coefficient pass
//! and the convolution run through FFTs; the FFT routes agree with the
//! direct sums to 1e-10 and are picked automatically by work size.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::path::{EstimatorConfig, PricePath, RescaledPath, SpotVolPath, DAY_VARIANCE_FACTOR, TWO_PI};

/// Complex Fourier coefficients indexed `k = -order ..= order`.
#[derive(Debug, Clone)]
pub struct FourierCoeffs {
    order: usize,
    values: Vec<Complex64>,
}

impl FourierCoeffs {
    pub fn from_values(values: Vec<Complex64>) -> Result<Self> {
        if values.len() % 2 == 0 || values.is_empty() {
            return Err(Error::invalid(
                "coefficient array must have odd length 2H+1",
            ));
        }
        Ok(FourierCoeffs {
            order: (values.len() - 1) / 2,
            values,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Coefficient `c_k`; panics when `|k| > order`.
    pub fn get(&self, k: i64) -> Complex64 {
        let idx = k + self.order as i64;
        self.values[usize::try_from(idx).expect("|k| <= order")]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// `c_{-k} = conj(c_k)` within `tol`, relative to the largest magnitude.
    pub fn is_conjugate_symmetric(&self, tol: f64) -> bool {
        let scale = self
            .values
            .iter()
            .map(|c| c.norm())
            .fold(0.0f64, f64::max)
            .max(1e-300);
        (0..=self.order as i64).all(|k| {
            let d = self.get(-k) - self.get(k).conj();
            d.norm() <= tol * scale
        })
    }
}

/// Direct evaluation of `c_k(dp_n) = (1/2π) Σ_j e^{-i k t_j} δ_j` for
/// `|k| ≤ order`. Works on any observation grid.
pub fn price_coeffs_direct(path: &RescaledPath, order: usize) -> FourierCoeffs {
    let h = order as i64;
    let mut values = vec![Complex64::new(0.0, 0.0); 2 * order + 1];
    // recurrences per j: e^{-i k t_j} stepped over k
    for (j, &d) in path.increments.iter().enumerate() {
        let t = path.times[j];
        let step = Complex64::from_polar(1.0, -t);
        let mut phase = Complex64::from_polar(1.0, h as f64 * t); // e^{-i(-h)t}
        for k in -h..=h {
            values[(k + h) as usize] += phase * d;
            phase *= step;
        }
    }
    let norm = 1.0 / TWO_PI;
    for v in &mut values {
        *v *= norm;
    }
    FourierCoeffs {
        order,
        values,
    }
}

fn fft_forward(data: &mut [Complex64]) {
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(data.len());
    fft.process(data);
}

fn fft_inverse(data: &mut [Complex64]) {
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_inverse(data.len());
    fft.process(data);
    let scale = 1.0 / data.len() as f64;
    for v in data {
        *v *= scale;
    }
}

/// Full set of discrete price-increment coefficients on an equispaced grid.
///
/// On `t_j = 2πj/n` the map `k ↦ c_k(dp_n)` is n-periodic, so the n-point
/// DFT of the increments carries every frequency.
#[derive(Debug, Clone)]
pub struct PriceSpectrum {
    dft: Vec<Complex64>, // dft[r] = c_r(dp_n), r = 0..n-1
}

impl PriceSpectrum {
    pub fn compute(path: &RescaledPath) -> Result<Self> {
        if !path.is_equispaced() {
            return Err(Error::invalid(
                "price spectrum requires an equispaced observation grid",
            ));
        }
        let mut dft: Vec<Complex64> = path
            .increments
            .iter()
            .map(|&d| Complex64::new(d / TWO_PI, 0.0))
            .collect();
        fft_forward(&mut dft);
        Ok(PriceSpectrum { dft })
    }

    pub fn n(&self) -> usize {
        self.dft.len()
    }

    /// `c_k` with wraparound indexing (exact on the equispaced grid).
    pub fn coeff(&self, k: i64) -> Complex64 {
        let n = self.dft.len() as i64;
        self.dft[usize::try_from(k.rem_euclid(n)).unwrap()]
    }

    /// Extract `c_k` for `|k| ≤ order` as a coefficient block.
    pub fn coeffs(&self, order: usize) -> FourierCoeffs {
        let h = order as i64;
        let values = (-h..=h).map(|k| self.coeff(k)).collect();
        FourierCoeffs { order, values }
    }

    /// Volatility coefficients `c_k(σ²_{nN})` for `|k| ≤ m_cut` through the
    /// convolution with cut-off `n_cut`, evaluated as a cyclic correlation.
    pub fn vol_coeffs(&self, n_cut: usize, m_cut: usize) -> FourierCoeffs {
        let n = self.dft.len();
        // Direct windowed sum costs (2M+1)(2N+1); three FFTs cost ~3n log n.
        let direct_cost = (2 * m_cut + 1) as f64 * (2 * n_cut + 1) as f64;
        let fft_cost = 6.0 * n as f64 * (n as f64).log2();
        if direct_cost <= fft_cost {
            let h = m_cut as i64;
            let ncut = n_cut as i64;
            let values = (-h..=h)
                .map(|k| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for j in -ncut..=ncut {
                        acc += self.coeff(j) * self.coeff(k - j);
                    }
                    acc * (TWO_PI / (2 * n_cut + 1) as f64)
                })
                .collect();
            return FourierCoeffs {
                order: m_cut,
                values,
            };
        }
        // window multiplicities of residues of [-N, N] mod n
        let mut window = vec![0.0f64; n];
        let span = 2 * n_cut + 1;
        let full_turns = span / n;
        for w in &mut window {
            *w = full_turns as f64;
        }
        let rem = span - full_turns * n;
        // leftover covers residues of -N .. -N+rem-1
        let start = (-(n_cut as i64)).rem_euclid(n as i64) as usize;
        for i in 0..rem {
            window[(start + i) % n] += 1.0;
        }
        let mut a: Vec<Complex64> = self
            .dft
            .iter()
            .zip(&window)
            .map(|(c, w)| c * *w)
            .collect();
        let mut b = self.dft.clone();
        fft_forward(&mut a);
        fft_forward(&mut b);
        for (x, y) in a.iter_mut().zip(&b) {
            *x *= *y;
        }
        fft_inverse(&mut a);
        let h = m_cut as i64;
        let values = (-h..=h)
            .map(|k| a[usize::try_from(k.rem_euclid(n as i64)).unwrap()] * (TWO_PI / span as f64))
            .collect();
        FourierCoeffs {
            order: m_cut,
            values,
        }
    }
}

/// Price-increment coefficients for `|k| ≤ order`, choosing the FFT route on
/// equispaced grids when it saves work.
pub fn price_coeffs(path: &RescaledPath, order: usize) -> FourierCoeffs {
    let work = path.increments.len() as f64 * (2 * order + 1) as f64;
    if work > (1 << 16) as f64 && path.is_equispaced() {
        if let Ok(spec) = PriceSpectrum::compute(path) {
            return spec.coeffs(order);
        }
    }
    price_coeffs_direct(path, order)
}

/// Convolution formula `c_k(σ²_{nN}) = (2π/(2N+1)) Σ_{|h|≤N} c_h c_{k-h}`
/// for `|k| ≤ m_cut`, from a coefficient block of order at least `N + M`.
pub fn vol_coeffs(pc: &FourierCoeffs, n_cut: usize, m_cut: usize) -> Result<FourierCoeffs> {
    if pc.order < n_cut + m_cut {
        return Err(Error::invalid(format!(
            "need price coefficients up to N+M = {} but have order {}",
            n_cut + m_cut,
            pc.order
        )));
    }
    let norm = TWO_PI / (2 * n_cut + 1) as f64;
    let h = m_cut as i64;
    let ncut = n_cut as i64;
    let values = (-h..=h)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in -ncut..=ncut {
                acc += pc.get(j) * pc.get(k - j);
            }
            acc * norm
        })
        .collect();
    Ok(FourierCoeffs {
        order: m_cut,
        values,
    })
}

/// Fejér-weighted inversion `Σ_{|k|≤M} (1 - |k|/(M+1)) e^{ikt} c_k` at an
/// interior time `t ∈ (0, 2π)`. Returns the real part; a material imaginary
/// residue is reported as a numerical failure.
pub fn invert(vc: &FourierCoeffs, t: f64) -> Result<f64> {
    if !(t > 0.0 && t < TWO_PI) {
        return Err(Error::invalid(format!(
            "inversion time must lie strictly inside (0, 2π), got {t}"
        )));
    }
    let m = vc.order as i64;
    let mp1 = (vc.order + 1) as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in -m..=m {
        let weight = 1.0 - (k.unsigned_abs() as f64) / mp1;
        acc += Complex64::from_polar(weight, k as f64 * t) * vc.get(k);
    }
    if acc.im.abs() > 1e-10 * (1.0 + acc.re.abs()) {
        return Err(Error::numerical(format!(
            "imaginary residue {} too large in Fejér inversion",
            acc.im
        )));
    }
    Ok(acc.re)
}

/// Spot-variance estimates on the 2π scale at the given radian times.
pub fn estimate_rescaled(
    path: &RescaledPath,
    cfg: &EstimatorConfig,
    times_rad: &[f64],
) -> Result<Vec<f64>> {
    cfg.validate(path.n_increments())?;
    let vc = if path.is_equispaced() {
        PriceSpectrum::compute(path)?.vol_coeffs(cfg.n_cut, cfg.m_cut)
    } else {
        let pc = price_coeffs(path, cfg.n_cut + cfg.m_cut);
        vol_coeffs(&pc, cfg.n_cut, cfg.m_cut)?
    };
    times_rad.iter().map(|&t| invert(&vc, t)).collect()
}

/// Full estimation pass: rescale the session, build coefficients once,
/// invert on the grid (seconds, strictly interior) and report variance per
/// day. The same code path serves clean and noise-contaminated prices.
pub fn estimate_path(
    path: &PricePath,
    cfg: &EstimatorConfig,
    grid_seconds: &[f64],
) -> Result<SpotVolPath> {
    let horizon = path.horizon();
    for &t in grid_seconds {
        if !(t > 0.0 && t < horizon) {
            return Err(Error::invalid(format!(
                "grid point {t}s is outside the open session (0, {horizon})"
            )));
        }
    }
    let rescaled = path.rescale_time();
    let times_rad: Vec<f64> = grid_seconds.iter().map(|t| t * TWO_PI / horizon).collect();
    let values = estimate_rescaled(&rescaled, cfg, &times_rad)?
        .into_iter()
        .map(|v| v * DAY_VARIANCE_FACTOR)
        .collect();
    SpotVolPath::new(grid_seconds.to_vec(), values)
}

/// Realized variance `Σ δ_j(p)²` of a path's log-price increments.
pub fn realized_variance(path: &PricePath) -> f64 {
    path.increments().iter().map(|d| d * d).sum()
}
