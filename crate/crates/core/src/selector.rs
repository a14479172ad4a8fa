//! Adaptive selection of the cut-off pair `(N, M)` by projected gradient
//! descent on the conditional asymptotic MISE
//!
//! `Ψ(N,M) = (M/N)(2/3)IQ + (T/3M)IVV + (MN/n)(T/9)ξ·IV + (N³M/n²)(T³/15)ξ²`
//!
//! over the box `S = [N̲, N̄] × [M̲, M̄]`, starting at the lower corner,
//! with learning rate `λ = c_λ/ξ̂` and relative-change stopping rule
//! `δ_k < ϑ`. A backtracking guard halves the effective step until the
//! objective decreases sufficiently, which protects the fixed-λ rule from
//! divergence without moving stable fixed points.

use num_traits::Float;

use crate::error::{Error, Result};
use crate::plugins::AmiseInputs;

/// c-AMISE objective, generic over the scalar type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CAmise<F> {
    pub iq: F,
    pub ivv: F,
    pub xi: F,
    pub iv: F,
    pub t: F,
    pub n: F,
}

impl<F: Float> CAmise<F> {
    pub fn objective(&self, big_n: F, big_m: F) -> F {
        let c23 = F::from(2.0 / 3.0).unwrap();
        let c13 = F::from(1.0 / 3.0).unwrap();
        let c19 = F::from(1.0 / 9.0).unwrap();
        let c115 = F::from(1.0 / 15.0).unwrap();
        let t3 = self.t * self.t * self.t;
        big_m / big_n * c23 * self.iq
            + self.t * c13 / big_m * self.ivv
            + big_m * big_n / self.n * self.t * c19 * self.xi * self.iv
            + big_n.powi(3) * big_m / (self.n * self.n) * t3 * c115 * self.xi * self.xi
    }

    /// Analytic partials `(∂Ψ/∂N, ∂Ψ/∂M)`.
    pub fn gradient(&self, big_n: F, big_m: F) -> (F, F) {
        let c23 = F::from(2.0 / 3.0).unwrap();
        let c13 = F::from(1.0 / 3.0).unwrap();
        let c19 = F::from(1.0 / 9.0).unwrap();
        let c115 = F::from(1.0 / 15.0).unwrap();
        let three = F::from(3.0).unwrap();
        let t3 = self.t * self.t * self.t;
        let noise_lin = self.t * c19 * self.xi * self.iv / self.n;
        let noise_quad = t3 * c115 * self.xi * self.xi / (self.n * self.n);
        let g_n = -big_m / (big_n * big_n) * c23 * self.iq
            + big_m * noise_lin
            + three * big_n * big_n * big_m * noise_quad;
        let g_m = c23 * self.iq / big_n - self.t * c13 * self.ivv / (big_m * big_m)
            + big_n * noise_lin
            + big_n.powi(3) * noise_quad;
        (g_n, g_m)
    }
}

impl From<&AmiseInputs> for CAmise<f64> {
    fn from(inputs: &AmiseInputs) -> Self {
        CAmise {
            iq: inputs.iq,
            ivv: inputs.ivv,
            xi: inputs.xi,
            iv: inputs.iv,
            t: inputs.t_days,
            n: inputs.n as f64,
        }
    }
}

/// `Ψ(N, M)` for the given plug-ins; `N, M > 0` required.
pub fn c_amise(inputs: &AmiseInputs, big_n: f64, big_m: f64) -> Result<f64> {
    if !(big_n > 0.0 && big_m > 0.0) {
        return Err(Error::invalid("c-AMISE needs positive cut-offs"));
    }
    Ok(CAmise::from(inputs).objective(big_n, big_m))
}

/// Analytic gradient of `Ψ`; `N, M > 0` required.
pub fn c_amise_gradient(inputs: &AmiseInputs, big_n: f64, big_m: f64) -> Result<(f64, f64)> {
    if !(big_n > 0.0 && big_m > 0.0) {
        return Err(Error::invalid("c-AMISE needs positive cut-offs"));
    }
    Ok(CAmise::from(inputs).gradient(big_n, big_m))
}

/// Box constraints and optimisation parameters of the descent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectorOptions {
    pub n_lo: f64,
    pub n_hi: f64,
    pub m_lo: f64,
    pub m_hi: f64,
    /// Learning-rate constant: `λ = c_lambda / ξ̂` (stable range ~[300, 700]).
    pub c_lambda: f64,
    /// Explicit learning rate; overrides `c_lambda / ξ̂` when set.
    pub learning_rate: Option<f64>,
    /// Relative-change stopping threshold `ϑ`.
    pub threshold: f64,
    /// Iteration cap `K`.
    pub max_iters: usize,
}

impl SelectorOptions {
    /// Production box and optimisation parameters for a sample of size `n`:
    /// `S = [⌊2⁻¹√n⌋, ⌊10√n⌋] × [⌊10⁻¹n^{1/4}⌋, ⌊2n^{1/4}⌋]` and
    /// `(λ, ϑ, K) = (500 ξ̂⁻¹, 10⁻³, 10⁵)`.
    pub fn for_sample_size(n: usize) -> Self {
        let nf = n as f64;
        let sq = nf.sqrt();
        let q = nf.powf(0.25);
        SelectorOptions {
            n_lo: (0.5 * sq).floor().max(1.0),
            n_hi: (10.0 * sq).floor(),
            m_lo: (0.1 * q).floor().max(1.0),
            m_hi: (2.0 * q).floor(),
            c_lambda: 500.0,
            learning_rate: None,
            threshold: 1e-3,
            max_iters: 100_000,
        }
    }

    /// Same box, but run to numerical convergence instead of the production
    /// early-stopping rule.
    pub fn converged(n: usize) -> Self {
        SelectorOptions {
            threshold: 1e-9,
            max_iters: 1_000_000,
            ..Self::for_sample_size(n)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n_lo > 0.0 && self.n_lo < self.n_hi) || !(self.m_lo > 0.0 && self.m_lo < self.m_hi)
        {
            return Err(Error::invalid("selector box must satisfy 0 < lo < hi"));
        }
        if !(self.threshold > 0.0) || self.max_iters == 0 {
            return Err(Error::invalid("need positive threshold and iteration cap"));
        }
        Ok(())
    }
}

/// Outcome of the descent. `converged` is false when the iteration cap was
/// reached or when the iterate never left the starting corner.
#[derive(Debug, Clone)]
pub struct SelectorResult {
    pub n_star: usize,
    pub m_star: usize,
    pub iterations: usize,
    pub converged: bool,
    pub objective_trace: Vec<f64>,
}

const ARMIJO_SLOPE: f64 = 0.25;
const MAX_HALVINGS: u32 = 60;

/// Projected gradient descent from `(N̲, M̲)`, both coordinates updated with
/// the gradient at the previous iterate, stopping at the first relative
/// objective change below `ϑ` (or after `K` steps).
pub fn select_params(inputs: &AmiseInputs, opts: &SelectorOptions) -> Result<SelectorResult> {
    opts.validate()?;
    inputs.validate()?;
    let psi = CAmise::from(inputs);
    let lambda = opts.learning_rate.unwrap_or(if inputs.xi > 0.0 {
        opts.c_lambda / inputs.xi
    } else {
        // degenerate noiseless input: cap the rate at the box height
        opts.n_hi
    });
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::invalid("learning rate must be positive and finite"));
    }

    let clamp = |v: f64, lo: f64, hi: f64| v.max(lo).min(hi);
    let mut n = opts.n_lo;
    let mut m = opts.m_lo;
    let mut f = psi.objective(n, m);
    if !f.is_finite() {
        return Err(Error::numerical("objective not finite at the lower corner"));
    }
    let mut trace = Vec::with_capacity(64);
    trace.push(f);
    let mut converged = false;
    let mut iterations = 0;

    for k in 1..=opts.max_iters {
        iterations = k;
        let (g_n, g_m) = psi.gradient(n, m);
        let mut step = lambda;
        let mut next = (n, m, f);
        for _ in 0..MAX_HALVINGS {
            let n2 = clamp(n - step * g_n, opts.n_lo, opts.n_hi);
            let m2 = clamp(m - step * g_m, opts.m_lo, opts.m_hi);
            let f2 = psi.objective(n2, m2);
            // sufficient decrease along the projected step
            let decrease = g_n * (n - n2) + g_m * (m - m2);
            if f2.is_finite() && f2 <= f - ARMIJO_SLOPE * decrease {
                next = (n2, m2, f2);
                break;
            }
            step *= 0.5;
        }
        let (n2, m2, f2) = next;
        let delta = if f > 0.0 { (f2 - f).abs() / f } else { 0.0 };
        n = n2;
        m = m2;
        f = f2;
        trace.push(f);
        if delta < opts.threshold {
            converged = true;
            break;
        }
    }

    // a projected gradient pinned at the starting corner is flagged rather
    // than reported as convergence
    if n == opts.n_lo && m == opts.m_lo {
        converged = false;
    }

    let mut n_star = n.round() as usize;
    let mut m_star = m.round() as usize;
    if n_star >= inputs.n {
        n_star = inputs.n - 1;
    }
    if m_star >= n_star {
        m_star = n_star.saturating_sub(1).max(1);
    }
    Ok(SelectorResult {
        n_star,
        m_star,
        iterations,
        converged,
        objective_trace: trace,
    })
}

/// Exhaustive integer grid search of `Ψ` over the box (test oracle and CLI
/// diagnostic).
pub fn grid_search(inputs: &AmiseInputs, opts: &SelectorOptions) -> Result<(usize, usize, f64)> {
    opts.validate()?;
    let psi = CAmise::from(inputs);
    let mut best = (0usize, 0usize, f64::INFINITY);
    let (n_lo, n_hi) = (opts.n_lo.ceil() as usize, opts.n_hi.floor() as usize);
    let (m_lo, m_hi) = (opts.m_lo.ceil() as usize, opts.m_hi.floor() as usize);
    for n in n_lo..=n_hi {
        for m in m_lo..=m_hi {
            let f = psi.objective(n as f64, m as f64);
            if f < best.2 {
                best = (n, m, f);
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn inputs(iq: f64, ivv: f64, xi: f64, iv: f64, n: usize) -> AmiseInputs {
        AmiseInputs {
            iv,
            iq,
            ivv,
            xi,
            n,
            t_days: 1.0,
        }
    }

    #[test]
    fn objective_pinned_value() {
        let inp = inputs(1.0, 0.0, 0.0, 0.0, 23400);
        let v = c_amise(&inp, 100.0, 10.0).unwrap();
        assert!((v - 1.0 / 15.0).abs() < 1e-15);
    }

    #[test]
    fn objective_decreasing_in_n_without_noise() {
        let inp = inputs(1.0, 0.0, 0.0, 0.0, 23400);
        let mut last = f64::INFINITY;
        for n in [10.0, 50.0, 200.0, 1000.0] {
            let v = c_amise(&inp, n, 5.0).unwrap();
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn stationary_m_matches_grid_search() {
        // with ξ = 0 the 1-D stationary point in M is √(T·N·IVV/(2·IQ))
        let inp = inputs(1.0, 1.0, 0.0, 0.0, 23400);
        let big_n = 100.0;
        let m_star = (big_n / 2.0f64).sqrt();
        let (_, g_m) = c_amise_gradient(&inp, big_n, m_star).unwrap();
        assert!(g_m.abs() < 1e-10, "gradient at stationary point: {g_m}");
        let mut best = (0.0, f64::INFINITY);
        let mut m = 1.0;
        while m <= 24.0 {
            let v = c_amise(&inp, big_n, m).unwrap();
            if v < best.1 {
                best = (m, v);
            }
            m += 0.01;
        }
        assert!((best.0 - m_star).abs() < 0.5, "{} vs {m_star}", best.0);
    }

    #[test]
    fn gradient_matches_finite_differences_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let inp = inputs(
                10f64.powf(rng.gen_range(-6.0..0.0)),
                10f64.powf(rng.gen_range(-7.0..-1.0)),
                10f64.powf(rng.gen_range(-9.0..-4.0)),
                10f64.powf(rng.gen_range(-3.0..-0.5)),
                23400,
            );
            let n = rng.gen_range(80.0..1500.0);
            let m = rng.gen_range(1.5..24.0);
            let (g_n, g_m) = c_amise_gradient(&inp, n, m).unwrap();
            let hn = n * 1e-5;
            let hm = m * 1e-5;
            let fd_n = (c_amise(&inp, n + hn, m).unwrap() - c_amise(&inp, n - hn, m).unwrap())
                / (2.0 * hn);
            let fd_m = (c_amise(&inp, n, m + hm).unwrap() - c_amise(&inp, n, m - hm).unwrap())
                / (2.0 * hm);
            assert!(
                (g_n - fd_n).abs() <= 1e-6 * g_n.abs().max(1e-300),
                "dN {g_n} vs {fd_n}"
            );
            assert!(
                (g_m - fd_m).abs() <= 1e-6 * g_m.abs().max(1e-300),
                "dM {g_m} vs {fd_m}"
            );
        }
    }

    #[test]
    fn gradient_negative_in_n_when_noise_free() {
        let inp = inputs(0.3, 0.0, 0.0, 0.0, 23400);
        for n in [80.0, 300.0, 1500.0] {
            for m in [1.0, 8.0, 24.0] {
                let (g_n, _) = c_amise_gradient(&inp, n, m).unwrap();
                assert!(g_n < 0.0);
            }
        }
    }

    #[test]
    fn default_box_matches_sample_size_arithmetic() {
        let o = SelectorOptions::for_sample_size(23400);
        assert_eq!(o.n_lo, 76.0);
        assert_eq!(o.n_hi, 1529.0);
        assert_eq!(o.m_lo, 1.0);
        assert_eq!(o.m_hi, 24.0);
        assert_eq!(o.threshold, 1e-3);
        assert_eq!(o.max_iters, 100_000);
    }

    #[test]
    fn noise_free_objective_reaches_upper_n_boundary() {
        // decreasing in N, minimal in M: descent must cross the whole box
        let inp = inputs(1e5, 0.0, 0.0, 0.0, 23400);
        let opts = SelectorOptions::for_sample_size(23400);
        let res = select_params(&inp, &opts).unwrap();
        assert_eq!(res.n_star, 1529);
        assert_eq!(res.m_star, 1);
    }

    #[test]
    fn iterates_stay_in_box_and_trace_monotone() {
        let inp = inputs(3e-4, 2e-5, 8e-7, 1e-2, 23400);
        let opts = SelectorOptions::for_sample_size(23400);
        let res = select_params(&inp, &opts).unwrap();
        assert!(res.n_star >= 76 && res.n_star <= 1529);
        assert!(res.m_star >= 1 && res.m_star <= 24);
        assert!(res.m_star < res.n_star);
        for w in res.objective_trace.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "trace must not increase");
        }
    }

    #[test]
    fn selection_matches_grid_oracle_when_run_to_convergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for trial in 0..20 {
            let iq = 10f64.powf(rng.gen_range(-7.0..0.0));
            let ivv = iq * 10f64.powf(rng.gen_range(-2.0..2.0));
            let xi = 10f64.powf(rng.gen_range(-9.0..-3.0));
            let iv = (iq * rng.gen_range(0.3..1.0)).sqrt();
            let inp = inputs(iq, ivv, xi, iv, 23400);
            let opts = SelectorOptions::converged(23400);
            let res = select_params(&inp, &opts).unwrap();
            let (gn, gm, gf) = grid_search(&inp, &opts).unwrap();
            let f_sel = c_amise(&inp, res.n_star as f64, res.m_star as f64).unwrap();
            assert!(
                f_sel <= gf * 1.01,
                "trial {trial}: objective {f_sel} vs grid {gf} at ({gn},{gm}) sel ({},{})",
                res.n_star,
                res.m_star
            );
        }
    }

    #[test]
    fn learning_rate_scale_rule_never_overflows() {
        for exp in [-10.0f64, -8.0, -6.0, -4.0] {
            let xi = 10f64.powf(exp);
            let inp = inputs(1e-4, 1e-5, xi, 1e-2, 23400);
            let opts = SelectorOptions::for_sample_size(23400);
            let res = select_params(&inp, &opts).unwrap();
            assert!(res.objective_trace.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn corner_pinned_input_reports_not_converged() {
        // enormous noise: objective increasing in both coordinates, the
        // projected gradient pins the iterate at the lower corner
        let inp = inputs(1e-8, 1e-9, 1.0, 1e-5, 23400);
        let opts = SelectorOptions::for_sample_size(23400);
        let res = select_params(&inp, &opts).unwrap();
        assert_eq!(res.n_star, 76);
        assert_eq!(res.m_star, 1);
        assert!(!res.converged);
    }

    #[test]
    fn invalid_box_rejected() {
        let inp = inputs(1.0, 1.0, 1e-6, 1.0, 23400);
        let mut opts = SelectorOptions::for_sample_size(23400);
        opts.n_hi = opts.n_lo;
        assert!(select_params(&inp, &opts).is_err());
    }
}
