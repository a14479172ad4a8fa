//! Rescaled Dirichlet and Fejér kernels with their first two derivatives.
//!
//! `D_N(x) = (2N+1)^{-1} Σ_{|k|≤N} e^{ikx}` and
//! `F_M(x) = Σ_{|k|≤M} (1 - |k|/(M+1)) e^{ikx}`, both 2π-periodic and real.
//! Closed sine-ratio forms are used away from multiples of 2π; near the
//! singular points the exact O(N) cosine sums take over.

use num_traits::{Float, FromPrimitive};

use crate::error::{Error, Result};

/// Cut-off order of a Dirichlet or Fejér kernel.
pub type KernelOrder = usize;

/// Scalar type the kernel evaluations are generic over.
pub trait KernelScalar: Float + FromPrimitive {}
impl<T: Float + FromPrimitive> KernelScalar for T {}

/// Below this |sin(x/2)| the sine-ratio form loses too many digits and the
/// direct sum is used instead.
const SIN_HALF_FLOOR: f64 = 1e-8;

#[inline]
fn from_usize<F: KernelScalar>(v: usize) -> F {
    F::from_usize(v).expect("order fits in the scalar type")
}

/// Rescaled Dirichlet kernel `D_N(x)`; `D_N(0) = 1` and `|D_N| ≤ 1`.
pub fn dirichlet<F: KernelScalar>(order: KernelOrder, x: F) -> F {
    let two = from_usize::<F>(2);
    let half = x / two;
    let s = half.sin();
    let m = from_usize::<F>(2 * order + 1);
    if s.abs() > F::from_f64(SIN_HALF_FLOOR).unwrap() {
        (m * half).sin() / (m * s)
    } else {
        // 1 + 2 Σ_{k=1..N} cos(kx), exact at the singular points
        let mut acc = F::one();
        for k in 1..=order {
            acc = acc + two * (from_usize::<F>(k) * x).cos();
        }
        acc / m
    }
}

/// Fejér kernel `F_M(x)`; nonnegative, `F_M(0) = M+1`.
pub fn fejer<F: KernelScalar>(order: KernelOrder, x: F) -> F {
    let two = from_usize::<F>(2);
    let half = x / two;
    let s = half.sin();
    let mp1 = from_usize::<F>(order + 1);
    if s.abs() > F::from_f64(SIN_HALF_FLOOR).unwrap() {
        let r = (mp1 * half).sin() / s;
        r * r / mp1
    } else {
        let mut acc = F::one();
        for k in 1..=order {
            let w = F::one() - from_usize::<F>(k) / mp1;
            acc = acc + two * w * (from_usize::<F>(k) * x).cos();
        }
        acc
    }
}

/// `(F'_M(x), F''_M(x))` by termwise differentiation of the weighted sum.
pub fn fejer_derivatives<F: KernelScalar>(order: KernelOrder, x: F) -> (F, F) {
    let two = from_usize::<F>(2);
    let mp1 = from_usize::<F>(order + 1);
    let mut d1 = F::zero();
    let mut d2 = F::zero();
    for k in 1..=order {
        let kf = from_usize::<F>(k);
        let w = F::one() - kf / mp1;
        let kx = kf * x;
        d1 = d1 - two * kf * w * kx.sin();
        d2 = d2 - two * kf * kf * w * kx.cos();
    }
    (d1, d2)
}

/// `(D'_N(x), D''_N(x))` by termwise differentiation.
pub fn dirichlet_derivatives<F: KernelScalar>(order: KernelOrder, x: F) -> (F, F) {
    let two = from_usize::<F>(2);
    let m = from_usize::<F>(2 * order + 1);
    let mut d1 = F::zero();
    let mut d2 = F::zero();
    for k in 1..=order {
        let kf = from_usize::<F>(k);
        let kx = kf * x;
        d1 = d1 - two * kf * kx.sin();
        d2 = d2 - two * kf * kf * kx.cos();
    }
    (d1 / m, d2 / m)
}

/// Discretisation constant `K(c) = r(c)(1-r(c))/(2c²)` with `r(c) = c - ⌊c⌋`.
/// Vanishes exactly at integer `c`.
pub fn k_constant<F: KernelScalar>(c: F) -> Result<F> {
    if c <= F::zero() || !c.is_finite() {
        return Err(Error::invalid("k_constant requires c > 0"));
    }
    let r = c - c.floor();
    let two = from_usize::<F>(2);
    Ok(r * (F::one() - r) / (two * c * c))
}
