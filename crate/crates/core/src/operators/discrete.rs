//! Discrete kernel sums `M[a](n) = Σ_m M(m, n) a(m)`.

use alloc::format;
use alloc::sync::Arc;
use core::fmt;

use crate::error::{Error, Result};
use crate::math;

type KernelFn = Arc<dyn Fn(u64, u64) -> f64 + Send + Sync>;

const SAMPLE: [u64; 4] = [16, 32, 64, 128];
const HOMOGENEITY_TOL: f64 = 0.05;

#[derive(Clone)]
pub struct DiscreteKernel {
    m: KernelFn,
    pub homogeneity_check: bool,
}

impl fmt::Debug for DiscreteKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiscreteKernel")
            .field("homogeneity_check", &self.homogeneity_check)
            .finish_non_exhaustive()
    }
}

impl DiscreteKernel {
    pub fn new(m: KernelFn, homogeneity_check: bool) -> Self {
        DiscreteKernel { m, homogeneity_check }
    }

    /// `1(m ≤ n)/(n+1)`.
    pub fn cesaro() -> Self {
        Self::new(Arc::new(|m, n| if m <= n { 1.0 / (n + 1) as f64 } else { 0.0 }), true)
    }

    pub fn eval(&self, m: u64, n: u64) -> f64 {
        (self.m)(m, n)
    }

    /// Largest relative deviation of `2·M(2m, 2n)` from `M(m, n)` over the
    /// sample grid (pairs with `M(m, n) = 0` must stay zero).
    pub fn homogeneity_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for &m in &SAMPLE {
            for &n in &SAMPLE {
                let base = self.eval(m, n);
                let scaled = 2.0 * self.eval(2 * m, 2 * n);
                let dev = if base == 0.0 {
                    if scaled == 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    math::abs(scaled - base) / math::abs(base)
                };
                worst = worst.max(dev);
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteResult {
    pub value: f64,
    /// Last index included in the sum.
    pub cutoff: usize,
}

/// `Σ_{m=0}^{cutoff} M(m, n) a(m)` with `a(m) = 0` past the sequence.
#[allow(non_snake_case)]
pub fn apply_M_discrete(kernel: &DiscreteKernel, a: &[f64], n: u64, cutoff: usize) -> Result<DiscreteResult> {
    if cutoff < a.len() {
        return Err(Error::domain(format!(
            "cutoff {cutoff} must be at least the sequence length {}",
            a.len()
        )));
    }
    if kernel.homogeneity_check {
        let dev = kernel.homogeneity_deviation();
        if !(dev <= HOMOGENEITY_TOL) {
            return Err(Error::Homogeneity { max_deviation: dev });
        }
    }
    let value = a
        .iter()
        .enumerate()
        .take(cutoff + 1)
        .map(|(m, &am)| kernel.eval(m as u64, n) * am)
        .sum();
    Ok(DiscreteResult { value, cutoff })
}
