//! Weighted convolution `V_S[f](x) = S(x)^{-1} ∫_0^x s(x - t) f(t) dt`.
//!
//! The kernel argument is read as `x - t` (non-negative on the range).

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::functions::FunctionSpec;
use crate::math;
use crate::quadrature::de;
use crate::quadrature::{halfline_lp_integral_fn, HalfLineFunction, QuadResult, QuadratureSpec};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const PROBE_POINTS: usize = 1024;

/// A positive weight `s`, its primitive `S` and the ratio bound
/// `L = sup_{x>y} s(x)/s(y)`.
#[derive(Clone)]
pub struct WeightSpec {
    s: RealFn,
    cumulative: Option<RealFn>,
    l: f64,
    power: Option<f64>,
}

impl fmt::Debug for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightSpec")
            .field("l", &self.l)
            .field("power", &self.power)
            .field("has_cumulative", &self.cumulative.is_some())
            .finish()
    }
}

fn probe_grid() -> impl Iterator<Item = f64> {
    (0..PROBE_POINTS).map(|i| math::powf(10.0, -6.0 + 12.0 * i as f64 / (PROBE_POINTS - 1) as f64))
}

impl WeightSpec {
    /// Validate `s` on a 1024-point log grid over `[1e-6, 1e6]` and estimate
    /// `L` there. A declared `L` below the sampled ratio is rejected.
    pub fn new(s: RealFn, cumulative: Option<RealFn>, declared_l: Option<f64>) -> Result<Self> {
        let mut running_min = f64::INFINITY;
        let mut l_est: f64 = 1.0;
        for t in probe_grid() {
            let v = s(t);
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::domain(format!("weight s must be positive and finite, s({t}) = {v}")));
            }
            l_est = l_est.max(v / running_min);
            running_min = running_min.min(v);
        }
        let l = match declared_l {
            Some(l) => {
                if !(l >= 1.0) || !l.is_finite() {
                    return Err(Error::domain(format!("L must be finite and >= 1, got {l}")));
                }
                if l < l_est * (1.0 - 1e-9) {
                    return Err(Error::domain(format!(
                        "declared L = {l} is below the sampled ratio {l_est}"
                    )));
                }
                l
            }
            None => l_est,
        };
        Ok(WeightSpec {
            s,
            cumulative,
            l,
            power: None,
        })
    }

    /// `s ≡ 1`, `S(x) = x`, `L = 1`.
    pub fn constant() -> Self {
        WeightSpec {
            s: Arc::new(|_| 1.0),
            cumulative: Some(Arc::new(|x| x)),
            l: 1.0,
            power: Some(0.0),
        }
    }

    /// `s(t) = t^e` with `-1 < e ≤ 0` (the Riemann–Liouville kernel for
    /// `e = β - 1`). Increasing powers have `L = ∞`.
    pub fn power(e: f64) -> Result<Self> {
        if !(e > -1.0 && e <= 0.0) {
            return Err(Error::domain(format!(
                "power weight needs -1 < e <= 0 for a finite L, got {e}"
            )));
        }
        Ok(WeightSpec {
            s: Arc::new(move |t| math::powf(t, e)),
            cumulative: Some(Arc::new(move |x| math::powf(x, e + 1.0) / (e + 1.0))),
            l: 1.0,
            power: Some(e),
        })
    }

    /// Declare `s(t) ~ t^e` at infinity so image norms can integrate their
    /// tail instead of truncating it.
    pub fn with_power_law(mut self, e: f64) -> Self {
        self.power = Some(e);
        self
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn s(&self, t: f64) -> f64 {
        (self.s)(t)
    }

    /// `S(x)`, from the supplied primitive or by quadrature.
    pub fn cumulative(&self, x: f64, spec: &QuadratureSpec) -> Result<f64> {
        if let Some(c) = &self.cumulative {
            return Ok(c(x));
        }
        let half = 0.5 * x;
        let near0 = de::exp_sinh_left(math::ln(half), spec, |v, _| {
            let t = math::exp(v);
            t * (self.s)(t)
        });
        let rest = de::tanh_sinh(half, x, spec, |t, _, _| (self.s)(t));
        Ok(near0.add(rest).require_converged("cumulative weight")?.value)
    }
}

/// `∫_a^b s(x - t) g(t) dt` with `b ≤ x`; the distance to `x` is taken from
/// the right end so the kernel is accurate when `b = x`.
fn convolve_range(
    w: &WeightSpec,
    g: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    x: f64,
    spec: &QuadratureSpec,
) -> QuadResult {
    let gap = x - b;
    let linear = |lo: f64, hi: f64| {
        de::tanh_sinh(lo, hi, spec, |t, _, dr| {
            let dist = if hi == b { gap + dr } else { x - t };
            let v = g(t);
            if v == 0.0 {
                0.0
            } else {
                (w.s)(dist) * v
            }
        })
    };
    if a > 0.0 && b <= 4.0 * a {
        return linear(a, b);
    }
    // wide range: logarithmic variable on [a, b/2], linear on [b/2, b]
    let mid = 0.5 * b;
    let logpart = |v: f64| {
        let t = math::exp(v);
        let gv = g(t);
        if gv == 0.0 {
            0.0
        } else {
            t * (w.s)(x - t) * gv
        }
    };
    let left = if a == 0.0 {
        de::exp_sinh_left(math::ln(mid), spec, |v, _| logpart(v))
    } else {
        de::tanh_sinh(math::ln(a), math::ln(mid), spec, |v, _, _| logpart(v))
    };
    left.add(linear(mid, b))
}

/// `V_S[f](x) = S(x)^{-1} ∫_0^x s(x - t) f(t) dt`.
#[allow(non_snake_case)]
pub fn apply_VS(w: &WeightSpec, f: &FunctionSpec, x: f64, spec: &QuadratureSpec) -> Result<QuadResult> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("x must be a finite positive real, got {x}")));
    }
    let mut total = QuadResult::exact(0.0);
    for piece in f.pieces().iter().filter(|p| p.scale != 0.0 && p.lo < x) {
        let b = piece.hi.min(x);
        let g = |t: f64| piece.formula(t);
        total = total.add(convolve_range(w, &g, piece.lo, b, x, spec));
    }
    let total = total.require_converged("V_S")?;
    let big_s = w.cumulative(x, spec)?;
    if !(big_s > 0.0) {
        return Err(Error::domain(format!("S({x}) = {big_s} is not positive")));
    }
    Ok(total.scale(1.0 / big_s))
}

/// `∫_0^∞ |V_S f|^p`. With a declared power law for `s`, `V_S f` decays like
/// `x^{max(a_∞, -1)}` and the tail is integrated; otherwise it is truncated
/// at `tail_cut`.
pub fn vs_image_lp_integral(w: &WeightSpec, f: &FunctionSpec, p: f64, spec: &QuadratureSpec) -> Result<QuadResult> {
    f.screen_lp(p)?;
    let decay = w
        .power
        .map(|_| f.declared_infinity_exponent().map_or(-1.0, |a| a.max(-1.0)));
    let eval = |x: f64| match apply_VS(w, f, x, spec) {
        Ok(r) => r.value,
        Err(_) => f64::NAN,
    };
    let breakpoints: Vec<f64> = f.breakpoints();
    let hf = HalfLineFunction {
        f: &eval,
        breakpoints,
        decay_exponent: decay,
    };
    let r = halfline_lp_integral_fn(&hf, p, spec)?;
    if !r.value.is_finite() {
        return Err(Error::Convergence {
            context: "V_S image norm".into(),
            best: r,
        });
    }
    Ok(r)
}
