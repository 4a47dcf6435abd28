//! The operator families: `U`, its conjugate `W`, the weighted convolution
//! `V_S`, the nested multidimensional `U` and a discrete kernel sum.
//!
//! `U` and `W` act on symbolic functions piece by piece in the logarithmic
//! variables `s = ln x`, `u = ln(x/y)`; values are carried as
//! `(sign, ln|value|)` so that images can be evaluated at `x = e^{20000}`,
//! where the tail mass of near-critical norms lives.

mod conv;
mod discrete;
mod kernel;
mod multidim;

pub use conv::{apply_VS, vs_image_lp_integral, WeightSpec};
pub use discrete::{apply_M_discrete, DiscreteKernel, DiscreteResult};
pub use multidim::{apply_U_multidim, apply_U_multidim_fn};

use alloc::format;
use alloc::vec::Vec;
use core::cell::Cell;

use crate::error::{Error, Result};
use crate::exponents::OperatorParams;
use crate::functions::{FiniteRange, FunctionSpec, Piece};
use crate::grid::GridEvaluator;
use crate::math;
use crate::quadrature::{integrate_log_line, jacobi_weighted_integral, QuadResult, QuadratureSpec, RuleCache};
use crate::special;
use kernel::{KernelIntegral, Linear};

/// `U` integrates over `(0, x)`, `W` over `(x, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operator {
    U,
    W,
}

impl Operator {
    pub fn name(self) -> &'static str {
        match self {
            Operator::U => "U",
            Operator::W => "W",
        }
    }
}

/// A value as `sign · e^{ln_abs}`, with its relative error.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogValue {
    pub sign: f64,
    pub ln_abs: f64,
    pub rel_err: f64,
    pub converged: bool,
    pub nodes: usize,
}

const CRITICAL_TOL: f64 = 1e-12;

fn ln_or(x: f64, zero: f64) -> f64 {
    if x == 0.0 {
        zero
    } else if x == f64::INFINITY {
        f64::INFINITY
    } else {
        math::ln(x)
    }
}

/// Inner integral of one piece at `x = e^s`, with the log prefactor that
/// multiplies it (excluding `ln|c|`).
fn piece_problem(op: Operator, params: &OperatorParams, piece: &Piece, s: f64) -> Option<(KernelIntegral, f64)> {
    let ln_lo = ln_or(piece.lo, f64::NEG_INFINITY);
    let ln_hi = ln_or(piece.hi, f64::NEG_INFINITY);
    let (a, alpha, lambda, kappa) = (piece.power, params.alpha(), params.lambda(), params.kappa());
    let image_exp = a + 1.0 - kappa;
    match op {
        Operator::U => {
            if s <= ln_lo {
                return None;
            }
            let clipped = s > ln_hi;
            let u_a = if clipped { s - ln_hi } else { 0.0 };
            let u_b = s - ln_lo;
            let width = if clipped { ln_hi - ln_lo } else { u_b };
            let log_a = if clipped { ln_hi } else { s };
            let k = a + 1.0 - alpha;
            if k >= 0.0 {
                Some((
                    KernelIntegral {
                        rate: k,
                        width,
                        lambda,
                        kern: Linear { start: u_a, end: u_b, dir: 1.0 },
                        theta: piece.log_power,
                        log: Linear { start: log_a, end: ln_lo, dir: -1.0 },
                    },
                    image_exp * s - if u_a == 0.0 { 0.0 } else { k * u_a },
                ))
            } else {
                Some((
                    KernelIntegral {
                        rate: -k,
                        width,
                        lambda,
                        kern: Linear { start: u_b, end: u_a, dir: -1.0 },
                        theta: piece.log_power,
                        log: Linear { start: ln_lo, end: log_a, dir: 1.0 },
                    },
                    image_exp * s - k * u_b,
                ))
            }
        }
        Operator::W => {
            if s >= ln_hi {
                return None;
            }
            let clipped = s < ln_lo;
            let u_a = if clipped { ln_lo - s } else { 0.0 };
            let u_b = ln_hi - s;
            let width = if clipped { ln_hi - ln_lo } else { u_b };
            let log_a = if clipped { ln_lo } else { s };
            let k = alpha + lambda - a - 1.0;
            let ln_norm = special::ln_gamma(alpha);
            if k >= 0.0 {
                Some((
                    KernelIntegral {
                        rate: k,
                        width,
                        lambda,
                        kern: Linear { start: u_a, end: u_b, dir: 1.0 },
                        theta: piece.log_power,
                        log: Linear { start: log_a, end: ln_hi, dir: 1.0 },
                    },
                    image_exp * s - if u_a == 0.0 { 0.0 } else { k * u_a } - ln_norm,
                ))
            } else {
                Some((
                    KernelIntegral {
                        rate: -k,
                        width,
                        lambda,
                        kern: Linear { start: u_b, end: u_a, dir: -1.0 },
                        theta: piece.log_power,
                        log: Linear { start: ln_hi, end: log_a, dir: -1.0 },
                    },
                    image_exp * s - k * u_b - ln_norm,
                ))
            }
        }
    }
}

/// Combine signed log-magnitudes.
pub(crate) fn log_sum(terms: &[(f64, f64, f64)], converged: bool, nodes: usize) -> LogValue {
    let l_max = terms
        .iter()
        .map(|t| t.1)
        .fold(f64::NEG_INFINITY, f64::max);
    if l_max == f64::NEG_INFINITY {
        return LogValue {
            sign: 0.0,
            ln_abs: f64::NEG_INFINITY,
            rel_err: 0.0,
            converged,
            nodes,
        };
    }
    let mut total = 0.0;
    let mut err = 0.0;
    for &(sign, l, rel) in terms {
        let w = math::exp(l - l_max);
        total += sign * w;
        err += w * rel;
    }
    if total == 0.0 {
        return LogValue {
            sign: 0.0,
            ln_abs: f64::NEG_INFINITY,
            rel_err: f64::INFINITY,
            converged,
            nodes,
        };
    }
    LogValue {
        sign: if total > 0.0 { 1.0 } else { -1.0 },
        ln_abs: l_max + math::ln(math::abs(total)),
        rel_err: err / math::abs(total),
        converged,
        nodes,
    }
}

/// `T f(e^s)` in log form. `h(ln y)` multiplies the integrand (used by the
/// nested multidimensional operator).
pub(crate) fn log_apply(
    op: Operator,
    params: &OperatorParams,
    f: &FunctionSpec,
    s: f64,
    cache: &RuleCache,
    spec: &QuadratureSpec,
    h: &mut dyn FnMut(f64) -> f64,
) -> LogValue {
    let mut terms: Vec<(f64, f64, f64)> = Vec::with_capacity(f.pieces().len());
    let mut converged = true;
    let mut nodes = 0;
    for piece in f.pieces() {
        if piece.scale == 0.0 {
            continue;
        }
        let Some((problem, pref)) = piece_problem(op, params, piece, s) else {
            continue;
        };
        let log_y = problem.log;
        let width = problem.width;
        let mut hh = |t: f64| h(log_at(&log_y, t, width));
        let r = problem.integrate(cache, spec, &mut hh);
        converged &= r.converged;
        nodes += r.nodes_used;
        if r.value == 0.0 || !r.value.is_finite() {
            if !r.value.is_finite() {
                converged = false;
            }
            continue;
        }
        let sign = if (r.value > 0.0) == (piece.scale > 0.0) { 1.0 } else { -1.0 };
        terms.push((
            sign,
            math::ln(math::abs(piece.scale)) + pref + math::ln(math::abs(r.value)),
            r.rel_error(),
        ));
    }
    log_sum(&terms, converged, nodes)
}

fn log_at(l: &Linear, t: f64, width: f64) -> f64 {
    let to_end = width - t;
    if t <= to_end {
        l.start + l.dir * t
    } else {
        l.end - l.dir * to_end
    }
}

/// Reject functions whose image is infinite at every point.
pub(crate) fn screen_pointwise(op: Operator, params: &OperatorParams, f: &FunctionSpec) -> Result<()> {
    let alpha = params.alpha();
    let lambda = params.lambda();
    for piece in f.pieces().iter().filter(|p| p.scale != 0.0) {
        let (a, th) = (piece.power, piece.log_power);
        if th <= -1.0 && (piece.lo == 1.0 || piece.hi == 1.0) {
            return Err(Error::divergence(format!(
                "|ln y|^{th} is not integrable at y = 1"
            )));
        }
        let (at_end, k, where_) = match op {
            Operator::U => (piece.lo == 0.0, a + 1.0 - alpha, "0"),
            Operator::W => (piece.hi == f64::INFINITY, alpha + lambda - a - 1.0, "infinity"),
        };
        if at_end {
            if k.abs() <= CRITICAL_TOL && th < -1.0 {
                return Err(Error::Unsupported(format!(
                    "critical power with log factor {th} at {where_}: {} f is finite but not \
                     representable by the piecewise engine",
                    op.name()
                )));
            }
            if k <= CRITICAL_TOL {
                return Err(Error::divergence(format!(
                    "{} f is infinite everywhere: y^{a} |ln y|^{th} is not integrable against \
                     the kernel at {where_}",
                    op.name()
                )));
            }
        }
    }
    Ok(())
}

/// Power and log-power of `|T f(x)|` as `x → 0` and `x → ∞` (`None` when
/// the image vanishes identically there).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageAsymptotics {
    pub zero: Option<(f64, f64)>,
    pub infinity: Option<(f64, f64)>,
    /// Exponents `σ < 0` of `|x - 1|^σ` singularities caused by log factors.
    pub at_one: Option<f64>,
}

fn dominant(cands: &[(f64, f64)], larger_exponent: bool) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for &c in cands {
        best = Some(match best {
            None => c,
            Some(b) => {
                if (c.0 - b.0).abs() <= CRITICAL_TOL {
                    if c.1 > b.1 {
                        c
                    } else {
                        b
                    }
                } else if (c.0 > b.0) == larger_exponent {
                    c
                } else {
                    b
                }
            }
        });
    }
    best
}

fn critical_case(base: f64, th: f64) -> (f64, f64) {
    (base, if th > -1.0 { th + 1.0 } else { 0.0 })
}

pub fn image_asymptotics(op: Operator, params: &OperatorParams, f: &FunctionSpec) -> Result<ImageAsymptotics> {
    screen_pointwise(op, params, f)?;
    let pieces: Vec<&Piece> = f.pieces().iter().filter(|p| p.scale != 0.0).collect();
    if pieces.is_empty() {
        return Ok(ImageAsymptotics {
            zero: None,
            infinity: None,
            at_one: None,
        });
    }
    let (alpha, beta, lambda, kappa) = (params.alpha(), params.beta(), params.lambda(), params.kappa());
    let mut at_one: Option<f64> = None;
    for p in &pieces {
        if p.log_power < 0.0 && (p.lo == 1.0 || p.hi == 1.0) {
            let sigma = p.log_power + 1.0 - lambda;
            if sigma < 0.0 {
                at_one = Some(at_one.map_or(sigma, |v: f64| v.min(sigma)));
            }
        }
    }
    let first = pieces[0];
    let last = pieces[pieces.len() - 1];
    let out = match op {
        Operator::U => {
            let zero = (first.lo == 0.0).then(|| (first.power + 1.0 - kappa, first.log_power));
            let mut cands = Vec::new();
            for p in &pieces {
                if p.hi == f64::INFINITY {
                    let k = p.power + 1.0 - alpha;
                    cands.push(if k > CRITICAL_TOL {
                        (p.power + 1.0 - kappa, p.log_power)
                    } else if k.abs() <= CRITICAL_TOL {
                        critical_case(-beta - lambda, p.log_power)
                    } else {
                        (-beta - lambda, 0.0)
                    });
                } else {
                    cands.push((-beta - lambda, 0.0));
                }
            }
            ImageAsymptotics {
                zero,
                infinity: dominant(&cands, true),
                at_one,
            }
        }
        Operator::W => {
            let infinity = (last.hi == f64::INFINITY).then(|| (last.power + 1.0 - kappa, last.log_power));
            let mut cands = Vec::new();
            for p in &pieces {
                if p.lo == 0.0 {
                    let k = alpha + lambda - p.power - 1.0;
                    cands.push(if k > CRITICAL_TOL {
                        (p.power + 1.0 - kappa, p.log_power)
                    } else if k.abs() <= CRITICAL_TOL {
                        critical_case(-beta, p.log_power)
                    } else {
                        (-beta, 0.0)
                    });
                } else {
                    cands.push((-beta, 0.0));
                }
            }
            ImageAsymptotics {
                zero: dominant(&cands, false),
                infinity,
                at_one,
            }
        }
    };
    Ok(out)
}

impl ImageAsymptotics {
    /// Reject `q` for which `∫ |T f|^q = ∞`.
    pub fn screen(&self, q: f64, op: Operator) -> Result<()> {
        if let Some((e, lp)) = self.zero {
            let r = q * e + 1.0;
            if r < -CRITICAL_TOL || (r.abs() <= CRITICAL_TOL && !(q * lp < -1.0)) {
                return Err(Error::divergence(format!(
                    "|{} f|^{q} ~ x^{}·|ln x|^{} is not integrable at 0",
                    op.name(),
                    q * e,
                    q * lp
                )));
            }
        }
        if let Some((e, lp)) = self.infinity {
            let r = q * e + 1.0;
            if r > CRITICAL_TOL || (r.abs() <= CRITICAL_TOL && !(q * lp < -1.0)) {
                return Err(Error::divergence(format!(
                    "|{} f|^{q} ~ x^{}·|ln x|^{} is not integrable at infinity",
                    op.name(),
                    q * e,
                    q * lp
                )));
            }
        }
        if let Some(sigma) = self.at_one {
            if q * sigma <= -1.0 {
                return Err(Error::divergence(format!(
                    "|{} f|^{q} ~ |x - 1|^{} is not integrable at x = 1",
                    op.name(),
                    q * sigma
                )));
            }
        }
        Ok(())
    }

    /// Exponents `q ≥ 1` with `|T f|_q < ∞`, or `None` if there are none.
    pub fn finite_range(&self) -> Option<FiniteRange> {
        let mut r = FiniteRange {
            lo: 1.0,
            lo_closed: true,
            hi: f64::INFINITY,
            hi_closed: false,
        };
        if let Some((e, lp)) = self.zero {
            if e < 0.0 {
                r.tighten_hi(-1.0 / e, lp < e);
            }
        }
        if let Some((e, lp)) = self.infinity {
            if e >= 0.0 {
                return None;
            }
            r.tighten_lo(-1.0 / e, lp < e);
        }
        if let Some(sigma) = self.at_one {
            r.tighten_hi(-1.0 / sigma, false);
        }
        (!r.is_empty()).then_some(r)
    }
}

fn check_x(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("x must be a finite positive real, got {x}")));
    }
    Ok(math::ln(x))
}

fn apply(op: Operator, params: &OperatorParams, f: &FunctionSpec, x: f64, spec: &QuadratureSpec) -> Result<QuadResult> {
    let s = check_x(x)?;
    if f.is_zero() {
        return Ok(QuadResult::exact(0.0));
    }
    screen_pointwise(op, params, f)?;
    let cache = RuleCache::new();
    let lv = log_apply(op, params, f, s, &cache, spec, &mut |_| 1.0);
    let value = if lv.sign == 0.0 { 0.0 } else { lv.sign * math::exp(lv.ln_abs) };
    QuadResult {
        value,
        error_estimate: math::abs(value) * lv.rel_err,
        nodes_used: lv.nodes,
        converged: lv.converged,
    }
    .require_converged(op.name())
}

/// `U[f](x) = x^{-β} ∫_0^x y^{-α} f(y) |x-y|^{-λ} dy`.
#[allow(non_snake_case)]
pub fn apply_U(params: &OperatorParams, f: &FunctionSpec, x: f64, spec: &QuadratureSpec) -> Result<QuadResult> {
    apply(Operator::U, params, f, x, spec)
}

/// `W[f](x) = x^{-β}/Γ(α) ∫_x^∞ y^{-α} f(y) (y-x)^{-λ} dy`.
#[allow(non_snake_case)]
pub fn apply_W(params: &OperatorParams, f: &FunctionSpec, x: f64, spec: &QuadratureSpec) -> Result<QuadResult> {
    apply(Operator::W, params, f, x, spec)
}

pub fn apply_operator(op: Operator, params: &OperatorParams, f: &FunctionSpec, x: f64, spec: &QuadratureSpec) -> Result<QuadResult> {
    apply(op, params, f, x, spec)
}

/// Apply an operator on a grid of points; results come back in grid order.
pub fn apply_batch<E: GridEvaluator>(
    op: Operator,
    params: &OperatorParams,
    f: &FunctionSpec,
    xs: &[f64],
    spec: &QuadratureSpec,
    eval: &E,
) -> Vec<Result<QuadResult>> {
    eval.map(xs.len(), |i| apply(op, params, f, xs[i], spec))
}

/// `U` for a black-box `f` in the normalised form
/// `x^{1-κ} ∫_0^1 z^{-α}(1-z)^{-λ} f(xz) dz`. No divergence screening, and
/// only spectrally accurate for `f` smooth on `(0, x)`.
#[allow(non_snake_case)]
pub fn apply_U_fn(params: &OperatorParams, f: &dyn Fn(f64) -> f64, x: f64, spec: &QuadratureSpec) -> Result<QuadResult> {
    check_x(x)?;
    let r = jacobi_weighted_integral(|z| f(x * z), params.alpha(), params.lambda(), spec)?;
    Ok(r.scale(math::powf(x, 1.0 - params.kappa())))
}

/// `W` for a black-box `f`, after `y = x/t`:
/// `x^{1-κ}/Γ(α) ∫_0^1 t^{α+λ-2} (1-t)^{-λ} f(x/t) dt`.
#[allow(non_snake_case)]
pub fn apply_W_fn(params: &OperatorParams, f: &dyn Fn(f64) -> f64, x: f64, spec: &QuadratureSpec) -> Result<QuadResult> {
    check_x(x)?;
    let e = params.alpha() + params.lambda() - 2.0;
    let r = jacobi_weighted_integral(
        |t| {
            let v = f(x / t);
            if v == 0.0 {
                0.0
            } else {
                math::powf(t, e) * v
            }
        },
        0.0,
        params.lambda(),
        spec,
    )?;
    Ok(r.scale(math::powf(x, 1.0 - params.kappa()) / special::gamma(params.alpha())))
}

/// `∫_0^∞ |T f(x)|^q dx`, screened from the declared exponents and evaluated
/// in `s = ln x`.
pub fn image_lp_integral(
    op: Operator,
    params: &OperatorParams,
    f: &FunctionSpec,
    q: f64,
    spec: &QuadratureSpec,
) -> Result<QuadResult> {
    if !(q >= 1.0) || !q.is_finite() {
        return Err(Error::domain(format!("q must be a finite real >= 1, got {q}")));
    }
    let asym = image_asymptotics(op, params, f)?;
    asym.screen(q, op)?;
    let live: Vec<&Piece> = f.pieces().iter().filter(|p| p.scale != 0.0).collect();
    if live.is_empty() {
        return Ok(QuadResult::exact(0.0));
    }
    let (s_lo, s_hi) = match op {
        Operator::U => (ln_or(live[0].lo, f64::NEG_INFINITY), f64::INFINITY),
        Operator::W => (f64::NEG_INFINITY, ln_or(live[live.len() - 1].hi, f64::NEG_INFINITY)),
    };
    let breaks: Vec<f64> = f.breakpoints().iter().map(|&b| math::ln(b)).collect();
    let cache = RuleCache::new();
    let inner_ok = Cell::new(true);
    let inner_err = Cell::new(0.0f64);
    let outer = integrate_log_line(s_lo, s_hi, &breaks, spec, |s| {
        let lv = log_apply(op, params, f, s, &cache, spec, &mut |_| 1.0);
        if !lv.converged {
            inner_ok.set(false);
        }
        if lv.sign == 0.0 {
            return 0.0;
        }
        if lv.rel_err > inner_err.get() {
            inner_err.set(lv.rel_err);
        }
        math::exp(s + q * lv.ln_abs)
    });
    let result = QuadResult {
        value: outer.value,
        error_estimate: outer.error_estimate + q * inner_err.get() * math::abs(outer.value),
        nodes_used: outer.nodes_used,
        converged: outer.converged && inner_ok.get(),
    };
    result.require_converged("image norm")
}
