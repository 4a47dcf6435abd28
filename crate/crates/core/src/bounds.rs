//! Operator-norm constants: the Gamma-formula upper bound for `K(α,β,λ; p)`,
//! empirical lower bounds from test functions, blow-up exponent fits, the
//! Grand Lebesgue transfer `ψ ↦ ψ_K` and the convolution bound.
//!
//! The upper-bound formula contains a parameter `b` that is not otherwise
//! pinned down; it is taken to be `β`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::exponents::OperatorParams;
use crate::functions::{FunctionSpec, Piece};
use crate::grid::{GridEvaluator, Sequential};
use crate::math;
use crate::norms::{LpSource, OperatorImage, PsiFunction};
use crate::operators::{Operator, WeightSpec};
use crate::quadrature::QuadratureSpec;
use crate::special::ln_gamma;

/// `[Γ((1-1/p-α)/κ) Γ((α+β)/κ) / Γ((1-1/p+β)/κ)]^κ` for `p ∈ (p_-, p_+]`.
#[allow(non_snake_case)]
pub fn upper_bound_K(params: &OperatorParams, p: f64) -> Result<f64> {
    let w = params.window();
    if !(p > w.p_minus && p <= w.p_plus) {
        return Err(Error::Range {
            what: format!("p must lie in ({}, {}]", w.p_minus, w.p_plus),
            value: p,
            axis: None,
        });
    }
    let (alpha, beta, kappa) = (params.alpha(), params.beta(), params.kappa());
    let s = 1.0 - 1.0 / p;
    let ln = ln_gamma((s - alpha) / kappa) + ln_gamma((alpha + beta) / kappa) - ln_gamma((s + beta) / kappa);
    Ok(math::exp(kappa * ln))
}

/// One point of a ratio sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    pub p: f64,
    pub q: f64,
    pub f_norm: f64,
    pub image_norm: f64,
    pub ratio: f64,
    /// Gamma-formula bound for `U`; NaN for `W`, which has no closed form.
    pub upper_bound: f64,
    /// Absolute error estimate of `ratio`.
    pub error_estimate: f64,
}

fn ratio_record(
    op: Operator,
    params: &OperatorParams,
    p: f64,
    f: &FunctionSpec,
    spec: &QuadratureSpec,
    bound: impl Fn(f64) -> Result<f64>,
) -> Result<SweepRecord> {
    let w = params.window();
    if !(p > w.p_minus && p <= w.p_plus) {
        return Err(Error::Range {
            what: format!("p must lie in ({}, {}]", w.p_minus, w.p_plus),
            value: p,
            axis: None,
        });
    }
    let q = params.q_of_p(p)?;
    let fr = f.lp_norm(p, spec)?;
    if !(fr.value > 0.0) {
        return Err(Error::domain("|f|_p = 0; the ratio is undefined"));
    }
    let img = OperatorImage { op, params: *params, f }.lp_norm(q, spec)?;
    let ratio = img.value / fr.value;
    let rel = fr.error_estimate / fr.value + if img.value > 0.0 { img.error_estimate / img.value } else { 0.0 };
    Ok(SweepRecord {
        p,
        q,
        f_norm: fr.value,
        image_norm: img.value,
        ratio,
        upper_bound: bound(p)?,
        error_estimate: ratio * rel,
    })
}

/// `|U f|_{q(p)} / |f|_p`, a lower bound for `K(α,β,λ; p)` up to quadrature
/// error.
#[allow(non_snake_case)]
pub fn lower_bound_K_empirical(
    params: &OperatorParams,
    p: f64,
    f: &FunctionSpec,
    spec: &QuadratureSpec,
) -> Result<SweepRecord> {
    ratio_record(Operator::U, params, p, f, spec, |p| upper_bound_K(params, p))
}

/// Tolerance used for the points closest to the critical exponent.
const TIGHT_REL_TOL: f64 = 1e-12;

/// Indices of the two entries of `p_list` closest to `end`.
fn nearest_two(p_list: &[f64], end: f64) -> [Option<usize>; 2] {
    let mut idx: Vec<usize> = (0..p_list.len()).collect();
    idx.sort_by(|&i, &j| {
        math::abs(p_list[i] - end)
            .total_cmp(&math::abs(p_list[j] - end))
            .then(i.cmp(&j))
    });
    [idx.first().copied(), idx.get(1).copied()]
}

fn sweep(
    op: Operator,
    params: &OperatorParams,
    f: &FunctionSpec,
    p_list: &[f64],
    end: f64,
    spec: &QuadratureSpec,
    eval: &impl GridEvaluator,
) -> Vec<Result<SweepRecord>> {
    let tight = nearest_two(p_list, end);
    eval.map(p_list.len(), |i| {
        let s = if tight.contains(&Some(i)) {
            spec.with_rel_tol(spec.rel_tol.min(TIGHT_REL_TOL))
        } else {
            *spec
        };
        ratio_record(op, params, p_list[i], f, &s, |p| match op {
            Operator::U => upper_bound_K(params, p),
            Operator::W => Ok(f64::NAN),
        })
    })
}

/// One record per `p`, in input order; failures stay in place as errors.
pub fn sweep_ratio(
    params: &OperatorParams,
    f: &FunctionSpec,
    p_list: &[f64],
    spec: &QuadratureSpec,
) -> Vec<Result<SweepRecord>> {
    sweep_ratio_with(params, f, p_list, spec, &Sequential)
}

pub fn sweep_ratio_with<E: GridEvaluator>(
    params: &OperatorParams,
    f: &FunctionSpec,
    p_list: &[f64],
    spec: &QuadratureSpec,
    eval: &E,
) -> Vec<Result<SweepRecord>> {
    sweep(Operator::U, params, f, p_list, params.window().p_minus, spec, eval)
}

/// `p_- + 10^{-k}`, `k = 1..=n`.
pub fn near_p_minus(params: &OperatorParams, n: u32) -> Vec<f64> {
    let pm = params.window().p_minus;
    (1..=n as i32).map(|k| pm + math::powf(10.0, -k as f64)).collect()
}

/// `p_+ - 10^{-k}`, `k = 1..=n`.
pub fn near_p_plus(params: &OperatorParams, n: u32) -> Vec<f64> {
    let pp = params.window().p_plus;
    (1..=n as i32).map(|k| pp - math::powf(10.0, -k as f64)).collect()
}

/// Least-squares line through `(ln|p - endpoint|, ln ratio)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlowupFit {
    pub fitted_exponent: f64,
    pub fitted_constant: f64,
    /// Root-mean-square residual of the log fit.
    pub residual: f64,
    pub p_points: Vec<f64>,
}

/// Fit `ratio ≈ C (p - p_-)^e` on records with `p > p_-`.
pub fn fit_blowup(records: &[SweepRecord], p_minus: f64) -> Result<BlowupFit> {
    let usable: Vec<&SweepRecord> = records
        .iter()
        .filter(|r| r.p > p_minus && r.ratio > 0.0 && r.ratio.is_finite())
        .collect();
    fit_points(&usable, p_minus)
}

/// Fit `ratio ≈ C |p - endpoint|^e`; records on either side are accepted.
pub fn fit_blowup_at(records: &[SweepRecord], endpoint: f64) -> Result<BlowupFit> {
    let usable: Vec<&SweepRecord> = records
        .iter()
        .filter(|r| r.p != endpoint && r.ratio > 0.0 && r.ratio.is_finite())
        .collect();
    fit_points(&usable, endpoint)
}

fn fit_points(usable: &[&SweepRecord], endpoint: f64) -> Result<BlowupFit> {
    if usable.len() < 4 {
        return Err(Error::Fit(format!(
            "need at least 4 usable records, got {}",
            usable.len()
        )));
    }
    let xs: Vec<f64> = usable.iter().map(|r| math::ln(math::abs(r.p - endpoint))).collect();
    let ys: Vec<f64> = usable.iter().map(|r| math::ln(r.ratio)).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Fit("all records share the same distance to the endpoint".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    Ok(BlowupFit {
        fitted_exponent: slope,
        fitted_constant: math::exp(intercept),
        residual: math::sqrt(ss / n),
        p_points: usable.iter().map(|r| r.p).collect(),
    })
}

/// `ψ_K` on the `q`-image of `(a, b) = (A, B) ∩ (p_-, p_+)`, and the
/// restriction `ψ_{a,b}`. The Gamma-formula bound stands in for `K`, so the
/// transferred inequality holds a fortiori.
#[allow(non_snake_case)]
pub fn psi_K_transfer(params: &OperatorParams, psi: &PsiFunction) -> Result<(PsiFunction, PsiFunction)> {
    let w = params.window();
    let (big_a, big_b) = psi.support();
    let a = big_a.max(w.p_minus);
    let b = big_b.min(w.p_plus);
    if !(a < b) {
        return Err(Error::EmptyIntersection {
            support: (big_a, big_b),
            window: (w.p_minus, w.p_plus),
        });
    }
    let restricted = psi.restrict(a, b)?;
    let transferred = PsiFunction::transfer(params, restricted.clone())?;
    Ok((transferred, restricted))
}

/// `L p² / (p - 1)`.
pub fn hardy_convolution_bound(w: &WeightSpec, p: f64) -> Result<f64> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::Range {
            what: "p must exceed 1".into(),
            value: p,
            axis: None,
        });
    }
    Ok(w.l() * p * p / (p - 1.0))
}

/// `y^{-(1-α-λ)}` on `(0, 1]`: in `L_p` exactly for `p < p_+`, with
/// `|h|_p → ∞` as `p ↑ p_+`. This is the family that realises the blow-up of
/// `W`, whose critical exponent is `p_+`.
pub fn conjugate_family(params: &OperatorParams) -> FunctionSpec {
    FunctionSpec::new(alloc::vec![Piece::power(
        0.0,
        1.0,
        -(1.0 - params.alpha() - params.lambda())
    )])
    .expect("valid piece")
}

/// `W`-ratios `|W h|_{q(p)}/|h|_p` for a chosen family, one record per `p`.
pub fn conjugate_sweep_with<E: GridEvaluator>(
    params: &OperatorParams,
    h: &FunctionSpec,
    p_list: &[f64],
    spec: &QuadratureSpec,
    eval: &E,
) -> Vec<Result<SweepRecord>> {
    sweep(Operator::W, params, h, p_list, params.window().p_plus, spec, eval)
}

/// Blow-up fit of `|W h|_{q(p)}/|h|_p` with the default family
/// [`conjugate_family`], measured against `|p - p_+|`. Points typically sit
/// at `p_+ - 10^{-k}` (see [`near_p_plus`]).
pub fn conjugate_bound_probe(params: &OperatorParams, p_list: &[f64], spec: &QuadratureSpec) -> Result<BlowupFit> {
    conjugate_bound_probe_with(params, &conjugate_family(params), p_list, params.window().p_plus, spec, &Sequential)
}

/// [`conjugate_bound_probe`] with an explicit family and endpoint.
pub fn conjugate_bound_probe_with<E: GridEvaluator>(
    params: &OperatorParams,
    h: &FunctionSpec,
    p_list: &[f64],
    endpoint: f64,
    spec: &QuadratureSpec,
    eval: &E,
) -> Result<BlowupFit> {
    let records: Vec<SweepRecord> = conjugate_sweep_with(params, h, p_list, spec, eval)
        .into_iter()
        .filter_map(|r| r.ok())
        .collect();
    fit_blowup_at(&records, endpoint)
}
