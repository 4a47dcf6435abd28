//! Nested multidimensional `U`: one one-dimensional operator per axis,
//! applied as iterated integrals from the first axis inwards.
//!
//! The inner integral is recomputed at every node of the outer one, so the
//! factorization identity for product functions is a genuine check of the
//! nesting rather than a consequence of how it is coded.

use alloc::format;
use alloc::vec::Vec;
use core::cell::Cell;

use super::{log_apply, screen_pointwise, Operator};
use crate::error::{Error, Result};
use crate::exponents::MultiParams;
use crate::functions::ProductFunctionSpec;
use crate::math;
use crate::quadrature::{jacobi_weighted_integral, QuadResult, QuadratureSpec, RuleCache};

fn check_points(mp: &MultiParams, dim: usize, x: &[f64]) -> Result<Vec<f64>> {
    if dim != mp.dim() || x.len() != mp.dim() {
        return Err(Error::domain(format!(
            "dimension mismatch: parameters {}, function {dim}, point {}",
            mp.dim(),
            x.len()
        )));
    }
    x.iter()
        .map(|&xi| {
            if xi > 0.0 && xi.is_finite() {
                Ok(math::ln(xi))
            } else {
                Err(Error::domain(format!("coordinates must be finite and positive, got {xi}")))
            }
        })
        .collect()
}

struct Nested<'a> {
    mp: &'a MultiParams,
    f: &'a ProductFunctionSpec,
    s: &'a [f64],
    spec: &'a QuadratureSpec,
    caches: Vec<RuleCache>,
    rel_err: Cell<f64>,
    failed_axis: Cell<Option<usize>>,
}

impl Nested<'_> {
    fn level(&self, j: usize) -> f64 {
        if j == self.s.len() {
            return 1.0;
        }
        let mut inner = |_ln_y: f64| self.level(j + 1);
        let lv = log_apply(
            Operator::U,
            &self.mp.axes()[j],
            &self.f.factors()[j],
            self.s[j],
            &self.caches[j],
            self.spec,
            &mut inner,
        );
        if !lv.converged && self.failed_axis.get().is_none() {
            self.failed_axis.set(Some(j));
        }
        if lv.rel_err > self.rel_err.get() {
            self.rel_err.set(lv.rel_err);
        }
        if lv.sign == 0.0 {
            0.0
        } else {
            lv.sign * math::exp(lv.ln_abs)
        }
    }
}

/// `U` applied axis by axis to a product function at `x`.
#[allow(non_snake_case)]
pub fn apply_U_multidim(
    mp: &MultiParams,
    f: &ProductFunctionSpec,
    x: &[f64],
    spec: &QuadratureSpec,
) -> Result<QuadResult> {
    let s = check_points(mp, f.dim(), x)?;
    for (j, (params, g)) in mp.axes().iter().zip(f.factors()).enumerate() {
        screen_pointwise(Operator::U, params, g).map_err(|e| e.on_axis(j))?;
        if g.is_zero() {
            return Ok(QuadResult::exact(0.0));
        }
    }
    let nested = Nested {
        mp,
        f,
        s: &s,
        spec,
        caches: (0..mp.dim()).map(|_| RuleCache::new()).collect(),
        rel_err: Cell::new(0.0),
        failed_axis: Cell::new(None),
    };
    let value = nested.level(0);
    let rel = nested.rel_err.get() * mp.dim() as f64;
    let result = QuadResult {
        value,
        error_estimate: math::abs(value) * rel,
        nodes_used: 0,
        converged: nested.failed_axis.get().is_none(),
    };
    match nested.failed_axis.get() {
        None => Ok(result),
        Some(j) => Err(Error::Convergence {
            context: format!("multidimensional U, axis {j}"),
            best: result,
        }),
    }
}

/// Nested `U` for a black-box function of `d` variables, each axis in the
/// normalised Gauss–Jacobi form. No divergence screening.
#[allow(non_snake_case)]
pub fn apply_U_multidim_fn(
    mp: &MultiParams,
    f: &dyn Fn(&[f64]) -> f64,
    x: &[f64],
    spec: &QuadratureSpec,
) -> Result<QuadResult> {
    check_points(mp, mp.dim(), x)?;
    let failure: Cell<Option<(usize, Error)>> = Cell::new(None);
    let mut y = alloc::vec![0.0; x.len()];
    let value = nested_fn(mp, f, x, spec, 0, &mut y, &failure);
    if let Some((j, e)) = failure.take() {
        return Err(match e {
            Error::Convergence { context, best } => Error::Convergence {
                context: format!("{context}, axis {j}"),
                best,
            },
            other => other.on_axis(j),
        });
    }
    Ok(value)
}

fn nested_fn(
    mp: &MultiParams,
    f: &dyn Fn(&[f64]) -> f64,
    x: &[f64],
    spec: &QuadratureSpec,
    j: usize,
    y: &mut Vec<f64>,
    failure: &Cell<Option<(usize, Error)>>,
) -> QuadResult {
    if j == x.len() {
        return QuadResult::exact(f(y));
    }
    let params = &mp.axes()[j];
    let y_cell = core::cell::RefCell::new(core::mem::take(y));
    let r = jacobi_weighted_integral(
        |z| {
            let mut yy = y_cell.borrow_mut();
            yy[j] = x[j] * z;
            nested_fn(mp, f, x, spec, j + 1, &mut yy, failure).value
        },
        params.alpha(),
        params.lambda(),
        spec,
    );
    *y = y_cell.into_inner();
    match r {
        Ok(r) => r.scale(math::powf(x[j], 1.0 - params.kappa())),
        Err(e) => {
            let prev = failure.take();
            failure.set(prev.or(Some((j, e))));
            QuadResult::exact(f64::NAN)
        }
    }
}
