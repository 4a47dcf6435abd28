//! Parameter validation and the exponent algebra linking `(α, β, λ)`, `p`,
//! `q` and the critical endpoints.
//!
//! For one dimension the operator maps `L_p` into `L_q` for
//! `p ∈ (p_-, p_+]` with
//!
//! ```text
//! 1 + 1/q = 1/p + κ,   κ = α + β + λ,
//! p_- = 1/(1-α),  p_+ = 1/(1-α-λ),  q_- = 1/(β+λ),  q_+ = 1/β.
//! ```

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Values closer than this to an open-interval boundary are rejected.
pub const BOUNDARY_GUARD: f64 = 1e-12;

/// A validated triple `(α, β, λ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorParams {
    alpha: f64,
    beta: f64,
    lambda: f64,
    kappa: f64,
}

/// The four critical exponents of a parameter triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentWindow {
    pub p_minus: f64,
    pub p_plus: f64,
    pub q_minus: f64,
    pub q_plus: f64,
}

impl OperatorParams {
    /// Validate `(α, β, λ)`: each in `(0, 1)` and `α + β + λ < 1`, all with a
    /// `1e-12` guard band at the boundary.
    pub fn new(alpha: f64, beta: f64, lambda: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta), ("lambda", lambda)] {
            if !v.is_finite() {
                return Err(Error::domain(format!("{name} must be finite, got {v}")));
            }
            if v <= BOUNDARY_GUARD || v >= 1.0 - BOUNDARY_GUARD {
                return Err(Error::domain(format!(
                    "{name} must lie in the open interval (0, 1), got {v}"
                )));
            }
        }
        let kappa = alpha + beta + lambda;
        if kappa >= 1.0 - BOUNDARY_GUARD {
            return Err(Error::domain(format!(
                "alpha + beta + lambda must be < 1, got {kappa}"
            )));
        }
        Ok(OperatorParams {
            alpha,
            beta,
            lambda,
            kappa,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn window(&self) -> ExponentWindow {
        exponent_window(self)
    }

    /// Target exponent `q(p)`; see [`q_of_p`].
    pub fn q_of_p(&self, p: f64) -> Result<f64> {
        q_of_p(self, p)
    }

    /// Inverse map `p(q)`; see [`p_of_q`].
    pub fn p_of_q(&self, q: f64) -> Result<f64> {
        p_of_q(self, q)
    }
}

/// Free-function form of [`OperatorParams::new`].
pub fn validate_params(alpha: f64, beta: f64, lambda: f64) -> Result<OperatorParams> {
    OperatorParams::new(alpha, beta, lambda)
}

pub fn exponent_window(params: &OperatorParams) -> ExponentWindow {
    ExponentWindow {
        p_minus: 1.0 / (1.0 - params.alpha),
        p_plus: 1.0 / (1.0 - (params.alpha + params.lambda)),
        q_minus: 1.0 / (params.beta + params.lambda),
        q_plus: 1.0 / params.beta,
    }
}

impl ExponentWindow {
    /// `p ∈ (p_-, p_+]`.
    pub fn contains_p(&self, p: f64) -> bool {
        p > self.p_minus && p <= self.p_plus
    }

    /// `q ∈ (q_-, q_+]`.
    pub fn contains_q(&self, q: f64) -> bool {
        q > self.q_minus && q <= self.q_plus
    }
}

fn p_range_error(params: &OperatorParams, p: f64) -> Error {
    let w = params.window();
    let what = if p == w.p_minus {
        format!(
            "p must satisfy p_- < p <= p_+ with p_- = {}, p_+ = {}; at p = p_- the function \
             x^-(1-alpha) |log x|^theta on (0,1) has finite L_p norm for suitable theta while \
             its image is not in L_q-",
            w.p_minus, w.p_plus
        )
    } else {
        format!(
            "p must satisfy p_- < p <= p_+ with p_- = {}, p_+ = {}",
            w.p_minus, w.p_plus
        )
    };
    Error::Range {
        what,
        value: p,
        axis: None,
    }
}

/// `q(p)` from `1 + 1/q = 1/p + κ` on the half-open window `(p_-, p_+]`.
/// The right endpoint maps to `q_+` exactly.
pub fn q_of_p(params: &OperatorParams, p: f64) -> Result<f64> {
    let w = params.window();
    if !p.is_finite() || !w.contains_p(p) {
        return Err(p_range_error(params, p));
    }
    if p == w.p_plus {
        return Ok(w.q_plus);
    }
    let inv_q = 1.0 / p + params.kappa - 1.0;
    Ok(1.0 / inv_q)
}

/// Inverse of [`q_of_p`] on `(q_-, q_+]`.
pub fn p_of_q(params: &OperatorParams, q: f64) -> Result<f64> {
    let w = params.window();
    if !q.is_finite() || !w.contains_q(q) {
        return Err(Error::Range {
            what: format!(
                "q must satisfy q_- < q <= q_+ with q_- = {}, q_+ = {}",
                w.q_minus, w.q_plus
            ),
            value: q,
            axis: None,
        });
    }
    if q == w.q_plus {
        return Ok(w.p_plus);
    }
    let inv_p = 1.0 + 1.0 / q - params.kappa;
    Ok(1.0 / inv_p)
}

/// Maximum supported dimension for the anisotropic machinery.
pub const MAX_DIM: usize = 3;

/// Per-axis parameter triples for the multidimensional operator.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiParams {
    axes: Vec<OperatorParams>,
}

impl MultiParams {
    pub fn new(axes: Vec<OperatorParams>) -> Result<Self> {
        if axes.is_empty() || axes.len() > MAX_DIM {
            return Err(Error::domain(format!(
                "dimension must be between 1 and {MAX_DIM}, got {}",
                axes.len()
            )));
        }
        Ok(MultiParams { axes })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[OperatorParams] {
        &self.axes
    }

    pub fn kappas(&self) -> Vec<f64> {
        self.axes.iter().map(|a| a.kappa()).collect()
    }
}

/// Component-wise `q_j(p_j)`.
pub fn multi_exponents(mp: &MultiParams, p_vec: &[f64]) -> Result<Vec<f64>> {
    if p_vec.len() != mp.dim() {
        return Err(Error::domain(format!(
            "expected {} exponents, got {}",
            mp.dim(),
            p_vec.len()
        )));
    }
    mp.axes
        .iter()
        .zip(p_vec)
        .enumerate()
        .map(|(j, (params, &p))| q_of_p(params, p).map_err(|e| e.on_axis(j)))
        .collect()
}
