use alloc::string::String;
use core::fmt;

use crate::quadrature::QuadResult;

pub type Result<T> = core::result::Result<T, Error>;

/// Every failure mode of the library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter lies outside its admissible domain.
    Domain(String),
    /// An exponent lies outside the admissible window. `axis` is set for
    /// multidimensional inputs.
    Range {
        what: String,
        value: f64,
        axis: Option<usize>,
    },
    /// Quadrature did not reach the requested tolerance; carries the best
    /// estimate available.
    Convergence { context: String, best: QuadResult },
    /// The quantity is infinite. Detected from declared exponents, never from
    /// a growing numerical integral.
    Divergence { reason: String, axis: Option<usize> },
    /// The request is well defined but not representable symbolically.
    Unsupported(String),
    /// Not enough usable data for a least-squares fit.
    Fit(String),
    /// `(A, B) ∩ (p_-, p_+)` is empty.
    EmptyIntersection { support: (f64, f64), window: (f64, f64) },
    /// A discrete kernel failed the degree −1 homogeneity sample.
    Homogeneity { max_deviation: f64 },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn divergence(reason: impl Into<String>) -> Self {
        Error::Divergence {
            reason: reason.into(),
            axis: None,
        }
    }

    /// Attach an axis index to range and divergence errors.
    pub fn on_axis(self, axis: usize) -> Self {
        match self {
            Error::Range { what, value, .. } => Error::Range {
                what,
                value,
                axis: Some(axis),
            },
            Error::Divergence { reason, .. } => Error::Divergence {
                reason,
                axis: Some(axis),
            },
            other => other,
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Range { .. } => "range",
            Error::Convergence { .. } => "convergence",
            Error::Divergence { .. } => "divergence",
            Error::Unsupported(_) => "unsupported",
            Error::Fit(_) => "fit",
            Error::EmptyIntersection { .. } => "empty_intersection",
            Error::Homogeneity { .. } => "homogeneity",
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Range { what, value, axis } => {
                write!(f, "range error: {what} (value {value})")?;
                if let Some(axis) = axis {
                    write!(f, " on axis {axis}")?;
                }
                Ok(())
            }
            Error::Convergence { context, best } => write!(
                f,
                "no convergence in {context}: best estimate {} ± {} after {} nodes",
                best.value, best.error_estimate, best.nodes_used
            ),
            Error::Divergence { reason, axis } => {
                write!(f, "divergent: {reason}")?;
                if let Some(axis) = axis {
                    write!(f, " on axis {axis}")?;
                }
                Ok(())
            }
            Error::Unsupported(msg) => write!(f, "unsupported: {msg}"),
            Error::Fit(msg) => write!(f, "fit error: {msg}"),
            Error::EmptyIntersection { support, window } => write!(
                f,
                "psi support ({}, {}) does not meet the exponent window ({}, {})",
                support.0, support.1, window.0, window.1
            ),
            Error::Homogeneity { max_deviation } => write!(
                f,
                "kernel is not homogeneous of degree -1 on the sample grid (max relative deviation {max_deviation})"
            ),
        }
    }
}

impl core::error::Error for Error {}
