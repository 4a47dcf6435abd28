//! Generalized Cesàro–Hardy operators on the half-line.
//!
//! The operator family
//!
//! ```text
//! U[f](x) = x^{-β} ∫_0^x y^{-α} f(y) |x - y|^{-λ} dy,   0 < α, β, λ,  α + β + λ < 1
//! ```
//!
//! together with its conjugate `W`, the weighted convolution `V_S`, the
//! nested multidimensional operator and a discrete homogeneous kernel sum.
//! The crate evaluates these operators on symbolic piecewise power–log test
//! functions, computes classical, anisotropic and Grand Lebesgue norms, and
//! measures the growth of the `L_p → L_q` operator norm near the critical
//! exponent.
//!
//! Everything here is pure computation over immutable values; the crate is
//! `no_std` (with `alloc`). IO, file formats and the command-line front end
//! live in the `chlab` companion crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bounds;
pub mod error;
pub mod exponents;
pub mod functions;
pub mod grid;
pub(crate) mod math;
pub mod norms;
pub mod operators;
pub mod quadrature;
pub mod special;

pub use error::{Error, Result};
pub use exponents::{ExponentWindow, MultiParams, OperatorParams};
pub use functions::{FunctionSpec, Piece, ProductFunctionSpec};
pub use norms::{NormResult, PsiFunction};
pub use quadrature::{QuadResult, QuadratureSpec};
