//! Symbolic piecewise power–log test functions.
//!
//! A [`FunctionSpec`] is a finite sum of pieces `c·x^a·|ln x|^θ` on disjoint
//! intervals. The exact exponents let the integrators screen divergence and
//! place their singular weights without sampling.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::exponents::{OperatorParams, MAX_DIM};
use crate::math;
use crate::special;

/// `scale · x^power · |ln x|^log_power` on `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub power: f64,
    pub log_power: f64,
    pub scale: f64,
}

impl Piece {
    pub fn new(lo: f64, hi: f64, power: f64, log_power: f64, scale: f64) -> Self {
        Piece {
            lo,
            hi,
            power,
            log_power,
            scale,
        }
    }

    /// Pure power on an interval.
    pub fn power(lo: f64, hi: f64, power: f64) -> Self {
        Piece::new(lo, hi, power, 0.0, 1.0)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x < self.hi
    }

    /// Value of the piece's formula (ignores the interval).
    pub fn formula(&self, x: f64) -> f64 {
        self.scale * math::powf(x, self.power) * math::abs_pow(math::ln(x), self.log_power)
    }

    fn validate(&self) -> Result<()> {
        let finite = [self.power, self.log_power, self.scale];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("piece exponents and scale must be finite"));
        }
        if !(self.lo >= 0.0) || self.lo.is_infinite() || !(self.hi > self.lo) {
            return Err(Error::domain(format!(
                "piece interval must satisfy 0 <= lo < hi, got [{}, {})",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

/// Set of `p ≥ 1` where `|f|_p` is finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteRange {
    pub lo: f64,
    pub lo_closed: bool,
    pub hi: f64,
    pub hi_closed: bool,
}

impl FiniteRange {
    pub fn contains(&self, p: f64) -> bool {
        let above = p > self.lo || (self.lo_closed && p == self.lo);
        let below = p < self.hi || (self.hi_closed && p == self.hi);
        above && below
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    pub(crate) fn tighten_lo(&mut self, v: f64, closed: bool) {
        if v > self.lo || (v == self.lo && !closed) {
            self.lo = v;
            self.lo_closed = closed;
        }
    }

    pub(crate) fn tighten_hi(&mut self, v: f64, closed: bool) {
        if v < self.hi || (v == self.hi && !closed) {
            self.hi = v;
            self.hi_closed = closed;
        }
    }
}

/// A piecewise power–log function on `(0, ∞)`.
///
/// Pieces are kept sorted and disjoint; a piece with a log factor that
/// straddles `x = 1` is split there so that every log singularity sits at a
/// piece endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionSpec {
    pieces: Vec<Piece>,
    zero_exponent: Option<f64>,
    infinity_exponent: Option<f64>,
}

impl FunctionSpec {
    pub fn new(pieces: Vec<Piece>) -> Result<Self> {
        let mut out: Vec<Piece> = Vec::with_capacity(pieces.len());
        for p in pieces {
            p.validate()?;
            if p.log_power != 0.0 && p.lo < 1.0 && p.hi > 1.0 {
                out.push(Piece { hi: 1.0, ..p });
                out.push(Piece { lo: 1.0, ..p });
            } else {
                out.push(p);
            }
        }
        out.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        for w in out.windows(2) {
            if w[1].lo < w[0].hi {
                return Err(Error::domain(format!(
                    "pieces overlap: [{}, {}) and [{}, {})",
                    w[0].lo, w[0].hi, w[1].lo, w[1].hi
                )));
            }
        }
        let zero_exponent = out.first().filter(|p| p.lo == 0.0).map(|p| p.power);
        let infinity_exponent = out
            .last()
            .filter(|p| p.hi == f64::INFINITY)
            .map(|p| p.power);
        Ok(FunctionSpec {
            pieces: out,
            zero_exponent,
            infinity_exponent,
        })
    }

    /// Construct and check user-declared asymptotic exponents against the
    /// pieces touching `0` and `∞` (`None` means the function vanishes there).
    pub fn with_declared(
        pieces: Vec<Piece>,
        zero_exponent: Option<f64>,
        infinity_exponent: Option<f64>,
    ) -> Result<Self> {
        let f = Self::new(pieces)?;
        if f.zero_exponent != zero_exponent || f.infinity_exponent != infinity_exponent {
            return Err(Error::domain(format!(
                "declared exponents ({zero_exponent:?} at 0, {infinity_exponent:?} at inf) \
                 disagree with the pieces ({:?}, {:?})",
                f.zero_exponent, f.infinity_exponent
            )));
        }
        Ok(f)
    }

    /// The zero function.
    pub fn zero() -> Self {
        FunctionSpec {
            pieces: Vec::new(),
            zero_exponent: None,
            infinity_exponent: None,
        }
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Power of the piece touching `0`, if any.
    pub fn declared_zero_exponent(&self) -> Option<f64> {
        self.zero_exponent
    }

    /// Power of the piece reaching `∞`, if any.
    pub fn declared_infinity_exponent(&self) -> Option<f64> {
        self.infinity_exponent
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.iter().all(|p| p.scale == 0.0)
    }

    /// Finite interval endpoints, sorted and deduplicated.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self
            .pieces
            .iter()
            .flat_map(|p| [p.lo, p.hi])
            .filter(|x| *x > 0.0 && x.is_finite())
            .collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// Pointwise value; 0 outside every piece.
    pub fn evaluate(&self, x: f64) -> f64 {
        self.pieces
            .iter()
            .find(|p| p.contains(x))
            .map_or(0.0, |p| p.formula(x))
    }

    /// `c·f`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut f = self.clone();
        for p in &mut f.pieces {
            p.scale *= c;
        }
        f
    }

    /// `f + g` for functions with disjoint supports.
    pub fn sum(&self, other: &FunctionSpec) -> Result<Self> {
        let mut pieces = self.pieces.clone();
        pieces.extend_from_slice(&other.pieces);
        Self::new(pieces)
    }

    /// Reject `p` for which `|f|_p = ∞`, with the exponent diagnosis.
    pub fn screen_lp(&self, p: f64) -> Result<()> {
        for piece in self.pieces.iter().filter(|pc| pc.scale != 0.0) {
            let (a, th) = (piece.power, piece.log_power);
            if piece.lo == 0.0 {
                let e = p * a + 1.0;
                if e < 0.0 || (math::near_zero(e) && !(p * th < -1.0)) {
                    return Err(Error::divergence(format!(
                        "|x^{a} |ln x|^{th}|^{p} is not integrable at 0"
                    )));
                }
            }
            if piece.hi == f64::INFINITY {
                let e = p * a + 1.0;
                if e > 0.0 || (math::near_zero(e) && !(p * th < -1.0)) {
                    return Err(Error::divergence(format!(
                        "|x^{a} |ln x|^{th}|^{p} is not integrable at infinity"
                    )));
                }
            }
            if th < 0.0 && (piece.lo == 1.0 || piece.hi == 1.0) && !(p * th > -1.0) {
                return Err(Error::divergence(format!(
                    "|ln x|^({th}·{p}) is not integrable at x = 1"
                )));
            }
        }
        Ok(())
    }

    /// The set of exponents `p ≥ 1` with `|f|_p < ∞`, or `None` if empty.
    pub fn lp_finite_range(&self) -> Option<FiniteRange> {
        let mut r = FiniteRange {
            lo: 1.0,
            lo_closed: true,
            hi: f64::INFINITY,
            hi_closed: false,
        };
        for piece in self.pieces.iter().filter(|pc| pc.scale != 0.0) {
            let (a, th) = (piece.power, piece.log_power);
            if piece.lo == 0.0 && a < 0.0 {
                r.tighten_hi(-1.0 / a, th < a);
            }
            if piece.hi == f64::INFINITY {
                if a >= 0.0 {
                    return None;
                }
                r.tighten_lo(-1.0 / a, th < a);
            }
            if th < 0.0 && (piece.lo == 1.0 || piece.hi == 1.0) {
                r.tighten_hi(-1.0 / th, false);
            }
        }
        if r.is_empty() {
            None
        } else {
            Some(r)
        }
    }
}

/// `f(γx)`. Exact for pieces without a log factor; log pieces are only
/// dilated by `γ = 1`.
pub fn dilate(f: &FunctionSpec, gamma: f64) -> Result<FunctionSpec> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::domain(format!("dilation factor must be positive, got {gamma}")));
    }
    if gamma == 1.0 {
        return Ok(f.clone());
    }
    let mut pieces = Vec::with_capacity(f.pieces.len());
    for p in &f.pieces {
        if p.log_power != 0.0 && p.scale != 0.0 {
            return Err(Error::Unsupported(format!(
                "|ln(γx)|^{} has no power-log form for γ = {gamma}; evaluate numerically",
                p.log_power
            )));
        }
        pieces.push(Piece {
            lo: p.lo / gamma,
            hi: p.hi / gamma,
            scale: p.scale * math::powf(gamma, p.power),
            ..*p
        });
    }
    FunctionSpec::new(pieces)
}

/// `x^{-(1-α)}` on `[1, ∞)`.
pub fn make_f0(params: &OperatorParams) -> FunctionSpec {
    FunctionSpec::new(alloc::vec![Piece::power(1.0, f64::INFINITY, -(1.0 - params.alpha()))])
        .expect("valid piece")
}

/// `x^{-(1-α)} |ln x|^θ` on `(0, 1)`, `θ > -(1-α)`.
///
/// With that constraint `θ·p_- > -1`, so the function is never in `L_{p_-}`;
/// its image under `U` is infinite everywhere.
pub fn make_f_delta_theta(params: &OperatorParams, theta: f64) -> Result<FunctionSpec> {
    let delta = 1.0 - params.alpha();
    if !theta.is_finite() || theta <= -delta {
        return Err(Error::domain(format!(
            "theta must exceed -(1 - alpha) = {}, got {theta}",
            -delta
        )));
    }
    FunctionSpec::new(alloc::vec![Piece::new(0.0, 1.0, -delta, theta, 1.0)])
}

/// `x^{-(1-α-λ)}` on `[1, ∞)`.
pub fn make_g_plus(params: &OperatorParams) -> FunctionSpec {
    FunctionSpec::new(alloc::vec![Piece::power(
        1.0,
        f64::INFINITY,
        -(1.0 - params.alpha() - params.lambda())
    )])
    .expect("valid piece")
}

/// Indicator of `[lo, hi)`.
pub fn indicator(lo: f64, hi: f64) -> Result<FunctionSpec> {
    FunctionSpec::new(alloc::vec![Piece::power(lo, hi, 0.0)])
}

/// `x^a |ln x|^θ` on all of `(0, ∞)`.
pub fn power_log(a: f64, theta: f64) -> Result<FunctionSpec> {
    FunctionSpec::new(alloc::vec![Piece::new(0.0, f64::INFINITY, a, theta, 1.0)])
}

/// `U[y^a](x) = B(a+1-α, 1-λ) x^{a+1-κ}`: returns the coefficient and the
/// exponent.
#[allow(non_snake_case)]
pub fn closed_form_image_U(params: &OperatorParams, a: f64) -> Result<(f64, f64)> {
    let k = a + 1.0 - params.alpha();
    if !(k > 1e-12) {
        return Err(Error::domain(format!(
            "y^{a} is not integrable against y^-alpha at 0 (need a > alpha - 1 = {})",
            params.alpha() - 1.0
        )));
    }
    Ok((special::beta(k, 1.0 - params.lambda()), a + 1.0 - params.kappa()))
}

/// Tensor product `f(x) = ∏ g_j(x_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductFunctionSpec {
    factors: Vec<FunctionSpec>,
}

impl ProductFunctionSpec {
    pub fn new(factors: Vec<FunctionSpec>) -> Result<Self> {
        if factors.is_empty() || factors.len() > MAX_DIM {
            return Err(Error::domain(format!(
                "product must have between 1 and {MAX_DIM} factors, got {}",
                factors.len()
            )));
        }
        Ok(ProductFunctionSpec { factors })
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[FunctionSpec] {
        &self.factors
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.factors
            .iter()
            .zip(x)
            .map(|(f, &xi)| f.evaluate(xi))
            .product()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{halfline_lp_integral, QuadratureSpec};

    fn params() -> OperatorParams {
        OperatorParams::new(0.3, 0.2, 0.2).unwrap()
    }

    #[test]
    fn catalog_shapes() {
        let f0 = make_f0(&params());
        assert_eq!(f0.pieces(), &[Piece::power(1.0, f64::INFINITY, -0.7)]);
        assert_eq!(f0.declared_infinity_exponent(), Some(-0.7));
        assert_eq!(f0.declared_zero_exponent(), None);

        let g = make_g_plus(&params());
        assert!((g.pieces()[0].power + 0.5).abs() < 1e-15);

        let fd = make_f_delta_theta(&params(), 0.0).unwrap();
        assert_eq!(fd.pieces()[0].hi, 1.0);
        assert!(make_f_delta_theta(&params(), -0.7).is_err());
        assert!(make_f_delta_theta(&params(), -0.8).is_err());
    }

    #[test]
    fn evaluate_examples() {
        let f0 = make_f0(&params());
        assert!((f0.evaluate(2.0) - 2f64.powf(-0.7)).abs() < 1e-15);
        assert_eq!(f0.evaluate(0.5), 0.0);
        let fd = make_f_delta_theta(&params(), 1.0).unwrap();
        let x = (-1.0f64).exp();
        assert!((fd.evaluate(x) - 0.7f64.exp()).abs() < 1e-13);
        assert_eq!(fd.evaluate(3.0), 0.0);
    }

    #[test]
    fn log_pieces_split_at_one() {
        let f = power_log(-0.5, 1.0).unwrap();
        assert_eq!(f.pieces().len(), 2);
        assert_eq!(f.pieces()[0].hi, 1.0);
        assert_eq!(f.breakpoints(), alloc::vec![1.0]);
    }

    #[test]
    fn overlap_and_declared_checks() {
        let a = Piece::power(0.0, 2.0, 0.0);
        let b = Piece::power(1.0, 3.0, 0.0);
        assert!(FunctionSpec::new(alloc::vec![a, b]).is_err());
        let f0 = Piece::power(1.0, f64::INFINITY, -0.7);
        assert!(FunctionSpec::with_declared(alloc::vec![f0], None, Some(-0.7)).is_ok());
        assert!(FunctionSpec::with_declared(alloc::vec![f0], None, Some(-0.5)).is_err());
        assert!(FunctionSpec::new(alloc::vec![Piece::power(2.0, 1.0, 0.0)]).is_err());
    }

    #[test]
    fn dilation_examples() {
        let f = indicator(0.0, 1.0).unwrap();
        let d = dilate(&f, 4.0).unwrap();
        assert_eq!(d.pieces()[0].hi, 0.25);
        assert_eq!(dilate(&f, 1.0).unwrap(), f);

        let f0 = make_f0(&params());
        let d = dilate(&f0, 2.0).unwrap();
        assert_eq!(d.pieces()[0].lo, 0.5);
        assert!((d.pieces()[0].scale - 2f64.powf(-0.7)).abs() < 1e-15);

        let fd = make_f_delta_theta(&params(), 1.0).unwrap();
        assert!(matches!(dilate(&fd, 2.0), Err(Error::Unsupported(_))));
        assert!(dilate(&f, 0.0).is_err());
    }

    #[test]
    fn dilation_pointwise_agreement() {
        let f = FunctionSpec::new(alloc::vec![
            Piece::new(0.0, 0.5, 0.3, 0.0, 2.0),
            Piece::new(0.5, 3.0, -0.2, 0.0, -1.0),
            Piece::new(3.0, f64::INFINITY, -1.5, 0.0, 0.5),
        ])
        .unwrap();
        for gamma in [0.5, 2.0, 10.0] {
            let d = dilate(&f, gamma).unwrap();
            for i in 0..100 {
                let x = 10f64.powf(-2.0 + 4.0 * (i as f64 + 0.37) / 100.0);
                let want = f.evaluate(gamma * x);
                let got = d.evaluate(x);
                assert!((got - want).abs() <= 1e-12 * want.abs().max(1e-300), "γ={gamma} x={x}");
            }
        }
    }

    #[test]
    fn dilation_norm_law() {
        let spec = QuadratureSpec::default();
        let catalog = [
            make_f0(&params()),
            make_g_plus(&params()),
            indicator(0.0, 1.0).unwrap(),
            FunctionSpec::new(alloc::vec![Piece::power(0.0, 2.0, -0.2)]).unwrap(),
        ];
        for f in &catalog {
            for p in [2.5, 3.0, 4.0] {
                let base = halfline_lp_integral(f, p, &spec).unwrap().value.powf(1.0 / p);
                for gamma in [0.5, 2.0, 10.0] {
                    let d = dilate(f, gamma).unwrap();
                    let got = halfline_lp_integral(&d, p, &spec).unwrap().value.powf(1.0 / p);
                    let want = gamma.powf(-1.0 / p) * base;
                    assert!((got - want).abs() <= 1e-8 * want, "p={p} γ={gamma}");
                }
            }
        }
    }

    #[test]
    fn closed_form_examples() {
        let (c, e) = closed_form_image_U(&params(), 0.0).unwrap();
        assert!((c - 1.705_245_626_063_331_4).abs() < 1e-13);
        assert!((e - 0.3).abs() < 1e-15);
        let (c, e) = closed_form_image_U(&params(), 1.0).unwrap();
        assert!((c - 0.795_781_292_162_887_93).abs() < 1e-13, "{c}");
        assert!((e - 1.3).abs() < 1e-15);
        assert!(closed_form_image_U(&params(), -0.7).is_err());
    }

    #[test]
    fn finite_ranges() {
        let p = params();
        let r = make_f0(&p).lp_finite_range().unwrap();
        assert!((r.lo - 1.0 / 0.7).abs() < 1e-15 && !r.lo_closed && r.hi == f64::INFINITY);
        assert!(make_f0(&p).screen_lp(1.0 / 0.7).is_err());
        assert!(make_f0(&p).screen_lp(1.5).is_ok());

        // never in L_{p_-}: the log factor cannot rescue the critical power
        let fd = make_f_delta_theta(&p, 0.0).unwrap();
        let r = fd.lp_finite_range().unwrap();
        assert!(!r.contains(1.0 / 0.7) && r.contains(1.4));

        // x^{-0.7} |ln x|^{-1} on (0,1): critical power, log rescues at p_- but the
        // log singularity at 1 caps p below 1
        let f = FunctionSpec::new(alloc::vec![Piece::new(0.0, 1.0, -0.7, -1.0, 1.0)]).unwrap();
        assert!(f.lp_finite_range().is_none());

        assert!(power_log(0.0, 0.0).unwrap().lp_finite_range().is_none());
        let ind = indicator(0.0, 1.0).unwrap().lp_finite_range().unwrap();
        assert!(ind.contains(1.0) && ind.contains(1e6));
    }
}
