//! Double-exponential (tanh-sinh / exp-sinh) quadrature.
//!
//! Used for outer integrals on the half-line where the integrand has
//! endpoint singularities or very slow exponential decay in the logarithmic
//! variable. Each level halves the step; the estimate of the error is the
//! difference between the last two levels.

use super::{QuadResult, QuadratureSpec};
use crate::math;

const T_MAX: f64 = 6.5;
const MAX_LEVEL: u32 = 12;
const MIN_LEVEL: u32 = 3;

/// Walk `t = t0, t0 ± step, …` in one direction, summing `term(t)` until the
/// terms are negligible or `t` leaves the usable range.
fn walk(
    start: f64,
    step: f64,
    dir: f64,
    scale_hint: f64,
    evals: &mut usize,
    term: &mut impl FnMut(f64) -> Option<f64>,
) -> f64 {
    let mut sum = 0.0;
    let mut small = 0;
    let mut last = f64::INFINITY;
    let mut t = start;
    while math::abs(t) <= T_MAX {
        *evals += 1;
        match term(t) {
            None => break,
            Some(v) => {
                sum += v;
                // negligible and still shrinking: a peak further out is not cut off
                let shrinking = math::abs(v) <= last;
                last = math::abs(v);
                if shrinking && math::abs(t) > 1.0 && math::abs(v) <= 1e-19 * (math::abs(sum) + scale_hint) {
                    small += 1;
                    if small >= 3 {
                        break;
                    }
                } else {
                    small = 0;
                }
            }
        }
        t += dir * step;
    }
    sum
}

fn refine(spec: &QuadratureSpec, mut term: impl FnMut(f64) -> Option<f64>) -> QuadResult {
    let mut evals = 0usize;
    let mut h = 0.5;
    let center = term(0.0).unwrap_or(0.0);
    evals += 1;
    let mut raw = center
        + walk(h, h, 1.0, math::abs(center), &mut evals, &mut term)
        + walk(-h, h, -1.0, math::abs(center), &mut evals, &mut term);
    let mut estimate = h * raw;
    let mut prev = estimate;
    let mut err = f64::INFINITY;
    for level in 1..=MAX_LEVEL {
        h *= 0.5;
        // new abscissae are the odd multiples of the halved step
        let hint = math::abs(raw);
        raw += walk(h, 2.0 * h, 1.0, hint, &mut evals, &mut term)
            + walk(-h, 2.0 * h, -1.0, hint, &mut evals, &mut term);
        estimate = h * raw;
        err = math::abs(estimate - prev);
        prev = estimate;
        let tol = (spec.rel_tol * math::abs(estimate)).max(spec.abs_tol);
        if level >= MIN_LEVEL && err <= tol {
            return QuadResult {
                value: estimate,
                error_estimate: err,
                nodes_used: evals,
                converged: true,
            };
        }
        if evals > spec.max_nodes {
            break;
        }
    }
    QuadResult {
        value: estimate,
        error_estimate: err,
        nodes_used: evals,
        converged: false,
    }
}

/// `∫_a^b f` with tanh-sinh. `f(x, x - a, b - x)` receives both endpoint
/// distances computed without cancellation.
pub fn tanh_sinh(
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
    mut f: impl FnMut(f64, f64, f64) -> f64,
) -> QuadResult {
    let len = b - a;
    if !(len > 0.0) {
        return QuadResult::exact(0.0);
    }
    refine(spec, |t| {
        let u = math::FRAC_PI_2 * math::sinh(t);
        if math::abs(u) > 350.0 {
            return None;
        }
        let eu = math::exp(u);
        let emu = 1.0 / eu;
        // x - a = len / (1 + e^{-2u}),  b - x = len / (1 + e^{2u})
        let dl = len / (1.0 + emu * emu);
        let dr = len / (1.0 + eu * eu);
        if dl == 0.0 || dr == 0.0 {
            return None;
        }
        let x = if t < 0.0 { a + dl } else { b - dr };
        let ch = 0.5 * (eu + emu);
        let w = len * 0.5 * math::FRAC_PI_2 * math::cosh(t) / (ch * ch);
        let v = f(x, dl, dr);
        Some(if v == 0.0 { 0.0 } else { w * v })
    })
}

/// `∫_a^∞ f` with exp-sinh; `f(x, x - a)`.
pub fn exp_sinh_right(a: f64, spec: &QuadratureSpec, mut f: impl FnMut(f64, f64) -> f64) -> QuadResult {
    refine(spec, |t| {
        let u = math::FRAC_PI_2 * math::sinh(t);
        if u > 700.0 || u < -700.0 {
            return None;
        }
        let d = math::exp(u);
        if d == 0.0 {
            return None;
        }
        let w = math::FRAC_PI_2 * math::cosh(t) * d;
        let v = f(a + d, d);
        Some(if v == 0.0 { 0.0 } else { w * v })
    })
}

/// `∫_{-∞}^a f` with exp-sinh; `f(x, a - x)`.
pub fn exp_sinh_left(a: f64, spec: &QuadratureSpec, mut f: impl FnMut(f64, f64) -> f64) -> QuadResult {
    exp_sinh_right(0.0, spec, |d, _| f(a - d, d))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn tanh_sinh_polynomial_and_singular() {
        let r = tanh_sinh(0.0, 2.0, &spec(), |x, _, _| x * x);
        assert!(r.converged);
        assert!((r.value - 8.0 / 3.0).abs() < 1e-13);

        // ∫_0^1 x^{-0.9} dx = 10
        let r = tanh_sinh(0.0, 1.0, &spec(), |_, dl, _| dl.powf(-0.9));
        assert!((r.value - 10.0).abs() < 1e-9, "{r:?}");

        // ∫_0^1 (1-x)^{-0.5} ln(1/x)... use the right distance
        let r = tanh_sinh(0.0, 1.0, &spec(), |_, _, dr| dr.powf(-0.5));
        assert!((r.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn exp_sinh_slow_decay() {
        // ∫_0^∞ e^{-eps s} s^{2.5} ds = Γ(3.5) / eps^{3.5}
        for eps in [1.0, 1e-2, 1e-4] {
            let r = exp_sinh_right(0.0, &spec(), |s, _| (-eps * s).exp() * s.powf(2.5));
            let exact = crate::special::gamma(3.5) / eps.powf(3.5);
            assert!(r.converged, "eps={eps}: {r:?}");
            assert!((r.value - exact).abs() <= 1e-9 * exact, "eps={eps}: {} vs {exact}", r.value);
        }
    }

    #[test]
    fn exp_sinh_left_mirror() {
        // ∫_{-∞}^0 e^{2s} ds = 1/2
        let r = exp_sinh_left(0.0, &spec(), |s, _| (2.0 * s).exp());
        assert!((r.value - 0.5).abs() < 1e-12);
    }
}
