//! Inner integrals of `U` and `W` for one power–log piece.
//!
//! With `x = e^s` and `y = x e^{∓u}` both operators reduce, piece by piece,
//! to
//!
//! ```text
//! ∫_0^W e^{-r t} (1 - e^{-k(t)})^{-λ} |ℓ(t)|^θ h(t) dt
//! ```
//!
//! where `k(t)` and `ℓ(t)` are linear (the kernel argument and `ln y`). Both
//! factors can vanish at an end of the range or just outside it; the
//! segmentation below puts exact zeros into Gauss–Jacobi weights and grades
//! the mesh towards near ones.

use alloc::vec::Vec;

use crate::math;
use crate::quadrature::{integrate_segments, LaguerreTail, QuadResult, QuadratureSpec, RuleCache, SegPoint, Segment};

/// Past this value of `r·t` the exponential factor is below `e^{-800}`.
const NEGLIGIBLE_RATE_SPAN: f64 = 800.0;
/// `r·t` at which an infinite range switches to a Laguerre tail.
const TAIL_RATE_SPAN: f64 = 40.0;

/// A linear factor argument given by its values at both ends, so that points
/// close to either end are evaluated from that end without cancellation.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Linear {
    pub start: f64,
    pub end: f64,
    /// `+1` if the argument grows with `t`, `-1` if it shrinks.
    pub dir: f64,
}

impl Linear {
    #[inline]
    fn at(&self, t: f64, to_end: f64) -> f64 {
        if t <= to_end {
            self.start + self.dir * t
        } else {
            self.end - self.dir * to_end
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct KernelIntegral {
    pub rate: f64,
    pub width: f64,
    pub lambda: f64,
    /// Kernel argument, non-negative on the range.
    pub kern: Linear,
    pub theta: f64,
    /// `ln y`.
    pub log: Linear,
}

/// What sits at one end of the range: an exact zero of a factor (absorbed
/// into the rule's weight with exponent `exp`) and/or a zero just outside at
/// distance `near`.
#[derive(Clone, Copy)]
struct End {
    exp: f64,
    near: f64,
}

impl End {
    const PLAIN: End = End {
        exp: 0.0,
        near: f64::INFINITY,
    };

    fn is_plain(&self) -> bool {
        self.exp == 0.0 && !(self.near < 1.0)
    }
}

impl KernelIntegral {
    fn integrand(&self, t: f64, to_end: f64, h: &mut dyn FnMut(f64) -> f64) -> f64 {
        let arg = self.kern.at(t, to_end);
        let mut v = math::exp(-self.rate * t);
        if v == 0.0 {
            return 0.0;
        }
        if self.lambda != 0.0 {
            v *= math::powf(-math::expm1(-arg), -self.lambda);
        }
        if self.theta != 0.0 {
            v *= math::abs_pow(self.log.at(t, to_end), self.theta);
        }
        v * h(t)
    }

    fn ends(&self, width: f64, log_interior: Option<f64>) -> (End, End) {
        let mut left = End::PLAIN;
        let mut right = End::PLAIN;
        let has_right = width == self.width && width.is_finite();
        let mut mark = |start: f64, end: f64, exp: f64| {
            if start == 0.0 {
                left.exp += exp;
            } else if end == 0.0 && has_right {
                right.exp += exp;
            } else if math::abs(start) <= math::abs(end) {
                left.near = left.near.min(math::abs(start));
            } else if has_right {
                right.near = right.near.min(math::abs(end));
            }
        };
        if self.lambda != 0.0 {
            mark(self.kern.start, self.kern.end, -self.lambda);
        }
        if self.theta != 0.0 && log_interior.is_none() {
            mark(self.log.start, self.log.end, self.theta);
        }
        (left, right)
    }

    /// Integrate, multiplying the integrand by `h(t)`.
    pub fn integrate(
        &self,
        cache: &RuleCache,
        spec: &QuadratureSpec,
        h: &mut dyn FnMut(f64) -> f64,
    ) -> QuadResult {
        if !(self.width > 0.0) {
            return QuadResult::exact(0.0);
        }
        // Beyond r·t = 800 nothing is representable; drop that part (and any
        // feature of the far end with it).
        let mut width = self.width;
        if self.rate > 0.0 && self.rate * width > NEGLIGIBLE_RATE_SPAN * (1.0 + 1e-9) {
            width = NEGLIGIBLE_RATE_SPAN / self.rate;
            let mut cut = *self;
            cut.width = width;
            cut.kern.end = cut.kern.start + cut.kern.dir * width;
            cut.log.end = cut.log.start + cut.log.dir * width;
            return cut.integrate(cache, spec, h);
        }
        let infinite = width == f64::INFINITY;
        if infinite && !(self.rate > 0.0) {
            return QuadResult {
                value: f64::INFINITY,
                error_estimate: f64::INFINITY,
                nodes_used: 0,
                converged: false,
            };
        }

        let log_interior = if self.theta != 0.0 {
            let t = -self.log.start * self.log.dir;
            (t > 0.0 && t < width && self.log.start != 0.0 && self.log.end != 0.0).then_some(t)
        } else {
            None
        };
        let (left, right) = self.ends(width, log_interior);

        let limit = if infinite {
            (TAIL_RATE_SPAN / self.rate).max(64.0)
        } else {
            width
        };
        let mut breaks: Vec<f64> = Vec::new();
        push_graded(&mut breaks, 0.0, 1.0, left, limit);
        if !infinite && !right.is_plain() {
            push_graded(&mut breaks, width, -1.0, right, limit);
        }
        if let Some(t) = log_interior {
            breaks.push(t);
            push_graded(&mut breaks, t, 1.0, End::PLAIN, limit);
            push_graded(&mut breaks, t, -1.0, End::PLAIN, limit);
        }
        breaks.retain(|&b| b > 0.0 && b < limit);
        breaks.push(0.0);
        breaks.push(limit);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|b, a| *b - *a <= 1e-14 * a.abs().max(1e-300));

        let mut segs: Vec<Segment> = Vec::with_capacity(breaks.len());
        for w in breaks.windows(2) {
            let (c, d) = (w[0], w[1]);
            let mut left_exp = if c == 0.0 { left.exp } else { 0.0 };
            let mut right_exp = if d == width && !infinite { right.exp } else { 0.0 };
            if let Some(t) = log_interior {
                if c == t {
                    left_exp += self.theta;
                }
                if d == t {
                    right_exp += self.theta;
                }
            }
            segs.push(Segment {
                c,
                d,
                left_exp,
                right_exp,
            });
        }
        let tail = infinite.then_some(LaguerreTail {
            start: limit,
            rate: self.rate,
        });
        let mut f = |pt: &SegPoint| {
            let to_end = if infinite {
                f64::INFINITY
            } else {
                (width - pt.d) + pt.dr
            };
            // evaluate near the log zero from its own side
            if let Some(ti) = log_interior {
                let dist = if pt.d == ti { pt.dr } else if pt.c == ti { pt.dl } else { f64::NAN };
                if dist.is_finite() {
                    let mut v = math::exp(-self.rate * pt.v);
                    if self.lambda != 0.0 {
                        v *= math::powf(-math::expm1(-self.kern.at(pt.v, to_end)), -self.lambda);
                    }
                    return v * math::abs_pow(dist, self.theta) * h(pt.v);
                }
            }
            self.integrand(pt.v, to_end, h)
        };
        integrate_segments(cache, &segs, tail, spec, &mut f)
    }
}

/// Breaks moving away from `origin` in direction `dir`: a graded run
/// `δ(2^j - 1)` towards a near zero, then `1, 2, 4, …` up to `limit`.
fn push_graded(out: &mut Vec<f64>, origin: f64, dir: f64, end: End, limit: f64) {
    if end.near < 1.0 {
        let delta = end.near;
        let mut step = delta;
        let mut pos = delta;
        while pos < 1.0 {
            out.push(origin + dir * pos);
            step *= 2.0;
            pos += step;
        }
    }
    let mut pos = 1.0;
    while pos < limit {
        out.push(origin + dir * pos);
        pos *= 2.0;
    }
}
