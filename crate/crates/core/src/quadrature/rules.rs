//! Gaussian rules from the three-term recurrence (Golub–Welsch).
//!
//! The Jacobi matrix is diagonalised with implicit-shift QL, tracking only
//! the first component of every eigenvector, which is all the weights need.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::special;

/// Nodes and weights of an `n`-point rule.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ w_i g(x_i)`.
    pub fn apply(&self, mut g: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * g(x))
            .sum()
    }
}

/// QL with implicit shifts on a symmetric tridiagonal matrix.
///
/// `d` holds the diagonal, `e[i]` couples `d[i]` and `d[i+1]` (`e[n-1]` is
/// ignored). On return `d` holds eigenvalues and `z` the first components of
/// the eigenvectors (it must enter as the first row of the identity).
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], z: &mut [f64]) -> bool {
    let n = d.len();
    if n == 0 {
        return true;
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = math::abs(d[m]) + math::abs(d[m + 1]);
                if math::abs(e[m]) <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return false;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = math::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r } else { -r });
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = math::hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let fz = z[i + 1];
                z[i + 1] = s * z[i] + c * fz;
                z[i] = c * z[i] - s * fz;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    true
}

/// Rule from monic recurrence coefficients `a_k` (diagonal) and `b_k`
/// (`b_k = β_k`, squared off-diagonal, `k ≥ 1`) with total mass `mu0`.
fn golub_welsch(diag: Vec<f64>, offdiag_sq: &[f64], mu0: f64) -> GaussRule {
    let n = diag.len();
    let mut d = diag;
    let mut e: Vec<f64> = offdiag_sq.iter().map(|b| math::sqrt(*b)).collect();
    e.resize(n, 0.0);
    let mut z = vec![0.0; n];
    z[0] = 1.0;
    let ok = tridiagonal_ql(&mut d, &mut e, &mut z);
    debug_assert!(ok, "tridiagonal QL did not converge");
    let mut pairs: Vec<(f64, f64)> = d
        .into_iter()
        .zip(z)
        .map(|(x, v)| (x, mu0 * v * v))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (nodes, weights) = pairs.into_iter().unzip();
    GaussRule { nodes, weights }
}

/// Gauss–Jacobi rule on `(0, 1)` for the weight `z^a (1-z)^b`, `a, b > -1`.
pub fn jacobi_unit(n: usize, a: f64, b: f64) -> GaussRule {
    assert!(n >= 1 && a > -1.0 && b > -1.0);
    // Recurrence on [-1, 1] for (1-x)^b (1+x)^a, then z = (1+x)/2.
    let (ja, jb) = (b, a);
    let s = ja + jb;
    let mut diag = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n.saturating_sub(1));
    for k in 0..n {
        let kf = k as f64;
        let ak = if k == 0 {
            (jb - ja) / (s + 2.0)
        } else {
            (jb * jb - ja * ja) / ((2.0 * kf + s) * (2.0 * kf + s + 2.0))
        };
        diag.push(0.5 * (1.0 + ak));
        if k >= 1 {
            let bk = if k == 1 {
                4.0 * (1.0 + ja) * (1.0 + jb) / ((2.0 + s) * (2.0 + s) * (3.0 + s))
            } else {
                let t = 2.0 * kf + s;
                4.0 * kf * (kf + ja) * (kf + jb) * (kf + s) / (t * t * (t + 1.0) * (t - 1.0))
            };
            // scaling x -> (1+x)/2 multiplies the off-diagonal by 1/2
            off.push(0.25 * bk);
        }
    }
    let mu0 = special::beta(a + 1.0, b + 1.0);
    golub_welsch(diag, &off, mu0)
}

/// Gauss–Legendre rule on `(0, 1)`.
pub fn legendre_unit(n: usize) -> GaussRule {
    jacobi_unit(n, 0.0, 0.0)
}

/// Gauss–Laguerre rule on `(0, ∞)` for the weight `e^{-t}`.
pub fn laguerre(n: usize) -> GaussRule {
    assert!(n >= 1);
    let diag = (0..n).map(|k| 2.0 * k as f64 + 1.0).collect();
    let off: Vec<f64> = (1..n).map(|k| (k * k) as f64).collect();
    golub_welsch(diag, &off, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn legendre_small_rule_matches_closed_form() {
        let r = legendre_unit(2);
        let x = 0.5 / 3f64.sqrt();
        assert!((r.nodes[0] - (0.5 - x)).abs() < 1e-15);
        assert!((r.nodes[1] - (0.5 + x)).abs() < 1e-15);
        assert!((r.weights[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn jacobi_moments_exact_up_to_degree_2n_minus_1() {
        for &(a, b) in &[(-0.3, -0.2), (-0.5, -0.5), (-0.9, 0.4), (0.0, -0.75), (0.6, 0.0)] {
            for n in [3usize, 8, 17, 40] {
                let r = jacobi_unit(n, a, b);
                for k in 0..(2 * n) {
                    let exact = special::beta(a + 1.0 + k as f64, b + 1.0);
                    let got = r.apply(|z| math::powi(z, k as i32));
                    assert!(rel(got, exact) < 1e-12, "a={a} b={b} n={n} k={k}: {got} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn laguerre_moments() {
        let r = laguerre(12);
        let mut fact = 1.0;
        for k in 0..24 {
            if k > 0 {
                fact *= k as f64;
            }
            let got = r.apply(|t| math::powi(t, k));
            assert!(rel(got, fact) < 1e-11, "k={k}: {got} vs {fact}");
        }
    }

    #[test]
    fn large_rules_are_sane() {
        let r = jacobi_unit(1024, -0.2, -0.7);
        assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(r.nodes[0] > 0.0 && *r.nodes.last().unwrap() < 1.0);
        let mass: f64 = r.weights.iter().sum();
        assert!(rel(mass, special::beta(0.8, 0.3)) < 1e-12);
    }
}
