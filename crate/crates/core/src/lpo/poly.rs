//! Polynomial recovery and maximization on `[0, 1]`.
//!
//! Polynomials are recovered from samples at Chebyshev nodes, which is the
//! Lagrange interpolant through those nodes expressed in the shifted
//! Chebyshev basis `T_k(2α − 1)`. Evaluation uses Clenshaw's recurrence;
//! monomial coefficients are produced only for reporting.

use std::f64::consts::PI;

/// First-kind Chebyshev nodes mapped to `(0, 1)`, ascending.
pub fn chebyshev_nodes(n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|j| 0.5 * (1.0 + ((2 * j + 1) as f64 * PI / (2 * n) as f64).cos()))
        .collect();
    v.reverse();
    v
}

/// Barycentric Lagrange evaluation through first-kind Chebyshev nodes (as
/// produced by [`chebyshev_nodes`]).
pub fn lagrange_eval(nodes: &[f64], values: &[f64], x: f64) -> f64 {
    let n = nodes.len();
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..n {
        let diff = x - nodes[j];
        if diff == 0.0 {
            return values[j];
        }
        // weights for first-kind nodes: (-1)^j sin((2j+1)π/(2n)); the
        // ascending order flips the sign pattern uniformly, which cancels.
        let jj = n - 1 - j;
        let sign = if jj.is_multiple_of(2) { 1.0 } else { -1.0 };
        let w = sign * ((2 * jj + 1) as f64 * PI / (2 * n) as f64).sin();
        num += w * values[j] / diff;
        den += w / diff;
    }
    num / den
}

/// Series `Σ c_k T_k(2α − 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChebSeries {
    coeffs: Vec<f64>,
}

impl ChebSeries {
    /// Interpolates values sampled at `chebyshev_nodes(values.len())`.
    pub fn interpolate(values: &[f64]) -> Self {
        let n = values.len();
        // values[j] sits at ascending node j, i.e. at cos angle index n-1-j
        let mut coeffs = vec![0.0; n];
        for (k, c) in coeffs.iter_mut().enumerate() {
            let mut s = 0.0;
            for (j, v) in values.iter().enumerate() {
                let jj = n - 1 - j;
                s += v * (k as f64 * (2 * jj + 1) as f64 * PI / (2 * n) as f64).cos();
            }
            *c = 2.0 * s / n as f64;
        }
        if let Some(c0) = coeffs.first_mut() {
            *c0 *= 0.5;
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, alpha: f64) -> f64 {
        let t = 2.0 * alpha - 1.0;
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        self.coeffs.first().copied().unwrap_or(0.0) + t * b1 - b2
    }

    /// Drops trailing coefficients below `rel_tol · max(1, max |c|)`.
    pub fn trimmed(&self, rel_tol: f64) -> Self {
        let scale = self.coeffs.iter().fold(1.0f64, |m, c| m.max(c.abs()));
        let mut coeffs = self.coeffs.clone();
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.abs() < rel_tol * scale) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Monomial coefficients in `α`, lowest order first.
    pub fn to_monomial(&self) -> Vec<f64> {
        let n = self.coeffs.len();
        let mut out = vec![0.0; n.max(1)];
        let mut prev: Vec<f64> = vec![1.0];
        let mut cur: Vec<f64> = vec![-1.0, 2.0];
        for (k, &c) in self.coeffs.iter().enumerate() {
            let basis = match k {
                0 => &prev,
                1 => &cur,
                _ => {
                    // T_{k} = (4α − 2)·T_{k−1} − T_{k−2}
                    let mut next = vec![0.0; cur.len() + 1];
                    for (i, &a) in cur.iter().enumerate() {
                        next[i] -= 2.0 * a;
                        next[i + 1] += 4.0 * a;
                    }
                    for (i, &a) in prev.iter().enumerate() {
                        next[i] -= a;
                    }
                    prev = std::mem::replace(&mut cur, next);
                    &cur
                }
            };
            for (i, &a) in basis.iter().enumerate() {
                out[i] += c * a;
            }
        }
        out
    }
}

/// Horner evaluation of lowest-order-first coefficients.
pub fn eval_monomial(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Divides a lowest-order-first polynomial by `(1 − α)`; returns the
/// quotient and the remainder (the value at `α = 1`).
pub fn deflate_monomial(coeffs: &[f64]) -> (Vec<f64>, f64) {
    // p(α) = (1 − α) q(α) + r with r = p(1); q_k = −Σ_{i>k} p_i... build by
    // synthetic division by (α − 1) and flip the sign.
    let n = coeffs.len();
    if n <= 1 {
        return (Vec::new(), coeffs.first().copied().unwrap_or(0.0));
    }
    let mut q = vec![0.0; n - 1];
    let mut acc = 0.0;
    for i in (1..n).rev() {
        acc += coeffs[i];
        q[i - 1] = -acc;
    }
    let rem = acc + coeffs[0];
    (q, rem)
}

/// Result of a bracketed maximization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Maximum {
    pub argmax: f64,
    pub value: f64,
}

/// Maximizes `g` on `[0, 1]`: dense grid, then golden-section refinement of
/// the best cell. Among grid points within `tie_tol` of the best value the
/// smallest `α` wins.
pub fn maximize_unit_interval(
    g: impl Fn(f64) -> f64,
    grid: usize,
    tol: f64,
    tie_tol: f64,
) -> Maximum {
    let values: Vec<f64> = (0..=grid).map(|i| g(i as f64 / grid as f64)).collect();
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let idx = values
        .iter()
        .position(|&v| v >= best - tie_tol)
        .unwrap_or(0);
    let at = |i: usize| i as f64 / grid as f64;
    let grid_max = Maximum {
        argmax: at(idx),
        value: values[idx],
    };
    if idx == grid {
        return grid_max;
    }
    let lo = at(idx.saturating_sub(1));
    let hi = at((idx + 1).min(grid));
    let refined = golden_section_max(&g, lo, hi, tol);
    if refined.value > grid_max.value + tie_tol {
        refined
    } else {
        grid_max
    }
}

/// Golden-section search for a maximum of a unimodal function on `[lo, hi]`.
pub fn golden_section_max(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> Maximum {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = g(x1);
    let mut f2 = g(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = g(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = g(x1);
        }
    }
    let argmax = 0.5 * (lo + hi);
    Maximum {
        argmax,
        value: g(argmax),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(p: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
        let nodes = chebyshev_nodes(n);
        let vals = nodes.iter().map(|&a| eval_monomial(p, a)).collect();
        (nodes, vals)
    }

    #[test]
    fn nodes_are_interior_and_ascending() {
        let nodes = chebyshev_nodes(12);
        assert!(nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(nodes[0] > 0.0 && nodes[11] < 1.0);
    }

    #[test]
    fn recovers_polynomial_exactly() {
        let p = [0.75, -0.25, 0.5, -1.0, 0.125];
        let (nodes, vals) = sample(&p, 16);
        let s = ChebSeries::interpolate(&vals).trimmed(1e-13);
        assert_eq!(s.degree(), 4);
        let mono = s.to_monomial();
        for (a, b) in mono.iter().zip(p) {
            assert!((a - b).abs() < 1e-12, "{mono:?}");
        }
        for i in 0..=50 {
            let x = i as f64 / 50.0;
            let exact = eval_monomial(&p, x);
            assert!((s.eval(x) - exact).abs() < 1e-13);
            assert!((lagrange_eval(&nodes, &vals, x) - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn deflation_by_one_minus_alpha() {
        // (1 − α)(2 + 3α) = 2 + α − 3α²
        let (q, r) = deflate_monomial(&[2.0, 1.0, -3.0]);
        assert!(r.abs() < 1e-15);
        assert_eq!(q, vec![2.0, 3.0]);
        let (_, r) = deflate_monomial(&[1.0, 1.0]);
        assert_eq!(r, 2.0);
    }

    #[test]
    fn maximizer_finds_interior_peak() {
        let g = |a: f64| (0.75 + a + 0.5 * a * a) / (1.0 + a + a * a);
        let m = maximize_unit_interval(g, 10_000, 1e-10, 1e-12);
        assert!((m.argmax - (3f64.sqrt() - 1.0) / 2.0).abs() < 1e-6);
        assert!((m.value - (3.0 + 3f64.sqrt()) / 6.0).abs() < 1e-12);
    }

    #[test]
    fn maximizer_prefers_smallest_alpha_on_plateau() {
        let m = maximize_unit_interval(|_| 2.0 / 3.0, 1000, 1e-10, 1e-12);
        assert_eq!(m.argmax, 0.0);
        let m = maximize_unit_interval(|a| a, 1000, 1e-10, 1e-12);
        assert_eq!(m.argmax, 1.0);
    }
}
