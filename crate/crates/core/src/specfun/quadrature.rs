use std::f64::consts::PI;

use crate::{Error, Result};

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub order: usize,
}

impl QuadratureRule {
    /// Integrates `f` over `[a, b]` with the affine-mapped rule.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let mut sum = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            sum += w * f(mid + half * x);
        }
        sum * half
    }
}

/// Legendre polynomial `P_n(x)` and its derivative by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Newton-refined Gauss–Legendre nodes and weights, `1 <= n <= 4096`.
pub fn gauss_legendre(n: usize) -> Result<QuadratureRule> {
    if n == 0 || n > 4096 {
        return Err(Error::Length { len: n, reason: "Gauss-Legendre order must be in 1..=4096" });
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        // Central node is exactly zero; recompute its weight there.
        let c = n / 2;
        nodes[c] = 0.0;
        let (_, d) = legendre_center_derivative(n);
        weights[c] = 2.0 / (d * d);
    }
    Ok(QuadratureRule { nodes, weights, order: n })
}

fn legendre_center_derivative(n: usize) -> (f64, f64) {
    // P_n'(0) via P_n'(x) = n (P_{n-1}(x) - x P_n(x)) / (1 - x^2) at x = 0.
    let (mut p0, mut p1) = (1.0, 0.0);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = (-(kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * p0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_rule() {
        let r = gauss_legendre(2).unwrap();
        let s = 1.0 / 3.0_f64.sqrt();
        assert!((r.nodes[0] + s).abs() < 1e-15 && (r.nodes[1] - s).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-15 && (r.weights[1] - 1.0).abs() < 1e-15);
        let cube = r.integrate(0.0, 1.0, |x| x * x * x);
        assert!((cube - 0.25).abs() < 1e-15);
    }

    #[test]
    fn sine_integral() {
        let r = gauss_legendre(32).unwrap();
        assert!((r.integrate(0.0, PI, f64::sin) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn odd_orders_and_degree_exactness() {
        for n in [1, 3, 5, 7, 17, 64, 255] {
            let r = gauss_legendre(n).unwrap();
            let total: f64 = r.weights.iter().sum();
            assert!((total - 2.0).abs() < 1e-13, "n = {n}");
            assert!(r.weights.iter().all(|&w| w > 0.0));
            let deg = 2 * n - 1;
            let exact = 1.0 / (deg as f64 + 1.0);
            let got = r.integrate(0.0, 1.0, |x| x.powi(deg as i32));
            assert!((got - exact).abs() < 1e-13, "n = {n}: {got} vs {exact}");
        }
    }

    #[test]
    fn rejects_bad_orders() {
        assert!(gauss_legendre(0).is_err());
        assert!(gauss_legendre(4097).is_err());
        assert!(gauss_legendre(4096).is_ok());
    }

    #[test]
    fn half_circle_convergence() {
        let exact = PI / 2.0;
        let mut prev = f64::INFINITY;
        // Doubling the order reduces the error by >= 1e2 until it bottoms out.
        for n in [4, 8, 16, 32] {
            let r = gauss_legendre(n).unwrap();
            // sqrt(1 - x^2) with x = sin(t): analytic after substitution.
            let err = (r.integrate(-PI / 2.0, PI / 2.0, |t| t.cos() * t.cos()) - exact).abs();
            assert!(err < prev / 1e2 || err < 1e-14, "n = {n}: {err} vs {prev}");
            prev = err;
        }
    }
}
