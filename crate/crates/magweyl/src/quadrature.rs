//! Gauss–Legendre rules on [0, 1] and a collapsed tensor rule on the unit simplex.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights mapped to [0, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "quadrature order must be positive");
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let n = order as f64;
        for i in 0..order.div_ceil(2) {
            // Chebyshev guess, then Newton on P_n
            let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(order, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = 0.5 * (1.0 - x);
            nodes[order - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[order - 1 - i] = 0.5 * w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&s, &w)| w * f(s))
            .sum()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Points (s, t) with s, t ≥ 0, s + t ≤ 1 and weights summing to 1/2.
///
/// Collapsed square: s = u, t = (1 − u) v, Jacobian 1 − u.
#[derive(Debug, Clone)]
pub struct SimplexRule {
    pub points: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
}

impl SimplexRule {
    pub fn new(order: usize) -> Self {
        let gl = GaussLegendre::new(order);
        let mut points = Vec::with_capacity(order * order);
        let mut weights = Vec::with_capacity(order * order);
        for (&u, &wu) in gl.nodes.iter().zip(&gl.weights) {
            for (&v, &wv) in gl.nodes.iter().zip(&gl.weights) {
                points.push((u, (1.0 - u) * v));
                weights.push(wu * wv * (1.0 - u));
            }
        }
        SimplexRule { points, weights }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(8);
        for k in 0..16 {
            let exact = 1.0 / (k as f64 + 1.0);
            let got = gl.integrate(|s| s.powi(k));
            assert!((got - exact).abs() < 1e-14, "degree {k}: {got} vs {exact}");
        }
        let w: f64 = GaussLegendre::new(16).weights.iter().sum();
        assert!((w - 1.0).abs() < 1e-14);
    }

    #[test]
    fn simplex_rule_moments() {
        let rule = SimplexRule::new(8);
        // ∫ s^a t^b over the simplex = a! b! / (a + b + 2)!
        let fact = |n: u32| (1..=n).map(|k| k as f64).product::<f64>();
        for a in 0..6u32 {
            for b in 0..6u32 {
                let exact = fact(a) * fact(b) / fact(a + b + 2);
                let got: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(&(s, t), &w)| w * s.powi(a as i32) * t.powi(b as i32))
                    .sum();
                assert!((got - exact).abs() < 1e-14);
            }
        }
    }
}
