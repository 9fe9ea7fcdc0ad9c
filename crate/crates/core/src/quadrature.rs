//! Gauss–Legendre rules.

use std::f64::consts::PI;

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
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
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// `log(sum exp(x_i) w_i)` for positive weights.
pub fn log_sum_exp(terms: &[(f64, f64)]) -> f64 {
    let max = terms
        .iter()
        .filter(|(_, w)| *w > 0.0)
        .map(|(x, _)| *x)
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = terms
        .iter()
        .filter(|(_, w)| *w > 0.0)
        .map(|(x, w)| w * (x - max).exp())
        .sum();
    max + sum.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 16, 64] {
            let gl = GaussLegendre::new(n);
            assert_relative_eq!(gl.weights.iter().sum::<f64>(), 2.0, max_relative = 1e-13);
        }
    }

    #[test]
    fn exact_for_polynomials() {
        let gl = GaussLegendre::new(16);
        // degree 31 is the highest exact degree
        let v = gl.integrate(0.0, 1.0, |x| x.powi(31));
        assert_relative_eq!(v, 1.0 / 32.0, max_relative = 1e-13);
    }

    #[test]
    fn three_point_nodes() {
        let gl = GaussLegendre::new(3);
        assert_relative_eq!(gl.nodes[2], (0.6f64).sqrt(), max_relative = 1e-14);
        assert_relative_eq!(gl.weights[1], 8.0 / 9.0, max_relative = 1e-14);
    }

    #[test]
    fn log_sum_exp_matches_direct() {
        let terms = [(1.0, 0.5), (2.0, 0.25), (-3.0, 1.0)];
        let direct: f64 = terms.iter().map(|(x, w)| w * f64::exp(*x)).sum();
        assert_relative_eq!(log_sum_exp(&terms), direct.ln(), max_relative = 1e-14);
        assert_relative_eq!(log_sum_exp(&[(-2000.0, 1.0)]), -2000.0);
    }
}
