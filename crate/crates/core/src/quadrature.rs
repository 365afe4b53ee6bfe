//! Gauss-Legendre quadrature on [0, 1].
//!
//! Used by the test oracles that integrate the boosted auxiliary function
//! and its gradient. The rule is open (no endpoint nodes), which is what
//! makes the `1/z` reweighting of the value integral harmless: with
//! `f(0) = 0` the integrand extends continuously to `z = 0` and is never
//! evaluated there.

/// Nodes and weights for an n-point Gauss-Legendre rule on [0, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Build the n-point rule via Newton iteration on the Legendre
    /// polynomial, seeded with the Chebyshev-angle approximation. Accurate
    /// to machine precision for the sizes used here (16..=4096).
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "quadrature needs at least 2 nodes");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for k in 0..n {
            // root of P_n in (-1, 1), descending
            let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (_, dp) = legendre_with_derivative(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // map [-1, 1] -> [0, 1]
            nodes[k] = 0.5 * (x + 1.0);
            weights[k] = 0.5 * w;
        }
        nodes.reverse();
        weights.reverse();
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrate a scalar function over [0, 1].
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| w * f(z))
            .sum()
    }

    /// Integrate a vector-valued function over [0, 1].
    pub fn integrate_vec(&self, dim: usize, f: impl Fn(f64) -> Vec<f64>) -> Vec<f64> {
        let mut acc = vec![0.0; dim];
        for (&z, &w) in self.nodes.iter().zip(&self.weights) {
            let v = f(z);
            for (a, vi) in acc.iter_mut().zip(&v) {
                *a += w * vi;
            }
        }
        acc
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Evaluate `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 2..=n {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = p_next;
    }
    let d = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, d)
}
