//! Monotone continuous DR-submodular reward families with exact, stochastic,
//! and boosted gradient oracles.
//!
//! Two concrete families are provided:
//!
//! * [`QuadraticReward`]: `f(x) = <h, x> + x' H x / 2` with symmetric
//!   entrywise-nonpositive `H` (DR-submodularity) and `h >= -H u` against the
//!   paired set's coordinatewise maximum `u` (monotonicity on the set).
//! * [`CoverageReward`]: `f(x) = sum_j w_j (1 - prod_i (1 - x_i)^{a_ji})` on
//!   the unit box with nonnegative integer exponents.
//!
//! Both satisfy `f(0) = 0`. The boosted gradient multiplies a stochastic
//! gradient queried at `z * x` by `1 - 1/e`, with `z` drawn from the
//! exponential-tilted distribution whose density is `e^{z-1}/(1 - 1/e)` on
//! `[0, 1]`; averaging over `z` recovers the gradient of the auxiliary
//! function `F(x) = int_0^1 e^{z-1}/z f(z x) dz`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::quadrature::GaussLegendre;
use crate::sets::DecisionSet;

pub const ONE_MINUS_INV_E: f64 = 1.0 - std::f64::consts::E.recip();

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticReward {
    /// Linear term; nonnegative.
    pub linear: Vec<f64>,
    /// Symmetric quadratic term with every entry <= 0, stored by rows.
    pub quad: Vec<Vec<f64>>,
}

impl QuadraticReward {
    pub fn new(linear: Vec<f64>, quad: Vec<Vec<f64>>) -> Self {
        let n = linear.len();
        assert!(quad.len() == n && quad.iter().all(|r| r.len() == n));
        for i in 0..n {
            assert!(linear[i] >= 0.0, "linear term must be nonnegative");
            for j in 0..n {
                assert!(quad[i][j] <= 0.0, "quadratic entries must be <= 0");
                assert!(
                    (quad[i][j] - quad[j][i]).abs() <= 1e-12,
                    "quadratic term must be symmetric"
                );
            }
        }
        QuadraticReward { linear, quad }
    }

    /// Linear reward `<g, x>` as the degenerate quadratic case.
    pub fn linear_only(g: Vec<f64>) -> Self {
        let n = g.len();
        Self::new(g, vec![vec![0.0; n]; n])
    }

    fn quad_times(&self, x: &[f64]) -> Vec<f64> {
        self.quad.iter().map(|row| linalg::dot(row, x)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReward {
    /// Nonnegative term weights.
    pub weights: Vec<f64>,
    /// Nonnegative integer exponents, one row per term.
    pub exponents: Vec<Vec<u32>>,
}

impl CoverageReward {
    pub fn new(weights: Vec<f64>, exponents: Vec<Vec<u32>>) -> Self {
        assert_eq!(weights.len(), exponents.len());
        assert!(!exponents.is_empty(), "coverage needs at least one term");
        let n = exponents[0].len();
        assert!(exponents.iter().all(|r| r.len() == n));
        assert!(weights.iter().all(|&w| w >= 0.0));
        CoverageReward { weights, exponents }
    }

    pub fn dim(&self) -> usize {
        self.exponents[0].len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum RewardFunction {
    Quadratic(QuadraticReward),
    Coverage(CoverageReward),
}

impl RewardFunction {
    pub fn dim(&self) -> usize {
        match self {
            RewardFunction::Quadratic(q) => q.linear.len(),
            RewardFunction::Coverage(c) => c.dim(),
        }
    }

    /// Evaluate `f(x)`. By construction `f(0) = 0`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim(), "eval: dimension mismatch");
        match self {
            RewardFunction::Quadratic(q) => {
                linalg::dot(&q.linear, x) + 0.5 * linalg::dot(&q.quad_times(x), x)
            }
            RewardFunction::Coverage(c) => {
                let mut total = 0.0;
                for (w, row) in c.weights.iter().zip(&c.exponents) {
                    let mut prod = 1.0;
                    for (&a, &xi) in row.iter().zip(x) {
                        if a > 0 {
                            prod *= (1.0 - xi).powi(a as i32);
                        }
                    }
                    total += w * (1.0 - prod);
                }
                total
            }
        }
    }

    /// Exact analytic gradient.
    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim(), "grad: dimension mismatch");
        match self {
            RewardFunction::Quadratic(q) => linalg::add(&q.linear, &q.quad_times(x)),
            RewardFunction::Coverage(c) => {
                let n = x.len();
                let mut g = vec![0.0; n];
                for (w, row) in c.weights.iter().zip(&c.exponents) {
                    for i in 0..n {
                        let a = row[i];
                        if a == 0 {
                            continue;
                        }
                        // d/dx_i [-(1-x_i)^a * rest] = a (1-x_i)^{a-1} * rest
                        let mut term = a as f64 * (1.0 - x[i]).powi(a as i32 - 1);
                        for (j, (&aj, &xj)) in row.iter().zip(x).enumerate() {
                            if j != i && aj > 0 {
                                term *= (1.0 - xj).powi(aj as i32);
                            }
                        }
                        g[i] += w * term;
                    }
                }
                g
            }
        }
    }

    /// Analytic bound on `max_{x in K} ||grad f(x)||`.
    pub fn gradient_norm_bound(&self, set: &DecisionSet) -> f64 {
        match self {
            RewardFunction::Quadratic(q) => {
                linalg::norm(&q.linear) + linalg::symmetric_spectral_norm(&q.quad) * set.radius()
            }
            RewardFunction::Coverage(c) => {
                // every partial derivative is at most sum_j w_j a_ji on the
                // unit box (integer exponents keep all factors <= 1)
                let n = c.dim();
                let per_coord: Vec<f64> = (0..n)
                    .map(|i| {
                        c.weights
                            .iter()
                            .zip(&c.exponents)
                            .map(|(w, row)| w * row[i] as f64)
                            .sum()
                    })
                    .collect();
                linalg::norm(&per_coord)
            }
        }
    }

    /// Smoothness constant: exact spectral norm for quadratics, an entrywise
    /// Hessian bound for coverage.
    pub fn smoothness(&self) -> f64 {
        match self {
            RewardFunction::Quadratic(q) => linalg::symmetric_spectral_norm(&q.quad),
            RewardFunction::Coverage(c) => {
                let n = c.dim();
                let mut bound = vec![vec![0.0; n]; n];
                for (w, row) in c.weights.iter().zip(&c.exponents) {
                    for i in 0..n {
                        let ai = row[i] as f64;
                        for j in 0..n {
                            let aj = row[j] as f64;
                            bound[i][j] += if i == j {
                                w * ai * (ai - 1.0).max(0.0)
                            } else {
                                w * ai * aj
                            };
                        }
                    }
                }
                linalg::symmetric_spectral_norm(&bound)
            }
        }
    }

    /// Check the monotonicity/DR invariants against the paired set.
    pub fn validate_against(&self, set: &DecisionSet) -> Result<(), String> {
        if self.dim() != set.dim() {
            return Err("dimension mismatch with decision set".into());
        }
        match self {
            RewardFunction::Quadratic(q) => {
                let u = set.coordinatewise_max();
                let hu = q.quad_times(&u);
                for i in 0..u.len() {
                    if q.linear[i] + hu[i] < -1e-12 {
                        return Err(format!(
                            "gradient can go negative on the set: coordinate {i}"
                        ));
                    }
                }
                Ok(())
            }
            RewardFunction::Coverage(_) => {
                let u = set.coordinatewise_max();
                if u.iter().any(|&ui| ui > 1.0 + 1e-12) {
                    return Err("coverage rewards need the set inside the unit box".into());
                }
                Ok(())
            }
        }
    }
}

/// Zero-mean perturbation supported on the radius-`sigma` sphere, so the
/// stochastic gradient is unbiased with an exactly known norm inflation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma: f64,
}

impl NoiseModel {
    pub fn new(sigma: f64) -> Self {
        assert!(sigma >= 0.0);
        NoiseModel { sigma }
    }

    pub fn noiseless() -> Self {
        NoiseModel { sigma: 0.0 }
    }

    /// Draw a perturbation with `||xi|| = sigma` exactly (zero if sigma is 0).
    pub fn sample(&self, dim: usize, rng: &mut impl Rng) -> Vec<f64> {
        if self.sigma == 0.0 {
            return vec![0.0; dim];
        }
        loop {
            let v: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let n = linalg::norm(&v);
            if n > 1e-12 {
                return linalg::scale(&v, self.sigma / n);
            }
        }
    }
}

/// Gradient-norm bound `G = G_f + sigma` and smoothness `L` for one reward
/// against one set; the schedule constructors consume `G`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientBound {
    pub g: f64,
    pub l: f64,
}

impl GradientBound {
    pub fn compute(f: &RewardFunction, set: &DecisionSet, noise: &NoiseModel) -> Self {
        GradientBound {
            g: f.gradient_norm_bound(set) + noise.sigma,
            l: f.smoothness(),
        }
    }
}

/// Unbiased stochastic gradient: exact gradient plus sphere noise.
pub fn stochastic_grad(
    f: &RewardFunction,
    x: &[f64],
    noise: &NoiseModel,
    rng: &mut impl Rng,
) -> Vec<f64> {
    let mut g = f.grad(x);
    if noise.sigma > 0.0 {
        let xi = noise.sample(x.len(), rng);
        linalg::axpy(&mut g, 1.0, &xi);
    }
    g
}

/// Sample the boosting variable by the closed-form inverse CDF
/// `z = 1 + ln(1/e + p (1 - 1/e))`, always in [0, 1].
pub fn sample_boost_z(rng: &mut impl Rng) -> f64 {
    let p: f64 = rng.gen();
    boost_z_from_uniform(p)
}

/// Deterministic inverse CDF, exposed for endpoint tests.
pub fn boost_z_from_uniform(p: f64) -> f64 {
    let e_inv = std::f64::consts::E.recip();
    1.0 + (e_inv + p * (1.0 - e_inv)).ln()
}

/// Boosted stochastic gradient `(1 - 1/e) * grad~ f(z x)` with a fresh `z`,
/// returning the drawn `z` alongside.
pub fn boosted_stochastic_grad_with_z(
    f: &RewardFunction,
    x: &[f64],
    noise: &NoiseModel,
    rng: &mut impl Rng,
) -> (Vec<f64>, f64) {
    let z = sample_boost_z(rng);
    let scaled: Vec<f64> = linalg::scale(x, z);
    let g = stochastic_grad(f, &scaled, noise, rng);
    (linalg::scale(&g, ONE_MINUS_INV_E), z)
}

/// Boosted stochastic gradient; norm is at most `(1 - 1/e) G`.
pub fn boosted_stochastic_grad(
    f: &RewardFunction,
    x: &[f64],
    noise: &NoiseModel,
    rng: &mut impl Rng,
) -> Vec<f64> {
    boosted_stochastic_grad_with_z(f, x, noise, rng).0
}

/// Quadrature oracle for the gradient of the auxiliary function:
/// `grad F(x) = int_0^1 e^{z-1} grad f(z x) dz`.
pub fn boost_grad_quadrature(f: &RewardFunction, x: &[f64], nodes: usize) -> Vec<f64> {
    assert!(nodes >= 16, "boost_grad_quadrature needs at least 16 nodes");
    let rule = GaussLegendre::new(nodes);
    boost_grad_with_rule(f, x, &rule)
}

/// Same oracle with a caller-cached rule (the 1000-node rule is reused
/// heavily by the property suites).
pub fn boost_grad_with_rule(f: &RewardFunction, x: &[f64], rule: &GaussLegendre) -> Vec<f64> {
    rule.integrate_vec(x.len(), |z| {
        let scaled = linalg::scale(x, z);
        linalg::scale(&f.grad(&scaled), (z - 1.0).exp())
    })
}

/// Quadrature oracle for the auxiliary value
/// `F(x) = int_0^1 e^{z-1}/z f(z x) dz`; open rule, so `z = 0` is never hit.
pub fn boost_value_quadrature(f: &RewardFunction, x: &[f64], nodes: usize) -> f64 {
    assert!(nodes >= 16, "boost_value_quadrature needs at least 16 nodes");
    let rule = GaussLegendre::new(nodes);
    rule.integrate(|z| {
        let scaled = linalg::scale(x, z);
        (z - 1.0).exp() / z * f.eval(&scaled)
    })
}
