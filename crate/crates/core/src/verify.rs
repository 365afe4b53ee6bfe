//! Self-contained property suites behind the CLI `verify` subcommand.
//!
//! Each suite runs a randomized batch of checks and reports pass/fail with
//! a detail line. The oracle-contract suite is parameterized over the
//! oracle implementation so a deliberately broken oracle can be fed in to
//! prove the suite has teeth.

use rand::Rng;

use crate::functions::{
    boost_grad_with_rule, boosted_stochastic_grad, NoiseModel, RewardFunction, ONE_MINUS_INV_E,
};
use crate::harness::{AdversaryFamily, AdversarySpec, Regeneration};
use crate::infeasible_projection::{lo_budget_bound, o_ip, IpResult, OracleError};
use crate::linalg;
use crate::quadrature::GaussLegendre;
use crate::rng::{stream, StreamDomain};
use crate::sets::DecisionSet;

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyReport {
    pub name: String,
    pub passed: bool,
    pub checks: u64,
    pub detail: String,
}

impl PropertyReport {
    fn pass(name: &str, checks: u64, detail: String) -> Self {
        PropertyReport {
            name: name.to_string(),
            passed: true,
            checks,
            detail,
        }
    }

    fn fail(name: &str, checks: u64, detail: String) -> Self {
        PropertyReport {
            name: name.to_string(),
            passed: false,
            checks,
            detail,
        }
    }

    pub fn render(&self) -> String {
        format!(
            "[{}] {} ({} checks): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.checks,
            self.detail
        )
    }
}

fn test_sets() -> Vec<DecisionSet> {
    vec![
        DecisionSet::unit_box(2),
        DecisionSet::Box {
            caps: vec![0.6, 1.2, 0.9],
        },
        DecisionSet::budgeted_simplex(1.0, 2),
        DecisionSet::budgeted_simplex(1.5, 3),
        DecisionSet::nonneg_ball(1.0, 2),
        DecisionSet::nonneg_ball(2.0, 3),
    ]
}

/// Randomized oracle calls checked against the full output contract:
/// feasibility, anchor norm, pair closeness, the per-call LO budget, and
/// Fejer monotonicity against sampled points plus all finite vertices.
pub fn ip_contract_suite(
    oracle: &impl Fn(&DecisionSet, &[f64], &[f64], f64) -> Result<IpResult, OracleError>,
    seed: u64,
    calls: usize,
) -> PropertyReport {
    let name = "o_ip contract";
    let sets = test_sets();
    let mut rng = stream(seed, StreamDomain::Aux, 0, 100);
    let mut max_steps = 0u64;
    for k in 0..calls {
        let set = &sets[k % sets.len()];
        let n = set.dim();
        let r = set.radius();
        let x0 = set.sample(&mut rng);
        // anchors inside, near, and well outside the radius ball
        let spread = 0.5 + 2.0 * rng.gen::<f64>();
        let y0: Vec<f64> = (0..n)
            .map(|_| (rng.gen::<f64>() * 2.0 - 0.5) * spread * r)
            .collect();
        let eps = r * r * (0.02 + 0.48 * rng.gen::<f64>());
        let out = match oracle(set, &x0, &y0, eps) {
            Ok(o) => o,
            Err(e) => return PropertyReport::fail(name, k as u64, format!("oracle error: {e}")),
        };
        max_steps = max_steps.max(out.lo_steps);
        if !set.contains(&out.x, 1e-9) {
            return PropertyReport::fail(name, k as u64, "infeasible x output".into());
        }
        if linalg::norm(&out.y_tilde) > r + 1e-9 {
            return PropertyReport::fail(name, k as u64, "anchor outside radius ball".into());
        }
        if linalg::dist_sq(&out.x, &out.y_tilde) > 3.0 * eps + 1e-9 {
            return PropertyReport::fail(name, k as u64, "pair not close".into());
        }
        let budget = lo_budget_bound(r, eps, linalg::dist_sq(&x0, &y0));
        if (out.lo_steps as f64) > budget {
            return PropertyReport::fail(
                name,
                k as u64,
                format!("LO budget exceeded: {} > {budget:.3}", out.lo_steps),
            );
        }
        let mut probes = set.vertices().unwrap_or_default();
        while probes.len() < 100 {
            probes.push(set.sample(&mut rng));
        }
        for z in &probes {
            if linalg::dist_sq(&out.y_tilde, z) > linalg::dist_sq(&y0, z) + 1e-9 {
                return PropertyReport::fail(name, k as u64, "Fejer violated".into());
            }
        }
    }
    PropertyReport::pass(
        name,
        calls as u64,
        format!("all contracts hold; max LO steps per call {max_steps}"),
    )
}

/// Monte Carlo mean of the boosted stochastic gradient against the
/// quadrature oracle, three standard errors per coordinate.
pub fn unbiasedness_suite(seed: u64, pairs: usize, draws: usize) -> PropertyReport {
    let name = "boosted gradient unbiasedness";
    let set = DecisionSet::unit_box(2);
    let noise = NoiseModel::new(0.1);
    let mut rng = stream(seed, StreamDomain::Aux, 0, 101);
    for k in 0..pairs {
        let f = random_reward(&set, &mut rng, k);
        let x = set.sample(&mut rng);
        let mut mean = vec![0.0; set.dim()];
        for _ in 0..draws {
            let g = boosted_stochastic_grad(&f, &x, &noise, &mut rng);
            linalg::axpy(&mut mean, 1.0 / draws as f64, &g);
        }
        let expect = crate::functions::boost_grad_quadrature(&f, &x, 64);
        let g_bound = f.gradient_norm_bound(&set) + noise.sigma;
        let se = 3.0 * ONE_MINUS_INV_E * g_bound / (draws as f64).sqrt();
        for i in 0..mean.len() {
            if (mean[i] - expect[i]).abs() >= se {
                return PropertyReport::fail(
                    name,
                    k as u64,
                    format!("coordinate {i}: |{} - {}| >= {se}", mean[i], expect[i]),
                );
            }
        }
    }
    PropertyReport::pass(name, (pairs * draws) as u64, "Monte Carlo mean matches quadrature".into())
}

/// `<y - x, grad F(x)> >= (1 - 1/e) f(y) - f(x)` on random feasible pairs.
pub fn boosting_inequality_suite(seed: u64, instances: usize, pairs: usize) -> PropertyReport {
    let name = "boosting inequality";
    let set = DecisionSet::budgeted_simplex(1.0, 2);
    let rule = GaussLegendre::new(1000);
    let mut rng = stream(seed, StreamDomain::Aux, 0, 102);
    let mut worst: f64 = f64::INFINITY;
    for k in 0..instances {
        let f = random_reward(&set, &mut rng, k);
        for _ in 0..pairs {
            let x = set.sample(&mut rng);
            let y = set.sample(&mut rng);
            let gf = boost_grad_with_rule(&f, &x, &rule);
            let slack = linalg::dot(&linalg::sub(&y, &x), &gf)
                - (ONE_MINUS_INV_E * f.eval(&y) - f.eval(&x));
            worst = worst.min(slack);
            if slack < -1e-8 {
                return PropertyReport::fail(
                    name,
                    (k * pairs) as u64,
                    format!("violated by {slack:.3e}"),
                );
            }
        }
    }
    PropertyReport::pass(
        name,
        (instances * pairs) as u64,
        format!("holds; smallest slack {worst:.3e}"),
    )
}

/// Metropolis matrices on the shipped topologies: symmetry, stochasticity,
/// support, and a mixing rate strictly below one.
pub fn weight_matrix_suite() -> PropertyReport {
    use crate::decentralized::{Network, Topology};
    let name = "weight matrix invariants";
    let cases = [
        (Topology::Complete, 3),
        (Topology::Complete, 6),
        (Topology::Cycle, 4),
        (Topology::Cycle, 7),
        (Topology::Star, 5),
        (Topology::Grid, 9),
        (Topology::Grid, 16),
    ];
    let mut checks = 0u64;
    for (kind, n) in cases {
        let net = match Network::metropolis(kind, n) {
            Ok(net) => net,
            Err(e) => return PropertyReport::fail(name, checks, format!("{e}")),
        };
        let a = &net.weights;
        for i in 0..n {
            let row: f64 = a[i].iter().sum();
            let col: f64 = (0..n).map(|j| a[j][i]).sum();
            if (row - 1.0).abs() > 1e-12 || (col - 1.0).abs() > 1e-12 {
                return PropertyReport::fail(name, checks, format!("stochasticity broken at node {i}"));
            }
            for j in 0..n {
                if a[i][j] != a[j][i] {
                    return PropertyReport::fail(name, checks, "asymmetric weights".into());
                }
                if i != j && a[i][j] > 0.0 && !net.graph.neighbors(i).contains(&j) {
                    return PropertyReport::fail(name, checks, "support violated".into());
                }
            }
            checks += 1;
        }
        if net.beta >= 1.0 {
            return PropertyReport::fail(name, checks, format!("beta {} >= 1", net.beta));
        }
    }
    PropertyReport::pass(name, checks, "symmetric, doubly stochastic, mixing".into())
}

fn random_reward(set: &DecisionSet, rng: &mut impl Rng, k: usize) -> RewardFunction {
    let family = if k % 2 == 0 {
        AdversaryFamily::QuadraticRandom {
            curvature: 0.8,
            linear_slack: 0.8,
        }
    } else {
        AdversaryFamily::Coverage {
            terms: 3,
            weight_scale: 1.0,
        }
    };
    let spec = AdversarySpec {
        family,
        dim: set.dim(),
        sigma: 0.0,
        seed: rng.gen(),
        regen: Regeneration::Fixed,
    };
    spec.against(set).expect("valid family").function(0)
}

/// The full default verification battery, sized for an interactive run.
pub fn run_default_suites(seed: u64) -> Vec<PropertyReport> {
    vec![
        ip_contract_suite(&|set, x0, y0, eps| o_ip(set, x0, y0, eps), seed, 300),
        unbiasedness_suite(seed, 5, 20_000),
        boosting_inequality_suite(seed, 4, 250),
        weight_matrix_suite(),
    ]
}
