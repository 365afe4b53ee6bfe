//! Infeasible projection through linear optimization.
//!
//! `shfw` runs Frank-Wolfe on `||x - y||^2` until it either lands close to
//! the target (`||x - y||^2 <= 3 eps`) or certifies a hyperplane separating
//! the target from the set (`<x - y, x - v> <= eps` with `v` the LMO point,
//! which bounds `<y - x, z - x> <= eps` for every feasible `z`).
//!
//! `o_ip` alternates `shfw` with the damped pull `y <- y - gamma (y - x)`
//! until the pair is close. The output anchor is Fejer-monotone: it is no
//! farther from any feasible point than the input was. Every LMO call is
//! counted and checked against the closed-form step budget; exceeding the
//! budget is a bug in this module, never expected behaviour.

use thiserror::Error;

use crate::linalg;
use crate::sets::DecisionSet;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("oracle exceeded its LO step budget ({steps} > {budget:.3}); this is a bug")]
    BudgetExceeded { steps: u64, budget: f64 },
    #[error("iteration cap hit in {stage} (cap {cap}); this is a bug")]
    IterationCap { stage: &'static str, cap: u64 },
}

/// Why `shfw` stopped. `Close` takes precedence when both conditions hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// `||x - y||^2 <= 3 eps`.
    Close,
    /// `<x - y, x - v> <= eps` for the final LMO point `v`.
    Separating,
}

#[derive(Debug, Clone)]
pub struct ShfwOutcome {
    pub x_tilde: Vec<f64>,
    pub reason: StopReason,
    pub lo_steps: u64,
}

/// Feasible/infeasible output pair of the oracle plus consumed LMO calls.
#[derive(Debug, Clone, PartialEq)]
pub struct IpResult {
    pub x: Vec<f64>,
    pub y_tilde: Vec<f64>,
    pub lo_steps: u64,
}

/// Closed-form bound on the LMO calls one oracle invocation may use, in
/// terms of the set radius, the tolerance, and the squared distance between
/// the input pair. Ceiling form.
pub fn lo_budget_bound(radius: f64, eps: f64, dist_sq0: f64) -> f64 {
    let per_call = (27.0 * radius * radius / eps - 2.0).ceil();
    let outer = (dist_sq0 * (dist_sq0 - eps) / (4.0 * eps * eps) + 1.0).max(1.0);
    per_call * outer
}

/// Frank-Wolfe toward `y_target` with exact line search and the two-way
/// stop condition. One LMO is always evaluated before the first check, so
/// even a trivial call costs one step.
pub fn shfw(
    set: &DecisionSet,
    x_init: &[f64],
    y_target: &[f64],
    eps: f64,
) -> Result<ShfwOutcome, OracleError> {
    assert!(eps > 0.0, "shfw needs a positive tolerance");
    debug_assert!(set.contains(x_init, 1e-9), "shfw: x_init must be feasible");
    let radius = set.radius();
    let cap = 10 * ((27.0 * radius * radius / eps).ceil().max(1.0) as u64);
    let mut x = x_init.to_vec();
    let mut steps: u64 = 0;
    loop {
        let dir = linalg::sub(&x, y_target);
        let v = set.lmo(&dir);
        steps += 1;
        let dist_sq = linalg::norm_sq(&dir);
        let gap = linalg::dot(&dir, &linalg::sub(&x, &v));
        if dist_sq <= 3.0 * eps {
            return Ok(ShfwOutcome {
                x_tilde: x,
                reason: StopReason::Close,
                lo_steps: steps,
            });
        }
        if gap <= eps {
            return Ok(ShfwOutcome {
                x_tilde: x,
                reason: StopReason::Separating,
                lo_steps: steps,
            });
        }
        if steps >= cap {
            return Err(OracleError::IterationCap { stage: "shfw", cap });
        }
        // exact minimizer of the 1-d quadratic along x -> v
        let d = linalg::sub(&v, &x);
        let denom = linalg::norm_sq(&d);
        if denom > 0.0 {
            let sigma = (linalg::dot(&linalg::sub(y_target, &x), &d) / denom).clamp(0.0, 1.0);
            linalg::axpy(&mut x, sigma, &d);
        }
    }
}

/// Infeasible projection oracle.
///
/// Returns a feasible `x` and an anchor `y_tilde` in the radius ball with
/// `||x - y_tilde||^2 <= 3 eps` and, for every feasible `z`,
/// `||y_tilde - z||^2 <= ||y0 - z||^2`.
pub fn o_ip(
    set: &DecisionSet,
    x0: &[f64],
    y0: &[f64],
    eps: f64,
) -> Result<IpResult, OracleError> {
    run_o_ip(set, x0, y0, eps, None)
}

/// As [`o_ip`], also returning the internal anchor sequence
/// `[y_1, y_2, ..]` (post-rescale, one entry per outer iterate). Every
/// consecutive pair was produced under a certified separating hyperplane,
/// so the sequence is Fejer-monotone toward the set.
pub fn o_ip_traced(
    set: &DecisionSet,
    x0: &[f64],
    y0: &[f64],
    eps: f64,
) -> Result<(IpResult, Vec<Vec<f64>>), OracleError> {
    let mut trace = Vec::new();
    let result = run_o_ip(set, x0, y0, eps, Some(&mut trace))?;
    Ok((result, trace))
}

fn run_o_ip(
    set: &DecisionSet,
    x0: &[f64],
    y0: &[f64],
    eps: f64,
    mut trace: Option<&mut Vec<Vec<f64>>>,
) -> Result<IpResult, OracleError> {
    assert!(eps > 0.0, "o_ip needs a positive tolerance");
    assert_eq!(x0.len(), set.dim(), "o_ip: dimension mismatch");
    assert_eq!(y0.len(), set.dim(), "o_ip: dimension mismatch");
    debug_assert!(set.contains(x0, 1e-9), "o_ip: x0 must be feasible");

    let radius = set.radius();
    let dist_sq0 = linalg::dist_sq(x0, y0);
    // pull the raw target into the radius ball; this can only move it
    // closer to every feasible point
    let scale = 1.0f64.max(linalg::norm(y0) / radius);
    let y1 = linalg::scale(y0, 1.0 / scale);

    if dist_sq0 <= 3.0 * eps {
        if let Some(t) = trace.as_deref_mut() {
            t.push(y1.clone());
        }
        return Ok(IpResult {
            x: x0.to_vec(),
            y_tilde: y1,
            lo_steps: 0,
        });
    }

    let gamma = 2.0 * eps / dist_sq0;
    let budget = lo_budget_bound(radius, eps, dist_sq0);
    let outer_cap =
        10 * ((dist_sq0 * (dist_sq0 - eps) / (4.0 * eps * eps) + 1.0).max(1.0).ceil() as u64);

    let mut x_warm = x0.to_vec();
    let mut y = y1;
    let mut steps: u64 = 0;
    let mut outer: u64 = 0;
    loop {
        if let Some(t) = trace.as_deref_mut() {
            t.push(y.clone());
        }
        let out = shfw(set, &x_warm, &y, eps)?;
        steps += out.lo_steps;
        if steps as f64 > budget {
            return Err(OracleError::BudgetExceeded { steps, budget });
        }
        let x = out.x_tilde;
        if linalg::dist_sq(&x, &y) <= 3.0 * eps {
            if let Some(t) = trace.as_deref_mut() {
                t.push(y.clone());
            }
            return Ok(IpResult {
                x,
                y_tilde: y,
                lo_steps: steps,
            });
        }
        // certified separation: damped pull toward the feasible iterate
        let pull = linalg::sub(&y, &x);
        linalg::axpy(&mut y, -gamma, &pull);
        x_warm = x;
        outer += 1;
        if outer >= outer_cap {
            return Err(OracleError::IterationCap {
                stage: "o_ip",
                cap: outer_cap,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamDomain};
    use rand::Rng;

    #[test]
    fn shfw_trivial_target_costs_one_step() {
        let set = DecisionSet::budgeted_simplex(1.0, 2);
        let x = vec![0.25, 0.25];
        let out = shfw(&set, &x, &x, 0.1).unwrap();
        assert_eq!(out.x_tilde, x);
        assert_eq!(out.reason, StopReason::Close);
        assert_eq!(out.lo_steps, 1);
    }

    #[test]
    fn shfw_box_hand_trace() {
        let set = DecisionSet::unit_box(2);
        let out = shfw(&set, &[0.0, 0.0], &[-1.0, -1.0], 1.0).unwrap();
        // dist^2 = 2 <= 3, gap = 0 <= 1: close wins by precedence
        assert_eq!(out.x_tilde, vec![0.0, 0.0]);
        assert_eq!(out.lo_steps, 1);
        assert_eq!(out.reason, StopReason::Close);
        // brute force: (0,0) is the true projection of (-1,-1)
        let p = set.exact_project(&[-1.0, -1.0]);
        assert_eq!(p, vec![0.0, 0.0]);
    }

    #[test]
    fn shfw_separating_certificate_holds_for_sampled_points() {
        let set = DecisionSet::budgeted_simplex(1.0, 3);
        let mut rng = stream(21, StreamDomain::Aux, 0, 0);
        let mut seen_separating = 0;
        for _ in 0..200 {
            let x0 = set.sample(&mut rng);
            let y: Vec<f64> = (0..3).map(|_| 0.8 + rng.gen::<f64>()).collect();
            let eps = 0.01 + 0.05 * rng.gen::<f64>();
            let out = shfw(&set, &x0, &y, eps).unwrap();
            let xt = &out.x_tilde;
            if out.reason == StopReason::Separating && linalg::dist_sq(xt, &y) > 3.0 * eps {
                seen_separating += 1;
                let to_y = linalg::sub(&y, xt);
                for _ in 0..100 {
                    let z = set.sample(&mut rng);
                    let along = linalg::dot(&to_y, &linalg::sub(&z, xt));
                    assert!(along <= eps + 1e-12, "separation violated: {along}");
                }
            }
        }
        assert!(seen_separating > 0, "test never exercised separation");
    }

    #[test]
    fn o_ip_identity_input() {
        let set = DecisionSet::budgeted_simplex(1.0, 2);
        let x = vec![0.5, 0.25];
        let out = o_ip(&set, &x, &x, 0.05).unwrap();
        assert_eq!(out.x, x);
        assert_eq!(out.y_tilde, x);
        assert_eq!(out.lo_steps, 0);
    }

    #[test]
    fn o_ip_rescales_far_anchor() {
        let set = DecisionSet::budgeted_simplex(1.0, 2);
        let x0 = vec![0.5, 0.5];
        // close to x0 but outside the radius ball
        let y0 = vec![0.8, 0.8];
        let eps = 1.0;
        let out = o_ip(&set, &x0, &y0, eps).unwrap();
        assert_eq!(out.lo_steps, 0);
        let expect = linalg::scale(&y0, 1.0 / linalg::norm(&y0));
        assert!(linalg::dist(&out.y_tilde, &expect) < 1e-15);
    }

    #[test]
    fn o_ip_simplex_contract_regression() {
        let set = DecisionSet::budgeted_simplex(1.0, 2);
        let out = o_ip(&set, &[0.0, 0.0], &[2.0, 2.0], 0.05).unwrap();
        assert!(set.contains(&out.x, 1e-9));
        assert!(linalg::norm(&out.y_tilde) <= 1.0 + 1e-9);
        assert!(linalg::dist_sq(&out.x, &out.y_tilde) <= 0.15 + 1e-9);
        for z in [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.5, 0.5]] {
            assert!(
                linalg::dist_sq(&out.y_tilde, &z) <= linalg::dist_sq(&[2.0, 2.0], &z) + 1e-9
            );
        }
        let budget = lo_budget_bound(1.0, 0.05, linalg::dist_sq(&[0.0, 0.0], &[2.0, 2.0]));
        assert!((out.lo_steps as f64) <= budget);
        // frozen regression values for this exact call
        assert_eq!(out.lo_steps, 5);
        let frozen_y = [0.707_106_781_186_547_5, 0.707_106_781_186_547_5];
        let frozen_x = [0.411_498_575_046_337_97, 0.475_282_370_020_157_94];
        assert!(linalg::dist(&out.y_tilde, &frozen_y) < 1e-12);
        assert!(linalg::dist(&out.x, &frozen_x) < 1e-12);
    }

    #[test]
    fn o_ip_randomized_contract() {
        let sets = [
            DecisionSet::unit_box(2),
            DecisionSet::budgeted_simplex(1.0, 3),
            DecisionSet::nonneg_ball(1.5, 2),
        ];
        let mut rng = stream(22, StreamDomain::Aux, 0, 0);
        for trial in 0..300 {
            let set = &sets[trial % sets.len()];
            let n = set.dim();
            let r = set.radius();
            let x0 = set.sample(&mut rng);
            let y0: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 3.0 - 0.75).collect();
            let eps = r * r * (0.02 + 0.3 * rng.gen::<f64>());
            let out = o_ip(&set, &x0, &y0, eps).unwrap();
            assert!(set.contains(&out.x, 1e-9));
            assert!(linalg::norm(&out.y_tilde) <= r + 1e-9);
            assert!(linalg::dist_sq(&out.x, &out.y_tilde) <= 3.0 * eps + 1e-9);
            let budget = lo_budget_bound(r, eps, linalg::dist_sq(&x0, &y0));
            assert!((out.lo_steps as f64) <= budget);
            for _ in 0..50 {
                let z = set.sample(&mut rng);
                assert!(
                    linalg::dist_sq(&out.y_tilde, &z) <= linalg::dist_sq(&y0, &z) + 1e-9
                );
            }
        }
    }

    #[test]
    fn o_ip_trace_is_fejer_monotone() {
        let set = DecisionSet::budgeted_simplex(1.0, 2);
        let mut rng = stream(23, StreamDomain::Aux, 0, 0);
        for _ in 0..50 {
            let x0 = set.sample(&mut rng);
            let y0: Vec<f64> = (0..2).map(|_| 1.0 + rng.gen::<f64>() * 1.5).collect();
            let eps = 0.02 + 0.1 * rng.gen::<f64>();
            let (_, chain) = o_ip_traced(&set, &x0, &y0, eps).unwrap();
            for pair in chain.windows(2) {
                for _ in 0..30 {
                    let z = set.sample(&mut rng);
                    assert!(
                        linalg::dist_sq(&pair[1], &z) <= linalg::dist_sq(&pair[0], &z) + 1e-9
                    );
                }
            }
        }
    }
}
