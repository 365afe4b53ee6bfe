//! Convex decision sets with closed-form linear minimization oracles.
//!
//! Every set contains the origin, lies in the nonnegative orthant, and has
//! an exact radius `R = max_{x in K} ||x||`. Only sets whose LMO has a
//! closed form are shipped so that oracle step accounting stays exact; no
//! LP solver is involved.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg;

/// Default absolute tolerance for membership tests: floating-point slack on
/// constraint boundaries after O(T) arithmetic.
pub const DEFAULT_CONTAINS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecisionSet {
    /// Axis-aligned box `{x : 0 <= x <= caps}`.
    Box { caps: Vec<f64> },
    /// Capped simplex `{x : 0 <= x <= caps, sum(x) <= budget}`.
    BudgetedSimplex { budget: f64, caps: Vec<f64> },
    /// Nonnegative part of the Euclidean ball `{x >= 0, ||x|| <= radius}`.
    NonnegBall { radius: f64, dim: usize },
}

impl DecisionSet {
    pub fn unit_box(dim: usize) -> Self {
        DecisionSet::Box {
            caps: vec![1.0; dim],
        }
    }

    /// Budgeted simplex with every coordinate capped at the budget itself,
    /// so the caps never bind on their own.
    pub fn budgeted_simplex(budget: f64, dim: usize) -> Self {
        assert!(budget > 0.0, "budget must be positive");
        DecisionSet::BudgetedSimplex {
            budget,
            caps: vec![budget; dim],
        }
    }

    pub fn nonneg_ball(radius: f64, dim: usize) -> Self {
        assert!(radius > 0.0, "radius must be positive");
        DecisionSet::NonnegBall { radius, dim }
    }

    pub fn dim(&self) -> usize {
        match self {
            DecisionSet::Box { caps } => caps.len(),
            DecisionSet::BudgetedSimplex { caps, .. } => caps.len(),
            DecisionSet::NonnegBall { dim, .. } => *dim,
        }
    }

    pub fn origin(&self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }

    /// Validate structural invariants (positive caps/budget/radius).
    pub fn validate(&self) -> Result<(), String> {
        match self {
            DecisionSet::Box { caps } => {
                if caps.is_empty() || caps.iter().any(|&u| !(u > 0.0)) {
                    return Err("box caps must be positive".into());
                }
            }
            DecisionSet::BudgetedSimplex { budget, caps } => {
                if caps.is_empty() || caps.iter().any(|&u| !(u > 0.0)) {
                    return Err("simplex caps must be positive".into());
                }
                if !(*budget > 0.0) {
                    return Err("simplex budget must be positive".into());
                }
            }
            DecisionSet::NonnegBall { radius, dim } => {
                if *dim == 0 || !(*radius > 0.0) {
                    return Err("ball needs positive radius and dimension".into());
                }
            }
        }
        Ok(())
    }

    /// Linear minimization oracle: `argmin_{x in K} <c, x>`.
    ///
    /// Ties are broken toward the lowest coordinate index and then the
    /// origin, so counters are reproducible.
    pub fn lmo(&self, c: &[f64]) -> Vec<f64> {
        assert_eq!(c.len(), self.dim(), "lmo: dimension mismatch");
        match self {
            DecisionSet::Box { caps } => c
                .iter()
                .zip(caps)
                .map(|(&ci, &ui)| if ci < 0.0 { ui } else { 0.0 })
                .collect(),
            DecisionSet::BudgetedSimplex { budget, caps } => {
                // Fill the most negative coordinates first; stable order on
                // equal costs keeps the lowest index.
                let mut order: Vec<usize> = (0..c.len()).collect();
                order.sort_by(|&i, &j| c[i].partial_cmp(&c[j]).expect("lmo: non-finite cost"));
                let mut x = vec![0.0; c.len()];
                let mut remaining = *budget;
                for i in order {
                    if c[i] >= 0.0 || remaining <= 0.0 {
                        break;
                    }
                    let take = caps[i].min(remaining);
                    x[i] = take;
                    remaining -= take;
                }
                x
            }
            DecisionSet::NonnegBall { radius, .. } => {
                let neg: Vec<f64> = c.iter().map(|&ci| ci.min(0.0)).collect();
                let nn = linalg::norm(&neg);
                if nn == 0.0 {
                    vec![0.0; c.len()]
                } else {
                    neg.iter().map(|&v| -v * radius / nn).collect()
                }
            }
        }
    }

    /// Membership within absolute tolerance `tol` on every constraint.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        assert_eq!(x.len(), self.dim(), "contains: dimension mismatch");
        match self {
            DecisionSet::Box { caps } => x
                .iter()
                .zip(caps)
                .all(|(&xi, &ui)| xi >= -tol && xi <= ui + tol),
            DecisionSet::BudgetedSimplex { budget, caps } => {
                let box_ok = x
                    .iter()
                    .zip(caps)
                    .all(|(&xi, &ui)| xi >= -tol && xi <= ui + tol);
                box_ok && x.iter().sum::<f64>() <= budget + tol
            }
            DecisionSet::NonnegBall { radius, .. } => {
                x.iter().all(|&xi| xi >= -tol) && linalg::norm(x) <= radius + tol
            }
        }
    }

    /// Euclidean projection onto the set. Test and baseline oracle; the
    /// projection-free algorithms never call this.
    pub fn exact_project(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.dim(), "exact_project: dimension mismatch");
        match self {
            DecisionSet::Box { caps } => y
                .iter()
                .zip(caps)
                .map(|(&yi, &ui)| yi.clamp(0.0, ui))
                .collect(),
            DecisionSet::BudgetedSimplex { budget, caps } => {
                project_capped_simplex(y, *budget, caps)
            }
            DecisionSet::NonnegBall { radius, .. } => {
                // The orthant is a cone, so projecting onto the orthant and
                // radially rescaling is the exact projection onto the
                // intersection with the ball.
                let p: Vec<f64> = y.iter().map(|&v| v.max(0.0)).collect();
                let n = linalg::norm(&p);
                if n <= *radius {
                    p
                } else {
                    linalg::scale(&p, radius / n)
                }
            }
        }
    }

    /// Exact `max_{x in K} ||x||`.
    pub fn radius(&self) -> f64 {
        match self {
            DecisionSet::Box { caps } => linalg::norm(caps),
            DecisionSet::BudgetedSimplex { budget, caps } => {
                // max of a convex function sits at an extreme point: fill the
                // largest caps first.
                let mut sorted: Vec<f64> = caps.clone();
                sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
                let mut remaining = *budget;
                let mut sum_sq = 0.0;
                for u in sorted {
                    if remaining <= 0.0 {
                        break;
                    }
                    let take = u.min(remaining);
                    sum_sq += take * take;
                    remaining -= take;
                }
                sum_sq.sqrt()
            }
            DecisionSet::NonnegBall { radius, .. } => *radius,
        }
    }

    /// Feasible point attaining the radius (up to fp rounding).
    pub fn radius_witness(&self) -> Vec<f64> {
        match self {
            DecisionSet::Box { caps } => caps.clone(),
            DecisionSet::BudgetedSimplex { budget, caps } => {
                let mut order: Vec<usize> = (0..caps.len()).collect();
                order.sort_by(|&i, &j| caps[j].partial_cmp(&caps[i]).unwrap());
                let mut x = vec![0.0; caps.len()];
                let mut remaining = *budget;
                for i in order {
                    if remaining <= 0.0 {
                        break;
                    }
                    let take = caps[i].min(remaining);
                    x[i] = take;
                    remaining -= take;
                }
                x
            }
            DecisionSet::NonnegBall { radius, dim } => {
                let mut x = vec![0.0; *dim];
                x[0] = *radius;
                x
            }
        }
    }

    /// Coordinatewise maximum `u_K` with `u_K[i] = max_{x in K} x[i]`.
    pub fn coordinatewise_max(&self) -> Vec<f64> {
        match self {
            DecisionSet::Box { caps } => caps.clone(),
            DecisionSet::BudgetedSimplex { budget, caps } => {
                caps.iter().map(|&u| u.min(*budget)).collect()
            }
            DecisionSet::NonnegBall { radius, dim } => vec![*radius; *dim],
        }
    }

    /// All vertices for polyhedral variants (used to seed Fejer checks);
    /// `None` for the ball.
    pub fn vertices(&self) -> Option<Vec<Vec<f64>>> {
        match self {
            DecisionSet::Box { caps } => {
                let n = caps.len();
                if n > 12 {
                    return None;
                }
                let mut vs = Vec::with_capacity(1 << n);
                for mask in 0u32..(1 << n) {
                    let v: Vec<f64> = (0..n)
                        .map(|i| if mask & (1 << i) != 0 { caps[i] } else { 0.0 })
                        .collect();
                    vs.push(v);
                }
                Some(vs)
            }
            DecisionSet::BudgetedSimplex { budget, caps } => {
                // Origin plus each single-coordinate fill. With caps below
                // the budget the true vertex set is larger; these are still
                // valid feasible probes for Fejer checks.
                let n = caps.len();
                let mut vs = vec![vec![0.0; n]];
                for i in 0..n {
                    let mut v = vec![0.0; n];
                    v[i] = caps[i].min(*budget);
                    vs.push(v);
                }
                Some(vs)
            }
            DecisionSet::NonnegBall { .. } => None,
        }
    }

    /// Random feasible point for tests: uniform in the bounding box,
    /// projected back into the set.
    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        let u = self.coordinatewise_max();
        let raw: Vec<f64> = u.iter().map(|&ui| rng.gen::<f64>() * ui).collect();
        self.exact_project(&raw)
    }
}

/// Projection onto `{0 <= x <= caps, sum(x) <= budget}` by threshold search
/// over the sorted breakpoints of `theta -> sum_i clamp(y_i - theta, 0, u_i)`.
fn project_capped_simplex(y: &[f64], budget: f64, caps: &[f64]) -> Vec<f64> {
    let boxed: Vec<f64> = y
        .iter()
        .zip(caps)
        .map(|(&yi, &ui)| yi.clamp(0.0, ui))
        .collect();
    if boxed.iter().sum::<f64>() <= budget {
        return boxed;
    }
    // g(theta) = sum_i clamp(y_i - theta, 0, u_i) is piecewise linear and
    // nonincreasing with breakpoints at y_i and y_i - u_i. The budget binds,
    // so we need the theta > 0 with g(theta) = budget.
    let mut bps: Vec<f64> = Vec::with_capacity(2 * y.len());
    for (yi, ui) in y.iter().zip(caps) {
        bps.push(*yi);
        bps.push(yi - ui);
    }
    bps.push(0.0);
    bps.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let g = |theta: f64| -> f64 {
        y.iter()
            .zip(caps)
            .map(|(&yi, &ui)| (yi - theta).clamp(0.0, ui))
            .sum()
    };
    // Find the segment [lo, hi] with g(hi) <= budget <= g(lo); g is linear
    // inside, so interpolate the exact threshold.
    let mut hi = bps[0];
    for &bp in bps.iter().skip(1) {
        let lo = bp;
        if g(lo) >= budget {
            let ghi = g(hi);
            let glo = g(lo);
            let theta = if (glo - ghi).abs() < f64::EPSILON * glo.abs().max(1.0) {
                lo
            } else {
                lo + (glo - budget) * (hi - lo) / (glo - ghi)
            };
            return y
                .iter()
                .zip(caps)
                .map(|(&yi, &ui)| (yi - theta).clamp(0.0, ui))
                .collect();
        }
        hi = lo;
    }
    // Budget unreachable below the smallest breakpoint: caps sum below the
    // budget, but then the boxed point would have passed the early return.
    boxed
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamDomain};
    use rand::Rng;

    fn grid_min_dot(set: &DecisionSet, c: &[f64], per_axis: usize) -> f64 {
        // brute-force LMO oracle over a feasible grid
        let u = set.coordinatewise_max();
        let n = u.len();
        let mut best = f64::INFINITY;
        let mut idx = vec![0usize; n];
        loop {
            let x: Vec<f64> = (0..n)
                .map(|i| u[i] * idx[i] as f64 / (per_axis - 1) as f64)
                .collect();
            if set.contains(&x, 1e-12) {
                best = best.min(linalg::dot(c, &x));
            }
            let mut k = 0;
            loop {
                idx[k] += 1;
                if idx[k] < per_axis {
                    break;
                }
                idx[k] = 0;
                k += 1;
                if k == n {
                    return best;
                }
            }
        }
    }

    #[test]
    fn lmo_simplex_most_negative_coordinate() {
        let set = DecisionSet::budgeted_simplex(1.0, 3);
        assert_eq!(set.lmo(&[-1.0, -2.0, 3.0]), vec![0.0, 1.0, 0.0]);
        assert_eq!(set.lmo(&[1.0, 2.0, 3.0]), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn lmo_ball_matches_grid_search() {
        let set = DecisionSet::nonneg_ball(2.0, 2);
        let v = set.lmo(&[-3.0, 4.0]);
        assert!((v[0] - 2.0).abs() < 1e-12 && v[1].abs() < 1e-12);
        let grid_best = grid_min_dot(&set, &[-3.0, 4.0], 401);
        assert!((linalg::dot(&[-3.0, 4.0], &v) - grid_best).abs() < 0.02);
        assert!((linalg::dot(&[-3.0, 4.0], &v) - (-6.0)).abs() < 1e-12);
    }

    #[test]
    fn lmo_ties_prefer_origin_and_low_index() {
        let set = DecisionSet::budgeted_simplex(1.0, 3);
        assert_eq!(set.lmo(&[0.0, 0.0, 0.0]), vec![0.0, 0.0, 0.0]);
        assert_eq!(set.lmo(&[-1.0, -1.0, 0.0]), vec![1.0, 0.0, 0.0]);
        let boxset = DecisionSet::unit_box(2);
        assert_eq!(boxset.lmo(&[0.0, -1.0]), vec![0.0, 1.0]);
    }

    #[test]
    fn contains_examples() {
        let boxset = DecisionSet::unit_box(2);
        assert!(boxset.contains(&[0.5, 0.5], 0.0));
        assert!(boxset.contains(&[1.0 + 1e-8, 0.0], 1e-6));
        let simplex = DecisionSet::budgeted_simplex(1.0, 2);
        assert!(!simplex.contains(&[0.8, 0.8], 1e-6));
    }

    #[test]
    fn project_box_clamps() {
        let set = DecisionSet::unit_box(2);
        assert_eq!(set.exact_project(&[2.0, -0.5]), vec![1.0, 0.0]);
    }

    #[test]
    fn project_simplex_threshold() {
        let set = DecisionSet::budgeted_simplex(1.0, 2);
        let p = set.exact_project(&[0.8, 0.8]);
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn project_is_identity_on_feasible_points() {
        let sets = [
            DecisionSet::unit_box(3),
            DecisionSet::budgeted_simplex(1.0, 3),
            DecisionSet::nonneg_ball(2.0, 3),
        ];
        let mut rng = stream(11, StreamDomain::Aux, 0, 0);
        for set in &sets {
            for _ in 0..50 {
                let x = set.sample(&mut rng);
                let p = set.exact_project(&x);
                assert!(linalg::dist(&x, &p) < 1e-12);
            }
        }
    }

    #[test]
    fn project_simplex_matches_dense_grid() {
        let set = DecisionSet::budgeted_simplex(1.0, 2);
        let mut rng = stream(12, StreamDomain::Aux, 0, 0);
        for _ in 0..20 {
            let y = [rng.gen::<f64>() * 3.0 - 0.5, rng.gen::<f64>() * 3.0 - 0.5];
            let p = set.exact_project(&y);
            assert!(set.contains(&p, 1e-9));
            let d_opt = linalg::dist_sq(&y, &p);
            // dense grid over the simplex
            let m = 400;
            for i in 0..=m {
                for j in 0..=(m - i) {
                    let z = [i as f64 / m as f64, j as f64 / m as f64];
                    let d = linalg::dist_sq(&y, &z);
                    assert!(d_opt <= d + 1e-4, "grid point closer: {:?} vs {:?}", z, p);
                }
            }
        }
    }

    #[test]
    fn radius_and_coordinatewise_max() {
        let boxset = DecisionSet::unit_box(2);
        assert!((boxset.radius() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(boxset.coordinatewise_max(), vec![1.0, 1.0]);

        let simplex = DecisionSet::budgeted_simplex(1.0, 3);
        assert_eq!(simplex.radius(), 1.0);
        assert_eq!(simplex.coordinatewise_max(), vec![1.0, 1.0, 1.0]);

        let ball = DecisionSet::nonneg_ball(2.0, 2);
        assert_eq!(ball.radius(), 2.0);
        assert_eq!(ball.coordinatewise_max(), vec![2.0, 2.0]);
    }

    #[test]
    fn radius_witness_is_feasible_and_tight() {
        for set in [
            DecisionSet::unit_box(3),
            DecisionSet::budgeted_simplex(1.0, 3),
            DecisionSet::BudgetedSimplex {
                budget: 1.5,
                caps: vec![1.0, 0.3, 1.0],
            },
            DecisionSet::nonneg_ball(2.0, 4),
        ] {
            let w = set.radius_witness();
            assert!(set.contains(&w, 1e-12));
            assert!(linalg::norm(&w) >= set.radius() - 1e-12);
        }
    }

    #[test]
    fn lmo_optimality_randomized() {
        let sets = [
            DecisionSet::unit_box(3),
            DecisionSet::budgeted_simplex(1.0, 3),
            DecisionSet::nonneg_ball(1.5, 3),
        ];
        let mut rng = stream(13, StreamDomain::Aux, 0, 0);
        for set in &sets {
            for _ in 0..1000 {
                let c: Vec<f64> = (0..3).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
                let v = set.lmo(&c);
                assert!(set.contains(&v, 1e-9));
                let x = set.sample(&mut rng);
                assert!(linalg::dot(&c, &v) <= linalg::dot(&c, &x) + 1e-10);
            }
        }
    }

    #[test]
    fn projection_fejer_property() {
        let sets = [
            DecisionSet::unit_box(2),
            DecisionSet::budgeted_simplex(1.0, 2),
            DecisionSet::nonneg_ball(1.5, 2),
        ];
        let mut rng = stream(14, StreamDomain::Aux, 0, 0);
        for set in &sets {
            for _ in 0..50 {
                let y: Vec<f64> = (0..2).map(|_| rng.gen::<f64>() * 6.0 - 3.0).collect();
                let p = set.exact_project(&y);
                assert!(set.contains(&p, 1e-9));
                for _ in 0..100 {
                    let z = set.sample(&mut rng);
                    assert!(linalg::dist(&p, &z) <= linalg::dist(&y, &z) + 1e-9);
                }
            }
        }
    }
}
