//! POBGA and the projection-based baselines OGA / OBGA.
//!
//! POBGA plays a fixed decision for a block of `K` rounds, accumulates the
//! boosted stochastic gradients queried during the block, takes one
//! ascent step on the infeasible anchor, and re-couples the pair through
//! the infeasible projection oracle. The baselines update every round with
//! an exact Euclidean projection instead.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::functions::{
    boosted_stochastic_grad, stochastic_grad, NoiseModel, RewardFunction, ONE_MINUS_INV_E,
};
use crate::infeasible_projection::{o_ip, OracleError};
use crate::linalg;
use crate::record::{BlockState, RunRecord};
use crate::rng::{stream, StreamDomain};
use crate::sets::DecisionSet;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Horizon, block size, step size, and oracle tolerance of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PobgaParams {
    pub horizon: usize,
    pub block_size: usize,
    pub eta: f64,
    pub epsilon: f64,
}

impl PobgaParams {
    pub fn manual(horizon: usize, block_size: usize, eta: f64, epsilon: f64) -> Result<Self, RunError> {
        let p = PobgaParams {
            horizon,
            block_size,
            eta,
            epsilon,
        };
        p.validate()?;
        Ok(p)
    }

    /// Schedule with the published decay rates but caller-chosen leading
    /// constants: `eta = c_eta R / ((1 - 1/e) G) T^{-3/4}`,
    /// `epsilon = c_eps R^2 T^{-1/2}`, `K = sqrt(T)`.
    pub fn scaled_schedule(
        horizon: usize,
        radius: f64,
        grad_bound: f64,
        c_eta: f64,
        c_eps: f64,
    ) -> Result<Self, RunError> {
        let t = horizon as f64;
        let k = t.sqrt();
        if k.fract() != 0.0 {
            return Err(RunError::InvalidParams(format!(
                "horizon {horizon} is not a perfect square; pick K manually"
            )));
        }
        let eta = c_eta * radius / (ONE_MINUS_INV_E * grad_bound) * t.powf(-0.75);
        let epsilon = c_eps * radius * radius / t.sqrt();
        PobgaParams::manual(horizon, k as usize, eta, epsilon)
    }

    pub fn blocks(&self) -> usize {
        self.horizon / self.block_size
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if self.horizon == 0 || self.block_size == 0 {
            return Err(RunError::InvalidParams("horizon and block size must be positive".into()));
        }
        if self.horizon % self.block_size != 0 {
            return Err(RunError::InvalidParams(format!(
                "block size {} does not divide horizon {}",
                self.block_size, self.horizon
            )));
        }
        if !(self.eta > 0.0) || !(self.epsilon > 0.0) {
            return Err(RunError::InvalidParams(
                "step size and tolerance must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// The published schedule: `eta = 20 R / ((1 - 1/e) G) T^{-3/4}`,
/// `epsilon = 405 R^2 T^{-1/2}`, `K = sqrt(T)`. Rejects horizons that are
/// not perfect squares; use [`PobgaParams::manual`] to override `K`.
pub fn pobga_params_from_theorem(
    horizon: usize,
    radius: f64,
    grad_bound: f64,
) -> Result<PobgaParams, RunError> {
    PobgaParams::scaled_schedule(horizon, radius, grad_bound, 20.0, 405.0)
}

/// Run POBGA against a round-indexed function source (0-based rounds).
///
/// Per block: `K` boosted stochastic gradient queries (one gradient
/// evaluation each), one ascent step on the anchor, one oracle call. The
/// reward log uses exact function values even when gradients are noisy.
pub fn pobga_run(
    functions: &impl Fn(usize) -> RewardFunction,
    set: &DecisionSet,
    params: &PobgaParams,
    noise: &NoiseModel,
    seed: u64,
) -> Result<RunRecord, RunError> {
    params.validate()?;
    let mut record = RunRecord::new("pobga", seed, 0, params.horizon, params.block_size);
    run_blocked(functions, set, params, noise, seed, 0, &mut record)?;
    Ok(record)
}

/// Shared block loop for POBGA and the per-node body of DPOBGA. The caller
/// supplies the node id for stream derivation and two hooks that fix the
/// mixing inputs of the oracle call; centralized runs pass the identity.
pub(crate) fn run_blocked(
    functions: &impl Fn(usize) -> RewardFunction,
    set: &DecisionSet,
    params: &PobgaParams,
    noise: &NoiseModel,
    seed: u64,
    node: usize,
    record: &mut RunRecord,
) -> Result<(), RunError> {
    let n = set.dim();
    let mut x = vec![0.0; n];
    let mut y_tilde = vec![0.0; n];
    record.blocks.push(BlockState {
        x: x.clone(),
        y_tilde: y_tilde.clone(),
        y_pre: None,
        lo_steps: 0,
    });
    for m in 1..=params.blocks() {
        let acc = accumulate_block(functions, set, params, noise, seed, node, m, &x, record);
        let mut y_next = y_tilde.clone();
        linalg::axpy(&mut y_next, params.eta, &acc);
        let out = o_ip(set, &x, &y_next, params.epsilon)?;
        record.counters.lo_steps += out.lo_steps;
        x = out.x;
        y_tilde = out.y_tilde;
        record.blocks.push(BlockState {
            x: x.clone(),
            y_tilde: y_tilde.clone(),
            y_pre: Some(y_next),
            lo_steps: out.lo_steps,
        });
    }
    Ok(())
}

/// Play `x` for every round of block `m`, log exact rewards, and return the
/// summed boosted stochastic gradients.
pub(crate) fn accumulate_block(
    functions: &impl Fn(usize) -> RewardFunction,
    set: &DecisionSet,
    params: &PobgaParams,
    noise: &NoiseModel,
    seed: u64,
    node: usize,
    m: usize,
    x: &[f64],
    record: &mut RunRecord,
) -> Vec<f64> {
    let n = set.dim();
    let mut rng = stream(seed, StreamDomain::BlockDraws, node as u64, m as u64);
    let mut acc = vec![0.0; n];
    let start = (m - 1) * params.block_size;
    for t in start..start + params.block_size {
        let f = functions(t);
        record.push_round(m, f.eval(x));
        let g = boosted_stochastic_grad(&f, x, noise, &mut rng);
        record.counters.grad_evals += 1;
        // counters snapshot in the row should include this round's query
        record.rounds.last_mut().expect("just pushed").counters = record.counters;
        linalg::axpy(&mut acc, 1.0, &g);
    }
    acc
}

/// Online gradient ascent baseline: per-round stochastic gradient step and
/// exact projection.
pub fn oga_run(
    functions: &impl Fn(usize) -> RewardFunction,
    set: &DecisionSet,
    eta: f64,
    noise: &NoiseModel,
    seed: u64,
    horizon: usize,
) -> RunRecord {
    projected_ascent_run("oga", functions, set, eta, noise, seed, horizon, false)
}

/// OGA with the boosted stochastic gradient in place of the plain one.
pub fn obga_run(
    functions: &impl Fn(usize) -> RewardFunction,
    set: &DecisionSet,
    eta: f64,
    noise: &NoiseModel,
    seed: u64,
    horizon: usize,
) -> RunRecord {
    projected_ascent_run("obga", functions, set, eta, noise, seed, horizon, true)
}

#[allow(clippy::too_many_arguments)]
fn projected_ascent_run(
    name: &str,
    functions: &impl Fn(usize) -> RewardFunction,
    set: &DecisionSet,
    eta: f64,
    noise: &NoiseModel,
    seed: u64,
    horizon: usize,
    boosted: bool,
) -> RunRecord {
    assert!(eta > 0.0, "step size must be positive");
    let n = set.dim();
    let mut record = RunRecord::new(name, seed, 0, horizon, 1);
    let mut x = vec![0.0; n];
    record.blocks.push(BlockState {
        x: x.clone(),
        y_tilde: x.clone(),
        y_pre: None,
        lo_steps: 0,
    });
    for t in 0..horizon {
        let f = functions(t);
        record.push_round(t + 1, f.eval(&x));
        let mut rng = stream(seed, StreamDomain::BlockDraws, 0, (t + 1) as u64);
        let g = if boosted {
            boosted_stochastic_grad(&f, &x, noise, &mut rng)
        } else {
            stochastic_grad(&f, &x, noise, &mut rng)
        };
        record.counters.grad_evals += 1;
        let mut target = x.clone();
        linalg::axpy(&mut target, eta, &g);
        x = set.exact_project(&target);
        record.counters.projections += 1;
        record.rounds.last_mut().expect("just pushed").counters = record.counters;
        record.blocks.push(BlockState {
            x: x.clone(),
            y_tilde: x.clone(),
            y_pre: Some(target),
            lo_steps: 0,
        });
    }
    record
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::QuadraticReward;

    fn zero_function(_: usize) -> RewardFunction {
        RewardFunction::Quadratic(QuadraticReward::linear_only(vec![0.0, 0.0]))
    }

    fn linear_function(_: usize) -> RewardFunction {
        RewardFunction::Quadratic(QuadraticReward::linear_only(vec![1.0, 1.0]))
    }

    #[test]
    fn theorem_params_examples() {
        let p = pobga_params_from_theorem(65536, 1.0, 1.0).unwrap();
        assert_eq!(p.block_size, 256);
        assert!((p.eta - 0.007_724_495_639_010_383).abs() < 1e-12);
        assert_eq!(p.epsilon, 405.0 / 256.0);

        let p = pobga_params_from_theorem(256, 1.0, 1.0).unwrap();
        assert_eq!(p.block_size, 16);
        assert!((p.eta - 0.494_367_720_896_664_5).abs() < 1e-12);
        assert_eq!(p.epsilon, 405.0 / 16.0);
    }

    #[test]
    fn theorem_params_homogeneity() {
        let base = pobga_params_from_theorem(256, 1.0, 1.0).unwrap();
        let doubled_g = pobga_params_from_theorem(256, 1.0, 2.0).unwrap();
        assert!((doubled_g.eta - base.eta / 2.0).abs() < 1e-15);
        assert_eq!(doubled_g.epsilon, base.epsilon);
        let doubled_r = pobga_params_from_theorem(256, 2.0, 1.0).unwrap();
        assert!((doubled_r.eta - 2.0 * base.eta).abs() < 1e-15);
        assert_eq!(doubled_r.epsilon, 4.0 * base.epsilon);
    }

    #[test]
    fn theorem_params_reject_non_square_horizon() {
        assert!(pobga_params_from_theorem(1000, 1.0, 1.0).is_err());
        // manual path accepts any divisible block size
        assert!(PobgaParams::manual(1000, 10, 0.1, 0.1).is_ok());
        assert!(PobgaParams::manual(1000, 7, 0.1, 0.1).is_err());
    }

    #[test]
    fn pobga_single_block_plays_origin() {
        let set = DecisionSet::budgeted_simplex(1.0, 2);
        let params = PobgaParams::manual(16, 16, 0.1, 0.05).unwrap();
        let rec = pobga_run(&linear_function, &set, &params, &NoiseModel::noiseless(), 3).unwrap();
        assert_eq!(rec.blocks.len(), 2); // initial + final
        for row in &rec.rounds {
            assert_eq!(row.block, 1);
            assert_eq!(row.reward, 0.0); // f(0) = 0 played throughout
        }
        assert_eq!(rec.counters.grad_evals, 16);
    }

    #[test]
    fn pobga_zero_functions_stay_at_origin() {
        let set = DecisionSet::budgeted_simplex(1.0, 2);
        let params = PobgaParams::manual(64, 8, 0.3, 0.02).unwrap();
        let rec = pobga_run(&zero_function, &set, &params, &NoiseModel::noiseless(), 5).unwrap();
        for b in &rec.blocks {
            assert_eq!(b.x, vec![0.0, 0.0]);
            assert_eq!(b.y_tilde, vec![0.0, 0.0]);
        }
        assert_eq!(rec.total_reward(), 0.0);
    }

    #[test]
    fn pobga_counters_are_exact() {
        let set = DecisionSet::budgeted_simplex(1.0, 2);
        let params = PobgaParams::scaled_schedule(256, 1.0, 2.0, 2.0, 1.0 / 3.0).unwrap();
        let rec = pobga_run(
            &linear_function,
            &set,
            &params,
            &NoiseModel::new(0.1),
            7,
        )
        .unwrap();
        assert_eq!(rec.counters.grad_evals, 256);
        assert_eq!(rec.blocks.len(), 17); // 16 oracle calls + initial state
        assert_eq!(rec.counters.projections, 0);
        // feasibility and anchor bounds at every block
        for b in &rec.blocks {
            assert!(set.contains(&b.x, 1e-9));
            assert!(linalg::norm(&b.y_tilde) <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn pobga_is_deterministic() {
        let set = DecisionSet::budgeted_simplex(1.0, 2);
        let params = PobgaParams::manual(64, 8, 0.2, 0.02).unwrap();
        let noise = NoiseModel::new(0.1);
        let a = pobga_run(&linear_function, &set, &params, &noise, 11).unwrap();
        let b = pobga_run(&linear_function, &set, &params, &noise, 11).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        let c = pobga_run(&linear_function, &set, &params, &noise, 12).unwrap();
        assert_ne!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&c).unwrap()
        );
    }

    #[test]
    fn oga_zero_functions_hold_still() {
        let set = DecisionSet::unit_box(2);
        let rec = oga_run(&zero_function, &set, 0.1, &NoiseModel::noiseless(), 1, 16);
        for b in &rec.blocks {
            assert_eq!(b.x, vec![0.0, 0.0]);
        }
        assert_eq!(rec.counters.projections, 16);
        assert_eq!(rec.counters.grad_evals, 16);
    }

    #[test]
    fn oga_single_step_interior() {
        let set = DecisionSet::unit_box(2);
        let rec = oga_run(&linear_function, &set, 0.1, &NoiseModel::noiseless(), 1, 1);
        assert_eq!(rec.blocks[1].x, vec![0.1, 0.1]);
    }

    #[test]
    fn oga_huge_step_clamps_to_box() {
        let set = DecisionSet::unit_box(2);
        let rec = oga_run(&linear_function, &set, 1e3, &NoiseModel::noiseless(), 1, 1);
        assert_eq!(rec.blocks[1].x, vec![1.0, 1.0]);
    }

    #[test]
    fn obga_single_step_applies_boost_factor() {
        let set = DecisionSet::unit_box(2);
        let rec = obga_run(&linear_function, &set, 0.1, &NoiseModel::noiseless(), 1, 1);
        let expect = 0.1 * ONE_MINUS_INV_E;
        assert!((rec.blocks[1].x[0] - expect).abs() < 1e-15);
        assert!((rec.blocks[1].x[1] - expect).abs() < 1e-15);
        // zero functions and clamp behave exactly like oga
        let z = obga_run(&zero_function, &set, 0.1, &NoiseModel::noiseless(), 1, 4);
        assert!(z.blocks.iter().all(|b| b.x == vec![0.0, 0.0]));
        let big = obga_run(&linear_function, &set, 1e4, &NoiseModel::noiseless(), 1, 1);
        assert_eq!(big.blocks[1].x, vec![1.0, 1.0]);
    }
}
