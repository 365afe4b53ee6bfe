//! Run records: per-round rewards, per-block iterate snapshots, and oracle
//! counters. One record per (algorithm, seed, node); the harness attaches
//! comparator values and regret traces after the fact.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub grad_evals: u64,
    pub lo_steps: u64,
    pub projections: u64,
    pub comms: u64,
}

/// One played round. Counters are cumulative as of the end of the round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRow {
    /// 1-based round index.
    pub t: usize,
    /// 1-based block index the decision belongs to.
    pub block: usize,
    /// Exact (noise-free) reward of the played decision.
    pub reward: f64,
    pub cum_reward: f64,
    pub counters: Counters,
}

/// Iterate state at the start of a block. Entry `m-1` of the block list is
/// the state played during block `m`; one trailing entry holds the never-
/// played final state so post-run invariants can inspect the last oracle
/// call too.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockState {
    /// Feasible decision `x_m`.
    pub x: Vec<f64>,
    /// Infeasible anchor `y~_m` (in the radius ball).
    pub y_tilde: Vec<f64>,
    /// Pre-oracle target `y_m` that produced this state; `None` for the
    /// initial state.
    pub y_pre: Option<Vec<f64>>,
    /// LMO calls consumed by the oracle invocation that produced this state.
    pub lo_steps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: String,
    pub seed: u64,
    /// Node id; 0 for centralized runs.
    pub node: usize,
    pub horizon: usize,
    pub block_size: usize,
    pub rounds: Vec<RoundRow>,
    pub blocks: Vec<BlockState>,
    pub counters: Counters,
    /// Offline comparator value over the full horizon, once computed.
    pub comparator: Option<f64>,
    /// Per-round alpha-regret trace, once computed (empty until then).
    pub alpha_regret: Vec<f64>,
}

impl RunRecord {
    pub fn new(algorithm: &str, seed: u64, node: usize, horizon: usize, block_size: usize) -> Self {
        RunRecord {
            algorithm: algorithm.to_string(),
            seed,
            node,
            horizon,
            block_size,
            rounds: Vec::with_capacity(horizon),
            blocks: Vec::new(),
            counters: Counters::default(),
            comparator: None,
            alpha_regret: Vec::new(),
        }
    }

    pub fn total_reward(&self) -> f64 {
        self.rounds.last().map_or(0.0, |r| r.cum_reward)
    }

    pub fn push_round(&mut self, block: usize, reward: f64) {
        let cum = self.total_reward() + reward;
        self.rounds.push(RoundRow {
            t: self.rounds.len() + 1,
            block,
            reward,
            cum_reward: cum,
            counters: self.counters,
        });
    }

    /// Decision played at 1-based round `t`.
    pub fn decision_at(&self, t: usize) -> &[f64] {
        let block = self.rounds[t - 1].block;
        &self.blocks[block - 1].x
    }
}
