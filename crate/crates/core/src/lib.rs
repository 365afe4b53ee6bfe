//! Projection-free online continuous DR-submodular maximization.
//!
//! The library implements the POBGA online learner (boosted gradient ascent
//! combined with an infeasible projection oracle and blocking), its
//! decentralized gossip variant DPOBGA, the projection-based baselines OGA
//! and OBGA, and the experiment harness used to verify the oracle budgets
//! and regret behaviour at desk scale.
//!
//! Everything is deterministic given a master seed: per-block random streams
//! are derived from `(seed, node, block)` so that runs are reproducible and
//! independent of node execution order.

pub mod algorithms;
pub mod decentralized;
pub mod functions;
pub mod harness;
pub mod infeasible_projection;
pub mod linalg;
pub mod quadrature;
pub mod record;
pub mod rng;
pub mod sets;
pub mod verify;

pub use algorithms::{obga_run, oga_run, pobga_params_from_theorem, pobga_run, PobgaParams};
pub use decentralized::{
    build_topology, consensus_gap, dpobga_run, metropolis_weights, spectral_beta, Network,
    Topology,
};
pub use functions::{
    boosted_stochastic_grad, sample_boost_z, stochastic_grad, CoverageReward, GradientBound,
    NoiseModel, QuadraticReward, RewardFunction,
};
pub use harness::{
    alpha_regret, decentralized_regret, offline_best, slope_estimate, Adversary, AdversaryFamily,
    AdversarySpec, Regeneration,
};
pub use infeasible_projection::{o_ip, shfw, IpResult, OracleError, ShfwOutcome, StopReason};
pub use record::{BlockState, Counters, RoundRow, RunRecord};
pub use sets::DecisionSet;
