//! DPOBGA over a simulated synchronous gossip network.
//!
//! Nodes hold local decision/anchor pairs, exchange them with neighbors
//! once per block, mix with a doubly stochastic weight matrix, and run the
//! POBGA block update against their local reward stream. The per-node loops
//! execute sequentially here, but all mixing reads pre-round snapshots and
//! every node owns seed-derived random streams, so results are independent
//! of execution order.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithms::{accumulate_block, PobgaParams, RunError};
use crate::functions::{NoiseModel, RewardFunction};
use crate::infeasible_projection::o_ip;
use crate::linalg;
use crate::record::{BlockState, RunRecord};
use crate::sets::DecisionSet;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("invalid node count {0} for topology")]
    InvalidNodeCount(usize),
    #[error("weight matrix must be symmetric")]
    Asymmetric,
    #[error("network spectral quantity beta = {0} is not below 1 (disconnected graph?)")]
    BetaNotBelowOne(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Complete,
    Cycle,
    Star,
    Grid,
}

/// Undirected graph as an adjacency list (no self loops stored).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    pub nodes: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn degree(&self, i: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b)| a == i || b == i)
            .count()
    }

    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        let mut ns: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == i {
                    Some(b)
                } else if b == i {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        ns.sort_unstable();
        ns
    }
}

/// Connected graph of the named family.
pub fn build_topology(kind: Topology, n: usize) -> Result<Graph, NetworkError> {
    if n < 2 {
        return Err(NetworkError::InvalidNodeCount(n));
    }
    let edges = match kind {
        Topology::Complete => (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect(),
        Topology::Cycle => {
            if n < 3 {
                return Err(NetworkError::InvalidNodeCount(n));
            }
            (0..n).map(|i| (i, (i + 1) % n)).collect()
        }
        Topology::Star => (1..n).map(|i| (0, i)).collect(),
        Topology::Grid => {
            let side = (n as f64).sqrt().round() as usize;
            if side * side != n || side < 2 {
                return Err(NetworkError::InvalidNodeCount(n));
            }
            let mut es = Vec::new();
            for r in 0..side {
                for c in 0..side {
                    let i = r * side + c;
                    if c + 1 < side {
                        es.push((i, i + 1));
                    }
                    if r + 1 < side {
                        es.push((i, i + side));
                    }
                }
            }
            es
        }
    };
    Ok(Graph { nodes: n, edges })
}

/// Metropolis weights: `a_ij = 1 / (1 + max(d_i, d_j))` on edges, diagonal
/// absorbing the remainder. Symmetric and doubly stochastic on any graph.
pub fn metropolis_weights(graph: &Graph) -> Vec<Vec<f64>> {
    let n = graph.nodes;
    let deg: Vec<usize> = (0..n).map(|i| graph.degree(i)).collect();
    let mut a = vec![vec![0.0; n]; n];
    for &(i, j) in &graph.edges {
        let w = 1.0 / (1.0 + deg[i].max(deg[j]) as f64);
        a[i][j] = w;
        a[j][i] = w;
    }
    for i in 0..n {
        let off: f64 = a[i].iter().sum();
        a[i][i] = 1.0 - off;
    }
    a
}

/// Second-largest eigenvalue magnitude of a symmetric doubly stochastic
/// matrix. Rejects asymmetric input.
pub fn spectral_beta(a: &[Vec<f64>]) -> Result<f64, NetworkError> {
    let n = a.len();
    for i in 0..n {
        for j in 0..n {
            if (a[i][j] - a[j][i]).abs() > 1e-12 {
                return Err(NetworkError::Asymmetric);
            }
        }
    }
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let mut eigs: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    eigs.sort_by(|x, y| y.partial_cmp(x).unwrap());
    if n == 1 {
        return Ok(0.0);
    }
    Ok(eigs[1].abs().max(eigs[n - 1].abs()))
}

/// Gossip network: graph, mixing matrix, and its spectral quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub graph: Graph,
    pub weights: Vec<Vec<f64>>,
    pub beta: f64,
}

impl Network {
    /// Build the named topology with Metropolis weights.
    pub fn metropolis(kind: Topology, n: usize) -> Result<Self, NetworkError> {
        let graph = build_topology(kind, n)?;
        let weights = metropolis_weights(&graph);
        let beta = spectral_beta(&weights)?;
        Ok(Network {
            graph,
            weights,
            beta,
        })
    }

    /// Single node, identity mixing; DPOBGA degenerates to POBGA.
    pub fn singleton() -> Self {
        Network {
            graph: Graph {
                nodes: 1,
                edges: vec![],
            },
            weights: vec![vec![1.0]],
            beta: 0.0,
        }
    }

    pub fn nodes(&self) -> usize {
        self.graph.nodes
    }

    /// `sum_j a_ij v_j` over the per-node vectors.
    fn mix(&self, i: usize, values: &[Vec<f64>]) -> Vec<f64> {
        let n = values[0].len();
        let mut acc = vec![0.0; n];
        for (j, v) in values.iter().enumerate() {
            let w = self.weights[i][j];
            if w != 0.0 {
                linalg::axpy(&mut acc, w, v);
            }
        }
        acc
    }
}

/// Outcome of a decentralized run: one record per node plus the per-edge
/// message total (two directed messages per undirected edge per block).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpobgaOutcome {
    pub records: Vec<RunRecord>,
    pub edge_messages: u64,
}

/// Run DPOBGA. `functions(node, t)` is node `node`'s reward at 0-based
/// round `t`. Communication is counted once per node per block; all mixing
/// uses the pre-block snapshots.
pub fn dpobga_run(
    network: &Network,
    functions: &impl Fn(usize, usize) -> RewardFunction,
    set: &DecisionSet,
    params: &PobgaParams,
    noise: &NoiseModel,
    seed: u64,
) -> Result<DpobgaOutcome, RunError> {
    params.validate()?;
    if network.beta >= 1.0 {
        return Err(RunError::InvalidParams(format!(
            "network beta {} is not below 1",
            network.beta
        )));
    }
    let n_nodes = network.nodes();
    let dim = set.dim();
    let mut records: Vec<RunRecord> = (0..n_nodes)
        .map(|i| RunRecord::new("dpobga", seed, i, params.horizon, params.block_size))
        .collect();
    let mut xs = vec![vec![0.0; dim]; n_nodes];
    let mut y_tildes = vec![vec![0.0; dim]; n_nodes];
    for rec in &mut records {
        rec.blocks.push(BlockState {
            x: vec![0.0; dim],
            y_tilde: vec![0.0; dim],
            y_pre: None,
            lo_steps: 0,
        });
    }
    let mut edge_messages = 0u64;

    for m in 1..=params.blocks() {
        // exchange: snapshot the pre-block states; one communication event
        // per node, two directed messages per edge
        let x_snap = xs.clone();
        let y_snap = y_tildes.clone();
        for rec in &mut records {
            rec.counters.comms += 1;
        }
        edge_messages += 2 * network.graph.edges.len() as u64;

        // local gradient accumulation on the held decision
        let accs: Vec<Vec<f64>> = (0..n_nodes)
            .map(|i| {
                let local = |t: usize| functions(i, t);
                accumulate_block(
                    &local,
                    set,
                    params,
                    noise,
                    seed,
                    i,
                    m,
                    &x_snap[i],
                    &mut records[i],
                )
            })
            .collect();

        // mix snapshots, ascend, and re-couple through the oracle
        for i in 0..n_nodes {
            let mix_x = network.mix(i, &x_snap);
            let mut y_next = network.mix(i, &y_snap);
            linalg::axpy(&mut y_next, params.eta, &accs[i]);
            let out = o_ip(set, &mix_x, &y_next, params.epsilon)?;
            records[i].counters.lo_steps += out.lo_steps;
            xs[i] = out.x;
            y_tildes[i] = out.y_tilde;
            records[i].blocks.push(BlockState {
                x: xs[i].clone(),
                y_tilde: y_tildes[i].clone(),
                y_pre: Some(y_next),
                lo_steps: out.lo_steps,
            });
        }
        // counters in the round rows were snapshotted before the oracle ran;
        // refresh the final row of the block so cumulative counts line up
        for rec in &mut records {
            let c = rec.counters;
            rec.rounds.last_mut().expect("rounds nonempty").counters = c;
        }
    }

    Ok(DpobgaOutcome {
        records,
        edge_messages,
    })
}

/// Deviation of per-node anchors from their average at one block:
/// `(max_i ||y~_i - mean||, sqrt(sum_i ||y~_i - mean||^2))`.
pub fn consensus_gap(anchors: &[Vec<f64>]) -> (f64, f64) {
    let n = anchors.len();
    assert!(n > 0);
    let dim = anchors[0].len();
    let mut mean = vec![0.0; dim];
    for a in anchors {
        linalg::axpy(&mut mean, 1.0 / n as f64, a);
    }
    let mut max_dev = 0.0f64;
    let mut sum_sq = 0.0f64;
    for a in anchors {
        let d = linalg::dist(a, &mean);
        max_dev = max_dev.max(d);
        sum_sq += d * d;
    }
    (max_dev, sum_sq.sqrt())
}

/// Mixing-rate bound on the aggregate consensus gap:
/// `sqrt(N) (3 (1-1/e) eta K G + 2 sqrt(3 eps)) / (1 - beta)`.
pub fn consensus_bound(n_nodes: usize, params: &PobgaParams, grad_bound: f64, beta: f64) -> f64 {
    let drift = 3.0
        * crate::functions::ONE_MINUS_INV_E
        * params.eta
        * params.block_size as f64
        * grad_bound
        + 2.0 * (3.0 * params.epsilon).sqrt();
    (n_nodes as f64).sqrt() * drift / (1.0 - beta)
}

/// Bound on the per-node oracle residual `||y~_m - y_m||`:
/// `2 sqrt(3 eps) + 2 (1-1/e) eta K G`.
pub fn residual_bound(params: &PobgaParams, grad_bound: f64) -> f64 {
    2.0 * (3.0 * params.epsilon).sqrt()
        + 2.0 * crate::functions::ONE_MINUS_INV_E
            * params.eta
            * params.block_size as f64
            * grad_bound
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::pobga_run;
    use crate::functions::QuadraticReward;

    fn linear_function(_: usize) -> RewardFunction {
        RewardFunction::Quadratic(QuadraticReward::linear_only(vec![0.6, 1.0]))
    }

    #[test]
    fn topology_examples() {
        assert_eq!(build_topology(Topology::Complete, 3).unwrap().edges.len(), 3);
        let cycle = build_topology(Topology::Cycle, 4).unwrap();
        assert_eq!(cycle.edges.len(), 4);
        assert!((0..4).all(|i| cycle.degree(i) == 2));
        let star = build_topology(Topology::Star, 5).unwrap();
        assert_eq!(star.edges.len(), 4);
        assert_eq!(star.degree(0), 4);
        assert!(build_topology(Topology::Grid, 9).is_ok());
        assert!(build_topology(Topology::Grid, 8).is_err());
        assert!(build_topology(Topology::Cycle, 2).is_err());
    }

    #[test]
    fn metropolis_complete_three_nodes() {
        let g = build_topology(Topology::Complete, 3).unwrap();
        let a = metropolis_weights(&g);
        for row in &a {
            for &v in row {
                assert!((v - 1.0 / 3.0).abs() < 1e-15);
            }
        }
        assert!(spectral_beta(&a).unwrap() < 1e-12);
    }

    #[test]
    fn metropolis_path_two_nodes() {
        let g = Graph {
            nodes: 2,
            edges: vec![(0, 1)],
        };
        let a = metropolis_weights(&g);
        for row in &a {
            for &v in row {
                assert!((v - 0.5).abs() < 1e-15);
            }
        }
        assert!(spectral_beta(&a).unwrap() < 1e-12);
    }

    #[test]
    fn metropolis_cycle_four_nodes_beta_third() {
        let net = Network::metropolis(Topology::Cycle, 4).unwrap();
        for i in 0..4 {
            assert!((net.weights[i][i] - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!((net.beta - 1.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn weight_matrix_invariants_all_topologies() {
        for (kind, n) in [
            (Topology::Complete, 5),
            (Topology::Cycle, 6),
            (Topology::Star, 5),
            (Topology::Grid, 9),
        ] {
            let net = Network::metropolis(kind, n).unwrap();
            let a = &net.weights;
            for i in 0..n {
                let row: f64 = a[i].iter().sum();
                let col: f64 = (0..n).map(|j| a[j][i]).sum();
                assert!((row - 1.0).abs() < 1e-12);
                assert!((col - 1.0).abs() < 1e-12);
                for j in 0..n {
                    assert_eq!(a[i][j], a[j][i]);
                    assert!(a[i][j] >= 0.0);
                    if i != j && a[i][j] > 0.0 {
                        assert!(net.graph.neighbors(i).contains(&j), "support violated");
                    }
                }
            }
            assert!(net.beta < 1.0);
        }
    }

    #[test]
    fn spectral_beta_flags_identity_and_rejects_asymmetric() {
        let eye = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!((spectral_beta(&eye).unwrap() - 1.0).abs() < 1e-12);
        let avg = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        assert!(spectral_beta(&avg).unwrap() < 1e-12);
        let bad = vec![vec![0.5, 0.5], vec![0.2, 0.8]];
        assert!(spectral_beta(&bad).is_err());
    }

    #[test]
    fn consensus_gap_trivial_cases() {
        assert_eq!(consensus_gap(&[vec![0.3, 0.4]]), (0.0, 0.0));
        let (mx, agg) = consensus_gap(&[vec![0.5, 0.5], vec![0.5, 0.5]]);
        assert!(mx < 1e-15 && agg < 1e-15);
    }

    #[test]
    fn single_node_matches_pobga_bitwise() {
        let set = DecisionSet::budgeted_simplex(1.0, 2);
        let params = PobgaParams::scaled_schedule(64, 1.0, 1.7, 2.0, 1.0 / 3.0).unwrap();
        let noise = NoiseModel::new(0.1);
        let net = Network::singleton();
        let central = pobga_run(&linear_function, &set, &params, &noise, 42).unwrap();
        let outcome = dpobga_run(
            &net,
            &|_, t| linear_function(t),
            &set,
            &params,
            &noise,
            42,
        )
        .unwrap();
        let node = &outcome.records[0];
        assert_eq!(node.blocks.len(), central.blocks.len());
        for (a, b) in node.blocks.iter().zip(&central.blocks) {
            assert_eq!(a.x, b.x);
            assert_eq!(a.y_tilde, b.y_tilde);
            assert_eq!(a.lo_steps, b.lo_steps);
        }
        for (a, b) in node.rounds.iter().zip(&central.rounds) {
            assert_eq!(a.reward.to_bits(), b.reward.to_bits());
        }
        assert_eq!(node.counters.lo_steps, central.counters.lo_steps);
        assert_eq!(node.counters.grad_evals, central.counters.grad_evals);
    }

    #[test]
    fn zero_functions_stay_at_origin_everywhere() {
        let set = DecisionSet::budgeted_simplex(1.0, 2);
        let params = PobgaParams::manual(32, 4, 0.2, 0.05).unwrap();
        let net = Network::metropolis(Topology::Cycle, 4).unwrap();
        let zero = |_: usize, _: usize| {
            RewardFunction::Quadratic(QuadraticReward::linear_only(vec![0.0, 0.0]))
        };
        let outcome =
            dpobga_run(&net, &zero, &set, &params, &NoiseModel::noiseless(), 9).unwrap();
        for rec in &outcome.records {
            assert_eq!(rec.counters.comms, 8);
            for b in &rec.blocks {
                assert_eq!(b.x, vec![0.0, 0.0]);
            }
            assert_eq!(rec.total_reward(), 0.0);
        }
    }

    #[test]
    fn counters_and_order_independence() {
        let set = DecisionSet::budgeted_simplex(1.0, 2);
        let params = PobgaParams::scaled_schedule(256, 1.0, 1.7, 2.0, 1.0 / 3.0).unwrap();
        let noise = NoiseModel::new(0.1);
        let net = Network::metropolis(Topology::Cycle, 4).unwrap();
        let f = |i: usize, _t: usize| {
            RewardFunction::Quadratic(QuadraticReward::linear_only(vec![
                0.5 + 0.1 * i as f64,
                1.0 - 0.1 * i as f64,
            ]))
        };
        let a = dpobga_run(&net, &f, &set, &params, &noise, 3).unwrap();
        let b = dpobga_run(&net, &f, &set, &params, &noise, 3).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        for rec in &a.records {
            assert_eq!(rec.counters.comms, 16);
            assert_eq!(rec.counters.grad_evals, 256);
        }
        assert_eq!(a.edge_messages, 2 * 4 * 16);
    }

    #[test]
    fn residual_and_consensus_bounds_hold() {
        let set = DecisionSet::budgeted_simplex(1.0, 2);
        let g_bound = 1.7f64;
        let params = PobgaParams::scaled_schedule(256, 1.0, g_bound, 2.0, 1.0 / 3.0).unwrap();
        let noise = NoiseModel::new(0.1);
        let net = Network::metropolis(Topology::Cycle, 4).unwrap();
        let f = |i: usize, _t: usize| {
            RewardFunction::Quadratic(QuadraticReward::linear_only(vec![
                0.4 + 0.1 * i as f64,
                1.0 - 0.05 * i as f64,
            ]))
        };
        let outcome = dpobga_run(&net, &f, &set, &params, &noise, 5).unwrap();
        let r_bound = residual_bound(&params, g_bound);
        let c_bound = consensus_bound(4, &params, g_bound, net.beta);
        let blocks = params.blocks();
        for m in 0..=blocks {
            for rec in &outcome.records {
                let b = &rec.blocks[m];
                if let Some(y_pre) = &b.y_pre {
                    assert!(linalg::dist(&b.y_tilde, y_pre) <= r_bound + 1e-6);
                }
            }
            let anchors: Vec<Vec<f64>> = outcome
                .records
                .iter()
                .map(|r| r.blocks[m].y_tilde.clone())
                .collect();
            let (_, agg) = consensus_gap(&anchors);
            assert!(agg <= c_bound + 1e-6, "block {m}: {agg} vs {c_bound}");
        }
    }
}
