//! JSON experiment configuration.
//!
//! The schema mirrors the library's domain types: a decision set, an
//! adversary spec, one or more horizons, a parameter mode, and (for the
//! decentralized algorithm) a network description. Validation errors carry
//! the offending field so config mistakes are quick to fix.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use ocsm_core::decentralized::{Network, Topology};
use ocsm_core::harness::AdversarySpec;
use ocsm_core::{DecisionSet, PobgaParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Pobga,
    Dpobga,
    Oga,
    Obga,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Pobga => "pobga",
            Algorithm::Dpobga => "dpobga",
            Algorithm::Oga => "oga",
            Algorithm::Obga => "obga",
        }
    }
}

/// Decision-set description. `caps` may be omitted for the simplex, in
/// which case every coordinate is capped at the budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetSpec {
    Box {
        caps: Vec<f64>,
    },
    BudgetedSimplex {
        budget: f64,
        dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        caps: Option<Vec<f64>>,
    },
    NonnegBall {
        radius: f64,
        dim: usize,
    },
}

impl SetSpec {
    pub fn build(&self) -> Result<DecisionSet> {
        let set = match self {
            SetSpec::Box { caps } => DecisionSet::Box { caps: caps.clone() },
            SetSpec::BudgetedSimplex { budget, dim, caps } => {
                let caps = caps.clone().unwrap_or_else(|| vec![*budget; *dim]);
                if caps.len() != *dim {
                    bail!("set.caps: expected {dim} entries, got {}", caps.len());
                }
                DecisionSet::BudgetedSimplex {
                    budget: *budget,
                    caps,
                }
            }
            SetSpec::NonnegBall { radius, dim } => DecisionSet::NonnegBall {
                radius: *radius,
                dim: *dim,
            },
        };
        set.validate().map_err(|e| anyhow::anyhow!("set: {e}"))?;
        Ok(set)
    }
}

/// Step-size / tolerance / block-size selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ParamMode {
    /// Published schedule; requires perfect-square horizons.
    Theorem,
    /// Literal values; `block_size` must divide every horizon.
    Manual {
        eta: f64,
        epsilon: f64,
        block_size: usize,
    },
    /// Published decay rates with custom leading constants.
    Scaled { eta_coeff: f64, eps_coeff: f64 },
}

impl ParamMode {
    pub fn build(&self, horizon: usize, radius: f64, grad_bound: f64) -> Result<PobgaParams> {
        let params = match self {
            ParamMode::Theorem => {
                ocsm_core::pobga_params_from_theorem(horizon, radius, grad_bound)
            }
            ParamMode::Manual {
                eta,
                epsilon,
                block_size,
            } => PobgaParams::manual(horizon, *block_size, *eta, *epsilon),
            ParamMode::Scaled {
                eta_coeff,
                eps_coeff,
            } => PobgaParams::scaled_schedule(horizon, radius, grad_bound, *eta_coeff, *eps_coeff),
        };
        params.map_err(|e| anyhow::anyhow!("params: {e}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub topology: Topology,
    pub nodes: usize,
}

impl NetworkSpec {
    pub fn build(&self) -> Result<Network> {
        if self.nodes == 1 {
            return Ok(Network::singleton());
        }
        Network::metropolis(self.topology, self.nodes)
            .map_err(|e| anyhow::anyhow!("network: {e}"))
    }
}

fn default_grid() -> usize {
    65
}

fn default_alpha() -> f64 {
    1.0 - std::f64::consts::E.recip()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub set: SetSpec,
    pub adversary: AdversarySpec,
    pub horizons: Vec<usize>,
    pub params: ParamMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkSpec>,
    pub seeds: Vec<u64>,
    /// Comparator grid resolution per axis.
    #[serde(default = "default_grid")]
    pub grid: usize,
    /// Regret discount; defaults to `1 - 1/e`.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).context("failed to parse experiment config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizons.is_empty() {
            bail!("horizons: at least one horizon is required");
        }
        if self.seeds.is_empty() {
            bail!("seeds: at least one seed is required");
        }
        if self.grid < 32 {
            bail!("grid: at least 32 points per axis are required");
        }
        let set = self.set.build()?;
        if self.adversary.dim != set.dim() {
            bail!(
                "adversary.dim: {} does not match set dimension {}",
                self.adversary.dim,
                set.dim()
            );
        }
        self.adversary
            .against(&set)
            .map_err(|e| anyhow::anyhow!("adversary: {e}"))?;
        match self.params {
            ParamMode::Theorem | ParamMode::Scaled { .. } => {
                for &t in &self.horizons {
                    let k = (t as f64).sqrt();
                    if k.fract() != 0.0 {
                        bail!("horizons: T must be a perfect square in theorem/scaled mode, got {t}");
                    }
                }
            }
            ParamMode::Manual { block_size, .. } => {
                for &t in &self.horizons {
                    if block_size == 0 || t % block_size != 0 {
                        bail!("params.block_size: {block_size} does not divide horizon {t}");
                    }
                }
            }
        }
        match self.algorithm {
            Algorithm::Dpobga => {
                let net = self
                    .network
                    .as_ref()
                    .ok_or_else(|| anyhow::anyhow!("network: required for dpobga"))?;
                net.build()?;
            }
            _ => {
                if self.network.is_some() {
                    bail!("network: only valid for dpobga");
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ocsm_core::harness::{AdversaryFamily, Regeneration};

    pub(crate) fn minimal(algorithm: Algorithm) -> ExperimentConfig {
        ExperimentConfig {
            algorithm,
            set: SetSpec::BudgetedSimplex {
                budget: 1.0,
                dim: 2,
                caps: None,
            },
            adversary: AdversarySpec {
                family: AdversaryFamily::QuadraticRandom {
                    curvature: 0.02,
                    linear_slack: 0.02,
                },
                dim: 2,
                sigma: 0.1,
                seed: 1,
                regen: Regeneration::FreshPerRound,
            },
            horizons: vec![256],
            params: ParamMode::Scaled {
                eta_coeff: 2.0,
                eps_coeff: 1.0 / 3.0,
            },
            network: match algorithm {
                Algorithm::Dpobga => Some(NetworkSpec {
                    topology: Topology::Cycle,
                    nodes: 4,
                }),
                _ => None,
            },
            seeds: vec![0, 1],
            grid: 65,
            alpha: default_alpha(),
        }
    }

    #[test]
    fn round_trip_is_identity() {
        for algo in [Algorithm::Pobga, Algorithm::Dpobga, Algorithm::Oga] {
            let cfg = minimal(algo);
            let text = cfg.to_json();
            let back = ExperimentConfig::from_json(&text).unwrap();
            assert_eq!(cfg, back);
            assert_eq!(text, back.to_json());
        }
    }

    #[test]
    fn theorem_mode_rejects_non_square_horizon() {
        let mut cfg = minimal(Algorithm::Pobga);
        cfg.params = ParamMode::Theorem;
        cfg.horizons = vec![1000];
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("perfect square"), "{err}");
    }

    #[test]
    fn manual_mode_requires_divisible_block() {
        let mut cfg = minimal(Algorithm::Pobga);
        cfg.params = ParamMode::Manual {
            eta: 0.1,
            epsilon: 0.05,
            block_size: 7,
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn dpobga_requires_network() {
        let mut cfg = minimal(Algorithm::Dpobga);
        cfg.network = None;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_parse_error_is_informative() {
        let err = ExperimentConfig::from_json("{\"algorithm\": \"pobga\"}")
            .unwrap_err()
            .to_string();
        assert!(err.contains("config"));
    }
}
