//! Deterministic random-stream derivation.
//!
//! All randomness in a run flows from one master seed. Streams are keyed by
//! `(master seed, domain, node, index)` through a splitmix64 chain, so every
//! consumer owns an independent ChaCha stream and results do not depend on
//! the order nodes are executed in.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Stream domains. Keeping adversary instance generation separate from the
/// per-block gradient noise lets the harness re-derive the same function
/// sequence without replaying a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamDomain {
    /// z-samples and gradient noise consumed inside block `index` by `node`.
    BlockDraws,
    /// Reward-function instance revealed to `node` at round `index`.
    Adversary,
    /// Scratch streams for tests and samplers.
    Aux,
}

impl StreamDomain {
    fn tag(self) -> u64 {
        match self {
            StreamDomain::BlockDraws => 0x01,
            StreamDomain::Adversary => 0x02,
            StreamDomain::Aux => 0x03,
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the ChaCha stream for `(master, domain, node, index)`.
pub fn stream(master: u64, domain: StreamDomain, node: u64, index: u64) -> ChaCha12Rng {
    let mut state = master;
    let a = splitmix64(&mut state);
    state ^= domain.tag().wrapping_mul(0xA076_1D64_78BD_642F);
    let b = splitmix64(&mut state);
    state ^= node.wrapping_mul(0xE703_7ED1_A0B4_28DB);
    let c = splitmix64(&mut state);
    state ^= index.wrapping_mul(0x8EBC_6AF0_9C88_C6E3);
    let d = splitmix64(&mut state);
    let mut seed = [0u8; 32];
    seed[0..8].copy_from_slice(&a.to_le_bytes());
    seed[8..16].copy_from_slice(&b.to_le_bytes());
    seed[16..24].copy_from_slice(&c.to_le_bytes());
    seed[24..32].copy_from_slice(&d.to_le_bytes());
    ChaCha12Rng::from_seed(seed)
}
