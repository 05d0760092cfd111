#![allow(dead_code)]

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sfc_reliability::model::{
    validate_hybrid_layout, ChainPartConfig, ChainSpec, ComponentReliability, HybridLayout, HybridLayoutConfig,
    PartKind, ReliabilityParams,
};

pub fn spec(k: usize, r: usize, psi: &[usize]) -> ChainSpec {
    ChainSpec::new(k, r, psi.to_vec()).unwrap()
}

pub fn side(conn: f64, server: f64, vnf: f64) -> ComponentReliability {
    ComponentReliability { conn, server, vnf }
}

pub fn arb_side() -> impl Strategy<Value = ComponentReliability> {
    (0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64).prop_map(|(c, s, v)| side(c, s, v))
}

pub fn arb_rel() -> impl Strategy<Value = ReliabilityParams> {
    (arb_side(), arb_side()).prop_map(|(main, redundant)| ReliabilityParams { main, redundant })
}

/// Chains with `k <= max_k`, `r <= k`, up to `max_n` servers of up to
/// `max_psi` VNFs each.
pub fn arb_spec(max_k: usize, max_n: usize, max_psi: usize) -> impl Strategy<Value = ChainSpec> {
    (1..=max_k)
        .prop_flat_map(move |k| (Just(k), 0..=k, prop::collection::vec(1..=max_psi, 1..=max_n)))
        .prop_map(|(k, r, psi)| ChainSpec::new(k, r, psi).unwrap())
}

/// Reliability vectors drawn from a seeded generator; every value in
/// [0.05, 1].
pub fn random_rels(seed: u64, count: usize) -> Vec<ReliabilityParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || side(rng.random_range(0.05..=1.0), rng.random_range(0.05..=1.0), rng.random_range(0.05..=1.0));
    (0..count)
        .map(|_| {
            let main = draw();
            ReliabilityParams { main, redundant: draw() }
        })
        .collect()
}

/// Every chain of the small acceptance grid: k in 1..=3, r in 0..=min(2, k),
/// N in 1..=2, each psi_s in 1..=2.
pub fn small_grid() -> Vec<ChainSpec> {
    let mut out = Vec::new();
    for k in 1..=3 {
        for r in 0..=k.min(2) {
            for psi in [vec![1], vec![2], vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2]] {
                out.push(spec(k, r, &psi));
            }
        }
    }
    out
}

/// Every two-part header/payload layout the chain admits, each part on an
/// explicit server split.
pub fn two_part_layouts(spec: &ChainSpec) -> Vec<HybridLayout> {
    let total = spec.total_vnfs();
    let kinds = [PartKind::Header, PartKind::Payload];
    let mut out = Vec::new();
    for first in 1..total {
        for a in kinds {
            for b in kinds {
                let part = |kind, vnfs| ChainPartConfig {
                    kind,
                    vnfs,
                    servers: None,
                    psi: None,
                };
                let config = HybridLayoutConfig {
                    parts: vec![part(a, first), part(b, total - first)],
                };
                out.push(validate_hybrid_layout(&config, spec).unwrap());
            }
        }
    }
    out
}
