//! End-to-end walk through the codec on a synthetic flow.

use std::fmt;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::codec::{self, CodecError, FlowId, FlowPacket, Generation};

/// Sub-flows to drop from every generation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LossPattern {
    /// The same sub-flow indices (0..k main, k..k+r redundant) every time.
    Named(Vec<usize>),
    /// A fresh random set of at most `r` sub-flows per generation.
    Random,
}

impl std::str::FromStr for LossPattern {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "random" {
            return Ok(LossPattern::Random);
        }
        if s.is_empty() || s == "none" {
            return Ok(LossPattern::Named(Vec::new()));
        }
        s.split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|e| format!("bad sub-flow index {t:?}: {e}")))
            .collect::<Result<_, _>>()
            .map(LossPattern::Named)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GenerationOutcome {
    pub generation_id: u32,
    pub lost: Vec<usize>,
    pub recovered: bool,
    pub decode_needed: bool,
    pub bytes_equal: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CodecDemoReport {
    pub k: usize,
    pub r: usize,
    pub packets: usize,
    pub seed: u64,
    pub generations: Vec<GenerationOutcome>,
    /// Whether merging the recovered sub-flows reproduced the input flow.
    pub flow_restored: bool,
}

impl CodecDemoReport {
    pub fn all_recovered(&self) -> bool {
        self.generations.iter().all(|g| g.recovered)
    }
}

impl fmt::Display for CodecDemoReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "codec demo: k={} r={} packets={} generations={} seed={}",
            self.k,
            self.r,
            self.packets,
            self.generations.len(),
            self.seed
        )?;
        for g in &self.generations {
            write!(
                f,
                "generation {:>4}: lost {:?} -> ",
                g.generation_id, g.lost
            )?;
            match &g.error {
                Some(e) => writeln!(f, "UNRECOVERABLE ({e})")?,
                None => writeln!(
                    f,
                    "recovered, decode {}, bytes {}",
                    if g.decode_needed { "needed" } else { "not needed" },
                    if g.bytes_equal { "equal" } else { "DIFFER" }
                )?,
            }
        }
        let unrecovered = self.generations.iter().filter(|g| !g.recovered).count();
        writeln!(
            f,
            "summary: {}/{} generations recovered, {} needed decoding, flow {}",
            self.generations.len() - unrecovered,
            self.generations.len(),
            self.generations.iter().filter(|g| g.decode_needed).count(),
            if self.flow_restored { "restored" } else { "NOT restored" }
        )
    }
}

const DEMO_FLOW: FlowId = FlowId {
    src_addr: 0x0a00_0001,
    dst_addr: 0x0a00_0002,
    src_port: 1234,
    dst_port: 80,
};

/// Splits `packet_count` synthetic packets over `k` sub-flows, encodes
/// each generation with `r` redundant packets, drops the sub-flows named
/// by `loss`, decodes and compares against the input.
pub fn codec_demo(
    k: usize,
    r: usize,
    packet_count: usize,
    loss: &LossPattern,
    seed: u64,
) -> Result<CodecDemoReport, CodecError> {
    if k == 0 {
        return Err(CodecError::ZeroSubflows);
    }
    if r > k {
        return Err(CodecError::RExceedsK { k, r });
    }
    if k + r > codec::MAX_PACKETS {
        return Err(CodecError::TooManyPackets { n: k + r });
    }
    if let LossPattern::Named(lost) = loss {
        if let Some(&index) = lost.iter().find(|&&i| i >= k + r) {
            return Err(CodecError::IndexOutOfRange { index, n: k + r });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let flow: Vec<FlowPacket> = (0..packet_count)
        .map(|i| {
            let len = rng.random_range(0..=64);
            let payload: Vec<u8> = (0..len).map(|_| rng.random()).collect();
            FlowPacket::new(DEMO_FLOW, i as u32, payload)
        })
        .collect::<Result<_, _>>()?;

    let subflows = codec::split_flow(&flow, k)?;
    let generation_count = subflows[0].len();
    let mut outcomes = Vec::with_capacity(generation_count);
    let mut restored: Vec<Vec<FlowPacket>> = vec![Vec::new(); k];
    for g in 0..generation_count {
        let members: Vec<FlowPacket> = subflows.iter().filter_map(|s| s.get(g).cloned()).collect();
        let generation = Generation::from_packets(g as u32, &members, k)?;
        let encoded = codec::encode_generation(&generation, r)?;
        let mut lost = match loss {
            LossPattern::Named(lost) => lost.clone(),
            LossPattern::Random => {
                let count = rng.random_range(0..=r);
                sample(&mut rng, k + r, count).into_vec()
            }
        };
        lost.sort_unstable();
        lost.dedup();
        let received: Vec<_> = encoded
            .into_iter()
            .enumerate()
            .filter(|(i, _)| !lost.contains(i))
            .map(|(_, p)| p)
            .collect();
        let outcome = match codec::decode_generation(&received) {
            Ok(decoded) => {
                let bytes_equal = decoded.bodies == generation.bodies();
                for (sub, body) in restored.iter_mut().zip(&decoded.bodies) {
                    if !body.is_empty() {
                        sub.push(FlowPacket::from_bytes(body)?);
                    }
                }
                GenerationOutcome {
                    generation_id: g as u32,
                    lost,
                    recovered: true,
                    decode_needed: decoded.decoded,
                    bytes_equal,
                    error: None,
                }
            }
            Err(e) => GenerationOutcome {
                generation_id: g as u32,
                lost,
                recovered: false,
                decode_needed: false,
                bytes_equal: false,
                error: Some(e.to_string()),
            },
        };
        outcomes.push(outcome);
    }
    let flow_restored = codec::merge_round_robin(restored) == flow;
    Ok(CodecDemoReport {
        k,
        r,
        packets: packet_count,
        seed,
        generations: outcomes,
        flow_restored,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lost_main_needs_decoding() {
        let report = codec_demo(3, 1, 30, &LossPattern::Named(vec![0]), 1).unwrap();
        assert_eq!(report.generations.len(), 10);
        assert!(report.all_recovered());
        assert!(report.generations.iter().all(|g| g.decode_needed && g.bytes_equal));
        assert!(report.flow_restored);
    }

    #[test]
    fn lost_redundant_needs_no_decoding() {
        let report = codec_demo(3, 1, 30, &LossPattern::Named(vec![3]), 1).unwrap();
        assert!(report.all_recovered());
        assert!(report.generations.iter().all(|g| !g.decode_needed && g.bytes_equal));
    }

    #[test]
    fn too_many_losses_reported() {
        let report = codec_demo(2, 1, 10, &LossPattern::Named(vec![0, 1]), 1).unwrap();
        assert!(report.generations.iter().all(|g| !g.recovered && g.error.is_some()));
        assert!(!report.flow_restored);
        assert!(report.to_string().contains("UNRECOVERABLE"));
    }

    #[test]
    fn random_losses_always_recover() {
        let report = codec_demo(4, 2, 101, &LossPattern::Random, 9).unwrap();
        assert_eq!(report.generations.len(), 26);
        assert!(report.all_recovered());
        assert!(report.flow_restored);
        assert!(report.generations.iter().any(|g| g.decode_needed));
        assert_eq!(report, codec_demo(4, 2, 101, &LossPattern::Random, 9).unwrap());
    }

    #[test]
    fn pattern_parsing() {
        assert_eq!("random".parse(), Ok(LossPattern::Random));
        assert_eq!("0, 3".parse(), Ok(LossPattern::Named(vec![0, 3])));
        assert_eq!("none".parse(), Ok(LossPattern::Named(vec![])));
        assert!("x".parse::<LossPattern>().is_err());
        assert!(codec_demo(2, 1, 4, &LossPattern::Named(vec![3]), 0).is_err());
        assert!(codec_demo(2, 3, 4, &LossPattern::Random, 0).is_err());
    }
}
