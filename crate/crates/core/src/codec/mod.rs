//! Systematic `(k + r, k)` erasure coding of packet generations.
//!
//! A flow is dealt round-robin onto `k` main sub-flows; the `i`-th packets
//! of the sub-flows form a generation. Each generation is encoded into the
//! `k` unchanged main packets plus `r` redundant packets, all carrying a
//! coding header ([`GchHeader`]). Any `k` of the `k + r` packets recover the
//! generation.
//!
//! The coded unit of a member is its body zero-padded to the generation's
//! longest body, followed by its length as a big-endian `u16`. Redundant
//! packets carry the padded part of their coded unit as body and the length
//! part in `original_length`, so lost bodies come back with their exact
//! length.

pub mod gf256;
pub mod matrix;
pub mod packet;

use thiserror::Error;

pub use packet::{CodedPacket, FlowId, FlowPacket, GchHeader, DEFAULT_MAX_PAYLOAD, GCH_LEN, MAGIC, VERSION};

/// Largest `k + r` the 8-bit header fields allow.
pub const MAX_PACKETS: usize = 255;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("k must be at least 1")]
    ZeroSubflows,
    #[error("r = {r} exceeds k = {k}")]
    RExceedsK { k: usize, r: usize },
    #[error("k + r = {n} exceeds {MAX_PACKETS}")]
    TooManyPackets { n: usize },
    #[error("packet length {length} does not fit a 16-bit length field")]
    Overflow { length: usize },
    #[error("payload of {len} bytes exceeds the {max}-byte maximum")]
    PayloadTooLarge { len: usize, max: usize },
    #[error("index {index} out of range for {n} packets")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("generation needs {k} members, got {got}")]
    WrongMemberCount { k: usize, got: usize },
    #[error("unrecoverable generation: {valid} valid packets, {k} needed")]
    Unrecoverable { valid: usize, k: usize },
    #[error("inconsistent generation metadata: {0}")]
    InconsistentMetadata(&'static str),
    #[error("malformed packet: {0}")]
    Malformed(&'static str),
}

/// Deals `packets` round-robin onto `k` sub-flows: packet `i` goes to
/// sub-flow `i mod k`.
pub fn split_flow<T: Clone>(packets: &[T], k: usize) -> Result<Vec<Vec<T>>, CodecError> {
    if k == 0 {
        return Err(CodecError::ZeroSubflows);
    }
    let mut subflows = vec![Vec::with_capacity(packets.len().div_ceil(k)); k];
    for (i, p) in packets.iter().enumerate() {
        subflows[i % k].push(p.clone());
    }
    Ok(subflows)
}

/// Inverse of [`split_flow`]: takes one packet from each sub-flow in turn.
pub fn merge_round_robin<T>(subflows: Vec<Vec<T>>) -> Vec<T> {
    let total = subflows.iter().map(Vec::len).sum();
    let mut iters: Vec<_> = subflows.into_iter().map(Vec::into_iter).collect();
    let mut out = Vec::with_capacity(total);
    while out.len() < total {
        for it in iters.iter_mut() {
            out.extend(it.next());
        }
    }
    out
}

/// `k` member bodies encoded together.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generation {
    generation_id: u32,
    flow: FlowId,
    bodies: Vec<Vec<u8>>,
}

impl Generation {
    pub fn new(generation_id: u32, flow: FlowId, bodies: Vec<Vec<u8>>) -> Result<Self, CodecError> {
        if bodies.is_empty() {
            return Err(CodecError::ZeroSubflows);
        }
        if bodies.len() > MAX_PACKETS {
            return Err(CodecError::TooManyPackets { n: bodies.len() });
        }
        if let Some(len) = bodies.iter().map(Vec::len).find(|&l| GCH_LEN + l > usize::from(u16::MAX)) {
            return Err(CodecError::Overflow { length: GCH_LEN + len });
        }
        Ok(Self {
            generation_id,
            flow,
            bodies,
        })
    }

    /// Serializes up to `k` packets of one flow as members; missing members
    /// of a short final generation are empty fillers.
    pub fn from_packets(generation_id: u32, packets: &[FlowPacket], k: usize) -> Result<Self, CodecError> {
        if packets.len() > k {
            return Err(CodecError::WrongMemberCount { k, got: packets.len() });
        }
        let flow = packets.first().map(|p| p.flow).unwrap_or_default();
        if packets.iter().any(|p| p.flow != flow) {
            return Err(CodecError::InconsistentMetadata("members belong to different flows"));
        }
        let mut bodies: Vec<Vec<u8>> = packets.iter().map(FlowPacket::to_bytes).collect();
        bodies.resize(k, Vec::new());
        Self::new(generation_id, flow, bodies)
    }

    pub fn generation_id(&self) -> u32 {
        self.generation_id
    }

    pub fn flow(&self) -> FlowId {
        self.flow
    }

    pub fn k(&self) -> usize {
        self.bodies.len()
    }

    pub fn bodies(&self) -> &[Vec<u8>] {
        &self.bodies
    }

    /// Common length every member is padded to.
    pub fn padded_length(&self) -> usize {
        self.bodies.iter().map(Vec::len).max().unwrap_or(0)
    }

    fn coded_unit(body: &[u8], padded: usize) -> Vec<u8> {
        let mut unit = body.to_vec();
        unit.resize(padded, 0);
        unit.extend_from_slice(&(body.len() as u16).to_be_bytes());
        unit
    }
}

/// Coding header for packet `index` of a generation, with addresses and
/// ports copied from `template`. Total length and checksum are filled in
/// when the body is attached by [`CodedPacket::seal`].
pub fn synthesize_gch(
    template: &FlowId,
    k: usize,
    r: usize,
    index: usize,
    generation_id: u32,
    body_length: usize,
) -> Result<GchHeader, CodecError> {
    check_shape(k, r)?;
    if index >= k + r {
        return Err(CodecError::IndexOutOfRange { index, n: k + r });
    }
    let total = GCH_LEN + body_length;
    let total_length = u16::try_from(total).map_err(|_| CodecError::Overflow { length: total })?;
    Ok(GchHeader {
        version: VERSION,
        k: k as u8,
        r: r as u8,
        index: index as u8,
        generation_id,
        original_length: body_length as u16,
        total_length,
        checksum: 0,
        flow: *template,
    })
}

fn check_shape(k: usize, r: usize) -> Result<(), CodecError> {
    if k == 0 {
        return Err(CodecError::ZeroSubflows);
    }
    if r > k {
        return Err(CodecError::RExceedsK { k, r });
    }
    if k + r > MAX_PACKETS {
        return Err(CodecError::TooManyPackets { n: k + r });
    }
    Ok(())
}

/// Encodes a generation into its `k` main packets, bodies unchanged,
/// followed by `r` redundant packets.
pub fn encode_generation(generation: &Generation, r: usize) -> Result<Vec<CodedPacket>, CodecError> {
    let k = generation.k();
    check_shape(k, r)?;
    let id = generation.generation_id;
    let flow = generation.flow;
    let mut out = Vec::with_capacity(k + r);
    for (index, body) in generation.bodies.iter().enumerate() {
        let gch = synthesize_gch(&flow, k, r, index, id, body.len())?;
        out.push(CodedPacket::seal(gch, body.clone())?);
    }
    if r == 0 {
        return Ok(out);
    }
    let padded = generation.padded_length();
    let units: Vec<Vec<u8>> = generation
        .bodies
        .iter()
        .map(|b| Generation::coded_unit(b, padded))
        .collect();
    for (m, row) in matrix::redundancy_rows(k, r).iter().enumerate() {
        let mut coded = vec![0u8; padded + 2];
        for (&c, unit) in row.iter().zip(&units) {
            gf256::mul_add_into(&mut coded, unit, c);
        }
        let length_word = u16::from_be_bytes([coded[padded], coded[padded + 1]]);
        coded.truncate(padded);
        let mut gch = synthesize_gch(&flow, k, r, k + m, id, padded)?;
        gch.original_length = length_word;
        out.push(CodedPacket::seal(gch, coded)?);
    }
    Ok(out)
}

/// Result of decoding one generation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    pub generation_id: u32,
    pub flow: FlowId,
    /// The `k` main bodies, exact length.
    pub bodies: Vec<Vec<u8>>,
    /// Whether any main body had to be reconstructed.
    pub decoded: bool,
    /// Packets dropped for failing their checksum.
    pub discarded: usize,
}

/// Recovers the `k` main bodies from any `k` valid packets of a
/// generation. Packets failing their checksum are discarded first; if all
/// main packets are present their bodies pass through untouched.
pub fn decode_generation(received: &[CodedPacket]) -> Result<Decoded, CodecError> {
    let valid: Vec<&CodedPacket> = received.iter().filter(|p| p.verify()).collect();
    let discarded = received.len() - valid.len();
    let first = valid.first().ok_or(CodecError::Unrecoverable { valid: 0, k: 1 })?.gch;
    let (k, r) = (usize::from(first.k), usize::from(first.r));
    check_shape(k, r)?;
    let mut slots: Vec<Option<&CodedPacket>> = vec![None; k + r];
    for p in &valid {
        let g = &p.gch;
        if g.generation_id != first.generation_id {
            return Err(CodecError::InconsistentMetadata("generation id"));
        }
        if (g.k, g.r) != (first.k, first.r) {
            return Err(CodecError::InconsistentMetadata("k or r"));
        }
        if g.flow != first.flow {
            return Err(CodecError::InconsistentMetadata("flow identifiers"));
        }
        let index = usize::from(g.index);
        if index >= k + r {
            return Err(CodecError::IndexOutOfRange { index, n: k + r });
        }
        if index < k && usize::from(g.original_length) != p.body.len() {
            return Err(CodecError::InconsistentMetadata("main body length"));
        }
        slots[index].get_or_insert(p);
    }
    let present = slots.iter().filter(|s| s.is_some()).count();
    if present < k {
        return Err(CodecError::Unrecoverable { valid: present, k });
    }
    let mut decoded = Decoded {
        generation_id: first.generation_id,
        flow: first.flow,
        bodies: Vec::with_capacity(k),
        decoded: false,
        discarded,
    };
    if slots[..k].iter().all(Option::is_some) {
        decoded.bodies = slots[..k].iter().flatten().map(|p| p.body.clone()).collect();
        return Ok(decoded);
    }

    let redundant: Vec<&CodedPacket> = slots[k..].iter().flatten().copied().collect();
    let padded = redundant[0].body.len();
    if redundant.iter().any(|p| p.body.len() != padded) {
        return Err(CodecError::InconsistentMetadata("redundant body lengths differ"));
    }
    let chosen: Vec<(usize, &CodedPacket)> = slots
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.map(|p| (i, p)))
        .take(k)
        .collect();
    let rows = matrix::redundancy_rows(k, r);
    let system: matrix::Matrix = chosen.iter().map(|&(i, _)| matrix::generator_row(k, &rows, i)).collect();
    let inverse = matrix::invert(&system).expect("any k generator rows are independent");
    let received_units: Vec<Vec<u8>> = chosen
        .iter()
        .map(|&(i, p)| {
            if i < k {
                if p.body.len() > padded {
                    return Err(CodecError::InconsistentMetadata("main body longer than redundant body"));
                }
                Ok(Generation::coded_unit(&p.body, padded))
            } else {
                let mut unit = p.body.clone();
                unit.extend_from_slice(&p.gch.original_length.to_be_bytes());
                Ok(unit)
            }
        })
        .collect::<Result<_, _>>()?;
    for (i, slot) in slots[..k].iter().enumerate() {
        let body = match slot {
            Some(p) => p.body.clone(),
            None => {
                let mut unit = vec![0u8; padded + 2];
                for (&c, y) in inverse[i].iter().zip(&received_units) {
                    gf256::mul_add_into(&mut unit, y, c);
                }
                let len = usize::from(u16::from_be_bytes([unit[padded], unit[padded + 1]]));
                if len > padded {
                    return Err(CodecError::InconsistentMetadata("recovered length exceeds padding"));
                }
                unit.truncate(len);
                unit
            }
        };
        decoded.bodies.push(body);
    }
    decoded.decoded = true;
    Ok(decoded)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flow() -> FlowId {
        FlowId {
            src_addr: 0xc0a8_0001,
            dst_addr: 0xc0a8_0002,
            src_port: 1234,
            dst_port: 80,
        }
    }

    fn generation(bodies: &[&[u8]]) -> Generation {
        Generation::new(5, flow(), bodies.iter().map(|b| b.to_vec()).collect()).unwrap()
    }

    #[test]
    fn split_examples() {
        let six: Vec<u32> = (0..6).collect();
        let subs = split_flow(&six, 3).unwrap();
        assert_eq!(subs.iter().map(Vec::len).collect::<Vec<_>>(), [2, 2, 2]);
        assert_eq!(subs[0], [0, 3]);
        let five: Vec<u32> = (0..5).collect();
        let subs = split_flow(&five, 3).unwrap();
        assert_eq!(subs.iter().map(Vec::len).collect::<Vec<_>>(), [2, 2, 1]);
        assert_eq!(merge_round_robin(subs), five);
        assert_eq!(split_flow(&five, 1).unwrap(), vec![five.clone()]);
        assert_eq!(split_flow(&five, 0), Err(CodecError::ZeroSubflows));
        assert_eq!(merge_round_robin::<u8>(vec![]), Vec::<u8>::new());
    }

    #[test]
    fn systematic_outputs() {
        let g = generation(&[b"alpha", b"be", b"gamma!"]);
        let out = encode_generation(&g, 1).unwrap();
        assert_eq!(out.len(), 4);
        for (p, b) in out.iter().zip(g.bodies()) {
            assert_eq!(&p.body, b);
            assert!(!p.gch.is_redundant());
        }
        assert!(out[3].gch.is_redundant());
        assert!(out.iter().all(CodedPacket::verify));
        assert_eq!(encode_generation(&g, 0).unwrap().len(), 3);
    }

    #[test]
    fn single_redundant_packet_is_xor() {
        let out = encode_generation(&generation(&[&[0x01, 0x02], &[0x03, 0x04]]), 1).unwrap();
        assert_eq!(out[2].body, [0x02, 0x06]);
        // both lengths are 2, so the coded length word cancels
        assert_eq!(out[2].gch.original_length, 0);
    }

    #[test]
    fn recover_lost_main_from_parity() {
        let out = encode_generation(&generation(&[&[0x01, 0x02], &[0x03, 0x04]]), 1).unwrap();
        let d = decode_generation(&[out[1].clone(), out[2].clone()]).unwrap();
        assert!(d.decoded);
        assert_eq!(d.bodies, [vec![0x01, 0x02], vec![0x03, 0x04]]);
        let xor: Vec<u8> = out[2].body.iter().zip(&out[1].body).map(|(a, b)| a ^ b).collect();
        assert_eq!(d.bodies[0], xor);
    }

    #[test]
    fn passthrough_when_mains_present() {
        let g = generation(&[b"one", b"three", b""]);
        let out = encode_generation(&g, 2).unwrap();
        let d = decode_generation(&out[..3]).unwrap();
        assert!(!d.decoded);
        assert_eq!(d.bodies, g.bodies());
        let d = decode_generation(&out).unwrap();
        assert!(!d.decoded);
    }

    #[test]
    fn variable_lengths_survive_recovery() {
        let g = generation(&[b"a", b"", b"ccccccc", b"dd"]);
        let out = encode_generation(&g, 3).unwrap();
        let d = decode_generation(&[out[4].clone(), out[5].clone(), out[6].clone(), out[3].clone()]).unwrap();
        assert!(d.decoded);
        assert_eq!(d.bodies, g.bodies());
    }

    #[test]
    fn too_few_packets() {
        let out = encode_generation(&generation(&[b"x", b"y", b"z"]), 1).unwrap();
        assert_eq!(
            decode_generation(&out[..2]),
            Err(CodecError::Unrecoverable { valid: 2, k: 3 })
        );
        assert!(matches!(decode_generation(&[]), Err(CodecError::Unrecoverable { .. })));
    }

    #[test]
    fn corrupt_packet_is_discarded() {
        let out = encode_generation(&generation(&[b"x1", b"y2"]), 1).unwrap();
        let mut bad = out[0].clone();
        bad.body[0] ^= 0x40;
        let d = decode_generation(&[bad.clone(), out[1].clone(), out[2].clone()]).unwrap();
        assert_eq!(d.discarded, 1);
        assert!(d.decoded);
        assert_eq!(d.bodies[0], b"x1");
        assert!(matches!(
            decode_generation(&[bad, out[1].clone()]),
            Err(CodecError::Unrecoverable { valid: 1, k: 2 })
        ));
    }

    #[test]
    fn mixed_generations_rejected() {
        let a = encode_generation(&generation(&[b"x", b"y"]), 1).unwrap();
        let other = Generation::new(6, flow(), vec![b"x".to_vec(), b"y".to_vec()]).unwrap();
        let b = encode_generation(&other, 1).unwrap();
        assert_eq!(
            decode_generation(&[a[0].clone(), b[1].clone()]),
            Err(CodecError::InconsistentMetadata("generation id"))
        );
    }

    #[test]
    fn encode_errors() {
        let g = generation(&[b"x", b"y"]);
        assert_eq!(encode_generation(&g, 3), Err(CodecError::RExceedsK { k: 2, r: 3 }));
        let big = Generation::new(0, flow(), vec![vec![0; 1 << 16]]);
        assert!(matches!(big, Err(CodecError::Overflow { .. })));
    }

    #[test]
    fn gch_examples() {
        let template = FlowId {
            src_port: 1234,
            dst_port: 80,
            ..flow()
        };
        let h = synthesize_gch(&template, 3, 1, 3, 11, 40).unwrap();
        assert_eq!((h.flow.src_port, h.flow.dst_port), (1234, 80));
        assert!(h.is_redundant());
        assert_eq!(h.generation_id, 11);
        let h = synthesize_gch(&template, 3, 1, 0, 11, 0).unwrap();
        assert_eq!(h.total_length as usize, GCH_LEN);
        let sealed = CodedPacket::seal(h, vec![]).unwrap();
        assert!(sealed.verify());
        assert_eq!(
            synthesize_gch(&template, 3, 1, 4, 11, 0),
            Err(CodecError::IndexOutOfRange { index: 4, n: 4 })
        );
        assert!(matches!(
            synthesize_gch(&template, 1, 0, 0, 0, 70_000),
            Err(CodecError::Overflow { .. })
        ));
    }

    #[test]
    fn short_generation_padded_with_fillers() {
        let p = FlowPacket::new(flow(), 1, vec![9; 4]).unwrap();
        let g = Generation::from_packets(0, std::slice::from_ref(&p), 3).unwrap();
        assert_eq!(g.k(), 3);
        assert_eq!(g.bodies()[1], Vec::<u8>::new());
        assert_eq!(FlowPacket::from_bytes(&g.bodies()[0]).unwrap(), p);
        assert!(Generation::from_packets(0, &[p.clone(), p], 1).is_err());
    }
}
