//! Flow packets and the coded-packet wire format.
//!
//! ```text
//!  0       2   3   4   5   6               10      12      14      16
//!  +-------+---+---+---+---+---------------+-------+-------+-------+
//!  | magic |ver| k | r |idx| generation_id | o_len | t_len | csum  |
//!  +-------+---+---+---+---+---------------+-------+-------+-------+
//!  16              20              24      26      28
//!  +---------------+---------------+-------+-------+---------------
//!  |   src_addr    |   dst_addr    | sport | dport | body ...
//!  +---------------+---------------+-------+-------+---------------
//! ```
//!
//! All fields are big-endian. `csum` is the ones-complement of the
//! ones-complement sum of all 16-bit words of header and body, taken with
//! the checksum field zeroed and an odd trailing byte padded with zero.

use super::CodecError;

pub const MAGIC: u16 = 0x4743;
pub const VERSION: u8 = 1;
pub const GCH_LEN: usize = 28;
pub const FLOW_HEADER_LEN: usize = 16;
pub const DEFAULT_MAX_PAYLOAD: usize = 1500;


/// Addresses and ports identifying a flow; shared by every packet of it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct FlowId {
    pub src_addr: u32,
    pub dst_addr: u32,
    pub src_port: u16,
    pub dst_port: u16,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowPacket {
    pub flow: FlowId,
    pub seq_no: u32,
    pub payload: Vec<u8>,
}

impl FlowPacket {
    pub fn new(flow: FlowId, seq_no: u32, payload: Vec<u8>) -> Result<Self, CodecError> {
        Self::with_max_payload(flow, seq_no, payload, DEFAULT_MAX_PAYLOAD)
    }

    pub fn with_max_payload(flow: FlowId, seq_no: u32, payload: Vec<u8>, max: usize) -> Result<Self, CodecError> {
        if payload.len() > max {
            return Err(CodecError::PayloadTooLarge { len: payload.len(), max });
        }
        Ok(Self { flow, seq_no, payload })
    }

    /// src(4) dst(4) sport(2) dport(2) seq(4) payload.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(FLOW_HEADER_LEN + self.payload.len());
        out.extend_from_slice(&self.flow.src_addr.to_be_bytes());
        out.extend_from_slice(&self.flow.dst_addr.to_be_bytes());
        out.extend_from_slice(&self.flow.src_port.to_be_bytes());
        out.extend_from_slice(&self.flow.dst_port.to_be_bytes());
        out.extend_from_slice(&self.seq_no.to_be_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        if bytes.len() < FLOW_HEADER_LEN {
            return Err(CodecError::Malformed("flow packet shorter than its header"));
        }
        let mut cur = Reader(bytes);
        let flow = FlowId {
            src_addr: cur.u32(),
            dst_addr: cur.u32(),
            src_port: cur.u16(),
            dst_port: cur.u16(),
        };
        let seq_no = cur.u32();
        Ok(Self {
            flow,
            seq_no,
            payload: cur.0.to_vec(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GchHeader {
    pub version: u8,
    pub k: u8,
    pub r: u8,
    pub index: u8,
    pub generation_id: u32,
    pub original_length: u16,
    pub total_length: u16,
    pub checksum: u16,
    pub flow: FlowId,
}

impl GchHeader {
    pub fn is_redundant(&self) -> bool {
        self.index >= self.k
    }

    pub fn to_bytes(&self) -> [u8; GCH_LEN] {
        let mut out = [0u8; GCH_LEN];
        out[0..2].copy_from_slice(&MAGIC.to_be_bytes());
        out[2] = self.version;
        out[3] = self.k;
        out[4] = self.r;
        out[5] = self.index;
        out[6..10].copy_from_slice(&self.generation_id.to_be_bytes());
        out[10..12].copy_from_slice(&self.original_length.to_be_bytes());
        out[12..14].copy_from_slice(&self.total_length.to_be_bytes());
        out[14..16].copy_from_slice(&self.checksum.to_be_bytes());
        out[16..20].copy_from_slice(&self.flow.src_addr.to_be_bytes());
        out[20..24].copy_from_slice(&self.flow.dst_addr.to_be_bytes());
        out[24..26].copy_from_slice(&self.flow.src_port.to_be_bytes());
        out[26..28].copy_from_slice(&self.flow.dst_port.to_be_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        if bytes.len() < GCH_LEN {
            return Err(CodecError::Malformed("shorter than a coding header"));
        }
        let mut cur = Reader(bytes);
        if cur.u16() != MAGIC {
            return Err(CodecError::Malformed("bad magic"));
        }
        let version = cur.u8();
        if version != VERSION {
            return Err(CodecError::Malformed("unsupported version"));
        }
        Ok(Self {
            version,
            k: cur.u8(),
            r: cur.u8(),
            index: cur.u8(),
            generation_id: cur.u32(),
            original_length: cur.u16(),
            total_length: cur.u16(),
            checksum: cur.u16(),
            flow: FlowId {
                src_addr: cur.u32(),
                dst_addr: cur.u32(),
                src_port: cur.u16(),
                dst_port: cur.u16(),
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedPacket {
    pub gch: GchHeader,
    pub body: Vec<u8>,
}

impl CodedPacket {
    /// Attaches `body` and fills in total length and checksum.
    pub fn seal(mut gch: GchHeader, body: Vec<u8>) -> Result<Self, CodecError> {
        gch.total_length = u16::try_from(GCH_LEN + body.len()).map_err(|_| CodecError::Overflow {
            length: GCH_LEN + body.len(),
        })?;
        gch.checksum = 0;
        let mut packet = Self { gch, body };
        packet.gch.checksum = !packet.ones_sum();
        Ok(packet)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(GCH_LEN + self.body.len());
        out.extend_from_slice(&self.gch.to_bytes());
        out.extend_from_slice(&self.body);
        out
    }

    /// Parses a packet without checking its checksum; see [`Self::verify`].
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        let gch = GchHeader::from_bytes(bytes)?;
        if gch.total_length as usize != bytes.len() {
            return Err(CodecError::Malformed("total length does not match packet size"));
        }
        Ok(Self {
            gch,
            body: bytes[GCH_LEN..].to_vec(),
        })
    }

    /// True when the length and checksum fields are consistent with the
    /// bytes actually carried.
    pub fn verify(&self) -> bool {
        self.gch.total_length as usize == GCH_LEN + self.body.len() && self.ones_sum() == 0xffff
    }

    fn ones_sum(&self) -> u16 {
        ones_complement_sum(&[&self.gch.to_bytes(), &self.body])
    }
}

/// Folded ones-complement sum of the concatenation of `chunks` read as
/// big-endian 16-bit words.
pub fn ones_complement_sum(chunks: &[&[u8]]) -> u16 {
    let mut sum: u64 = 0;
    let mut pending: Option<u8> = None;
    for &b in chunks.iter().flat_map(|c| c.iter()) {
        match pending.take() {
            Some(hi) => sum += u64::from(u16::from_be_bytes([hi, b])),
            None => pending = Some(b),
        }
    }
    if let Some(hi) = pending {
        sum += u64::from(hi) << 8;
    }
    while sum > 0xffff {
        sum = (sum & 0xffff) + (sum >> 16);
    }
    sum as u16
}


struct Reader<'a>(&'a [u8]);

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let (head, tail) = self.0.split_at(N);
        self.0 = tail;
        head.try_into().expect("split_at returned N bytes")
    }
    fn u8(&mut self) -> u8 {
        self.take::<1>()[0]
    }
    fn u16(&mut self) -> u16 {
        u16::from_be_bytes(self.take())
    }
    fn u32(&mut self) -> u32 {
        u32::from_be_bytes(self.take())
    }
}
