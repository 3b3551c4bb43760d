//! Byte encodings of the two protocol messages, little-endian throughout.
//!
//! Subscription: `[tag][prev:2][n_channels:1][channel:1]*[n_positions:1][position:2]*`
//! Publication:  `[tag][goal:2][ep:2][channel:1][seq:4][origin:2][len:2][data]`
//!
//! The absent previous-sender is encoded as 0xFFFF, which caps usable node
//! ids one short of the u16 range.

use std::collections::BTreeSet;

use thiserror::Error;

use super::{PubMsg, SubMsg};
use crate::ring::Position;
use crate::topology::NodeId;

pub const SUB_TAG: u8 = 0x01;
pub const PUB_TAG: u8 = 0x02;
const NO_PREV: u16 = u16::MAX;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WireError {
    #[error("message truncated (need {need} bytes, have {have})")]
    Truncated { need: usize, have: usize },
    #[error("unknown message tag {0:#04x}")]
    BadTag(u8),
    #[error("field out of range: {0}")]
    OutOfRange(&'static str),
}

pub fn sub_wire_len(msg: &SubMsg) -> usize {
    1 + 2 + 1 + msg.channels.len() + 1 + 2 * msg.positions.len()
}

pub fn pub_wire_len(msg: &PubMsg) -> usize {
    1 + 2 + 2 + 1 + 4 + 2 + 2 + msg.payload.len()
}

pub fn encode_sub(msg: &SubMsg) -> Result<Vec<u8>, WireError> {
    if msg.channels.len() > u8::MAX as usize {
        return Err(WireError::OutOfRange("channel set"));
    }
    if msg.positions.len() > u8::MAX as usize {
        return Err(WireError::OutOfRange("position list"));
    }
    let prev = match msg.prev {
        None => NO_PREV,
        Some(v) if v < NO_PREV as usize => v as u16,
        Some(_) => return Err(WireError::OutOfRange("previous sender id")),
    };
    let mut out = Vec::with_capacity(sub_wire_len(msg));
    out.push(SUB_TAG);
    out.extend_from_slice(&prev.to_le_bytes());
    out.push(msg.channels.len() as u8);
    out.extend(msg.channels.iter().copied());
    out.push(msg.positions.len() as u8);
    for p in &msg.positions {
        out.extend_from_slice(&p.0.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_sub(bytes: &[u8]) -> Result<SubMsg, WireError> {
    let mut r = Reader::new(bytes);
    let tag = r.u8()?;
    if tag != SUB_TAG {
        return Err(WireError::BadTag(tag));
    }
    let prev = match r.u16()? {
        NO_PREV => None,
        v => Some(v as NodeId),
    };
    let n_channels = r.u8()? as usize;
    let mut channels = BTreeSet::new();
    for _ in 0..n_channels {
        channels.insert(r.u8()?);
    }
    let n_positions = r.u8()? as usize;
    let mut positions = Vec::with_capacity(n_positions);
    for _ in 0..n_positions {
        positions.push(Position(r.u16()?));
    }
    Ok(SubMsg { prev, channels, positions })
}

pub fn encode_pub(msg: &PubMsg) -> Result<Vec<u8>, WireError> {
    if msg.origin >= u16::MAX as usize {
        return Err(WireError::OutOfRange("origin id"));
    }
    if msg.payload.len() > u16::MAX as usize {
        return Err(WireError::OutOfRange("payload"));
    }
    let mut out = Vec::with_capacity(pub_wire_len(msg));
    out.push(PUB_TAG);
    out.extend_from_slice(&msg.goal.0.to_le_bytes());
    out.extend_from_slice(&msg.ep.0.to_le_bytes());
    out.push(msg.channel);
    out.extend_from_slice(&msg.seq.to_le_bytes());
    out.extend_from_slice(&(msg.origin as u16).to_le_bytes());
    out.extend_from_slice(&(msg.payload.len() as u16).to_le_bytes());
    out.extend_from_slice(&msg.payload);
    Ok(out)
}

pub fn decode_pub(bytes: &[u8]) -> Result<PubMsg, WireError> {
    let mut r = Reader::new(bytes);
    let tag = r.u8()?;
    if tag != PUB_TAG {
        return Err(WireError::BadTag(tag));
    }
    let goal = Position(r.u16()?);
    let ep = Position(r.u16()?);
    let channel = r.u8()?;
    let seq = r.u32()?;
    let origin = r.u16()? as NodeId;
    let len = r.u16()? as usize;
    let payload = r.bytes(len)?.to_vec();
    Ok(PubMsg { goal, ep, channel, payload, origin, seq })
}

struct Reader<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, at: 0 }
    }

    fn bytes(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        if self.at + n > self.buf.len() {
            return Err(WireError::Truncated { need: self.at + n, have: self.buf.len() });
        }
        let s = &self.buf[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.bytes(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, WireError> {
        let b = self.bytes(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32, WireError> {
        let b = self.bytes(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}
