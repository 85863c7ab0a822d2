//! Length-prefixed framing: a 4-byte big-endian payload length followed by
//! the UTF-8 JSON envelope, which always starts with `{`.

use thiserror::Error;

use super::message::Envelope;
use crate::error::Result;

/// Larger frames are treated as corrupt.
pub const MAX_FRAME: usize = 16 << 20;
const HEADER: usize = 4;

#[derive(Debug, Error, PartialEq)]
pub enum FrameError {
    #[error("frame length {0} exceeds the {MAX_FRAME} byte limit")]
    TooLong(usize),
    #[error("payload is not a valid envelope: {reason}")]
    Payload {
        reason: String,
        /// Sequence number, when the payload was readable far enough.
        seq: Option<u64>,
    },
}

pub fn encode_frame(env: &Envelope) -> Result<Vec<u8>> {
    let payload = env.to_json()?;
    let mut out = Vec::with_capacity(HEADER + payload.len());
    out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
    out.extend_from_slice(&payload);
    Ok(out)
}

/// Decodes one complete frame; the length must match the payload exactly.
pub fn decode_frame(bytes: &[u8]) -> std::result::Result<Envelope, FrameError> {
    if bytes.len() < HEADER {
        return Err(FrameError::Payload {
            reason: format!("{} bytes is shorter than the length header", bytes.len()),
            seq: None,
        });
    }
    let len = u32::from_be_bytes(bytes[..HEADER].try_into().unwrap()) as usize;
    if len != bytes.len() - HEADER {
        return Err(FrameError::Payload {
            reason: format!(
                "length header says {len} bytes, payload has {}",
                bytes.len() - HEADER
            ),
            seq: None,
        });
    }
    decode_payload(&bytes[HEADER..])
}

pub fn decode_payload(payload: &[u8]) -> std::result::Result<Envelope, FrameError> {
    let value: serde_json::Value =
        serde_json::from_slice(payload).map_err(|e| FrameError::Payload {
            reason: e.to_string(),
            seq: None,
        })?;
    let seq = value.get("seq").and_then(|s| s.as_u64());
    Envelope::from_value(value).map_err(|e| FrameError::Payload {
        reason: e.to_string(),
        seq,
    })
}

/// Incremental decoder for a byte stream.
///
/// A payload that is valid JSON but not a valid envelope is skipped whole.
/// Anything else that fails (an oversized length, a payload cut short by a
/// wrong length) drops bytes until a plausible header followed by `{`.
#[derive(Debug, Default)]
pub struct FrameDecoder {
    buf: Vec<u8>,
}

impl FrameDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    /// Bytes received but not yet consumed.
    pub fn pending(&self) -> usize {
        self.buf.len()
    }

    fn header_at(&self, i: usize) -> Option<usize> {
        let h = self.buf.get(i..i + HEADER)?;
        Some(u32::from_be_bytes(h.try_into().unwrap()) as usize)
    }

    /// Could a frame start at `i`, judging by the bytes received so far?
    fn plausible_start(&self, i: usize) -> bool {
        let n = self.buf.len();
        if self.buf[i] > (MAX_FRAME >> 24) as u8 {
            return false;
        }
        match self.header_at(i) {
            Some(len) => len <= MAX_FRAME && (i + HEADER >= n || self.buf[i + HEADER] == b'{'),
            None => true,
        }
    }

    /// Drops bytes up to the next offset that could start a frame.
    fn resync(&mut self) -> Vec<u8> {
        let n = self.buf.len();
        let start = (1..n).find(|&i| self.plausible_start(i)).unwrap_or(n);
        self.buf.drain(..start).collect()
    }

    /// Next complete frame, or `None` when more bytes are needed.
    pub fn next_frame(&mut self) -> Option<std::result::Result<Envelope, FrameError>> {
        self.next_raw().map(|(_, r)| r)
    }

    /// Like [`next_frame`](Self::next_frame), also returning the bytes
    /// consumed, which for a bad frame are the bytes skipped.
    pub fn next_raw(&mut self) -> Option<(Vec<u8>, std::result::Result<Envelope, FrameError>)> {
        let len = self.header_at(0)?;
        if len > MAX_FRAME {
            return Some((self.resync(), Err(FrameError::TooLong(len))));
        }
        if self.buf.len() > HEADER && self.buf[HEADER] != b'{' {
            let raw = self.resync();
            return Some((
                raw,
                Err(FrameError::Payload {
                    reason: "payload does not start with '{'".into(),
                    seq: None,
                }),
            ));
        }
        if self.buf.len() < HEADER + len {
            return None;
        }
        let payload = &self.buf[HEADER..HEADER + len];
        match serde_json::from_slice::<serde_json::Value>(payload) {
            Ok(value) => {
                let seq = value.get("seq").and_then(|s| s.as_u64());
                let out = Envelope::from_value(value).map_err(|e| FrameError::Payload {
                    reason: e.to_string(),
                    seq,
                });
                Some((self.buf.drain(..HEADER + len).collect(), out))
            }
            Err(e) => {
                let reason = e.to_string();
                Some((
                    self.resync(),
                    Err(FrameError::Payload { reason, seq: None }),
                ))
            }
        }
    }
}
