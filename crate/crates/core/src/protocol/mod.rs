//! Teleoperation session protocol: framed JSON envelopes, the per-client
//! state machine and recorded transcripts. Transports live in the server
//! crate; everything here is synchronous and deterministic.

mod codec;
mod message;
mod session;
mod transcript;

pub use codec::{decode_frame, decode_payload, encode_frame, FrameDecoder, FrameError, MAX_FRAME};
pub use message::{DetectionInfo, Envelope, ErrorCode, FramePayload, MaskRle, Message};
pub use session::{
    Session, SessionConfig, SessionSnapshot, SessionState, DEFAULT_SPEED, PROTOCOL_VERSION,
};
pub use transcript::{
    json_diff, replay, Direction, Divergence, Transcript, TranscriptEntry, TRANSCRIPT_VERSION,
};
