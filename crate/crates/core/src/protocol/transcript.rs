//! Recorded sessions: a header line with the session config, then one JSON
//! line per frame in either direction.

use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::VecDeque;
use std::path::Path;

use super::codec::decode_frame;
use super::session::{Session, SessionConfig};
use crate::error::{Error, Result};

pub const TRANSCRIPT_VERSION: u32 = 1;
/// Field differences reported per frame before the rest are elided.
const MAX_DIFFS_PER_FRAME: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    In,
    Out,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub dir: Direction,
    /// Envelope seq; absent for inbound frames that could not be read.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seq: Option<u64>,
    /// Base64 of the complete frame including its length header.
    pub frame: String,
}

impl TranscriptEntry {
    pub fn bytes(&self) -> Result<Vec<u8>> {
        base64::engine::general_purpose::STANDARD
            .decode(self.frame.as_bytes())
            .map_err(|e| Error::Format(format!("transcript frame: {e}")))
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    config: SessionConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transcript {
    pub config: SessionConfig,
    pub entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn new(config: SessionConfig) -> Self {
        Self {
            config,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, dir: Direction, seq: Option<u64>, frame: &[u8]) {
        self.entries.push(TranscriptEntry {
            dir,
            seq,
            frame: base64::engine::general_purpose::STANDARD.encode(frame),
        });
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut s = serde_json::to_string(&Header {
            version: TRANSCRIPT_VERSION,
            config: self.config.clone(),
        })?;
        s.push('\n');
        for e in &self.entries {
            s.push_str(&serde_json::to_string(e)?);
            s.push('\n');
        }
        Ok(s)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Header = serde_json::from_str(
            lines
                .next()
                .ok_or_else(|| Error::Format("empty transcript".into()))?,
        )?;
        if header.version != TRANSCRIPT_VERSION {
            return Err(Error::Format(format!(
                "unsupported transcript version {}",
                header.version
            )));
        }
        let entries = lines
            .enumerate()
            .map(|(i, l)| {
                serde_json::from_str(l)
                    .map_err(|e| Error::Format(format!("transcript line {}: {e}", i + 2)))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            config: header.config,
            entries,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_jsonl()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_jsonl(&std::fs::read_to_string(path)?)
    }
}

/// One disagreement between a recording and its replay.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    /// Seq of the request being answered, or of the recorded frame.
    pub seq: Option<u64>,
    /// JSON path inside the envelope, `""` for the whole frame.
    pub path: String,
    pub expected: Option<Value>,
    pub actual: Option<Value>,
}

impl std::fmt::Display for Divergence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let show = |v: &Option<Value>| match v {
            Some(v) => {
                let s = v.to_string();
                if s.len() > 80 {
                    format!(
                        "{}...",
                        &s[..s.char_indices().nth(77).map_or(s.len(), |(i, _)| i)]
                    )
                } else {
                    s
                }
            }
            None => "(missing)".into(),
        };
        let seq = self.seq.map_or("?".into(), |s| s.to_string());
        let path = if self.path.is_empty() {
            "<frame>"
        } else {
            &self.path
        };
        write!(
            f,
            "seq {seq}: {path}: expected {}, got {}",
            show(&self.expected),
            show(&self.actual)
        )
    }
}

/// Leaf-level differences between two JSON documents.
pub fn json_diff(expected: &Value, actual: &Value) -> Vec<(String, Option<Value>, Option<Value>)> {
    fn walk(
        path: String,
        a: Option<&Value>,
        b: Option<&Value>,
        out: &mut Vec<(String, Option<Value>, Option<Value>)>,
    ) {
        match (a, b) {
            (Some(Value::Object(x)), Some(Value::Object(y))) => {
                let mut keys: Vec<&String> = x.keys().chain(y.keys()).collect();
                keys.sort();
                keys.dedup();
                for k in keys {
                    let p = if path.is_empty() {
                        k.clone()
                    } else {
                        format!("{path}.{k}")
                    };
                    walk(p, x.get(k), y.get(k), out);
                }
            }
            (Some(Value::Array(x)), Some(Value::Array(y))) => {
                for i in 0..x.len().max(y.len()) {
                    walk(format!("{path}[{i}]"), x.get(i), y.get(i), out);
                }
            }
            (a, b) if a == b => {}
            (a, b) => out.push((path, a.cloned(), b.cloned())),
        }
    }
    let mut out = Vec::new();
    walk(String::new(), Some(expected), Some(actual), &mut out);
    out
}

fn frame_value(bytes: &[u8]) -> Option<Value> {
    decode_frame(bytes).ok().and_then(|e| e.to_value().ok())
}

/// Feeds every recorded inbound frame to a fresh session built from the
/// recorded config and compares each outbound frame with the recording.
/// Execution events are drawn from the session at the points where the
/// recording has them, so interleaving is reproduced too.
pub fn replay(t: &Transcript) -> Result<Vec<Divergence>> {
    let mut session = Session::new(t.config.clone());
    let mut produced: VecDeque<Vec<u8>> = VecDeque::new();
    let mut diffs = Vec::new();
    let mut last_request: Option<u64> = None;
    for entry in &t.entries {
        let bytes = entry.bytes()?;
        match entry.dir {
            Direction::In => {
                last_request = entry.seq.or(last_request);
                for env in session.receive_frame(&bytes) {
                    produced.push_back(super::codec::encode_frame(&env)?);
                }
            }
            Direction::Out => {
                if produced.is_empty() {
                    if let Some(env) = session.pump() {
                        produced.push_back(super::codec::encode_frame(&env)?);
                    }
                }
                let actual = produced.pop_front();
                let seq = last_request.or(entry.seq);
                compare(seq, &bytes, actual.as_deref(), &mut diffs);
            }
        }
    }
    produced.extend(
        session
            .complete()
            .iter()
            .map(super::codec::encode_frame)
            .collect::<Result<Vec<_>>>()?,
    );
    for extra in produced {
        diffs.push(Divergence {
            seq: last_request,
            path: String::new(),
            expected: None,
            actual: frame_value(&extra),
        });
    }
    Ok(diffs)
}

fn compare(seq: Option<u64>, recorded: &[u8], actual: Option<&[u8]>, diffs: &mut Vec<Divergence>) {
    let Some(actual) = actual else {
        diffs.push(Divergence {
            seq,
            path: String::new(),
            expected: frame_value(recorded),
            actual: None,
        });
        return;
    };
    if recorded == actual {
        return;
    }
    match (frame_value(recorded), frame_value(actual)) {
        (Some(e), Some(a)) => {
            let d = json_diff(&e, &a);
            if d.is_empty() {
                diffs.push(Divergence {
                    seq,
                    path: String::new(),
                    expected: Some(Value::String("byte-identical frame".into())),
                    actual: Some(Value::String("same fields, different bytes".into())),
                });
            }
            for (path, expected, actual) in d.into_iter().take(MAX_DIFFS_PER_FRAME) {
                diffs.push(Divergence {
                    seq,
                    path,
                    expected,
                    actual,
                });
            }
        }
        (e, a) => diffs.push(Divergence {
            seq,
            path: String::new(),
            expected: e.or(Some(Value::String("undecodable frame".into()))),
            actual: a,
        }),
    }
}
