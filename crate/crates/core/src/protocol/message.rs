use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::geometry::{BBox, CameraIntrinsics, DepthImage, Mask, Pose};
use crate::pipeline::Detection;
use crate::plan::{GraspPlan, Provenance};
use crate::scene::{Outcome, SceneFrame, SuccessRates};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorCode {
    BadState,
    Stale,
    BadFrame,
    UnknownObject,
    NoGraspAvailable,
    InvalidDemo,
    ExecutionFailed,
}

impl std::fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let v = serde_json::to_value(self).map_err(|_| std::fmt::Error)?;
        f.write_str(v.as_str().unwrap_or_default())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionInfo {
    pub object_id: u32,
    pub bbox: BBox,
    /// Initial grasp pose, when the mask yields one.
    pub initial: Option<Pose>,
    pub similarity: Option<f64>,
    pub provenance: Option<Provenance>,
    pub plan: Option<GraspPlan>,
}

impl From<&Detection> for DetectionInfo {
    fn from(d: &Detection) -> Self {
        Self {
            object_id: d.object_id,
            bbox: d.bbox,
            initial: d.initial.as_ref().map(|g| g.pose()),
            similarity: d.similarity,
            provenance: d.provenance(),
            plan: d.plan.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskRle {
    pub object_id: u32,
    /// Alternating unset/set run lengths over the row-major bitmap.
    pub counts: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FramePayload {
    pub width: usize,
    pub height: usize,
    /// Base64 of little-endian `f32` depths, row-major.
    pub depth: String,
    pub masks: Vec<MaskRle>,
    pub intrinsics: CameraIntrinsics,
    pub camera_pose: Pose,
}

impl FramePayload {
    pub fn from_frame(frame: &SceneFrame) -> Self {
        let bytes: Vec<u8> = frame
            .depth
            .data()
            .iter()
            .flat_map(|d| d.to_le_bytes())
            .collect();
        Self {
            width: frame.depth.width(),
            height: frame.depth.height(),
            depth: base64::engine::general_purpose::STANDARD.encode(bytes),
            masks: frame
                .masks
                .iter()
                .map(|(id, m)| MaskRle {
                    object_id: *id,
                    counts: m.to_rle(),
                })
                .collect(),
            intrinsics: frame.intrinsics,
            camera_pose: frame.camera_pose,
        }
    }

    pub fn to_frame(&self) -> Result<SceneFrame> {
        let bytes = base64::engine::general_purpose::STANDARD
            .decode(self.depth.as_bytes())
            .map_err(|e| Error::Format(format!("frame depth: {e}")))?;
        if bytes.len() % 4 != 0 {
            return Err(Error::Format(
                "frame depth is not a whole number of f32".into(),
            ));
        }
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let masks = self
            .masks
            .iter()
            .map(|m| {
                Ok((
                    m.object_id,
                    Mask::from_rle(self.width, self.height, &m.counts)?,
                ))
            })
            .collect::<Result<_>>()?;
        Ok(SceneFrame {
            depth: DepthImage::new(self.width, self.height, data)?,
            masks,
            intrinsics: self.intrinsics,
            camera_pose: self.camera_pose,
        })
    }
}

/// Every message of the session protocol. Client requests come first, then
/// server replies and events.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "body", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Message {
    Hello {
        protocol: String,
    },
    Initialize {},
    Search {},
    GetFrame {},
    DemoStart {
        category: String,
        /// Object being demonstrated on. When absent the object nearest to
        /// the final grasp is used.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        object_id: Option<u32>,
    },
    DemoWaypoint {
        pose: Pose,
        gripper_open: bool,
    },
    DemoEnd {
        grasp_pose: Pose,
    },
    Back {},
    Move {
        pose: Pose,
    },
    SimulateAll {},
    Execute {
        object_id: u32,
    },

    HelloAck {
        protocol: String,
        session: u64,
    },
    Busy {},
    Ready {
        pose: Pose,
    },
    Detections {
        detections: Vec<DetectionInfo>,
    },
    Frame(FramePayload),
    /// Answers each step of a demonstration. Only the reply to DEMO_END
    /// carries the stored record and its grasp after snapping to the object
    /// outline.
    DemoAck {
        waypoint_count: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        record_id: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grasp_pose: Option<Pose>,
    },
    Cleared {},
    Trace {
        t: f64,
        pose: Pose,
    },
    TraceEnd {
        samples: usize,
    },
    Result {
        object_id: u32,
        outcome: Outcome,
        provenance: Provenance,
        /// 1 for the first attempt on this object.
        attempt: usize,
        rates: SuccessRates,
    },
    Error {
        code: ErrorCode,
        message: String,
    },
}

impl Message {
    pub fn kind(&self) -> &'static str {
        match self {
            Message::Hello { .. } => "HELLO",
            Message::Initialize {} => "INITIALIZE",
            Message::Search {} => "SEARCH",
            Message::GetFrame {} => "GET_FRAME",
            Message::DemoStart { .. } => "DEMO_START",
            Message::DemoWaypoint { .. } => "DEMO_WAYPOINT",
            Message::DemoEnd { .. } => "DEMO_END",
            Message::Back {} => "BACK",
            Message::Move { .. } => "MOVE",
            Message::SimulateAll {} => "SIMULATE_ALL",
            Message::Execute { .. } => "EXECUTE",
            Message::HelloAck { .. } => "HELLO_ACK",
            Message::Busy {} => "BUSY",
            Message::Ready { .. } => "READY",
            Message::Detections { .. } => "DETECTIONS",
            Message::Frame(_) => "FRAME",
            Message::DemoAck { .. } => "DEMO_ACK",
            Message::Cleared {} => "CLEARED",
            Message::Trace { .. } => "TRACE",
            Message::TraceEnd { .. } => "TRACE_END",
            Message::Result { .. } => "RESULT",
            Message::Error { .. } => "ERROR",
        }
    }

    /// Sent by clients, as opposed to server replies and events.
    pub fn is_request(&self) -> bool {
        matches!(
            self,
            Message::Hello { .. }
                | Message::Initialize {}
                | Message::Search {}
                | Message::GetFrame {}
                | Message::DemoStart { .. }
                | Message::DemoWaypoint { .. }
                | Message::DemoEnd { .. }
                | Message::Back {}
                | Message::Move { .. }
                | Message::SimulateAll {}
                | Message::Execute { .. }
        )
    }

    pub fn error(code: ErrorCode, message: impl Into<String>) -> Self {
        Message::Error {
            code,
            message: message.into(),
        }
    }
}

/// One protocol message with its sequence number. `re` is the sequence
/// number of the request a reply or event answers.
#[derive(Clone, Debug, PartialEq)]
pub struct Envelope {
    pub seq: u64,
    pub re: Option<u64>,
    pub message: Message,
}

/// Rebuilds every object with its keys in sorted order.
fn canonical(v: Value) -> Value {
    match v {
        Value::Object(m) => {
            let mut entries: Vec<(String, Value)> = m.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(
                entries
                    .into_iter()
                    .map(|(k, v)| (k, canonical(v)))
                    .collect::<Map<_, _>>(),
            )
        }
        Value::Array(a) => Value::Array(a.into_iter().map(canonical).collect()),
        other => other,
    }
}

impl Envelope {
    pub fn new(seq: u64, message: Message) -> Self {
        Self {
            seq,
            re: None,
            message,
        }
    }

    pub fn reply(seq: u64, re: u64, message: Message) -> Self {
        Self {
            seq,
            re: Some(re),
            message,
        }
    }

    pub fn to_value(&self) -> Result<Value> {
        let mut v = serde_json::to_value(&self.message)?;
        let obj = v
            .as_object_mut()
            .ok_or_else(|| Error::Format("message is not an object".into()))?;
        obj.insert("seq".into(), self.seq.into());
        if let Some(re) = self.re {
            obj.insert("re".into(), re.into());
        }
        Ok(canonical(v))
    }

    /// Compact JSON with sorted keys. Equal envelopes always give equal bytes.
    pub fn to_json(&self) -> Result<Vec<u8>> {
        Ok(serde_json::to_vec(&self.to_value()?)?)
    }

    pub fn from_value(v: Value) -> Result<Self> {
        let Value::Object(mut obj) = v else {
            return Err(Error::Format("envelope is not an object".into()));
        };
        let seq = obj
            .remove("seq")
            .and_then(|s| s.as_u64())
            .ok_or_else(|| Error::Format("envelope needs an unsigned seq".into()))?;
        let re = match obj.remove("re") {
            None | Some(Value::Null) => None,
            Some(r) => Some(
                r.as_u64()
                    .ok_or_else(|| Error::Format("re must be unsigned".into()))?,
            ),
        };
        if !obj.contains_key("body") {
            obj.insert("body".into(), Value::Object(Map::new()));
        }
        let message = serde_json::from_value(Value::Object(obj))?;
        Ok(Self { seq, re, message })
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        Self::from_value(serde_json::from_slice(bytes)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;

    #[test]
    fn wire_shape() {
        let e = Envelope::reply(7, 3, Message::Execute { object_id: 2 });
        assert_eq!(
            String::from_utf8(e.to_json().unwrap()).unwrap(),
            r#"{"body":{"object_id":2},"re":3,"seq":7,"type":"EXECUTE"}"#
        );
        let e = Envelope::new(1, Message::Search {});
        assert_eq!(
            String::from_utf8(e.to_json().unwrap()).unwrap(),
            r#"{"body":{},"seq":1,"type":"SEARCH"}"#
        );
    }

    #[test]
    fn missing_body_is_empty() {
        let e = Envelope::from_json(br#"{"type":"BACK","seq":4}"#).unwrap();
        assert_eq!(e, Envelope::new(4, Message::Back {}));
    }

    #[test]
    fn rejects_bad_envelopes() {
        for bad in [
            &br#"[1]"#[..],
            br#"{"type":"BACK"}"#,
            br#"{"type":"BACK","seq":-1}"#,
            br#"{"type":"NOPE","seq":1,"body":{}}"#,
            br#"{"type":"EXECUTE","seq":1,"body":{}}"#,
            br#"{"type":"BACK","seq":1,"re":"x"}"#,
        ] {
            assert!(
                Envelope::from_json(bad).is_err(),
                "{}",
                String::from_utf8_lossy(bad)
            );
        }
    }

    #[test]
    fn kind_matches_tag() {
        let m = Message::DemoWaypoint {
            pose: Pose::from_position_yaw(Vec3::new(0.1, 0.0, 0.2), 0.3),
            gripper_open: true,
        };
        let v = Envelope::new(1, m.clone()).to_value().unwrap();
        assert_eq!(v["type"], m.kind());
        assert!(m.is_request());
        assert_eq!(
            ErrorCode::NoGraspAvailable.to_string(),
            "no-grasp-available"
        );
    }

    #[test]
    fn frame_payload_round_trip() {
        let depth = DepthImage::new(3, 2, vec![0.5, 0.25, 10.0, 0.125, 1.0, 2.0]).unwrap();
        let mask = Mask::from_pixels(3, 2, &[(1, 0), (2, 1)]).unwrap();
        let frame = SceneFrame {
            depth,
            masks: vec![(4, mask)],
            intrinsics: CameraIntrinsics::new(2.0, 2.0, 1.0, 1.0, 3, 2).unwrap(),
            camera_pose: Pose::from_translation(0.0, 0.0, 0.45),
        };
        let p = FramePayload::from_frame(&frame);
        assert_eq!(p.masks[0].counts, vec![1, 1, 3, 1]);
        assert_eq!(p.to_frame().unwrap(), frame);
    }
}
