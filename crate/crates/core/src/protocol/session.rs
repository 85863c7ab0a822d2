use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::VecDeque;

use super::codec::{decode_frame, encode_frame, FrameError};
use super::message::{DetectionInfo, Envelope, ErrorCode, FramePayload, Message};
use super::transcript::{Direction, Transcript};
use crate::contrastive::EncoderParams;
use crate::demo::{record_demo, DemoStore, MAX_WAYPOINTS};
use crate::error::{Error, Result};
use crate::geometry::Pose;
use crate::pipeline::{detect, Detection, PipelineConfig};
use crate::scene::{evaluate_grasp, execute, render, success_rates, Outcome, Scene, TracePoint};

pub const PROTOCOL_VERSION: &str = "1";
/// Tool speed for executed and simulated motion, m/s.
pub const DEFAULT_SPEED: f64 = 0.25;

fn model_to_value<S: Serializer>(p: &EncoderParams, s: S) -> std::result::Result<S::Ok, S::Error> {
    let text = p.to_json().map_err(serde::ser::Error::custom)?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(serde::ser::Error::custom)?;
    v.serialize(s)
}

fn model_from_value<'de, D: Deserializer<'de>>(
    d: D,
) -> std::result::Result<EncoderParams, D::Error> {
    let v = serde_json::Value::deserialize(d)?;
    EncoderParams::from_json(&v.to_string()).map_err(serde::de::Error::custom)
}

/// Everything a session's behaviour depends on. Replaying the same inbound
/// frames against the same config reproduces the same outbound frames.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub id: u64,
    pub scene: Scene,
    pub pipeline: PipelineConfig,
    #[serde(
        serialize_with = "model_to_value",
        deserialize_with = "model_from_value"
    )]
    pub model: EncoderParams,
    pub speed: f64,
}

impl SessionConfig {
    pub fn new(scene: Scene, model: EncoderParams) -> Self {
        Self {
            id: 1,
            scene,
            pipeline: PipelineConfig::default(),
            model,
            speed: DEFAULT_SPEED,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SessionState {
    Idle,
    Detecting,
    DemoRecording,
    Executing,
}

impl SessionState {
    pub const ALL: [SessionState; 4] = [
        Self::Idle,
        Self::Detecting,
        Self::DemoRecording,
        Self::Executing,
    ];
}

#[derive(Clone, Debug, PartialEq)]
struct PendingDemo {
    category: String,
    object_id: Option<u32>,
    waypoints: Vec<Pose>,
    resume: SessionState,
}

/// Server side of one client connection: the state machine over the
/// simulated robot, the grasp pipeline and the demonstration store.
///
/// Requests go in through [`handle`](Self::handle), which returns the
/// immediate replies. EXECUTE instead leaves the session in `executing` with
/// queued TRACE events that the transport drains with
/// [`pump`](Self::pump), ending with TRACE_END and RESULT.
#[derive(Debug)]
pub struct Session {
    cfg: SessionConfig,
    state: SessionState,
    store: DemoStore,
    robot: Pose,
    virtual_pose: Pose,
    trajectory: Vec<Pose>,
    demo: Option<PendingDemo>,
    detections: Vec<Detection>,
    attempts: Vec<(u32, Outcome)>,
    last_in: Option<u64>,
    next_out: u64,
    events: VecDeque<(u64, Message)>,
    transcript: Option<Transcript>,
}

/// Observable contents, for checking that a rejected message changed
/// nothing.
#[derive(Clone, Debug, PartialEq)]
pub struct SessionSnapshot {
    pub state: SessionState,
    pub demos: usize,
    pub pending_waypoints: Option<usize>,
    pub trajectory: usize,
    pub detections: usize,
    pub attempts: usize,
    pub robot: Pose,
    pub virtual_pose: Pose,
}

type Reply = std::result::Result<Vec<Message>, Message>;

fn fail(code: ErrorCode, message: impl Into<String>) -> Message {
    Message::error(code, message)
}

impl Session {
    pub fn new(cfg: SessionConfig) -> Self {
        let home = cfg.pipeline.detection_ee_pose();
        Self {
            cfg,
            state: SessionState::Idle,
            store: DemoStore::new(),
            robot: home,
            virtual_pose: home,
            trajectory: Vec::new(),
            demo: None,
            detections: Vec::new(),
            attempts: Vec::new(),
            last_in: None,
            next_out: 1,
            events: VecDeque::new(),
            transcript: None,
        }
    }

    /// Also records every frame in and out.
    pub fn recording(cfg: SessionConfig) -> Self {
        let t = Transcript::new(cfg.clone());
        let mut s = Self::new(cfg);
        s.transcript = Some(t);
        s
    }

    pub fn config(&self) -> &SessionConfig {
        &self.cfg
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn store(&self) -> &DemoStore {
        &self.store
    }

    pub fn transcript(&self) -> Option<&Transcript> {
        self.transcript.as_ref()
    }

    pub fn take_transcript(&mut self) -> Option<Transcript> {
        self.transcript.take()
    }

    pub fn snapshot(&self) -> SessionSnapshot {
        SessionSnapshot {
            state: self.state,
            demos: self.store.len(),
            pending_waypoints: self.demo.as_ref().map(|d| d.waypoints.len()),
            trajectory: self.trajectory.len(),
            detections: self.detections.len(),
            attempts: self.attempts.len(),
            robot: self.robot,
            virtual_pose: self.virtual_pose,
        }
    }

    fn out(&mut self, re: Option<u64>, message: Message) -> Envelope {
        let env = Envelope {
            seq: self.next_out,
            re,
            message,
        };
        self.next_out += 1;
        if let Some(t) = &mut self.transcript {
            if let Ok(bytes) = encode_frame(&env) {
                t.push(Direction::Out, Some(env.seq), &bytes);
            }
        }
        env
    }

    /// Decodes one complete frame and handles it; a frame that does not
    /// decode gets a bad-frame error.
    pub fn receive_frame(&mut self, bytes: &[u8]) -> Vec<Envelope> {
        match decode_frame(bytes) {
            Ok(env) => {
                self.record_in(Some(env.seq), bytes);
                self.handle(env)
            }
            Err(e) => {
                let seq = match &e {
                    FrameError::Payload { seq, .. } => *seq,
                    FrameError::TooLong(_) => None,
                };
                self.record_in(seq, bytes);
                vec![self.bad_frame(&e)]
            }
        }
    }

    /// Records raw inbound bytes that the transport decoded itself.
    pub fn record_in(&mut self, seq: Option<u64>, bytes: &[u8]) {
        if let Some(t) = &mut self.transcript {
            t.push(Direction::In, seq, bytes);
        }
    }

    pub fn bad_frame(&mut self, e: &FrameError) -> Envelope {
        log::debug!("bad frame: {e}");
        let re = match e {
            FrameError::Payload { seq, .. } => *seq,
            FrameError::TooLong(_) => None,
        };
        self.out(re, fail(ErrorCode::BadFrame, "malformed frame"))
    }

    pub fn handle(&mut self, env: Envelope) -> Vec<Envelope> {
        let re = Some(env.seq);
        if self.last_in.is_some_and(|last| env.seq <= last) {
            let msg = fail(
                ErrorCode::Stale,
                format!("seq {} is not above {}", env.seq, self.last_in.unwrap()),
            );
            return vec![self.out(re, msg)];
        }
        self.last_in = Some(env.seq);
        let replies = match self.dispatch(env.seq, env.message) {
            Ok(r) => r,
            Err(e) => vec![e],
        };
        replies.into_iter().map(|m| self.out(re, m)).collect()
    }

    pub fn is_executing(&self) -> bool {
        self.state == SessionState::Executing
    }

    /// Next queued execution event. The session leaves `executing` once the
    /// final RESULT has been taken.
    pub fn pump(&mut self) -> Option<Envelope> {
        let (re, msg) = self.events.pop_front()?;
        if self.events.is_empty() {
            self.state = SessionState::Detecting;
        }
        Some(self.out(Some(re), msg))
    }

    /// Remaining execution events.
    pub fn complete(&mut self) -> Vec<Envelope> {
        std::iter::from_fn(|| self.pump()).collect()
    }

    fn bad_state(&self, kind: &str) -> Message {
        let state = serde_json::to_value(self.state)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default();
        fail(
            ErrorCode::BadState,
            format!("{kind} is not allowed while {state}"),
        )
    }

    fn dispatch(&mut self, seq: u64, msg: Message) -> Reply {
        use SessionState::*;
        let kind = msg.kind();
        let state = self.state;
        if !msg.is_request() {
            return Err(fail(
                ErrorCode::BadState,
                format!("{kind} is a server message"),
            ));
        }
        if state == Executing {
            return Err(self.bad_state(kind));
        }
        match msg {
            Message::Hello { .. } => Ok(vec![Message::HelloAck {
                protocol: PROTOCOL_VERSION.into(),
                session: self.cfg.id,
            }]),
            Message::Initialize {} if matches!(state, Idle | Detecting) => {
                let home = self.cfg.pipeline.detection_ee_pose();
                self.robot = home;
                self.virtual_pose = home;
                self.trajectory.clear();
                self.detections.clear();
                self.state = Idle;
                Ok(vec![Message::Ready { pose: home }])
            }
            Message::Search {} if matches!(state, Idle | Detecting) => {
                self.search()
                    .map_err(|e| fail(ErrorCode::ExecutionFailed, e.to_string()))?;
                self.state = Detecting;
                Ok(vec![Message::Detections {
                    detections: self.detections.iter().map(DetectionInfo::from).collect(),
                }])
            }
            Message::GetFrame {} if matches!(state, Idle | Detecting) => {
                let camera = self.robot.compose(&self.cfg.pipeline.calibration.transform);
                let frame = render(&self.cfg.scene, &camera, &self.cfg.pipeline.intrinsics);
                Ok(vec![Message::Frame(FramePayload::from_frame(&frame))])
            }
            Message::DemoStart {
                category,
                object_id,
            } if matches!(state, Idle | Detecting) => {
                if category.trim().is_empty() {
                    return Err(fail(
                        ErrorCode::InvalidDemo,
                        "demonstration needs a category",
                    ));
                }
                if let Some(id) = object_id {
                    if self.cfg.scene.object(id).is_none() {
                        return Err(fail(ErrorCode::UnknownObject, format!("no object {id}")));
                    }
                }
                self.demo = Some(PendingDemo {
                    category,
                    object_id,
                    waypoints: Vec::new(),
                    resume: state,
                });
                self.state = DemoRecording;
                Ok(vec![Message::DemoAck {
                    waypoint_count: 0,
                    record_id: None,
                    grasp_pose: None,
                }])
            }
            Message::DemoWaypoint { pose, .. } if state == DemoRecording => {
                let demo = self
                    .demo
                    .as_mut()
                    .expect("recording without a pending demo");
                // the final grasp arrives with DEMO_END
                if demo.waypoints.len() + 1 >= MAX_WAYPOINTS {
                    return Err(fail(
                        ErrorCode::InvalidDemo,
                        format!("a demonstration holds at most {MAX_WAYPOINTS} poses"),
                    ));
                }
                demo.waypoints.push(pose);
                Ok(vec![Message::DemoAck {
                    waypoint_count: demo.waypoints.len(),
                    record_id: None,
                    grasp_pose: None,
                }])
            }
            Message::DemoEnd { grasp_pose } if state == DemoRecording => {
                self.finish_demo(grasp_pose)
            }
            Message::Back {} if matches!(state, Idle | Detecting | DemoRecording) => {
                if let Some(d) = self.demo.take() {
                    self.state = d.resume;
                }
                self.trajectory.clear();
                self.virtual_pose = self.robot;
                Ok(vec![Message::Cleared {}])
            }
            Message::Move { pose } if matches!(state, Idle | Detecting | DemoRecording) => {
                let trace = execute(
                    &[self.virtual_pose, pose],
                    self.cfg.speed,
                    &self.cfg.scene.workspace,
                )
                .map_err(|e| fail(ErrorCode::ExecutionFailed, e.to_string()))?;
                self.virtual_pose = pose;
                self.trajectory.push(pose);
                Ok(trace_messages(trace))
            }
            Message::SimulateAll {} if state == Detecting => {
                let mut path = vec![self.virtual_pose];
                for d in &self.detections {
                    if let Some(p) = &d.plan {
                        path.extend(p.waypoints.iter().copied());
                        path.push(p.pre_grasp);
                        path.push(self.virtual_pose);
                    }
                }
                let trace = execute(&path, self.cfg.speed, &self.cfg.scene.workspace)
                    .map_err(|e| fail(ErrorCode::ExecutionFailed, e.to_string()))?;
                Ok(trace_messages(trace))
            }
            Message::Execute { object_id } if state == Detecting => {
                self.start_execution(seq, object_id)
            }
            _ => Err(self.bad_state(kind)),
        }
    }

    fn search(&mut self) -> Result<()> {
        let (_, dets) = detect(
            &self.cfg.scene,
            &self.cfg.model,
            &self.store,
            &self.cfg.pipeline,
        )?;
        self.detections = dets;
        Ok(())
    }

    fn finish_demo(&mut self, grasp_pose: Pose) -> Reply {
        let demo = self.demo.clone().expect("recording without a pending demo");
        let mut waypoints = demo.waypoints.clone();
        waypoints.push(grasp_pose);
        if waypoints.len() < 2 {
            return Err(fail(
                ErrorCode::InvalidDemo,
                "a demonstration needs at least one waypoint before the grasp",
            ));
        }
        if self.detections.is_empty() {
            self.search()
                .map_err(|e| fail(ErrorCode::ExecutionFailed, e.to_string()))?;
        }
        let near = |d: &&Detection| {
            d.cloud
                .as_ref()
                .map(|c| (c.centroid.xy() - grasp_pose.position.xy()).norm())
                .unwrap_or(f64::INFINITY)
        };
        let det = match demo.object_id {
            Some(id) => self.detections.iter().find(|d| d.object_id == id),
            None => self
                .detections
                .iter()
                .filter(|d| d.cloud.is_some())
                .min_by(|a, b| near(a).total_cmp(&near(b))),
        };
        let Some(cloud) = det.and_then(|d| d.cloud.clone()) else {
            return Err(fail(
                ErrorCode::InvalidDemo,
                "no point cloud for the demonstrated object",
            ));
        };
        let record = record_demo(demo.category, cloud, waypoints)
            .map_err(|e| fail(ErrorCode::InvalidDemo, e.to_string()))?;
        let count = record.waypoints.len();
        let grasp = *record.grasp();
        self.store.push(record);
        self.demo = None;
        self.state = demo.resume;
        Ok(vec![Message::DemoAck {
            waypoint_count: count,
            record_id: Some(self.store.len() - 1),
            grasp_pose: Some(grasp),
        }])
    }

    fn start_execution(&mut self, seq: u64, object_id: u32) -> Reply {
        let Some(det) = self.detections.iter().find(|d| d.object_id == object_id) else {
            return Err(fail(
                ErrorCode::UnknownObject,
                format!("object {object_id} was not detected"),
            ));
        };
        let Some(plan) = det.plan.clone() else {
            return Err(fail(
                ErrorCode::NoGraspAvailable,
                Error::NoGraspAvailable.to_string(),
            ));
        };
        let home = self.robot;
        let mut path = vec![home];
        path.extend(plan.waypoints.iter().copied());
        path.push(plan.pre_grasp);
        path.push(home);
        let trace = execute(&path, self.cfg.speed, &self.cfg.scene.workspace)
            .map_err(|e| fail(ErrorCode::ExecutionFailed, e.to_string()))?;
        let outcome = evaluate_grasp(
            &self.cfg.scene,
            object_id,
            &plan,
            &self.cfg.pipeline.gripper,
        );
        self.attempts.push((object_id, outcome));
        let attempt = self
            .attempts
            .iter()
            .filter(|(id, _)| *id == object_id)
            .count();
        let rates = success_rates(&self.attempts).expect("at least one attempt");
        self.events = trace_messages(trace)
            .into_iter()
            .map(|m| (seq, m))
            .collect();
        self.events.push_back((
            seq,
            Message::Result {
                object_id,
                outcome,
                provenance: plan.provenance,
                attempt,
                rates,
            },
        ));
        self.state = SessionState::Executing;
        Ok(Vec::new())
    }
}

fn trace_messages(trace: Vec<TracePoint>) -> Vec<Message> {
    let samples = trace.len();
    let mut out: Vec<Message> = trace
        .into_iter()
        .map(|p| Message::Trace {
            t: p.t,
            pose: p.pose,
        })
        .collect();
    out.push(Message::TraceEnd { samples });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use crate::scene::{Category, SceneObject, Workspace};

    pub(crate) fn lone_plate() -> SessionConfig {
        let scene = Scene {
            objects: vec![SceneObject::new(
                0,
                Category::Plate,
                Vec3::new(0.12, 0.12, 0.02),
                0.02,
                -0.03,
                0.4,
            )],
            seed: 0,
            workspace: Workspace::default(),
        };
        SessionConfig::new(scene, EncoderParams::with_default_architecture(0))
    }

    fn send(s: &mut Session, seq: u64, m: Message) -> Vec<Envelope> {
        let mut out = s.handle(Envelope::new(seq, m));
        out.extend(s.complete());
        out
    }

    #[test]
    fn hello_and_stale() {
        let mut s = Session::new(lone_plate());
        let r = send(
            &mut s,
            1,
            Message::Hello {
                protocol: "1".into(),
            },
        );
        assert_eq!(
            r[0].message,
            Message::HelloAck {
                protocol: "1".into(),
                session: 1
            }
        );
        assert_eq!((r[0].seq, r[0].re), (1, Some(1)));
        let r = send(&mut s, 1, Message::Search {});
        assert!(matches!(
            r[0].message,
            Message::Error {
                code: ErrorCode::Stale,
                ..
            }
        ));
        assert_eq!(s.state(), SessionState::Idle);
        let r = send(&mut s, 2, Message::Search {});
        assert!(
            matches!(&r[0].message, Message::Detections { detections } if detections.len() == 1)
        );
        assert_eq!(r[0].seq, 3);
    }

    #[test]
    fn waypoint_needs_recording() {
        let mut s = Session::new(lone_plate());
        let before = s.snapshot();
        let r = send(
            &mut s,
            1,
            Message::DemoWaypoint {
                pose: Pose::identity(),
                gripper_open: true,
            },
        );
        assert!(matches!(
            r[0].message,
            Message::Error {
                code: ErrorCode::BadState,
                ..
            }
        ));
        assert_eq!(s.snapshot(), before);
    }

    #[test]
    fn execute_streams_then_returns_home() {
        let mut s = Session::new(lone_plate());
        send(&mut s, 1, Message::Search {});
        let home = s.snapshot().robot;
        let first = s.handle(Envelope::new(2, Message::Execute { object_id: 0 }));
        assert!(first.is_empty());
        assert!(s.is_executing());
        let r = s.handle(Envelope::new(3, Message::Search {}));
        assert!(matches!(
            r[0].message,
            Message::Error {
                code: ErrorCode::BadState,
                ..
            }
        ));
        let events = s.complete();
        assert!(events.iter().all(|e| e.re == Some(2)));
        let n = events.len();
        assert!(matches!(events[n - 2].message, Message::TraceEnd { samples } if samples == n - 2));
        match &events[n - 1].message {
            Message::Result {
                outcome, attempt, ..
            } => {
                assert_eq!(*outcome, Outcome::Miss);
                assert_eq!(*attempt, 1);
            }
            m => panic!("{m:?}"),
        }
        match &events[n - 3].message {
            Message::Trace { pose, .. } => assert!((pose.position - home.position).norm() < 1e-12),
            m => panic!("{m:?}"),
        }
        assert_eq!(s.state(), SessionState::Detecting);
        let seqs: Vec<u64> = events.iter().map(|e| e.seq).collect();
        assert!(seqs.windows(2).all(|w| w[1] == w[0] + 1));
    }

    #[test]
    fn unknown_object_and_bad_category() {
        let mut s = Session::new(lone_plate());
        send(&mut s, 1, Message::Search {});
        let r = send(&mut s, 2, Message::Execute { object_id: 9 });
        assert!(matches!(
            r[0].message,
            Message::Error {
                code: ErrorCode::UnknownObject,
                ..
            }
        ));
        let r = send(
            &mut s,
            3,
            Message::DemoStart {
                category: " ".into(),
                object_id: None,
            },
        );
        assert!(matches!(
            r[0].message,
            Message::Error {
                code: ErrorCode::InvalidDemo,
                ..
            }
        ));
        let r = send(
            &mut s,
            4,
            Message::DemoStart {
                category: "plate".into(),
                object_id: Some(7),
            },
        );
        assert!(matches!(
            r[0].message,
            Message::Error {
                code: ErrorCode::UnknownObject,
                ..
            }
        ));
        assert_eq!(s.state(), SessionState::Detecting);
    }

    #[test]
    fn back_cancels_demo() {
        let mut s = Session::new(lone_plate());
        send(&mut s, 1, Message::Search {});
        send(
            &mut s,
            2,
            Message::DemoStart {
                category: "plate".into(),
                object_id: Some(0),
            },
        );
        assert_eq!(s.state(), SessionState::DemoRecording);
        let r = send(&mut s, 3, Message::Execute { object_id: 0 });
        assert!(matches!(
            r[0].message,
            Message::Error {
                code: ErrorCode::BadState,
                ..
            }
        ));
        let r = send(
            &mut s,
            4,
            Message::DemoEnd {
                grasp_pose: Pose::from_translation(0.0, 0.0, 0.01),
            },
        );
        assert!(matches!(
            r[0].message,
            Message::Error {
                code: ErrorCode::InvalidDemo,
                ..
            }
        ));
        assert_eq!(s.state(), SessionState::DemoRecording);
        let r = send(&mut s, 5, Message::Back {});
        assert_eq!(r[0].message, Message::Cleared {});
        assert_eq!(s.state(), SessionState::Detecting);
        assert_eq!(s.store().len(), 0);
    }

    #[test]
    fn waypoint_limit() {
        let mut s = Session::new(lone_plate());
        send(
            &mut s,
            1,
            Message::DemoStart {
                category: "plate".into(),
                object_id: Some(0),
            },
        );
        let wp = |z| Message::DemoWaypoint {
            pose: Pose::from_translation(0.0, 0.0, z),
            gripper_open: true,
        };
        for i in 0..MAX_WAYPOINTS - 1 {
            let r = send(&mut s, 2 + i as u64, wp(0.3 - 0.01 * i as f64));
            assert!(
                matches!(r[0].message, Message::DemoAck { waypoint_count, .. } if waypoint_count == i + 1)
            );
        }
        let r = send(&mut s, 20, wp(0.1));
        assert!(matches!(
            r[0].message,
            Message::Error {
                code: ErrorCode::InvalidDemo,
                ..
            }
        ));
    }

    #[test]
    fn move_outside_workspace_fails() {
        let mut s = Session::new(lone_plate());
        let r = send(
            &mut s,
            1,
            Message::Move {
                pose: Pose::from_translation(2.0, 0.0, 0.3),
            },
        );
        assert!(matches!(
            r[0].message,
            Message::Error {
                code: ErrorCode::ExecutionFailed,
                ..
            }
        ));
        let r = send(
            &mut s,
            2,
            Message::Move {
                pose: Pose::from_translation(0.05, 0.0, 0.3),
            },
        );
        assert!(matches!(
            r.last().unwrap().message,
            Message::TraceEnd { .. }
        ));
        assert_eq!(s.snapshot().trajectory, 1);
        assert_ne!(s.snapshot().virtual_pose, s.snapshot().robot);
    }

    #[test]
    fn bad_frame_reply() {
        let mut s = Session::new(lone_plate());
        let r = s.receive_frame(&[0, 0, 0, 9, b'{']);
        assert!(matches!(
            r[0].message,
            Message::Error {
                code: ErrorCode::BadFrame,
                ..
            }
        ));
        let good = encode_frame(&Envelope::new(
            1,
            Message::Hello {
                protocol: "1".into(),
            },
        ))
        .unwrap();
        assert!(matches!(
            s.receive_frame(&good)[0].message,
            Message::HelloAck { .. }
        ));
    }

    #[test]
    fn config_round_trip() {
        let cfg = lone_plate();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: SessionConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }
}
