#![allow(dead_code)]

use grasplab_core::contrastive::EncoderParams;
use grasplab_core::experiment::scripted_demonstration;
use grasplab_core::geometry::{BBox, CameraIntrinsics, Pose, Vec3};
use grasplab_core::plan::{GraspPlan, Provenance};
use grasplab_core::protocol::*;
use grasplab_core::scene::{Category, Outcome, Scene, SceneObject, SuccessRates, Workspace};

pub fn pose(x: f64, y: f64, z: f64, yaw: f64) -> Pose {
    Pose::from_position_yaw(Vec3::new(x, y, z), yaw)
}

/// One sample of every request.
pub fn requests() -> Vec<Message> {
    vec![
        Message::Hello {
            protocol: "1".into(),
        },
        Message::Initialize {},
        Message::Search {},
        Message::GetFrame {},
        Message::DemoStart {
            category: "plate".into(),
            object_id: Some(0),
        },
        Message::DemoWaypoint {
            pose: pose(0.01, -0.02, 0.2, 0.5),
            gripper_open: true,
        },
        Message::DemoEnd {
            grasp_pose: pose(0.05, -0.02, 0.004, 0.5),
        },
        Message::Back {},
        Message::Move {
            pose: pose(0.02, 0.01, 0.3, 0.0),
        },
        Message::SimulateAll {},
        Message::Execute { object_id: 0 },
    ]
}

/// One sample of every message type, requests and replies.
pub fn catalog() -> Vec<Envelope> {
    let mut plan = GraspPlan::direct(pose(0.05, -0.02, 0.004, 1.25), 3);
    plan.provenance = Provenance::Demonstrated;
    plan.similarity_used = Some(0.96875);
    let replies = vec![
        Message::HelloAck {
            protocol: "1".into(),
            session: 3,
        },
        Message::Busy {},
        Message::Ready {
            pose: pose(0.0, -0.06, 0.47, 0.0),
        },
        Message::Detections {
            detections: vec![DetectionInfo {
                object_id: 0,
                bbox: BBox {
                    u_min: 10,
                    v_min: 20,
                    u_max: 30,
                    v_max: 44,
                },
                initial: Some(pose(0.051, -0.019, 0.01, 0.3)),
                similarity: Some(0.96875),
                provenance: Some(Provenance::Demonstrated),
                plan: Some(plan),
            }],
        },
        Message::Frame(FramePayload {
            width: 2,
            height: 2,
            depth: "AAAAPwAAgD8AACBBAADAPw==".into(),
            masks: vec![MaskRle {
                object_id: 0,
                counts: vec![1, 2, 1],
            }],
            intrinsics: CameraIntrinsics::new(2.0, 2.0, 1.0, 1.0, 2, 2).unwrap(),
            camera_pose: pose(0.0, 0.0, 0.45, 0.0),
        }),
        Message::DemoAck {
            waypoint_count: 3,
            record_id: Some(0),
            grasp_pose: Some(pose(0.05, -0.02, 0.004, 0.5)),
        },
        Message::Cleared {},
        Message::Trace {
            t: 0.033,
            pose: pose(0.01, 0.0, 0.4, 0.25),
        },
        Message::TraceEnd { samples: 17 },
        Message::Result {
            object_id: 0,
            outcome: Outcome::Success,
            provenance: Provenance::Demonstrated,
            attempt: 2,
            rates: SuccessRates {
                attempt_centric: 0.5,
                object_centric: 1.0,
            },
        },
        Message::error(
            ErrorCode::BadState,
            "EXECUTE is not allowed while demo-recording",
        ),
    ];
    let mut out: Vec<Envelope> = requests()
        .into_iter()
        .enumerate()
        .map(|(i, m)| Envelope::new(i as u64 + 1, m))
        .collect();
    out.extend(
        replies
            .into_iter()
            .enumerate()
            .map(|(i, m)| Envelope::reply(i as u64 + 1, 7, m)),
    );
    out
}

/// Which requests each state accepts, written out independently of the
/// session's dispatch.
pub fn legal(state: SessionState, kind: &str) -> bool {
    use SessionState::*;
    match kind {
        "HELLO" => state != Executing,
        "INITIALIZE" | "SEARCH" | "GET_FRAME" | "DEMO_START" => matches!(state, Idle | Detecting),
        "DEMO_WAYPOINT" | "DEMO_END" => state == DemoRecording,
        "BACK" | "MOVE" => matches!(state, Idle | Detecting | DemoRecording),
        "SIMULATE_ALL" | "EXECUTE" => state == Detecting,
        _ => false,
    }
}

pub fn plate() -> SceneObject {
    SceneObject::new(
        0,
        Category::Plate,
        Vec3::new(0.12, 0.12, 0.02),
        0.02,
        -0.03,
        0.4,
    )
}

/// A plate with two easy neighbours.
pub fn plate_scene() -> Scene {
    Scene {
        objects: vec![
            plate(),
            SceneObject::new(
                1,
                Category::Box,
                Vec3::new(0.04, 0.03, 0.05),
                -0.16,
                0.08,
                0.2,
            ),
            SceneObject::new(
                2,
                Category::Sphere,
                Vec3::new(0.05, 0.05, 0.05),
                0.17,
                0.09,
                0.0,
            ),
        ],
        seed: 0,
        workspace: Workspace::default(),
    }
}

pub fn plate_session() -> SessionConfig {
    SessionConfig::new(plate_scene(), EncoderParams::with_default_architecture(0))
}

/// Session put into `state` by legal requests. Returns the next free seq.
pub fn session_in(state: SessionState) -> (Session, u64) {
    let mut s = Session::new(plate_session());
    let mut seq = 1;
    let mut send = |s: &mut Session, m: Message| {
        s.handle(Envelope::new(seq, m));
        seq += 1;
    };
    match state {
        SessionState::Idle => {}
        SessionState::Detecting => send(&mut s, Message::Search {}),
        SessionState::DemoRecording => {
            send(&mut s, Message::Search {});
            send(
                &mut s,
                Message::DemoStart {
                    category: "plate".into(),
                    object_id: Some(0),
                },
            );
            send(
                &mut s,
                Message::DemoWaypoint {
                    pose: pose(0.0, -0.06, 0.47, 0.0),
                    gripper_open: true,
                },
            );
        }
        SessionState::Executing => {
            send(&mut s, Message::Search {});
            send(&mut s, Message::Execute { object_id: 0 });
        }
    }
    assert_eq!(s.state(), state);
    (s, seq)
}

pub struct Client {
    pub session: Session,
    pub seq: u64,
}

impl Client {
    pub fn new(session: Session) -> Self {
        Self { session, seq: 1 }
    }

    /// Sends one request as a frame and collects everything up to the end
    /// of any execution it starts.
    pub fn send(&mut self, m: Message) -> Vec<Message> {
        let frame = encode_frame(&Envelope::new(self.seq, m)).unwrap();
        self.seq += 1;
        let mut out = self.session.receive_frame(&frame);
        out.extend(self.session.complete());
        out.into_iter().map(|e| e.message).collect()
    }

    pub fn send_one(&mut self, m: Message) -> Message {
        let mut r = self.send(m);
        assert_eq!(r.len(), 1, "{r:?}");
        r.pop().unwrap()
    }

    pub fn execute(&mut self, object_id: u32) -> Outcome {
        match self.send(Message::Execute { object_id }).pop() {
            Some(Message::Result { outcome, .. }) => outcome,
            other => panic!("no result: {other:?}"),
        }
    }
}

/// INITIALIZE, SEARCH, EXECUTE the plate before and after a scripted
/// demonstration on it. Returns both outcomes.
pub fn scripted_plate_session(client: &mut Client) -> (Outcome, Outcome) {
    assert!(matches!(
        client.send_one(Message::Initialize {}),
        Message::Ready { .. }
    ));
    let Message::Detections { detections } = client.send_one(Message::Search {}) else {
        panic!("no detections");
    };
    assert_eq!(
        detections.len(),
        client.session.config().scene.objects.len()
    );
    let before = client.execute(0);
    let cfg = client.session.config().pipeline.clone();
    let waypoints = scripted_demonstration(&plate(), &cfg).expect("plate is demonstrable");
    client.send_one(Message::DemoStart {
        category: "plate".into(),
        object_id: Some(0),
    });
    let (grasp, path) = waypoints.split_last().unwrap();
    for p in path {
        client.send_one(Message::DemoWaypoint {
            pose: *p,
            gripper_open: true,
        });
    }
    match client.send_one(Message::DemoEnd { grasp_pose: *grasp }) {
        Message::DemoAck {
            record_id,
            waypoint_count,
            ..
        } => {
            assert_eq!(record_id, Some(0));
            assert_eq!(waypoint_count, waypoints.len());
        }
        m => panic!("{m:?}"),
    }
    let Message::Detections { detections } = client.send_one(Message::Search {}) else {
        panic!("no detections");
    };
    assert_eq!(detections[0].provenance, Some(Provenance::Demonstrated));
    let after = client.execute(0);
    (before, after)
}
