//! One detection pass: render from the detection pose, then per object an
//! initial grasp, a point cloud and the demonstration-aware final plan.

use serde::{Deserialize, Serialize};

use crate::contrastive::{cloud_from_mask, EncoderParams, PointCloud};
use crate::demo::{final_grasp, similarity_index, DemoStore, Thresholds, DEFAULT_M};
use crate::error::{Error, Result};
use crate::geometry::{BBox, CameraIntrinsics, HandEyeCalibration, Pose};
use crate::grasp::{initial_grasp, InitialGrasp};
use crate::plan::{GraspPlan, Provenance};
use crate::scene::{default_camera_pose, render, Gripper, Scene, SceneFrame};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub thresholds: Thresholds,
    /// Waypoints per plan.
    pub m_points: usize,
    pub gripper: Gripper,
    pub calibration: HandEyeCalibration,
    pub intrinsics: CameraIntrinsics,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            thresholds: Thresholds::default(),
            m_points: DEFAULT_M,
            gripper: Gripper::default(),
            calibration: HandEyeCalibration::default(),
            intrinsics: CameraIntrinsics::default(),
        }
    }
}

impl PipelineConfig {
    /// Flange pose that puts the camera at the detection pose.
    pub fn detection_ee_pose(&self) -> Pose {
        default_camera_pose().compose(&self.calibration.transform.inverse())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub object_id: u32,
    pub bbox: BBox,
    pub initial: Option<InitialGrasp>,
    /// Best match against the demonstration store, when it is not empty.
    pub similarity: Option<f64>,
    pub plan: Option<GraspPlan>,
    #[serde(skip)]
    pub cloud: Option<PointCloud>,
}

impl Detection {
    pub fn provenance(&self) -> Option<Provenance> {
        self.plan.as_ref().map(|p| p.provenance)
    }
}

/// Plans every visible object, in mask order.
pub fn detect(
    scene: &Scene,
    params: &EncoderParams,
    store: &DemoStore,
    cfg: &PipelineConfig,
) -> Result<(SceneFrame, Vec<Detection>)> {
    let ee = cfg.detection_ee_pose();
    let camera = ee.compose(&cfg.calibration.transform);
    let frame = render(scene, &camera, &cfg.intrinsics);
    let mut out = Vec::with_capacity(frame.masks.len());
    for (id, mask) in &frame.masks {
        let initial = initial_grasp(&frame, mask, &cfg.calibration, &ee, &cfg.gripper);
        let cloud = match cloud_from_mask(&frame, mask, &cfg.calibration, &ee) {
            Ok(c) => Some(c),
            Err(Error::TooFewPoints { .. } | Error::DegenerateCloud) => None,
            Err(e) => return Err(e),
        };
        let (similarity, plan) = match &cloud {
            Some(c) => {
                let s = similarity_index(c, store, params).map(|(s, _)| s);
                match final_grasp(
                    c,
                    initial.as_ref(),
                    store,
                    params,
                    &cfg.thresholds,
                    cfg.m_points,
                ) {
                    Ok(p) => (s, Some(p)),
                    Err(Error::NoGraspAvailable) => (s, None),
                    Err(e) => return Err(e),
                }
            }
            None => (None, initial.as_ref().map(|g| g.plan(cfg.m_points))),
        };
        out.push(Detection {
            object_id: *id,
            bbox: mask.bbox(),
            initial,
            similarity,
            plan,
            cloud,
        });
    }
    Ok((frame, out))
}
