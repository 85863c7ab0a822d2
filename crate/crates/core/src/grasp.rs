//! Annotation-free initial grasps: five keypoints per mask, yaw from the
//! minimum-area rectangle, and a top-down 4-DoF pose.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{
    camera_to_world, compute_image_yaw, distance_transform, mask_centroid, mask_outline,
    min_area_rect, pixel_to_camera, wrap_angle, DepthImage, HandEyeCalibration, Mask, Pose, Vec3,
};
use crate::plan::{pre_grasp_for, GraspPlan};
use crate::scene::{Gripper, SceneFrame};

/// How far below the keypoint's surface the fingertips go.
pub const GRASP_DEPTH: f64 = 0.015;
/// Initial grasps are abandoned when the object is wider than this multiple
/// of the gripper opening.
pub const MAX_WIDTH_FACTOR: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KeyPointKind {
    Centroid,
    BboxCenterNearest,
    #[serde(rename = "outline-1")]
    Outline1,
    #[serde(rename = "outline-2")]
    Outline2,
    #[serde(rename = "outline-3")]
    Outline3,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyPoint {
    pub pixel: (usize, usize),
    pub kind: KeyPointKind,
    pub confidence: f64,
}

/// Keypoints in kind order. Confidence is depth validity times the distance
/// transform normalized by its maximum over the mask.
pub fn select_key_points(m: &Mask, depth: &DepthImage) -> Result<[KeyPoint; 5]> {
    let valid = m.pixels().filter(|&(u, v)| depth.get(u, v) > 0.0).count();
    if valid < 5 {
        return Err(Error::DegenerateMask { valid });
    }
    let dt = distance_transform(m);
    let w = m.width();
    let max_dt = m.pixels().map(|(u, v)| dt[v * w + u]).fold(0.0, f64::max);
    let confidence = |(u, v): (usize, usize)| {
        if depth.get(u, v) > 0.0 {
            dt[v * w + u] / max_dt
        } else {
            0.0
        }
    };
    let (cu, cv) = mask_centroid(m);
    let (bu, bv) = m.bbox().center();
    let outline = mask_outline(m);
    let l = outline.len();
    let picks = [
        (m.nearest_pixel(cu, cv), KeyPointKind::Centroid),
        (m.nearest_pixel(bu, bv), KeyPointKind::BboxCenterNearest),
        (outline[0], KeyPointKind::Outline1),
        (outline[l / 3], KeyPointKind::Outline2),
        (outline[2 * l / 3], KeyPointKind::Outline3),
    ];
    Ok(picks.map(|(pixel, kind)| KeyPoint {
        pixel,
        kind,
        confidence: confidence(pixel),
    }))
}

/// Image-plane closing direction, `[0, π)`: across the rectangle's shorter
/// side.
pub fn compute_yaw(m: &Mask) -> f64 {
    compute_image_yaw(m)
}

/// World yaw of an image direction at a pixel, found by back-projecting a
/// short step along it.
fn world_yaw(
    u: f64,
    v: f64,
    depth: f64,
    image_yaw: f64,
    frame: &SceneFrame,
    cal: &HandEyeCalibration,
    ee: &Pose,
) -> f64 {
    let k = &frame.intrinsics;
    // the step may leave the image; the pinhole formula does not care
    let to_world = |u: f64, v: f64| {
        let p = Vec3::new((u - k.cx) * depth / k.fx, (v - k.cy) * depth / k.fy, depth);
        camera_to_world(&p, cal, ee)
    };
    let d = to_world(u + image_yaw.cos(), v + image_yaw.sin()) - to_world(u, v);
    wrap_angle(d.y.atan2(d.x), PI)
}

/// Top-down 4-DoF grasp derived from a mask without any learning.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialGrasp {
    pub position: Vec3,
    pub yaw: f64,
    pub pre_grasp: Pose,
    pub approach: Vec3,
    pub keypoint: KeyPoint,
}

impl InitialGrasp {
    pub fn pose(&self) -> Pose {
        Pose::from_position_yaw(self.position, self.yaw)
    }

    pub fn plan(&self, m: usize) -> GraspPlan {
        GraspPlan::direct(self.pose(), m)
    }
}

/// Picks the most confident keypoint (ties go to the earlier kind), lifts it
/// to the world and descends [`GRASP_DEPTH`] below the surface. `None` when
/// no keypoint has valid depth or the object is far wider than the gripper.
pub fn initial_grasp(
    frame: &SceneFrame,
    m: &Mask,
    cal: &HandEyeCalibration,
    ee_pose: &Pose,
    gripper: &Gripper,
) -> Option<InitialGrasp> {
    let kps = select_key_points(m, &frame.depth).ok()?;
    let mut best = kps[0];
    for kp in &kps[1..] {
        if kp.confidence > best.confidence {
            best = *kp;
        }
    }
    if best.confidence <= 0.0 {
        return None;
    }
    let (u, v) = (best.pixel.0 as f64, best.pixel.1 as f64);
    let depth = frame.depth.get(best.pixel.0, best.pixel.1) as f64;
    let surface = camera_to_world(
        &pixel_to_camera(u, v, depth, &frame.intrinsics).ok()?,
        cal,
        ee_pose,
    );

    let rect = min_area_rect(m);
    let caliper = 2.0 * rect.half_extents.1 * depth / frame.intrinsics.fx.min(frame.intrinsics.fy);
    if caliper > MAX_WIDTH_FACTOR * gripper.max_width {
        return None;
    }
    let yaw = world_yaw(u, v, depth, compute_yaw(m), frame, cal, ee_pose);
    let position = Vec3::new(surface.x, surface.y, (surface.z - GRASP_DEPTH).max(0.0));
    let pose = Pose::from_position_yaw(position, yaw);
    Some(InitialGrasp {
        position,
        yaw,
        pre_grasp: pre_grasp_for(&pose),
        approach: -Vec3::z(),
        keypoint: best,
    })
}
