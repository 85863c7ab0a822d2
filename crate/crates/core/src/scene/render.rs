use nalgebra::UnitQuaternion;
use std::f64::consts::PI;

use super::Scene;
use crate::geometry::{project, CameraIntrinsics, DepthImage, Mask, Pose, Vec3};

/// Camera height above the table at the detection pose.
pub const DETECTION_HEIGHT: f64 = 0.45;

/// What the robot camera sees: depth plus per-object masks.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneFrame {
    pub depth: DepthImage,
    pub masks: Vec<(u32, Mask)>,
    pub intrinsics: CameraIntrinsics,
    pub camera_pose: Pose,
}

impl SceneFrame {
    pub fn mask(&self, id: u32) -> Option<&Mask> {
        self.masks.iter().find(|(i, _)| *i == id).map(|(_, m)| m)
    }
}

/// Top-down camera at the detection height. Camera `x` follows world `x`,
/// camera `y` follows world `-y` and the optical axis points at the table.
pub fn default_camera_pose() -> Pose {
    Pose::new(
        Vec3::new(0.0, 0.0, DETECTION_HEIGHT),
        UnitQuaternion::from_euler_angles(PI, 0.0, 0.0),
    )
}

/// Pixel rectangle `[u0, u1] × [v0, v1]` that can contain the object, or the
/// whole image when any bounding-box corner is behind the camera.
fn screen_bounds(
    obj: &super::SceneObject,
    camera: &Pose,
    k: &CameraIntrinsics,
) -> (usize, usize, usize, usize) {
    let full = (0, k.width - 1, 0, k.height - 1);
    let (lo, hi) = obj.solid().local_bounds();
    let to_cam = camera.inverse().compose(&obj.pose);
    let (mut u0, mut u1, mut v0, mut v1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for i in 0..8 {
        let c = Vec3::new(
            if i & 1 == 0 { lo.x } else { hi.x },
            if i & 2 == 0 { lo.y } else { hi.y },
            if i & 4 == 0 { lo.z } else { hi.z },
        );
        match project(&to_cam.transform_point(&c), k) {
            Ok((u, v, _)) => {
                u0 = u0.min(u);
                u1 = u1.max(u);
                v0 = v0.min(v);
                v1 = v1.max(v);
            }
            Err(_) => return full,
        }
    }
    let clamp = |x: f64, max: usize| x.clamp(0.0, max as f64) as usize;
    if u1 < 0.0 || v1 < 0.0 || u0 > (k.width - 1) as f64 || v0 > (k.height - 1) as f64 {
        return (1, 0, 1, 0);
    }
    (
        clamp(u0.floor() - 1.0, k.width - 1),
        clamp(u1.ceil() + 1.0, k.width - 1),
        clamp(v0.floor() - 1.0, k.height - 1),
        clamp(v1.ceil() + 1.0, k.height - 1),
    )
}

/// Ray-casts the table plane and every object. The ray through pixel
/// `(u, v)` has camera direction `((u-cx)/fx, (v-cy)/fy, 1)`, so its
/// parameter at a hit is exactly the depth value.
pub fn render(scene: &Scene, camera_pose: &Pose, k: &CameraIntrinsics) -> SceneFrame {
    let (w, h) = (k.width, k.height);
    let origin = camera_pose.position;
    let ray = |u: usize, v: usize| {
        camera_pose.rotate_vector(&Vec3::new(
            (u as f64 - k.cx) / k.fx,
            (v as f64 - k.cy) / k.fy,
            1.0,
        ))
    };

    let mut depth = vec![0.0f64; w * h];
    let mut owner: Vec<Option<usize>> = vec![None; w * h];
    for v in 0..h {
        for u in 0..w {
            let d = ray(u, v);
            if d.z < 0.0 && origin.z > 0.0 {
                depth[v * w + u] = -origin.z / d.z;
            }
        }
    }

    for (idx, obj) in scene.objects.iter().enumerate() {
        let (u0, u1, v0, v1) = screen_bounds(obj, camera_pose, k);
        for v in v0..=v1 {
            for u in u0..=u1 {
                let d = ray(u, v);
                let entry = obj
                    .spans(&origin, &d)
                    .into_iter()
                    .map(|(t0, _)| t0)
                    .find(|&t| t > 0.0);
                if let Some(t) = entry {
                    let cur = depth[v * w + u];
                    if cur == 0.0 || t < cur {
                        depth[v * w + u] = t;
                        owner[v * w + u] = Some(idx);
                    }
                }
            }
        }
    }

    let data: Vec<f32> = depth.iter().map(|&d| d as f32).collect();
    let depth = DepthImage::from_clamped(w, h, data);
    let mut masks = Vec::new();
    for (idx, obj) in scene.objects.iter().enumerate() {
        let bits: Vec<bool> = owner
            .iter()
            .zip(depth.data())
            .map(|(o, &d)| *o == Some(idx) && d > 0.0)
            .collect();
        if let Ok(m) = Mask::new(w, h, bits) {
            masks.push((obj.id, m));
        }
    }
    SceneFrame {
        depth,
        masks,
        intrinsics: *k,
        camera_pose: *camera_pose,
    }
}
