//! Rigid poses, camera models and mask geometry shared by every stage of the
//! pipeline.
//!
//! Frames follow the usual robotics conventions: world `z` points up from the
//! table plane, camera `z` is the optical axis with `x` to the right of the
//! image and `y` down it.

mod distance;
mod image;
mod rect;

pub use distance::distance_transform;
pub use image::{mask_centroid, mask_outline, BBox, DepthImage, Mask};
pub use rect::{compute_image_yaw, convex_hull, min_area_rect, MinAreaRect};

use nalgebra::{Matrix4, Quaternion, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::ops::Mul;

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Rigid 6-DoF transform: position in meters plus a unit quaternion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub position: Vec3,
    orientation: UnitQuaternion<f64>,
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            position: Vec3::zeros(),
            orientation: UnitQuaternion::identity(),
        }
    }

    /// Builds a pose, renormalizing the quaternion.
    pub fn new(position: Vec3, orientation: UnitQuaternion<f64>) -> Self {
        Self {
            position,
            orientation: UnitQuaternion::new_normalize(orientation.into_inner()),
        }
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Self {
            position: Vec3::new(x, y, z),
            orientation: UnitQuaternion::identity(),
        }
    }

    pub fn from_rpy(position: Vec3, roll: f64, pitch: f64, yaw: f64) -> Self {
        Self::new(
            position,
            UnitQuaternion::from_euler_angles(roll, pitch, yaw),
        )
    }

    /// Top-down pose rotated by `yaw` about world `z`; roll and pitch are zero.
    pub fn from_position_yaw(position: Vec3, yaw: f64) -> Self {
        Self::new(
            position,
            UnitQuaternion::from_axis_angle(&Vec3::z_axis(), yaw),
        )
    }

    pub fn from_wxyz(position: Vec3, wxyz: [f64; 4]) -> Self {
        let q = Quaternion::new(wxyz[0], wxyz[1], wxyz[2], wxyz[3]);
        Self::new(position, UnitQuaternion::new_normalize(q))
    }

    pub fn orientation(&self) -> &UnitQuaternion<f64> {
        &self.orientation
    }

    pub fn wxyz(&self) -> [f64; 4] {
        let q = self.orientation.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    /// (roll, pitch, yaw) in radians.
    pub fn rpy(&self) -> (f64, f64, f64) {
        self.orientation.euler_angles()
    }

    pub fn yaw(&self) -> f64 {
        self.rpy().2
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose::new(
            self.position + self.orientation * other.position,
            self.orientation * other.orientation,
        )
    }

    pub fn inverse(&self) -> Pose {
        let inv = self.orientation.inverse();
        Pose::new(-(inv * self.position), inv)
    }

    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.orientation * p + self.position
    }

    pub fn rotate_vector(&self, v: &Vec3) -> Vec3 {
        self.orientation * v
    }

    /// Geodesic angle between two orientations, radians in [0, π].
    pub fn angle_to(&self, other: &Pose) -> f64 {
        self.orientation.angle_to(&other.orientation)
    }

    /// Linear position blend and spherical orientation blend at `t ∈ [0, 1]`.
    pub fn interpolate(&self, other: &Pose, t: f64) -> Pose {
        let position = self.position + (other.position - self.position) * t;
        let orientation = self
            .orientation
            .try_slerp(&other.orientation, t, 1e-12)
            .unwrap_or(if t < 0.5 {
                self.orientation
            } else {
                other.orientation
            });
        Pose::new(position, orientation)
    }

    pub fn to_matrix(&self) -> Matrix4<f64> {
        nalgebra::Isometry3::from_parts(Translation3::from(self.position), self.orientation)
            .to_homogeneous()
    }
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Mul for Pose {
    type Output = Pose;
    fn mul(self, rhs: Pose) -> Pose {
        self.compose(&rhs)
    }
}

#[derive(Serialize, Deserialize)]
struct PoseRepr {
    position: [f64; 3],
    orientation: [f64; 4],
}

impl Serialize for Pose {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PoseRepr {
            position: [self.position.x, self.position.y, self.position.z],
            orientation: self.wxyz(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Pose {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = PoseRepr::deserialize(d)?;
        let q = Quaternion::new(
            r.orientation[0],
            r.orientation[1],
            r.orientation[2],
            r.orientation[3],
        );
        if !(q.norm() > 0.0) || !q.coords.iter().all(|c| c.is_finite()) {
            return Err(serde::de::Error::custom(
                "orientation is not a valid quaternion",
            ));
        }
        // Keep the stored components verbatim when they are already unit norm so
        // that decode/encode is byte-stable.
        let unit = if (q.norm() - 1.0).abs() < 1e-12 {
            UnitQuaternion::new_unchecked(q)
        } else {
            UnitQuaternion::new_normalize(q)
        };
        Ok(Pose {
            position: Vec3::from(r.position),
            orientation: unit,
        })
    }
}

/// Pinhole intrinsics without distortion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let k = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::InvalidIntrinsics(format!(
                "focal lengths must be positive, got fx={} fy={}",
                self.fx, self.fy
            )));
        }
        if !(self.cx >= 0.0 && self.cx < self.width as f64)
            || !(self.cy >= 0.0 && self.cy < self.height as f64)
        {
            return Err(Error::InvalidIntrinsics(format!(
                "principal point ({}, {}) outside {}x{} image",
                self.cx, self.cy, self.width, self.height
            )));
        }
        Ok(())
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && v >= 0.0 && u < self.width as f64 && v < self.height as f64
    }
}

impl Default for CameraIntrinsics {
    /// 640x480 sensor with 525 px focal length.
    fn default() -> Self {
        Self {
            fx: 525.0,
            fy: 525.0,
            cx: 319.5,
            cy: 239.5,
            width: 640,
            height: 480,
        }
    }
}

/// Eye-in-hand calibration: maps camera-frame points into the end-effector frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HandEyeCalibration {
    pub transform: Pose,
}

impl HandEyeCalibration {
    pub fn new(transform: Pose) -> Self {
        Self { transform }
    }

    pub fn identity() -> Self {
        Self::new(Pose::identity())
    }
}

impl Default for HandEyeCalibration {
    /// Camera mounted 6 cm ahead of and 2 cm above the flange, optical axis
    /// aligned with the tool axis.
    fn default() -> Self {
        Self::new(Pose::from_translation(0.0, 0.06, -0.02))
    }
}

/// Back-projects pixel `(u, v)` with metric `depth` to a camera-frame point.
pub fn pixel_to_camera(u: f64, v: f64, depth: f64, k: &CameraIntrinsics) -> Result<Vec3> {
    if !(depth > 0.0) || !depth.is_finite() {
        return Err(Error::InvalidDepth { u, v, depth });
    }
    if !k.contains(u, v) {
        return Err(Error::OutOfBounds {
            u,
            v,
            width: k.width,
            height: k.height,
        });
    }
    Ok(Vec3::new(
        (u - k.cx) * depth / k.fx,
        (v - k.cy) * depth / k.fy,
        depth,
    ))
}

/// Projects a camera-frame point to `(u, v, depth)`.
pub fn project(p: &Vec3, k: &CameraIntrinsics) -> Result<(f64, f64, f64)> {
    if !(p.z > 0.0) {
        return Err(Error::InvalidDepth {
            u: f64::NAN,
            v: f64::NAN,
            depth: p.z,
        });
    }
    Ok((k.fx * p.x / p.z + k.cx, k.fy * p.y / p.z + k.cy, p.z))
}

/// Maps a camera-frame point to the world through the calibration and the
/// current end-effector pose.
pub fn camera_to_world(p: &Vec3, cal: &HandEyeCalibration, ee_pose: &Pose) -> Vec3 {
    ee_pose.compose(&cal.transform).transform_point(p)
}

/// Wraps an angle into `[0, period)`.
pub fn wrap_angle(angle: f64, period: f64) -> f64 {
    let w = angle.rem_euclid(period);
    if w >= period {
        0.0
    } else {
        w
    }
}
