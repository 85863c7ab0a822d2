use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{
    camera_to_world, pixel_to_camera, wrap_angle, HandEyeCalibration, Mask, Pose, Vec3,
};
use crate::scene::SceneFrame;

pub const MIN_POINTS: usize = 8;
/// Encoder input size.
pub const CLOUD_POINTS: usize = 256;
const SUBSAMPLE_SEED: u64 = 0x5eed_c10d;

/// Normalized object cloud: centered on the origin with unit bounding
/// radius. `centroid` and `scale` undo the normalization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub centroid: Vec3,
    #[serde(default)]
    pub scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category_hint: Option<String>,
}

/// Centers `raw` on its mean and divides by the largest distance from it.
pub fn normalize(raw: &[Vec3]) -> Result<PointCloud> {
    if raw.len() < MIN_POINTS {
        return Err(Error::TooFewPoints {
            n: raw.len(),
            min: MIN_POINTS,
        });
    }
    let centroid = raw.iter().sum::<Vec3>() / raw.len() as f64;
    let scale = raw
        .iter()
        .map(|p| (p - centroid).norm())
        .fold(0.0, f64::max);
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::DegenerateCloud);
    }
    Ok(PointCloud {
        points: raw.iter().map(|p| (p - centroid) / scale).collect(),
        centroid,
        scale,
        category_hint: None,
    })
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn with_hint(mut self, hint: impl Into<String>) -> Self {
        self.category_hint = Some(hint.into());
        self
    }

    /// Original (pre-normalization) coordinates of a normalized point.
    pub fn denormalize(&self, p: &Vec3) -> Vec3 {
        self.centroid + p * self.scale
    }

    pub fn original_points(&self) -> impl Iterator<Item = Vec3> + '_ {
        self.points.iter().map(|p| self.denormalize(p))
    }

    pub fn has_metadata(&self) -> bool {
        self.scale.is_finite() && self.scale > 0.0 && self.centroid.iter().all(|c| c.is_finite())
    }

    /// Exactly `n` points: a seeded random subset when there are more,
    /// cyclic repetition when there are fewer. The same cloud always yields
    /// the same selection.
    pub fn fixed_size(&self, n: usize) -> PointCloud {
        let len = self.points.len();
        let points = if len >= n {
            let mut rng = ChaCha8Rng::seed_from_u64(SUBSAMPLE_SEED ^ len as u64);
            let mut idx = rand::seq::index::sample(&mut rng, len, n).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| self.points[i]).collect()
        } else {
            (0..n).map(|i| self.points[i % len]).collect()
        };
        PointCloud {
            points,
            ..self.clone()
        }
    }

    /// Direction of the largest horizontal spread, `[0, π)`, from the xy
    /// covariance.
    pub fn principal_yaw(&self) -> f64 {
        let n = self.points.len() as f64;
        let (mx, my) = self
            .points
            .iter()
            .fold((0.0, 0.0), |(x, y), p| (x + p.x / n, y + p.y / n));
        let (mut cxx, mut cxy, mut cyy) = (0.0, 0.0, 0.0);
        for p in &self.points {
            let (dx, dy) = (p.x - mx, p.y - my);
            cxx += dx * dx;
            cxy += dx * dy;
            cyy += dy * dy;
        }
        wrap_angle(0.5 * (2.0 * cxy).atan2(cxx - cyy), PI)
    }

    /// Principal horizontal direction with its sign fixed so the heavier
    /// tail (positive third moment) points forward. In `[0, 2π)`.
    pub fn heading(&self) -> f64 {
        let yaw = self.principal_yaw();
        let (c, s) = (yaw.cos(), yaw.sin());
        let n = self.points.len() as f64;
        let along: Vec<f64> = self.points.iter().map(|p| p.x * c + p.y * s).collect();
        let mean = along.iter().sum::<f64>() / n;
        if along.iter().map(|a| (a - mean).powi(3)).sum::<f64>() < 0.0 {
            wrap_angle(yaw + PI, 2.0 * PI)
        } else {
            wrap_angle(yaw, 2.0 * PI)
        }
    }

    /// Rotated about `z` so [`heading`](Self::heading) lies along `+x`.
    pub fn canonical(&self) -> PointCloud {
        let r = Pose::from_position_yaw(Vec3::zeros(), -self.heading());
        PointCloud {
            points: self.points.iter().map(|p| r.rotate_vector(p)).collect(),
            ..self.clone()
        }
    }
}

/// World-frame cloud of every valid-depth pixel of a mask.
pub fn cloud_from_mask(
    frame: &SceneFrame,
    m: &Mask,
    cal: &HandEyeCalibration,
    ee_pose: &Pose,
) -> Result<PointCloud> {
    let raw: Vec<Vec3> = m
        .pixels()
        .filter_map(|(u, v)| {
            let d = frame.depth.get(u, v) as f64;
            pixel_to_camera(u as f64, v as f64, d, &frame.intrinsics)
                .ok()
                .map(|p| camera_to_world(&p, cal, ee_pose))
        })
        .collect();
    normalize(&raw)
}
