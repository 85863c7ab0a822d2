//! Procedural tabletop scenes of analytic objects, a depth/mask renderer,
//! simulated execution and the geometric grasp-success oracle.

mod execute;
mod metrics;
mod oracle;
mod render;
pub mod shape;

pub use execute::{execute, execute_streamed, TracePoint, SAMPLE_PERIOD};
pub use metrics::{success_rates, Outcome, SuccessRates};
pub use oracle::{evaluate_grasp, Gripper};
pub use render::{default_camera_pose, render, SceneFrame, DETECTION_HEIGHT};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Pose, Vec3};
use shape::Solid;

/// Object size bounds, meters, per component.
pub const MIN_SIZE: f64 = 0.015;
pub const MAX_SIZE: f64 = 0.25;

/// Inner/outer radius ratio of plates.
pub const PLATE_INNER_RATIO: f64 = 0.82;
/// Bowl shell thickness.
pub const BOWL_WALL: f64 = 0.006;

pub const SCENE_FILE_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    Box,
    Cylinder,
    Sphere,
    Plate,
    Bowl,
    Bar,
    RagdollBlob,
}

impl Category {
    pub const ALL: [Category; 7] = [
        Category::Box,
        Category::Cylinder,
        Category::Sphere,
        Category::Plate,
        Category::Bowl,
        Category::Bar,
        Category::RagdollBlob,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Category::Box => "box",
            Category::Cylinder => "cylinder",
            Category::Sphere => "sphere",
            Category::Plate => "plate",
            Category::Bowl => "bowl",
            Category::Bar => "bar",
            Category::RagdollBlob => "ragdoll-blob",
        }
    }

    pub fn parse(s: &str) -> Option<Category> {
        Category::ALL.iter().copied().find(|c| c.name() == s)
    }

    /// Samples a size vector from this family's range.
    pub fn sample_size<R: Rng>(&self, rng: &mut R) -> Vec3 {
        match self {
            Category::Box => Vec3::new(
                rng.random_range(0.03..0.065),
                rng.random_range(0.03..0.065),
                rng.random_range(0.03..0.12),
            ),
            Category::Cylinder => {
                let d = rng.random_range(0.03..0.065);
                Vec3::new(d, d, rng.random_range(0.04..0.18))
            }
            Category::Sphere => {
                let d = rng.random_range(0.03..0.08);
                Vec3::new(d, d, d)
            }
            Category::Plate => {
                let d = rng.random_range(0.118..0.124);
                Vec3::new(d, d, rng.random_range(0.015..0.02))
            }
            Category::Bowl => {
                let d = rng.random_range(0.10..0.124);
                Vec3::new(d, d, d / 2.0)
            }
            Category::Bar => Vec3::new(
                rng.random_range(0.10..0.20),
                rng.random_range(0.015..0.03),
                rng.random_range(0.015..0.03),
            ),
            Category::RagdollBlob => {
                let w = rng.random_range(0.035..0.055);
                Vec3::new(rng.random_range(0.07..0.11), w, w)
            }
        }
    }
}

impl std::fmt::Display for Category {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// An object resting on the table plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: u32,
    pub category: Category,
    pub size: Vec3,
    pub pose: Pose,
}

impl SceneObject {
    pub fn new(id: u32, category: Category, size: Vec3, x: f64, y: f64, yaw: f64) -> Self {
        Self {
            id,
            category,
            size,
            pose: Pose::from_position_yaw(Vec3::new(x, y, 0.0), yaw),
        }
    }

    pub fn solid(&self) -> Solid {
        let s = self.size;
        match self.category {
            Category::Box | Category::Bar => Solid::Cuboid {
                hx: s.x / 2.0,
                hy: s.y / 2.0,
                height: s.z,
            },
            Category::Cylinder => Solid::Cylinder {
                radius: s.x / 2.0,
                height: s.z,
            },
            Category::Sphere => Solid::Ball { radius: s.x / 2.0 },
            Category::Plate => Solid::Annulus {
                inner: PLATE_INNER_RATIO * s.x / 2.0,
                outer: s.x / 2.0,
                height: s.z,
            },
            Category::Bowl => Solid::Shell {
                radius: s.x / 2.0,
                wall: BOWL_WALL,
            },
            Category::RagdollBlob => Solid::Lobes(blob_lobes(&s)),
        }
    }

    /// Minimum horizontal caliper width.
    pub fn graspable_width(&self) -> f64 {
        match self.category {
            Category::Box | Category::Bar | Category::RagdollBlob => self.size.x.min(self.size.y),
            _ => self.size.x,
        }
    }

    /// Plan-view outline: a disk for round families, an oriented rectangle
    /// otherwise.
    pub fn footprint(&self) -> Footprint {
        let (lo, hi) = self.solid().local_bounds();
        let mid = self.pose.transform_point(&((lo + hi) / 2.0));
        match self.category {
            Category::Box | Category::Bar | Category::RagdollBlob => Footprint::Rect {
                center: (mid.x, mid.y),
                yaw: self.pose.yaw(),
                half: ((hi.x - lo.x) / 2.0, (hi.y - lo.y) / 2.0),
            },
            _ => Footprint::Disk {
                center: (mid.x, mid.y),
                radius: (hi.x - lo.x) / 2.0,
            },
        }
    }

    pub fn height(&self) -> f64 {
        self.solid().local_bounds().1.z
    }

    pub fn to_local(&self, p: &Vec3) -> Vec3 {
        self.pose.inverse().transform_point(p)
    }

    /// Inside spans of the world line `o + t·d`.
    pub fn spans(&self, o: &Vec3, d: &Vec3) -> shape::Spans {
        let inv = self.pose.inverse();
        self.solid()
            .spans(&inv.transform_point(o), &inv.rotate_vector(d))
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        self.solid().contains(&self.to_local(p))
    }

    pub fn surface_distance(&self, p: &Vec3) -> f64 {
        self.solid().surface_distance(&self.to_local(p))
    }
}

/// Three table-resting lobes (torso in the middle, two limbs) laid out along
/// local `x`. Height equals the torso diameter.
fn blob_lobes(size: &Vec3) -> Vec<(Vec3, f64)> {
    let r0 = size.y / 2.0;
    let r1 = 0.36 * size.y;
    let r2 = 0.30 * size.y;
    let x1 = -(size.x / 2.0 - r1).max(0.0);
    let x2 = (size.x / 2.0 - r2).max(0.0);
    vec![
        (Vec3::new(0.0, 0.0, r0), r0),
        (Vec3::new(x1, 0.12 * size.y, r1), r1),
        (Vec3::new(x2, -0.10 * size.y, r2), r2),
    ]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Footprint {
    Disk {
        center: (f64, f64),
        radius: f64,
    },
    Rect {
        center: (f64, f64),
        yaw: f64,
        half: (f64, f64),
    },
}

impl Footprint {
    fn center(&self) -> (f64, f64) {
        match *self {
            Footprint::Disk { center, .. } | Footprint::Rect { center, .. } => center,
        }
    }

    /// Half extents of the axis-aligned box around the footprint.
    pub fn half_extent(&self) -> (f64, f64) {
        match *self {
            Footprint::Disk { radius, .. } => (radius, radius),
            Footprint::Rect { yaw, half, .. } => {
                let (s, c) = yaw.sin_cos();
                (
                    c.abs() * half.0 + s.abs() * half.1,
                    s.abs() * half.0 + c.abs() * half.1,
                )
            }
        }
    }

    pub fn inside(&self, ws: &Workspace) -> bool {
        let (cx, cy) = self.center();
        let (ex, ey) = self.half_extent();
        ws.contains_xy(cx - ex, cy - ey) && ws.contains_xy(cx + ex, cy + ey)
    }

    /// True when the two outlines are at least `gap` apart. Rectangle pairs
    /// are tested with their half extents grown by `gap / 2`, which is
    /// slightly conservative at the corners.
    pub fn separated(&self, other: &Footprint, gap: f64) -> bool {
        match (*self, *other) {
            (
                Footprint::Disk {
                    center: a,
                    radius: ra,
                },
                Footprint::Disk {
                    center: b,
                    radius: rb,
                },
            ) => ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt() >= ra + rb + gap,
            (
                Footprint::Disk { center, radius },
                Footprint::Rect {
                    center: rc,
                    yaw,
                    half,
                },
            )
            | (
                Footprint::Rect {
                    center: rc,
                    yaw,
                    half,
                },
                Footprint::Disk { center, radius },
            ) => {
                let (s, c) = yaw.sin_cos();
                let (dx, dy) = (center.0 - rc.0, center.1 - rc.1);
                let (lx, ly) = (c * dx + s * dy, -s * dx + c * dy);
                let qx = (lx.abs() - half.0).max(0.0);
                let qy = (ly.abs() - half.1).max(0.0);
                (qx * qx + qy * qy).sqrt() >= radius + gap
            }
            (Footprint::Rect { .. }, Footprint::Rect { .. }) => {
                let corners = |f: &Footprint| {
                    let Footprint::Rect { center, yaw, half } = *f else {
                        unreachable!()
                    };
                    let (s, c) = yaw.sin_cos();
                    let (hx, hy) = (half.0 + gap / 2.0, half.1 + gap / 2.0);
                    let axes = [(c, s), (-s, c)];
                    let pts = [(hx, hy), (-hx, hy), (-hx, -hy), (hx, -hy)]
                        .map(|(x, y)| (center.0 + c * x - s * y, center.1 + s * x + c * y));
                    (axes, pts)
                };
                let (ax_a, pa) = corners(self);
                let (ax_b, pb) = corners(other);
                ax_a.iter().chain(ax_b.iter()).any(|&(ux, uy)| {
                    let proj = |pts: &[(f64, f64); 4]| {
                        pts.iter()
                            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                                let d = p.0 * ux + p.1 * uy;
                                (lo.min(d), hi.max(d))
                            })
                    };
                    let (a0, a1) = proj(&pa);
                    let (b0, b1) = proj(&pb);
                    a1 <= b0 || b1 <= a0
                })
            }
        }
    }
}

/// Axis-aligned rectangle on the table plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Workspace {
    pub fn centered(width: f64, depth: f64) -> Self {
        Self {
            x_min: -width / 2.0,
            x_max: width / 2.0,
            y_min: -depth / 2.0,
            y_max: depth / 2.0,
        }
    }

    pub fn contains_xy(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }
}

impl Default for Workspace {
    /// Fits inside the default camera's field of view from the detection pose.
    fn default() -> Self {
        Self::centered(0.5, 0.36)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub objects: Vec<SceneObject>,
    pub seed: u64,
    pub workspace: Workspace,
}

/// Scene generation parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub workspace: Workspace,
    /// Minimum free distance between object footprints.
    pub gap: f64,
    pub max_rejections: usize,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            workspace: Workspace::default(),
            gap: 0.04,
            max_rejections: 1000,
        }
    }
}

/// Places `n_objects` objects drawn uniformly from `categories` at random
/// non-overlapping positions and orientations. Deterministic in `seed`.
pub fn generate_scene(
    seed: u64,
    n_objects: usize,
    categories: &[Category],
    cfg: &SceneConfig,
) -> Result<Scene> {
    if n_objects == 0 {
        return Err(Error::InvalidConfig(
            "a scene needs at least one object".into(),
        ));
    }
    if categories.is_empty() {
        return Err(Error::InvalidConfig("no object categories given".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ws = cfg.workspace;
    let mut objects: Vec<SceneObject> = Vec::with_capacity(n_objects);
    for id in 0..n_objects {
        let category = categories[rng.random_range(0..categories.len())];
        let size = category.sample_size(&mut rng);
        let mut placed = None;
        for _ in 0..cfg.max_rejections {
            let yaw = rng.random_range(0.0..TAU);
            let (ex, ey) = SceneObject::new(0, category, size, 0.0, 0.0, yaw)
                .footprint()
                .half_extent();
            if ws.x_max - ws.x_min < 2.0 * ex || ws.y_max - ws.y_min < 2.0 * ey {
                continue;
            }
            let x = rng.random_range(ws.x_min + ex..=ws.x_max - ex);
            let y = rng.random_range(ws.y_min + ey..=ws.y_max - ey);
            let cand = SceneObject::new(id as u32, category, size, x, y, yaw);
            let fp = cand.footprint();
            if fp.inside(&ws)
                && objects
                    .iter()
                    .all(|o| o.footprint().separated(&fp, cfg.gap))
            {
                placed = Some(cand);
                break;
            }
        }
        match placed {
            Some(o) => objects.push(o),
            None => {
                return Err(Error::PlacementFailure {
                    placed: objects.len(),
                    requested: n_objects,
                    attempts: cfg.max_rejections,
                })
            }
        }
    }
    Ok(Scene {
        objects,
        seed,
        workspace: ws,
    })
}

impl Scene {
    pub fn empty(seed: u64, workspace: Workspace) -> Self {
        Self {
            objects: Vec::new(),
            seed,
            workspace,
        }
    }

    pub fn object(&self, id: u32) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    /// Rotates every object about the world `z` axis through the origin.
    pub fn rotated(&self, yaw: f64) -> Scene {
        let r = Pose::from_position_yaw(Vec3::zeros(), yaw);
        let mut s = self.clone();
        for o in &mut s.objects {
            o.pose = r.compose(&o.pose);
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&SceneFile {
            version: SCENE_FILE_VERSION,
            seed: self.seed,
            workspace: Some(self.workspace),
            objects: self.objects.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Scene> {
        let f: SceneFile = serde_json::from_str(text)?;
        if f.version != SCENE_FILE_VERSION {
            return Err(Error::Format(format!(
                "unsupported scene file version {}",
                f.version
            )));
        }
        for o in &f.objects {
            if o.size
                .iter()
                .any(|s| !(MIN_SIZE - 1e-12..=MAX_SIZE + 1e-12).contains(s))
            {
                return Err(Error::Format(format!(
                    "object {} size outside [{MIN_SIZE}, {MAX_SIZE}] m",
                    o.id
                )));
            }
        }
        Ok(Scene {
            objects: f.objects,
            seed: f.seed,
            workspace: f.workspace.unwrap_or_default(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Scene> {
        Scene::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct SceneFile {
    version: u32,
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    workspace: Option<Workspace>,
    objects: Vec<SceneObject>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    impl Footprint {
        fn clone_shifted(&self, dx: f64, dy: f64) -> Footprint {
            match *self {
                Footprint::Disk { center, radius } => Footprint::Disk {
                    center: (center.0 + dx, center.1 + dy),
                    radius,
                },
                Footprint::Rect { center, yaw, half } => Footprint::Rect {
                    center: (center.0 + dx, center.1 + dy),
                    yaw,
                    half,
                },
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = SceneConfig::default();
        let a = generate_scene(7, 3, &Category::ALL, &cfg).unwrap();
        let b = generate_scene(7, 3, &Category::ALL, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.objects.len(), 3);
    }

    #[test]
    fn single_sphere_within_size_range() {
        let s = generate_scene(7, 1, &[Category::Sphere], &SceneConfig::default()).unwrap();
        let o = &s.objects[0];
        assert_eq!(o.category, Category::Sphere);
        assert!(o.size.iter().all(|c| (MIN_SIZE..=MAX_SIZE).contains(c)));
        assert_eq!(o.pose.position.z, 0.0);
    }

    #[test]
    fn every_family_samples_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for c in Category::ALL {
            for _ in 0..200 {
                let s = c.sample_size(&mut rng);
                assert!(
                    s.iter().all(|x| (MIN_SIZE..=MAX_SIZE).contains(x)),
                    "{c}: {s:?}"
                );
            }
        }
    }

    #[test]
    fn overpacked_workspace_fails() {
        let cfg = SceneConfig {
            workspace: Workspace::centered(0.3, 0.3),
            ..SceneConfig::default()
        };
        // Area argument: every footprint contains a disk of radius
        // MIN_SIZE / 2, footprints grown by gap / 2 are pairwise disjoint, and
        // all of them fit in the workspace grown by gap / 2.
        let claimed = 50.0 * PI * (MIN_SIZE / 2.0 + cfg.gap / 2.0).powi(2);
        let available = (0.3 + cfg.gap) * (0.3 + cfg.gap);
        assert!(claimed > available);
        assert!(matches!(
            generate_scene(1, 50, &Category::ALL, &cfg),
            Err(Error::PlacementFailure { .. })
        ));
    }

    #[test]
    fn no_overlap_in_plan_view() {
        // Brute force: a vertical probe line may pass through at most one
        // object, and none outside the workspace.
        for seed in 0..12 {
            let s = generate_scene(seed, 5, &Category::ALL, &SceneConfig::default()).unwrap();
            let ws = s.workspace;
            let step = 0.002;
            let down = Vec3::new(0.0, 0.0, -1.0);
            for i in -10..=((ws.x_max - ws.x_min) / step) as i64 + 10 {
                for j in -10..=((ws.y_max - ws.y_min) / step) as i64 + 10 {
                    let (x, y) = (ws.x_min + i as f64 * step, ws.y_min + j as f64 * step);
                    let o = Vec3::new(x, y, 1.0);
                    let n = s
                        .objects
                        .iter()
                        .filter(|ob| !ob.spans(&o, &down).is_empty())
                        .count();
                    assert!(n <= 1, "seed {seed} at ({x}, {y})");
                    if n == 1 {
                        assert!(ws.contains_xy(x, y));
                    }
                }
            }
        }
    }

    #[test]
    fn footprint_separation() {
        let rect = |x: f64, yaw: f64| Footprint::Rect {
            center: (x, 0.0),
            yaw,
            half: (0.1, 0.01),
        };
        assert!(rect(0.0, 0.0).separated(&rect(0.0, 0.0).clone_shifted(0.0, 0.05), 0.02));
        assert!(!rect(0.0, 0.0).separated(&rect(0.15, 0.0), 0.0));
        assert!(rect(0.0, 0.0).separated(&rect(0.25, 0.0), 0.04));
        assert!(!rect(0.0, 0.0).separated(&rect(0.0, FRAC_PI_2), 0.0));
        let disk = Footprint::Disk {
            center: (0.0, 0.05),
            radius: 0.03,
        };
        assert!(disk.separated(&rect(0.0, 0.0), 0.01));
        assert!(!disk.separated(&rect(0.0, 0.0), 0.011));
    }

    #[test]
    fn scene_file_round_trip() {
        let s = generate_scene(11, 4, &Category::ALL, &SceneConfig::default()).unwrap();
        let text = s.to_json().unwrap();
        assert!(text.contains("\"version\": 1"));
        let back = Scene::from_json(&text).unwrap();
        assert_eq!(back.to_json().unwrap(), text);
        assert!(Scene::from_json(&text.replace("\"version\": 1", "\"version\": 9")).is_err());
    }
}
